//! Time integration of the reversal collision dynamics.
//!
//! Two routes are implemented: the nonlinear grid scheme with explicit
//! Euler stepping, and the linear formulation `dh/dt = A h` of the odd
//! coordinate on the support of `mu`, integrated with fixed-step rk4, an
//! eigendecomposition propagator (`expm`, the reference oracle on small
//! spaces) or Picard iteration on the mild formulation.

use std::f64::consts::PI;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernel::CollisionKernel;
use crate::measure::{DiscreteMeasure, OddCoordinate};
use crate::space::{SpaceKind, StateSpace};

/// Tolerance to which the integrators must propagate `-1 <= h <= 1`.
pub const BOUND_TOL: f64 = 1e-9;

/// Point-count cap for the eigendecomposition propagator.
pub const EXPM_MAX_POINTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Euler,
    Rk4,
    Expm,
    Picard,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Euler => "euler",
            Method::Rk4 => "rk4",
            Method::Expm => "expm",
            Method::Picard => "picard",
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler" => Ok(Method::Euler),
            "rk4" => Ok(Method::Rk4),
            "expm" => Ok(Method::Expm),
            "picard" => Ok(Method::Picard),
            other => Err(Error::InvalidArgument(format!(
                "unknown method `{other}` (expected euler|rk4|expm|picard)"
            ))),
        }
    }
}

/// Generator of the linear dynamics of the odd coordinate on `supp(mu)`:
/// `(A h)(x) = -2 sum_{x*} b(x, x*)(h(x) + h(x*)) mu(x*)`.
#[derive(Debug, Clone)]
pub struct LinearGenerator {
    mu: DiscreteMeasure,
    support: Vec<usize>,
    /// Dense action table over support points: row x, column x*.
    matrix: DMatrix<f64>,
    /// Absorption `gamma(x) = 2 sum_{x*} b(x, x*) mu(x*)`.
    gamma: Vec<f64>,
}

/// Build the generator of `dh/dt = A h` for a symmetric `mu` and kernel `b`.
pub fn build_generator(mu: &DiscreteMeasure, b: &CollisionKernel) -> Result<LinearGenerator> {
    if mu.space() != b.space() {
        return Err(Error::SpaceMismatch);
    }
    if mu.symmetry_defect() > 1e-12 {
        return Err(Error::InvalidArgument(
            "generator needs a symmetric measure".into(),
        ));
    }
    let support = mu.support();
    if support.is_empty() {
        return Err(Error::InvalidArgument("mu has empty support".into()));
    }
    let m = support.len();
    let masses: Vec<f64> = support.iter().map(|&i| mu.mass(i)).collect();
    let mut gamma = vec![0.0; m];
    for a in 0..m {
        gamma[a] = 2.0
            * (0..m)
                .map(|c| b.eval(support[a], support[c]) * masses[c])
                .sum::<f64>();
    }
    let mut matrix = DMatrix::zeros(m, m);
    for a in 0..m {
        for c in 0..m {
            let mut v = -2.0 * b.eval(support[a], support[c]) * masses[c];
            if a == c {
                v -= gamma[a];
            }
            matrix[(a, c)] = v;
        }
    }
    Ok(LinearGenerator {
        mu: mu.clone(),
        support,
        matrix,
        gamma,
    })
}

impl LinearGenerator {
    pub fn mu(&self) -> &DiscreteMeasure {
        &self.mu
    }

    pub fn space(&self) -> &Arc<StateSpace> {
        self.mu.space()
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Apply the generator to `h` given on the support.
    pub fn apply(&self, h: &[f64]) -> Vec<f64> {
        let v = DVector::from_column_slice(h);
        (&self.matrix * v).iter().copied().collect()
    }

    /// One representative per involution orbit of the support, in index
    /// order. Fixed points of the involution carry `h = 0` and are dropped.
    pub fn representatives(&self) -> Vec<usize> {
        self.support
            .iter()
            .copied()
            .filter(|&p| p < self.mu.space().involution(p))
            .collect()
    }

    /// Restriction of the generator to odd functions, expressed on the
    /// representatives: eliminating `h(x^) = -h(x)` gives
    /// `M[a][b] = -gamma delta - 2 (b(p_a, q_b) mu(q_b) - b(p_a, q_b^) mu(q_b^))`.
    pub fn reduced_odd_matrix(&self) -> (Vec<usize>, DMatrix<f64>) {
        let reps = self.representatives();
        let m = reps.len();
        let space = self.mu.space();
        let sup_index = |p: usize| self.support.iter().position(|&q| q == p).expect("support");
        let mut mat = DMatrix::zeros(m, m);
        for (a, &p) in reps.iter().enumerate() {
            let pa = sup_index(p);
            let ga = self.gamma[pa];
            for (bb, &q) in reps.iter().enumerate() {
                let qd = space.involution(q);
                // Off-diagonal entries of the full table are exactly
                // -2 b(x, x*) mu(x*), so the products can be read back
                // without a second kernel pass.
                let b_mu_q = -0.5 * off_diag(&self.matrix, pa, sup_index(q), ga);
                let b_mu_qd = -0.5 * off_diag(&self.matrix, pa, sup_index(qd), ga);
                let mut v = -2.0 * (b_mu_q - b_mu_qd);
                if a == bb {
                    v -= ga;
                }
                mat[(a, bb)] = v;
            }
        }
        (reps, mat)
    }

    /// Real eigenvalues of the odd restriction, obtained through the
    /// similarity transform with `diag(sqrt(mu))` that symmetrizes it.
    pub fn odd_eigenvalues(&self) -> Vec<f64> {
        let (reps, mat) = self.reduced_odd_matrix();
        if reps.is_empty() {
            return Vec::new();
        }
        let d: Vec<f64> = reps.iter().map(|&p| self.mu.mass(p).sqrt()).collect();
        let m = reps.len();
        let mut s = DMatrix::zeros(m, m);
        for a in 0..m {
            for b in 0..m {
                s[(a, b)] = mat[(a, b)] * d[a] / d[b];
            }
        }
        // Symmetrize away rounding before the symmetric eigensolver.
        let s = (&s + s.transpose()) * 0.5;
        let eig = s.symmetric_eigen();
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(f64::total_cmp);
        vals
    }

    /// Slowest strictly-negative rate `min |xi|` over eigenvalues below
    /// `-1e-10`; `None` when the odd dynamics is entirely stationary.
    pub fn spectral_gap(&self) -> Option<f64> {
        self.odd_eigenvalues()
            .into_iter()
            .filter(|&x| x < -1e-10)
            .map(f64::abs)
            .min_by(f64::total_cmp)
    }
}

fn off_diag(matrix: &DMatrix<f64>, a: usize, c: usize, gamma_a: f64) -> f64 {
    if a == c {
        matrix[(a, c)] + gamma_a
    } else {
        matrix[(a, c)]
    }
}

/// Coefficients `(c2, c1, c0)` of the characteristic polynomial
/// `xi^3 + c2 xi^2 + c1 xi + c0` of a 3x3 matrix.
pub fn characteristic_cubic(m: &DMatrix<f64>) -> Result<(f64, f64, f64)> {
    if m.nrows() != 3 || m.ncols() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: m.nrows(),
        });
    }
    let tr = m.trace();
    let tr2 = (m * m).trace();
    let det = m.determinant();
    Ok((-tr, 0.5 * (tr * tr - tr2), -det))
}

/// Snapshots of a simulated run.
#[derive(Debug, Clone)]
pub enum TrajectoryStates {
    /// Odd-coordinate snapshots over the full point set, together with the
    /// invariant symmetric measure.
    Odd { mu: DiscreteMeasure, h: Vec<Vec<f64>> },
    /// Grid density snapshots.
    Grid {
        space: Arc<StateSpace>,
        densities: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: TrajectoryStates,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// The measure at snapshot `j`.
    pub fn measure_at(&self, j: usize) -> DiscreteMeasure {
        match &self.states {
            TrajectoryStates::Odd { mu, h } => {
                let values: Vec<f64> = (0..mu.space().len())
                    .map(|i| (1.0 + h[j][i]) * mu.value(i))
                    .collect();
                DiscreteMeasure::new(mu.space(), values).expect("valid trajectory state")
            }
            TrajectoryStates::Grid { space, densities } => {
                DiscreteMeasure::new(space, densities[j].clone()).expect("valid trajectory state")
            }
        }
    }

    /// The odd coordinate at snapshot `j` relative to `mu` (exact for odd
    /// trajectories, derived by division for grid trajectories).
    pub fn h_at(&self, j: usize, mu: &DiscreteMeasure) -> Vec<f64> {
        match &self.states {
            TrajectoryStates::Odd { h, .. } => h[j].clone(),
            TrajectoryStates::Grid { .. } => {
                let f = self.measure_at(j);
                let mut values = vec![0.0; mu.space().len()];
                for &i in &mu.support() {
                    values[i] = f.value(i) / mu.value(i) - 1.0;
                }
                values
            }
        }
    }

    /// Subsample snapshots, always keeping the first and last.
    pub fn subsample(&self, keep_every: usize) -> Trajectory {
        let keep_every = keep_every.max(1);
        let last = self.times.len() - 1;
        let keep: Vec<usize> = (0..self.times.len())
            .filter(|&j| j % keep_every == 0 || j == last)
            .collect();
        let times = keep.iter().map(|&j| self.times[j]).collect();
        let states = match &self.states {
            TrajectoryStates::Odd { mu, h } => TrajectoryStates::Odd {
                mu: mu.clone(),
                h: keep.iter().map(|&j| h[j].clone()).collect(),
            },
            TrajectoryStates::Grid { space, densities } => TrajectoryStates::Grid {
                space: Arc::clone(space),
                densities: keep.iter().map(|&j| densities[j].clone()).collect(),
            },
        };
        Trajectory { times, states }
    }
}

fn validate_t_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() || t_grid[0] != 0.0 {
        return Err(Error::InvalidArgument(
            "time grid must start at 0".into(),
        ));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "time grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}

fn check_h_bounds(h: &[f64], support: &[usize], t: f64) -> Result<()> {
    for &i in support {
        let v = h[i];
        if !v.is_finite() || v.abs() > 1.0 + BOUND_TOL {
            return Err(Error::StepSize { t, value: v });
        }
    }
    Ok(())
}

/// Integrate `dh/dt = A h` on the given time grid.
///
/// `rk4` takes one classical step per grid interval; `expm` propagates with
/// the exact matrix exponential through the eigendecomposition of the
/// symmetrized generator (spaces up to [`EXPM_MAX_POINTS`] support points);
/// `picard` iterates the mild fixed-point formulation per grid interval
/// with Simpson quadrature until the sup-change falls below 1e-12.
pub fn integrate_h(
    h0: &OddCoordinate,
    generator: &LinearGenerator,
    t_grid: &[f64],
    method: Method,
) -> Result<Trajectory> {
    validate_t_grid(t_grid)?;
    let mu = generator.mu();
    if h0.mu().space() != mu.space() {
        return Err(Error::SpaceMismatch);
    }
    let support = generator.support().to_vec();
    let full_len = mu.space().len();
    let mut h_sup: Vec<f64> = support.iter().map(|&i| h0.value(i)).collect();
    if h_sup.iter().any(|v| v.abs() > 1.0 + 1e-12) {
        return Err(Error::InvalidArgument("h0 out of [-1, 1]".into()));
    }

    let expm_prop = if method == Method::Expm {
        if support.len() > EXPM_MAX_POINTS {
            return Err(Error::InvalidArgument(format!(
                "expm is restricted to spaces with <= {EXPM_MAX_POINTS} support points \
                 (got {}); use rk4",
                support.len()
            )));
        }
        Some(ExpmPropagator::new(generator))
    } else {
        None
    };

    let mut snapshots: Vec<Vec<f64>> = Vec::with_capacity(t_grid.len());
    let embed = |h_sup: &[f64]| -> Vec<f64> {
        let mut full = vec![0.0; full_len];
        for (a, &i) in support.iter().enumerate() {
            full[i] = h_sup[a];
        }
        full
    };
    snapshots.push(embed(&h_sup));

    for w in t_grid.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let dt = t1 - t0;
        match method {
            Method::Rk4 => {
                let k1 = generator.apply(&h_sup);
                let mut tmp: Vec<f64> = h_sup
                    .iter()
                    .zip(&k1)
                    .map(|(h, k)| h + 0.5 * dt * k)
                    .collect();
                let k2 = generator.apply(&tmp);
                tmp = h_sup
                    .iter()
                    .zip(&k2)
                    .map(|(h, k)| h + 0.5 * dt * k)
                    .collect();
                let k3 = generator.apply(&tmp);
                tmp = h_sup.iter().zip(&k3).map(|(h, k)| h + dt * k).collect();
                let k4 = generator.apply(&tmp);
                for a in 0..h_sup.len() {
                    h_sup[a] += dt / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]);
                }
            }
            Method::Expm => {
                expm_prop.as_ref().expect("propagator").step(&mut h_sup, dt);
            }
            Method::Picard => {
                picard_window(generator, &mut h_sup, dt)?;
            }
            Method::Euler => {
                return Err(Error::InvalidArgument(
                    "euler integrates measures, not the odd coordinate".into(),
                ))
            }
        }
        let full = embed(&h_sup);
        check_h_bounds(&full, &support, t1)?;
        snapshots.push(full);
    }

    Ok(Trajectory {
        times: t_grid.to_vec(),
        states: TrajectoryStates::Odd {
            mu: mu.clone(),
            h: snapshots,
        },
    })
}

struct ExpmPropagator {
    d: Vec<f64>,
    vectors: DMatrix<f64>,
    eigenvalues: Vec<f64>,
}

impl ExpmPropagator {
    fn new(generator: &LinearGenerator) -> Self {
        let m = generator.support.len();
        let d: Vec<f64> = generator
            .support
            .iter()
            .map(|&i| generator.mu.mass(i).sqrt())
            .collect();
        let mut s = DMatrix::zeros(m, m);
        for a in 0..m {
            for b in 0..m {
                s[(a, b)] = generator.matrix[(a, b)] * d[a] / d[b];
            }
        }
        let s = (&s + s.transpose()) * 0.5;
        let eig = s.symmetric_eigen();
        Self {
            d,
            vectors: eig.eigenvectors,
            eigenvalues: eig.eigenvalues.iter().copied().collect(),
        }
    }

    /// h <- D^-1 V exp(L dt) V^T D h
    fn step(&self, h: &mut [f64], dt: f64) {
        let m = h.len();
        let scaled = DVector::from_iterator(m, (0..m).map(|a| h[a] * self.d[a]));
        let mut coeffs = self.vectors.transpose() * scaled;
        for (c, &l) in coeffs.iter_mut().zip(&self.eigenvalues) {
            *c *= (l * dt).exp();
        }
        let out = &self.vectors * coeffs;
        for a in 0..m {
            h[a] = out[a] / self.d[a];
        }
    }
}

/// Picard iteration of the mild formulation over one window `[0, dt]`:
/// `h(t) = e^{-gamma t} h_0 - 2 int_0^t e^{gamma (s - t)} (B h)(s) ds`,
/// where `(B h)(x) = sum_{x*} b(x, x*) h(x*) mu(x*)`. The integral uses the
/// three-node interpolatory (Simpson) rules on `{0, dt/2, dt}`.
fn picard_window(generator: &LinearGenerator, h: &mut Vec<f64>, dt: f64) -> Result<()> {
    let m = h.len();
    let gamma = &generator.gamma;
    // (B h) = -(A h + gamma h) / 2 recovers the convolution part from the
    // assembled matrix.
    let bh = |hv: &[f64]| -> Vec<f64> {
        let ah = generator.apply(hv);
        (0..m).map(|a| -0.5 * (ah[a] + gamma[a] * hv[a])).collect()
    };
    let h0 = h.clone();
    let mut h_mid = h.clone();
    let mut h_end = h.clone();
    let mut prev_delta = f64::INFINITY;
    let mut stall = 0;
    for iter in 0..10_000 {
        let g0 = bh(&h0);
        let gm = bh(&h_mid);
        let g1 = bh(&h_end);
        let mut new_mid = vec![0.0; m];
        let mut new_end = vec![0.0; m];
        for a in 0..m {
            let g = gamma[a];
            let e_half = (-g * dt / 2.0).exp();
            let e_full = (-g * dt).exp();
            // int_0^{dt}   e^{g(s - dt)}  P2(s) ds via Simpson (1, 4, 1)/6,
            // int_0^{dt/2} e^{g(s - dt/2)} P2(s) ds via the half-panel rule
            // (5, 8, -1)/24, with P2 interpolating the integrand nodes.
            let full = dt / 6.0 * (e_full * g0[a] + 4.0 * e_half * gm[a] + g1[a]);
            let e_plus = (g * dt / 2.0).exp();
            let half = dt / 24.0 * (5.0 * e_half * g0[a] + 8.0 * gm[a] - e_plus * g1[a]);
            new_end[a] = e_full * h0[a] - 2.0 * full;
            new_mid[a] = e_half * h0[a] - 2.0 * half;
        }
        let delta = new_end
            .iter()
            .zip(&h_end)
            .chain(new_mid.iter().zip(&h_mid))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        h_mid = new_mid;
        h_end = new_end;
        if delta < 1e-12 {
            *h = h_end;
            return Ok(());
        }
        // Geometric-convergence check: the fixed-point map contracts on a
        // window, so the sup-change must keep shrinking.
        if iter > 5 {
            if delta >= prev_delta {
                stall += 1;
                if stall > 10 {
                    return Err(Error::Internal(
                        "picard iteration is not contracting; shrink dt".into(),
                    ));
                }
            } else {
                stall = 0;
            }
        }
        prev_delta = delta;
    }
    Err(Error::Internal(
        "picard iteration exceeded 10000 iterations".into(),
    ))
}

/// The discrete collision operator of the grid scheme, acting on densities:
/// `Q_k = (pi/n) sum_j b_{k,j} (f_{k+n} f_{j+n} - f_k f_j)` with periodic
/// index extension.
///
/// Rates are computed for `k < n` and mirrored through `Q_{k+n} = -Q_k`
/// (an exact identity of the sum), which conserves the symmetric part and
/// the total mass of the scheme to the last bit.
pub fn grid_collision_operator(f: &[f64], b: &CollisionKernel) -> Result<Vec<f64>> {
    let space = b.space();
    let n = match space.kind() {
        SpaceKind::TorusGrid { n } => n,
        _ => {
            return Err(Error::InvalidArgument(
                "grid collision operator needs a torus grid".into(),
            ))
        }
    };
    let m = 2 * n;
    if f.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: f.len(),
        });
    }
    let factor = PI / n as f64;
    let mut rate = vec![0.0; m];
    for k in 0..n {
        let mut q = 0.0;
        for &j in b.partners(k) {
            let jn = (j + n) % m;
            q += b.eval(k, j) * (f[k + n] * f[jn] - f[k] * f[j]);
        }
        rate[k] = factor * q;
        rate[k + n] = -rate[k];
    }
    Ok(rate)
}

/// Pointwise mass rate of the collision dynamics on atomic measures:
/// `dm(x)/dt = sum_{x*} b(x, x*)(m(x^) m(x*^) - m(x) m(x*))`, mirrored
/// through involution pairs; fixed points have exactly zero rate.
pub fn collision_rate(f: &DiscreteMeasure, b: &CollisionKernel) -> Result<Vec<f64>> {
    if f.space() != b.space() {
        return Err(Error::SpaceMismatch);
    }
    let space = f.space();
    let n = space.len();
    let masses: Vec<f64> = (0..n).map(|i| f.mass(i)).collect();
    let mut rate = vec![0.0; n];
    for x in 0..n {
        let xd = space.involution(x);
        if xd < x {
            continue;
        }
        if xd == x {
            continue; // gain and loss cancel identically at fixed points
        }
        let mut q = 0.0;
        for &y in b.partners(x) {
            q += b.eval(x, y) * (masses[xd] * masses[space.involution(y)] - masses[x] * masses[y]);
        }
        rate[x] = q;
        rate[xd] = -q;
    }
    Ok(rate)
}

fn euler_guard(dt: f64, bound_m: f64, total_mass: f64) -> Result<()> {
    if dt <= 0.0 {
        return Err(Error::InvalidArgument("dt must be positive".into()));
    }
    if dt * 2.0 * bound_m * total_mass > 1.0 {
        return Err(Error::StepSize {
            t: 0.0,
            value: dt * 2.0 * bound_m * total_mass,
        });
    }
    Ok(())
}

/// Explicit Euler for the grid scheme: `f^{m+1} = f^m + dt Q(f^m, f^m)`.
///
/// Requires `dt * 2 M rho <= 1` at startup and aborts if any density falls
/// below `-1e-12`.
pub fn euler_simulate(
    f0: &DiscreteMeasure,
    b: &CollisionKernel,
    dt: f64,
    steps: usize,
    snapshot_every: usize,
) -> Result<Trajectory> {
    if f0.space() != b.space() {
        return Err(Error::SpaceMismatch);
    }
    euler_guard(dt, b.bound_m(), f0.total_mass())?;
    let snapshot_every = snapshot_every.max(1);
    let mut f = f0.values().to_vec();
    let mut times = vec![0.0];
    let mut densities = vec![f.clone()];
    for step in 1..=steps {
        let rate = grid_collision_operator(&f, b)?;
        for (v, r) in f.iter_mut().zip(&rate) {
            *v += dt * r;
        }
        if let Some((index, &value)) = f
            .iter()
            .enumerate()
            .find(|(_, &v)| v < -1e-12 || !v.is_finite())
        {
            return Err(Error::NegativityAbort { step, index, value });
        }
        if step % snapshot_every == 0 || step == steps {
            times.push(step as f64 * dt);
            densities.push(f.clone());
        }
    }
    Ok(Trajectory {
        times,
        states: TrajectoryStates::Grid {
            space: Arc::clone(f0.space()),
            densities,
        },
    })
}

/// Explicit Euler directly on atomic masses (used as a cross-check route
/// against the odd-coordinate integrators).
pub fn atoms_euler_simulate(
    f0: &DiscreteMeasure,
    b: &CollisionKernel,
    dt: f64,
    steps: usize,
    snapshot_every: usize,
) -> Result<Trajectory> {
    if f0.space() != b.space() {
        return Err(Error::SpaceMismatch);
    }
    euler_guard(dt, b.bound_m(), f0.total_mass())?;
    let snapshot_every = snapshot_every.max(1);
    let weight = f0.space().weight();
    let mut f = f0.clone();
    let mut times = vec![0.0];
    let mut densities = vec![f.values().to_vec()];
    for step in 1..=steps {
        let rate = collision_rate(&f, b)?;
        let values: Vec<f64> = f
            .values()
            .iter()
            .zip(&rate)
            .map(|(v, r)| v + dt * r / weight)
            .collect();
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, &v)| v < -1e-12 || !v.is_finite())
        {
            return Err(Error::NegativityAbort { step, index, value });
        }
        f = DiscreteMeasure::new(f0.space(), values)?;
        if step % snapshot_every == 0 || step == steps {
            times.push(step as f64 * dt);
            densities.push(f.values().to_vec());
        }
    }
    Ok(Trajectory {
        times,
        states: TrajectoryStates::Grid {
            space: Arc::clone(f0.space()),
            densities,
        },
    })
}

/// Uniform time grid `0, dt, ..., steps * dt`.
pub fn uniform_grid(dt: f64, steps: usize) -> Vec<f64> {
    (0..=steps).map(|j| j as f64 * dt).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::odd_coordinate;
    use approx::assert_abs_diff_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn three_dirac(alpha: f64, beta: f64, gamma: f64) -> (Arc<StateSpace>, DiscreteMeasure, CollisionKernel) {
        let s = StateSpace::atomic_circle(&[0.0, 2.0 * PI / 3.0, -2.0 * PI / 3.0]).unwrap();
        let b = CollisionKernel::indicator(&s, PI / 2.0).unwrap();
        let f = DiscreteMeasure::from_atoms(
            &s,
            &[
                (0.0, 2.0 * alpha),
                (2.0 * PI / 3.0, 2.0 * beta),
                (-2.0 * PI / 3.0, 2.0 * gamma),
            ],
        )
        .unwrap();
        (s, f, b)
    }

    #[test]
    fn three_dirac_reduced_generator_table() {
        let (al, be, ga) = (0.1, 0.15, 0.25);
        let (_s, f, b) = three_dirac(al, be, ga);
        let mu = f.symmetric_part();
        let generator = build_generator(&mu, &b).unwrap();
        let (reps, m) = generator.reduced_odd_matrix();
        assert_eq!(reps.len(), 3);
        let expected = [
            [be + ga, be, ga],
            [al, al + ga, ga],
            [al, be, al + be],
        ];
        for a in 0..3 {
            for c in 0..3 {
                assert_abs_diff_eq!(m[(a, c)], -2.0 * expected[a][c], epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn three_dirac_characteristic_polynomial() {
        let (al, be, ga) = (0.12, 0.2, 0.18);
        let (_s, f, b) = three_dirac(al, be, ga);
        let generator = build_generator(&f.symmetric_part(), &b).unwrap();
        let (_, m) = generator.reduced_odd_matrix();
        let (c2, c1, c0) = characteristic_cubic(&m).unwrap();
        let sum = al + be + ga;
        assert_abs_diff_eq!(c2, 4.0 * sum, epsilon = 1e-13); // = 2 when the mass is 1
        assert_abs_diff_eq!(
            c1,
            4.0 * (al * al + be * be + ga * ga + 2.0 * (al * be + al * ga + be * ga)),
            epsilon = 1e-13
        );
        assert_abs_diff_eq!(c0, 32.0 * al * be * ga, epsilon = 1e-13);
    }

    #[test]
    fn symmetric_three_dirac_eigenvalues() {
        let (_s, f, b) = three_dirac(1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0);
        let generator = build_generator(&f.symmetric_part(), &b).unwrap();
        let vals = generator.odd_eigenvalues();
        assert_eq!(vals.len(), 3);
        assert_abs_diff_eq!(vals[0], -4.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[1], -1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[2], -1.0 / 3.0, epsilon = 1e-12);
    }

    fn epsilon_family() -> (Arc<StateSpace>, DiscreteMeasure, CollisionKernel) {
        let eps = 0.1;
        let s = StateSpace::atomic_circle(&[0.0, PI / 2.0 + eps]).unwrap();
        let b = CollisionKernel::indicator(&s, PI / 2.0).unwrap();
        let f = DiscreteMeasure::from_atoms(&s, &[(0.0, 0.5), (PI / 2.0 + eps, 0.5)]).unwrap();
        (s, f, b)
    }

    #[test]
    fn epsilon_family_exact_decay() {
        let (_s, f, b) = epsilon_family();
        let mu = f.symmetric_part();
        let h0 = odd_coordinate(&f, &mu).unwrap();
        let generator = build_generator(&mu, &b).unwrap();
        let grid = uniform_grid(0.01, 500);

        let exact = |t: f64, i: usize| (-t).exp() * h0.value(i);

        let expm = integrate_h(&h0, &generator, &grid, Method::Expm).unwrap();
        let rk4 = integrate_h(&h0, &generator, &grid, Method::Rk4).unwrap();
        let picard = integrate_h(&h0, &generator, &grid, Method::Picard).unwrap();
        for traj in [&expm, &rk4, &picard] {
            assert_eq!(traj.len(), 501);
        }
        for (j, &t) in expm.times.iter().enumerate() {
            let he = expm.h_at(j, &mu);
            let hr = rk4.h_at(j, &mu);
            let hp = picard.h_at(j, &mu);
            for i in 0..4 {
                assert!((he[i] - exact(t, i)).abs() <= 1e-12, "expm at t={t}");
                assert!((hr[i] - exact(t, i)).abs() <= 1e-8, "rk4 at t={t}");
                assert!((hp[i] - exact(t, i)).abs() <= 1e-5, "picard at t={t}");
            }
        }
    }

    #[test]
    fn zero_h_stays_zero() {
        let (_s, f, b) = epsilon_family();
        let mu = f.symmetric_part();
        let h0 = OddCoordinate::new(&mu, vec![0.0; 4], 0.0).unwrap();
        let generator = build_generator(&mu, &b).unwrap();
        let traj = integrate_h(&h0, &generator, &uniform_grid(0.1, 20), Method::Rk4).unwrap();
        for j in 0..traj.len() {
            assert!(traj.h_at(j, &mu).iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn rk4_matches_expm_on_random_instances() {
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..10 {
            let n_atoms = rng.random_range(2..=5usize);
            let mut angles = Vec::new();
            'outer: while angles.len() < n_atoms {
                let a = rng.random_range(-PI..PI);
                for &e in &angles {
                    if crate::space::arc_distance(a, e) < 0.05
                        || crate::space::arc_distance(a, e + PI) < 0.05
                    {
                        continue 'outer;
                    }
                }
                angles.push(a);
            }
            let s = StateSpace::atomic_circle(&angles).unwrap();
            let mut values: Vec<f64> = (0..s.len()).map(|_| rng.random_range(0.05..1.0)).collect();
            let total: f64 = values.iter().sum();
            values.iter_mut().for_each(|v| *v /= total);
            let f = DiscreteMeasure::new(&s, values).unwrap();
            let mu = f.symmetric_part();
            let b = CollisionKernel::indicator(&s, rng.random_range(0.5..2.5)).unwrap();
            let h0 = odd_coordinate(&f, &mu).unwrap();
            let generator = build_generator(&mu, &b).unwrap();
            let grid = uniform_grid(0.01, 500);
            let expm = integrate_h(&h0, &generator, &grid, Method::Expm).unwrap();
            let rk4 = integrate_h(&h0, &generator, &grid, Method::Rk4).unwrap();
            let j = grid.len() - 1;
            let he = expm.h_at(j, &mu);
            let hr = rk4.h_at(j, &mu);
            let diff = he
                .iter()
                .zip(&hr)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(diff <= 1e-7, "rk4 vs expm sup-difference {diff}");
        }
    }

    #[test]
    fn bounds_propagate_along_trajectories() {
        let (_s, f, b) = epsilon_family();
        let mu = f.symmetric_part();
        let h0 = odd_coordinate(&f, &mu).unwrap();
        let generator = build_generator(&mu, &b).unwrap();
        for method in [Method::Rk4, Method::Expm, Method::Picard] {
            let traj = integrate_h(&h0, &generator, &uniform_grid(0.05, 100), method).unwrap();
            for j in 0..traj.len() {
                for v in traj.h_at(j, &mu) {
                    assert!(v.abs() <= 1.0 + BOUND_TOL);
                }
            }
        }
    }

    #[test]
    fn grid_operator_vanishes_on_symmetric_densities() {
        let s = StateSpace::torus_grid(8).unwrap();
        let b = CollisionKernel::indicator(&s, PI / 2.0).unwrap();
        let f: Vec<f64> = (0..16).map(|k| 1.0 + (2.0 * s.coord(k)).cos()).collect();
        // f(phi + pi) = f(phi) for this profile.
        let rate = grid_collision_operator(&f, &b).unwrap();
        for r in rate {
            assert_abs_diff_eq!(r, 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn grid_operator_conserves_mass_exactly() {
        let s = StateSpace::torus_grid(8).unwrap();
        let b = CollisionKernel::indicator(&s, PI / 2.0).unwrap();
        let f: Vec<f64> = (0..16).map(|k| 0.2 + 0.1 * (k as f64).sin().abs()).collect();
        let rate = grid_collision_operator(&f, &b).unwrap();
        let total: f64 = rate.iter().sum::<f64>() * s.weight();
        assert_abs_diff_eq!(total, 0.0, epsilon = 1e-13);
    }

    #[test]
    fn grid_operator_moves_mass_toward_antipode_of_a_bump() {
        let s = StateSpace::torus_grid(8).unwrap();
        let b = CollisionKernel::indicator(&s, PI / 2.0).unwrap();
        let mut f = vec![0.05; 16];
        f[4] = 1.0; // bump
        let rate = grid_collision_operator(&f, &b).unwrap();
        assert!(rate[4] < 0.0, "rate at the bump should be negative");
        assert!(rate[12] > 0.0, "rate at the antipode should be positive");
    }

    #[test]
    fn euler_conserves_mass_on_symmetric_sets() {
        // Mass on any union of antipodal index pairs is constant in time.
        let s = StateSpace::torus_grid(16).unwrap();
        let b = CollisionKernel::indicator(&s, PI / 2.0).unwrap();
        let mut values: Vec<f64> = (0..32)
            .map(|k| 0.3 + 0.15 * (s.coord(k)).sin() + 0.1 * (5.0 * s.coord(k)).cos())
            .collect();
        let total: f64 = values.iter().sum::<f64>() * s.weight();
        values.iter_mut().for_each(|v| *v /= total);
        let f0 = DiscreteMeasure::new(&s, values).unwrap();
        let traj = euler_simulate(&f0, &b, 0.05, 200, 20).unwrap();
        let mut rng = StdRng::seed_from_u64(31);
        for _ in 0..10 {
            let set: Vec<usize> = (0..16usize)
                .filter(|_| rng.random_range(0.0..1.0) < 0.5)
                .flat_map(|k| [k, k + 16])
                .collect();
            let mass_at = |j: usize| -> f64 {
                let f = traj.measure_at(j);
                set.iter().map(|&i| f.mass(i)).sum()
            };
            let initial = mass_at(0);
            for j in 1..traj.len() {
                assert!(
                    (mass_at(j) - initial).abs() <= 1e-12,
                    "symmetric-set mass drifted by {:.2e}",
                    (mass_at(j) - initial).abs()
                );
            }
        }
    }

    #[test]
    fn picard_matches_expm_on_a_random_instance() {
        let mut rng = StdRng::seed_from_u64(8);
        let s = StateSpace::atomic_circle(&[0.2, 1.5, -2.0]).unwrap();
        let mut values: Vec<f64> = (0..s.len()).map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = values.iter().sum();
        values.iter_mut().for_each(|v| *v /= total);
        let f = DiscreteMeasure::new(&s, values).unwrap();
        let mu = f.symmetric_part();
        let b = CollisionKernel::indicator(&s, 1.9).unwrap();
        let h0 = odd_coordinate(&f, &mu).unwrap();
        let generator = build_generator(&mu, &b).unwrap();
        let grid = uniform_grid(0.02, 150);
        let expm = integrate_h(&h0, &generator, &grid, Method::Expm).unwrap();
        let picard = integrate_h(&h0, &generator, &grid, Method::Picard).unwrap();
        let j = grid.len() - 1;
        let diff = expm
            .h_at(j, &mu)
            .iter()
            .zip(&picard.h_at(j, &mu))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(diff <= 1e-6, "picard vs expm sup-difference {diff}");
    }

    #[test]
    fn euler_rejects_oversized_steps() {
        let s = StateSpace::torus_grid(8).unwrap();
        let b = CollisionKernel::indicator(&s, PI / 2.0).unwrap();
        let f = DiscreteMeasure::new(&s, vec![1.0 / (16.0 * s.weight()); 16]).unwrap();
        assert!(matches!(
            euler_simulate(&f, &b, 0.6, 10, 1),
            Err(Error::StepSize { .. })
        ));
    }

    #[test]
    fn quadratic_scaling_property() {
        // Simulating mass-rho data for time t/rho and rescaling equals
        // simulating unit-mass data for time t.
        let (s, f, b) = epsilon_family();
        let rho = 2.0;
        let scaled =
            DiscreteMeasure::new(&s, f.values().iter().map(|v| v * rho).collect::<Vec<_>>())
                .unwrap();
        let t = 1.0;
        let steps = 400;
        let unit = atoms_euler_simulate(&f, &b, t / steps as f64, steps, steps).unwrap();
        let fast =
            atoms_euler_simulate(&scaled, &b, t / rho / steps as f64, steps, steps).unwrap();
        let last_unit = unit.measure_at(unit.len() - 1);
        let last_fast = fast.measure_at(fast.len() - 1);
        for i in 0..s.len() {
            assert_abs_diff_eq!(
                last_fast.mass(i) / rho,
                last_unit.mass(i),
                epsilon = 1e-6
            );
        }
    }

    #[test]
    fn atoms_euler_matches_expm() {
        let (_s, f, b) = epsilon_family();
        let mu = f.symmetric_part();
        let h0 = odd_coordinate(&f, &mu).unwrap();
        let generator = build_generator(&mu, &b).unwrap();
        let t = 2.0;
        let steps = 2000;
        let expm = integrate_h(&h0, &generator, &[0.0, t], Method::Expm).unwrap();
        let euler = atoms_euler_simulate(&f, &b, t / steps as f64, steps, steps).unwrap();
        let fe = expm.measure_at(1);
        let fu = euler.measure_at(euler.len() - 1);
        for i in 0..fe.space().len() {
            assert_abs_diff_eq!(fe.mass(i), fu.mass(i), epsilon = 1e-4);
        }
    }

    #[test]
    fn generator_annihilates_equilibrium_pattern() {
        // Case (ii) pair: the pattern h = eta on T u T_*^, -eta on T_* u T^
        // lies in the kernel of the generator.
        let s = StateSpace::atomic_circle(&[0.0]).unwrap();
        let b = CollisionKernel::indicator(&s, PI / 2.0).unwrap();
        let mu = DiscreteMeasure::from_atoms(&s, &[(0.0, 0.5), (PI, 0.5)]).unwrap();
        let generator = build_generator(&mu, &b).unwrap();
        let eta = 0.37;
        let pattern = vec![eta, -eta];
        let out = generator.apply(&pattern);
        for v in out {
            assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn generator_annihilates_predicted_equilibrium() {
        let s = StateSpace::torus_grid(12).unwrap();
        let b = CollisionKernel::indicator(&s, PI / 2.0).unwrap();
        let values: Vec<f64> = (0..s.len())
            .map(|k| {
                let phi = s.coord(k);
                if phi > PI / 4.0 && phi < 3.0 * PI / 4.0 {
                    0.68 / (PI / 2.0)
                } else if phi > -3.0 * PI / 4.0 && phi < -PI / 4.0 {
                    0.32 / (PI / 2.0)
                } else {
                    0.0
                }
            })
            .collect();
        let total: f64 = values.iter().sum::<f64>() * s.weight();
        let f = DiscreteMeasure::new(
            &s,
            values.iter().map(|v| v / total).collect::<Vec<_>>(),
        )
        .unwrap();
        let mu = f.symmetric_part();
        let pred = crate::equilibrium::predict_equilibrium(&f, &b).unwrap();
        let h_inf = odd_coordinate(&pred.f_infty, &mu).unwrap();
        let generator = build_generator(&mu, &b).unwrap();
        let h_sup: Vec<f64> = generator
            .support()
            .iter()
            .map(|&i| h_inf.value(i))
            .collect();
        for v in generator.apply(&h_sup) {
            assert!(v.abs() <= 1e-12, "generator leaves residual {v}");
        }
    }

    #[test]
    fn generator_maps_odd_to_odd() {
        let (s, f, b) = epsilon_family();
        let mu = f.symmetric_part();
        let generator = build_generator(&mu, &b).unwrap();
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..20 {
            let mut h = vec![0.0; 4];
            for i in 0..4 {
                if h[i] == 0.0 && s.involution(i) != i {
                    let v: f64 = rng.random_range(-1.0..1.0);
                    h[i] = v;
                    h[s.involution(i)] = -v;
                }
            }
            let h_sup: Vec<f64> = generator.support().iter().map(|&i| h[i]).collect();
            let out = generator.apply(&h_sup);
            for (a, &i) in generator.support().iter().enumerate() {
                let id = generator
                    .support()
                    .iter()
                    .position(|&j| j == s.involution(i))
                    .unwrap();
                assert_abs_diff_eq!(out[a], -out[id], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn integrate_h_rejects_bad_inputs() {
        let (_s, f, b) = epsilon_family();
        let mu = f.symmetric_part();
        let generator = build_generator(&mu, &b).unwrap();
        let h0 = odd_coordinate(&f, &mu).unwrap();
        // Grid must start at zero and increase.
        assert!(integrate_h(&h0, &generator, &[0.5, 1.0], Method::Rk4).is_err());
        assert!(integrate_h(&h0, &generator, &[0.0, 1.0, 1.0], Method::Rk4).is_err());
        // Oversized rk4 steps blow past the h bounds and abort.
        let big = integrate_h(&h0, &generator, &uniform_grid(5.0, 10), Method::Rk4);
        assert!(matches!(big, Err(Error::StepSize { .. })));
    }

    #[test]
    fn expm_refuses_large_spaces() {
        let s = StateSpace::torus_grid(64).unwrap();
        let b = CollisionKernel::indicator(&s, PI / 2.0).unwrap();
        let mu = DiscreteMeasure::new(&s, vec![1.0 / (128.0 * s.weight()); 128]).unwrap();
        let h0 = OddCoordinate::new(&mu, vec![0.0; 128], 0.0).unwrap();
        let generator = build_generator(&mu, &b).unwrap();
        assert!(integrate_h(&h0, &generator, &[0.0, 1.0], Method::Expm).is_err());
    }
}
