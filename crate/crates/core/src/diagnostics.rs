//! Entropy and dissipation functionals, conserved-quantity monitoring,
//! exponential-rate fitting, and the Wasserstein stability coefficient.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{set_mass, CaseTag, InteractionGraph};
use crate::kernel::CollisionKernel;
use crate::measure::DiscreteMeasure;

/// Samples with entropy below this floor are round-off noise and excluded
/// from rate fits.
pub const ENTROPY_FLOOR: f64 = 1e-14;

/// Variance of the odd part: `H[f] = 1/2 int h^2 dmu`.
pub fn entropy(h: &[f64], mu: &DiscreteMeasure) -> f64 {
    (0..h.len()).map(|i| 0.5 * h[i] * h[i] * mu.mass(i)).sum()
}

/// The equivalent double integral `1/4 int int (h - h_*)^2 dmu dmu_*`,
/// equal to [`entropy`] for odd `h` against a symmetric probability `mu`.
pub fn entropy_double_form(h: &[f64], mu: &DiscreteMeasure) -> f64 {
    let support = mu.support();
    let mut acc = 0.0;
    for &i in &support {
        for &j in &support {
            let d = h[i] - h[j];
            acc += 0.25 * d * d * mu.mass(i) * mu.mass(j);
        }
    }
    acc
}

/// Dissipation `D[f] = int int b(x, x_*)(h + h_*)^2 dmu dmu_*`; satisfies
/// `dH/dt = -D` along exact trajectories.
pub fn dissipation(h: &[f64], mu: &DiscreteMeasure, b: &CollisionKernel) -> f64 {
    let support = mu.support();
    let mut acc = 0.0;
    for &i in &support {
        let mi = mu.mass(i);
        for &j in b.partners(i) {
            let s = h[i] + h[j];
            acc += b.eval(i, j) * s * s * mi * mu.mass(j);
        }
    }
    acc
}

/// Component relative entropy
/// `H_T[f] = 1/2 int_T (h - eta)^2 dmu + 1/2 int_{T_*} (h + eta)^2 dmu`.
///
/// Every evaluation asserts the lower bound
/// `2 min(rho, rho_*) H_T <= int int_{T x T_*} (h + h_*)^2 dmu dmu_*`.
pub fn component_entropy(
    h: &[f64],
    mu: &DiscreteMeasure,
    t: &[usize],
    t_star: &[usize],
    eta: f64,
) -> f64 {
    let mut acc = 0.0;
    for &i in t {
        let d = h[i] - eta;
        acc += 0.5 * d * d * mu.mass(i);
    }
    for &i in t_star {
        let d = h[i] + eta;
        acc += 0.5 * d * d * mu.mass(i);
    }
    let mut pair = 0.0;
    for &i in t {
        for &j in t_star {
            let s = h[i] + h[j];
            pair += s * s * mu.mass(i) * mu.mass(j);
        }
    }
    let rho = set_mass(mu, t);
    let rho_star = set_mass(mu, t_star);
    // The bound is proved for the eta determined by h itself; along
    // trajectories that constant is conserved and equals the caller's.
    let eta_inst = instantaneous_eta(h, mu, t, t_star);
    let h_t_inst = {
        let mut v = 0.0;
        for &i in t {
            v += 0.5 * (h[i] - eta_inst).powi(2) * mu.mass(i);
        }
        for &i in t_star {
            v += 0.5 * (h[i] + eta_inst).powi(2) * mu.mass(i);
        }
        v
    };
    debug_assert!(
        2.0 * rho.min(rho_star) * h_t_inst <= pair + 1e-9 * (1.0 + pair),
        "variance lower bound violated: {} > {}",
        2.0 * rho.min(rho_star) * h_t_inst,
        pair
    );
    acc
}

/// `eta` determined by the current odd coordinate:
/// `(rho <h>_T - rho_* <h>_{T_*}) / (rho + rho_*)`.
pub fn instantaneous_eta(
    h: &[f64],
    mu: &DiscreteMeasure,
    t: &[usize],
    t_star: &[usize],
) -> f64 {
    let int_t: f64 = t.iter().map(|&i| h[i] * mu.mass(i)).sum();
    let int_star: f64 = t_star.iter().map(|&i| h[i] * mu.mass(i)).sum();
    (int_t - int_star) / (set_mass(mu, t) + set_mass(mu, t_star))
}

/// Component dissipation `D_T[f] = int int_{T x T_*} b (h + h_*)^2 dmu dmu_*`.
pub fn component_dissipation(
    h: &[f64],
    mu: &DiscreteMeasure,
    b: &CollisionKernel,
    t: &[usize],
    t_star: &[usize],
) -> f64 {
    let mut acc = 0.0;
    for &i in t {
        let mi = mu.mass(i);
        for &j in t_star {
            let s = h[i] + h[j];
            acc += b.eval(i, j) * s * s * mi * mu.mass(j);
        }
    }
    acc
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayFit {
    pub lambda: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
}

/// Least-squares slope of `log H` over the trailing half of the samples
/// above [`ENTROPY_FLOOR`]; returns the decay rate `lambda = -slope`.
pub fn fit_decay_rate(series: &[(f64, f64)]) -> Result<DecayFit> {
    let alive: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|&(_, v)| v > ENTROPY_FLOOR)
        .collect();
    if alive.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "{} samples above the entropy floor, need 10",
            alive.len()
        )));
    }
    let tail = &alive[alive.len() / 2..];
    let n = tail.len() as f64;
    let xs: Vec<f64> = tail.iter().map(|&(t, _)| t).collect();
    let ys: Vec<f64> = tail.iter().map(|&(_, v)| v.ln()).collect();
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("degenerate time window".into()));
    }
    let slope = sxy / sxx;
    let ss_tot: f64 = ys.iter().map(|y| (y - mean_y).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let fit = mean_y + slope * (x - mean_x);
            (y - fit).powi(2)
        })
        .sum();
    let r_squared = if ss_tot <= 1e-30 {
        if ss_res <= 1e-30 {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(DecayFit {
        lambda: -slope,
        r_squared,
        window: (xs[0], xs[xs.len() - 1]),
    })
}

/// The polynomial factor `C(t) = 1 + (M + 5 lambda L) t + 2 t^2 lambda M L`
/// of the Wasserstein stability estimate.
pub fn stability_coefficient(t: f64, lambda: f64, m: f64, l: f64) -> f64 {
    1.0 + (m + 5.0 * lambda * l) * t + 2.0 * t * t * lambda * m * l
}

/// Full stability bound `e^{lambda L t} C(t)`.
pub fn stability_bound(t: f64, lambda: f64, m: f64, l: f64) -> f64 {
    (lambda * l * t).exp() * stability_coefficient(t, lambda, m, l)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct DiagnosticsOptions {
    /// Also track the Wasserstein-1 distance to the prediction (circle
    /// probability measures only).
    pub wasserstein: bool,
}

/// Per-snapshot diagnostic values.
#[derive(Debug, Clone, Serialize)]
pub struct DiagRow {
    pub t: f64,
    pub mass_total: f64,
    pub mass_upper: f64,
    pub mass_lower: f64,
    /// `H[f]`, the variance of the odd part.
    pub entropy: f64,
    /// `D[f]`, the global dissipation.
    pub dissipation: f64,
    /// Relative entropy to the predicted equilibrium: the sum of `H_T` over
    /// component orbits. Decays to zero; equals `H` up to the conserved
    /// `eta` offsets.
    pub entropy_to_eq: f64,
    pub tv_to_prediction: f64,
    pub w1_to_prediction: Option<f64>,
    /// Max pointwise defect of the symmetric part against `mu` (mass units).
    pub sym_defect: f64,
    /// Per tracked orbit: `H_T`, `D_T` and the instantaneous `eta_T`.
    pub orbit_entropy: Vec<f64>,
    pub orbit_dissipation: Vec<f64>,
    pub orbit_eta: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct DiagnosticsSeries {
    pub rows: Vec<DiagRow>,
    /// Canonical component id of each tracked (non-isolated) orbit.
    pub orbit_ids: Vec<usize>,
}

impl DiagnosticsSeries {
    pub fn entropy_series(&self) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r.t, r.entropy)).collect()
    }

    pub fn relative_entropy_series(&self) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r.t, r.entropy_to_eq)).collect()
    }
}

fn half_masses(f: &DiscreteMeasure) -> (f64, f64) {
    let mut upper = 0.0;
    let mut lower = 0.0;
    for i in 0..f.space().len() {
        let c = f.space().coord(i);
        if c >= 0.0 {
            upper += f.mass(i);
        } else {
            lower += f.mass(i);
        }
    }
    (upper, lower)
}

/// Evaluate the diagnostic functionals along a trajectory.
pub fn evaluate(
    trajectory: &crate::dynamics::Trajectory,
    mu: &DiscreteMeasure,
    graph: &InteractionGraph,
    prediction: &crate::equilibrium::EquilibriumPrediction,
    b: &CollisionKernel,
    opts: DiagnosticsOptions,
) -> Result<DiagnosticsSeries> {
    if trajectory.is_empty() {
        return Err(Error::InsufficientData("empty trajectory".into()));
    }
    let orbit_ids: Vec<usize> = graph
        .orbits()
        .iter()
        .map(|o| o[0])
        .filter(|&c| graph.case(c) != CaseTag::Isolated)
        .collect();
    let mut rows = Vec::with_capacity(trajectory.len());
    for j in 0..trajectory.len() {
        let f = trajectory.measure_at(j);
        let h = trajectory.h_at(j, mu);
        let (mass_upper, mass_lower) = half_masses(&f);
        let mut orbit_entropy = Vec::with_capacity(orbit_ids.len());
        let mut orbit_dissipation = Vec::with_capacity(orbit_ids.len());
        let mut orbit_eta = Vec::with_capacity(orbit_ids.len());
        let mut entropy_to_eq = 0.0;
        for &c in &orbit_ids {
            let t_set = graph.component(c);
            let t_star = graph.partner_set(c);
            let eta_const = prediction.components[c].eta;
            let h_t = component_entropy(&h, mu, t_set, t_star, eta_const);
            let d_t = component_dissipation(&h, mu, b, t_set, t_star);
            let rho = set_mass(mu, t_set);
            let rho_star = set_mass(mu, t_star);
            let int_t: f64 = t_set.iter().map(|&i| h[i] * mu.mass(i)).sum();
            let int_star: f64 = t_star.iter().map(|&i| h[i] * mu.mass(i)).sum();
            orbit_entropy.push(h_t);
            orbit_dissipation.push(d_t);
            orbit_eta.push((int_t - int_star) / (rho + rho_star));
            entropy_to_eq += h_t;
        }
        let w1 = if opts.wasserstein {
            Some(f.wasserstein1_circle(&prediction.f_infty)?)
        } else {
            None
        };
        let sym = f.symmetric_part();
        let sym_defect = (0..f.space().len())
            .map(|i| (sym.mass(i) - mu.mass(i)).abs())
            .fold(0.0, f64::max);
        rows.push(DiagRow {
            t: trajectory.times[j],
            mass_total: f.total_mass(),
            mass_upper,
            mass_lower,
            entropy: entropy(&h, mu),
            dissipation: dissipation(&h, mu, b),
            entropy_to_eq,
            tv_to_prediction: f.tv_distance(&prediction.f_infty)?,
            w1_to_prediction: w1,
            sym_defect,
            orbit_entropy,
            orbit_dissipation,
            orbit_eta,
        });
    }
    Ok(DiagnosticsSeries { rows, orbit_ids })
}

/// Maximal drifts of the conserved quantities over a diagnostics series.
#[derive(Debug, Clone, Serialize)]
pub struct ConservedReport {
    pub mass_drift: f64,
    pub sym_drift: f64,
    pub eta_drift: f64,
    pub upper_mass_drift: f64,
    pub lower_mass_drift: f64,
    /// Whether the two half spaces are unions of components (then their
    /// masses are conserved, not merely convergent).
    pub halves_are_component_unions: bool,
    pub upper_initial: f64,
    pub upper_final: f64,
    pub lower_initial: f64,
    pub lower_final: f64,
}

pub fn conserved_report(
    series: &DiagnosticsSeries,
    mu: &DiscreteMeasure,
    graph: &InteractionGraph,
) -> Result<ConservedReport> {
    let rows = &series.rows;
    if rows.is_empty() {
        return Err(Error::InsufficientData("empty diagnostics series".into()));
    }
    let first = &rows[0];
    let drift = |get: &dyn Fn(&DiagRow) -> f64| -> f64 {
        rows.iter()
            .map(|r| (get(r) - get(first)).abs())
            .fold(0.0, f64::max)
    };
    let eta_drift = rows
        .iter()
        .flat_map(|r| {
            r.orbit_eta
                .iter()
                .zip(&first.orbit_eta)
                .map(|(a, b)| (a - b).abs())
        })
        .fold(0.0, f64::max);
    let sym_drift = rows.iter().map(|r| r.sym_defect).fold(0.0, f64::max);
    let halves_are_component_unions = graph.components().iter().all(|comp| {
        let signs: Vec<bool> = comp
            .iter()
            .map(|&i| mu.space().coord(i) >= 0.0)
            .collect();
        signs.iter().all(|&s| s) || signs.iter().all(|&s| !s)
    });
    Ok(ConservedReport {
        mass_drift: drift(&|r| r.mass_total),
        sym_drift,
        eta_drift,
        upper_mass_drift: drift(&|r| r.mass_upper),
        lower_mass_drift: drift(&|r| r.mass_lower),
        halves_are_component_unions,
        upper_initial: first.mass_upper,
        upper_final: rows[rows.len() - 1].mass_upper,
        lower_initial: first.mass_lower,
        lower_final: rows[rows.len() - 1].mass_lower,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{build_generator, integrate_h, uniform_grid, Method};
    use crate::equilibrium::predict_equilibrium;
    use crate::graph::build_graph;
    use crate::measure::odd_coordinate;
    use crate::space::StateSpace;
    use approx::assert_abs_diff_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn epsilon_family() -> (
        Arc<StateSpace>,
        DiscreteMeasure,
        DiscreteMeasure,
        CollisionKernel,
    ) {
        let s = StateSpace::atomic_circle(&[0.0, PI / 2.0 + 0.1]).unwrap();
        let b = CollisionKernel::indicator(&s, PI / 2.0).unwrap();
        let f = DiscreteMeasure::from_atoms(&s, &[(0.0, 0.5), (PI / 2.0 + 0.1, 0.5)]).unwrap();
        let mu = f.symmetric_part();
        (s, f, mu, b)
    }

    fn epsilon_h(s: &StateSpace, t: f64) -> Vec<f64> {
        let e = (-t).exp();
        (0..s.len())
            .map(|i| {
                let phi = s.coord(i);
                if phi.abs() < 1e-9 || (phi - (PI / 2.0 + 0.1)).abs() < 1e-9 {
                    e
                } else {
                    -e
                }
            })
            .collect()
    }

    #[test]
    fn entropy_zero_for_zero_h() {
        let (_s, _f, mu, _b) = epsilon_family();
        assert_eq!(entropy(&[0.0, 0.0, 0.0, 0.0], &mu), 0.0);
    }

    #[test]
    fn entropy_of_epsilon_family_is_half_exp_minus_2t() {
        let (s, _f, mu, _b) = epsilon_family();
        for t in [0.0, 0.7, 2.0] {
            let h = epsilon_h(&s, t);
            assert_abs_diff_eq!(entropy(&h, &mu), 0.5 * (-2.0 * t).exp(), epsilon = 1e-14);
        }
    }

    #[test]
    fn entropy_double_form_identity() {
        let s = StateSpace::atomic_circle(&[0.2, 1.7, -2.4]).unwrap();
        let mut rng = StdRng::seed_from_u64(1);
        for _ in 0..50 {
            let mut values: Vec<f64> = (0..s.len()).map(|_| rng.random_range(0.05..1.0)).collect();
            let total: f64 = values.iter().sum();
            values.iter_mut().for_each(|v| *v /= total);
            let mu = DiscreteMeasure::new(&s, values).unwrap().symmetric_part();
            let mut h = vec![0.0; s.len()];
            for i in 0..s.len() {
                if h[i] == 0.0 {
                    let v: f64 = rng.random_range(-1.0..1.0);
                    h[i] = v;
                    h[s.involution(i)] = -v;
                }
            }
            assert_abs_diff_eq!(
                entropy(&h, &mu),
                entropy_double_form(&h, &mu),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn dissipation_examples() {
        let (s, f, mu, b) = epsilon_family();
        let h0 = odd_coordinate(&f, &mu).unwrap();
        assert_abs_diff_eq!(dissipation(h0.values(), &mu, &b), 1.0, epsilon = 1e-14);
        // Equilibrium pattern dissipates nothing.
        let h_eq = vec![0.0; s.len()];
        assert_eq!(dissipation(&h_eq, &mu, &b), 0.0);
    }

    #[test]
    fn entropy_derivative_matches_dissipation() {
        let (_s, f, mu, b) = epsilon_family();
        let h0 = odd_coordinate(&f, &mu).unwrap();
        let generator = build_generator(&mu, &b).unwrap();
        let dt = 1e-3;
        let traj = integrate_h(&h0, &generator, &uniform_grid(dt, 400), Method::Rk4).unwrap();
        for j in 1..traj.len() - 1 {
            let h_prev = traj.h_at(j - 1, &mu);
            let h_mid = traj.h_at(j, &mu);
            let h_next = traj.h_at(j + 1, &mu);
            let dh = (entropy(&h_next, &mu) - entropy(&h_prev, &mu)) / (2.0 * dt);
            let d = dissipation(&h_mid, &mu, &b);
            assert!((dh + d).abs() <= 1e-4, "dH/dt = {dh}, -D = {}", -d);
        }
    }

    #[test]
    fn component_entropy_forms_agree() {
        let (s, _f, mu, b) = epsilon_family();
        let g = build_graph(&mu, &b).unwrap();
        let mut rng = StdRng::seed_from_u64(2);
        for _ in 0..50 {
            let mut h = vec![0.0; s.len()];
            for i in 0..s.len() {
                if h[i] == 0.0 {
                    let v: f64 = rng.random_range(-1.0..1.0);
                    h[i] = v;
                    h[s.involution(i)] = -v;
                }
            }
            for orbit in g.orbits() {
                let c = orbit[0];
                if g.case(c) == CaseTag::Isolated {
                    continue;
                }
                let t = g.component(c);
                let t_star = g.partner_set(c);
                let eta = instantaneous_eta(&h, &mu, t, t_star);
                let direct = component_entropy(&h, &mu, t, t_star, eta);
                let rho = set_mass(&mu, t);
                let rho_star = set_mass(&mu, t_star);
                let alt = 0.5 * t.iter().map(|&i| h[i] * h[i] * mu.mass(i)).sum::<f64>()
                    + 0.5
                        * t_star
                            .iter()
                            .map(|&i| h[i] * h[i] * mu.mass(i))
                            .sum::<f64>()
                    - 0.5 * (rho + rho_star) * eta * eta;
                assert_abs_diff_eq!(direct, alt, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn fit_recovers_exact_exponential() {
        let series: Vec<(f64, f64)> = (0..100)
            .map(|j| {
                let t = j as f64 * 0.05;
                (t, 0.5 * (-2.0 * t).exp())
            })
            .collect();
        let fit = fit_decay_rate(&series).unwrap();
        assert_abs_diff_eq!(fit.lambda, 2.0, epsilon = 1e-9);
        assert!(fit.r_squared > 0.9999);
    }

    #[test]
    fn fit_rejects_floored_series() {
        let series: Vec<(f64, f64)> = (0..100).map(|j| (j as f64, 1e-16)).collect();
        assert!(matches!(
            fit_decay_rate(&series),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn stability_coefficient_values() {
        assert_eq!(stability_coefficient(0.0, 2.0, 1.0, PI), 1.0);
        assert_abs_diff_eq!(
            stability_coefficient(1.0, 2.0, 1.0, PI),
            1.0 + (1.0 + 10.0 * PI) + 4.0 * PI,
            epsilon = 1e-12
        );
    }

    #[test]
    fn component_entropy_decays_at_least_at_the_bound() {
        let mut rng = StdRng::seed_from_u64(9);
        for _ in 0..30 {
            let n_atoms = rng.random_range(1..=4usize);
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
            let b = CollisionKernel::indicator(&s, rng.random_range(0.4..2.8)).unwrap();
            let g = build_graph(&mu, &b).unwrap();
            let pred = crate::equilibrium::predict_with_graph(&f, &mu, &g).unwrap();
            let h0 = odd_coordinate(&f, &mu).unwrap();
            let generator = build_generator(&mu, &b).unwrap();
            let grid = uniform_grid(0.1, 60);
            let traj = integrate_h(&h0, &generator, &grid, Method::Expm).unwrap();
            for orbit in g.orbits() {
                let c = orbit[0];
                if g.case(c) == CaseTag::Isolated {
                    continue;
                }
                let t_set = g.component(c);
                let t_star = g.partner_set(c);
                let bound =
                    crate::graph::rate_lower_bound(t_set, t_star, &mu, &b).unwrap();
                let eta = pred.components[c].eta;
                let h_t0 = component_entropy(&traj.h_at(0, &mu), &mu, t_set, t_star, eta);
                for (j, &t) in traj.times.iter().enumerate() {
                    let h_t =
                        component_entropy(&traj.h_at(j, &mu), &mu, t_set, t_star, eta);
                    assert!(
                        h_t <= h_t0 * (-bound * t).exp() * (1.0 + 1e-6) + 1e-15,
                        "H_T({t}) = {h_t} above bound decay from {h_t0} at rate {bound}"
                    );
                }
            }
        }
    }

    #[test]
    fn fitted_rate_tracks_mode_content_of_symmetric_three_dirac() {
        // Rates 2/3 (slow modes) and 8/3 (fast mode); the canonical initial
        // datum is the pure fast eigenvector, (1, -1, 0) the pure slow one.
        let s = StateSpace::atomic_circle(&[0.0, 2.0 * PI / 3.0, -2.0 * PI / 3.0]).unwrap();
        let b = CollisionKernel::indicator(&s, PI / 2.0).unwrap();
        let mu = DiscreteMeasure::new(&s, vec![1.0 / 6.0; 6]).unwrap();
        let generator = build_generator(&mu, &b).unwrap();
        let fit_for = |h_reps: [f64; 3]| {
            let mut h = vec![0.0; 6];
            for (r, &v) in h_reps.iter().enumerate() {
                h[r] = v;
                h[s.involution(r)] = -v;
            }
            let h0 = crate::measure::OddCoordinate::new(&mu, h, 1e-12).unwrap();
            let traj = integrate_h(&h0, &generator, &uniform_grid(0.05, 200), Method::Expm)
                .unwrap();
            let series: Vec<(f64, f64)> = (0..traj.len())
                .map(|j| (traj.times[j], entropy(&traj.h_at(j, &mu), &mu)))
                .collect();
            fit_decay_rate(&series).unwrap()
        };
        let fast = fit_for([1.0, 1.0, 1.0]);
        assert!((fast.lambda - 8.0 / 3.0).abs() < 0.05 * (8.0 / 3.0));
        let slow = fit_for([1.0, -1.0, 0.0]);
        assert!((slow.lambda - 2.0 / 3.0).abs() < 0.05 * (2.0 / 3.0));
    }

    #[test]
    fn tv_bounded_by_relative_entropy() {
        let (_s, f, mu, b) = epsilon_family();
        let g = build_graph(&mu, &b).unwrap();
        let pred = predict_equilibrium(&f, &b).unwrap();
        let h0 = odd_coordinate(&f, &mu).unwrap();
        let generator = build_generator(&mu, &b).unwrap();
        let traj = integrate_h(&h0, &generator, &uniform_grid(0.05, 100), Method::Expm).unwrap();
        let series = evaluate(
            &traj,
            &mu,
            &g,
            &pred,
            &b,
            DiagnosticsOptions::default(),
        )
        .unwrap();
        for row in &series.rows {
            assert!(row.tv_to_prediction <= (2.0 * row.entropy_to_eq).sqrt() + 1e-12);
        }
    }

    #[test]
    fn conserved_quantities_along_run() {
        let (_s, f, mu, b) = epsilon_family();
        let g = build_graph(&mu, &b).unwrap();
        let pred = predict_equilibrium(&f, &b).unwrap();
        let h0 = odd_coordinate(&f, &mu).unwrap();
        let generator = build_generator(&mu, &b).unwrap();
        let traj = integrate_h(&h0, &generator, &uniform_grid(0.02, 250), Method::Rk4).unwrap();
        let series = evaluate(
            &traj,
            &mu,
            &g,
            &pred,
            &b,
            DiagnosticsOptions::default(),
        )
        .unwrap();
        let report = conserved_report(&series, &mu, &g).unwrap();
        assert!(report.mass_drift <= 1e-12, "mass drift {}", report.mass_drift);
        assert!(report.sym_drift <= 1e-12, "sym drift {}", report.sym_drift);
        assert!(report.eta_drift <= 1e-10, "eta drift {}", report.eta_drift);
        // H nonincreasing along the trajectory.
        for w in series.rows.windows(2) {
            assert!(w[1].entropy <= w[0].entropy + 1e-9);
        }
    }
}
