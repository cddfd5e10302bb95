//! Discrete measures, the odd/symmetric decomposition `f = (1 + h) mu`,
//! and the distances used by the convergence and stability statements.
//!
//! Grid measures store density values and the quadrature weight `pi/n` is
//! applied at integration time; atomic measures store raw masses. Point
//! masses are always `value * weight`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::space::StateSpace;

/// Relative support threshold: a point belongs to the support when its mass
/// exceeds `1e-12 *` (total mass).
pub const SUPPORT_REL_TOL: f64 = 1e-12;

/// Grace for tiny negative values produced by explicit time stepping.
const NEGATIVE_GRACE: f64 = 1e-12;

/// Nonnegative weights over the points of a state space.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    space: Arc<StateSpace>,
    values: Vec<f64>,
}

impl DiscreteMeasure {
    /// Build a measure from per-point values (densities on grids, masses on
    /// atomic spaces). Values below `-1e-12` are rejected.
    pub fn new(space: &Arc<StateSpace>, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::DimensionMismatch {
                expected: space.len(),
                got: values.len(),
            });
        }
        if let Some((i, &v)) = values
            .iter()
            .enumerate()
            .find(|(_, &v)| !v.is_finite() || v < -NEGATIVE_GRACE)
        {
            return Err(Error::InvalidArgument(format!(
                "negative or non-finite weight {v} at point {i}"
            )));
        }
        Ok(Self {
            space: Arc::clone(space),
            values,
        })
    }

    /// Atomic measure from `(coordinate, mass)` pairs; every coordinate must
    /// match a point of the space.
    pub fn from_atoms(space: &Arc<StateSpace>, atoms: &[(f64, f64)]) -> Result<Self> {
        let mut values = vec![0.0; space.len()];
        for &(coord, mass) in atoms {
            let i = space.find_point(coord).ok_or_else(|| {
                Error::InvalidArgument(format!("no point at coordinate {coord}"))
            })?;
            values[i] += mass / space.weight();
        }
        Self::new(space, values)
    }

    pub fn space(&self) -> &Arc<StateSpace> {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Mass carried by point `i` (value times quadrature weight).
    #[inline]
    pub fn mass(&self, i: usize) -> f64 {
        self.values[i] * self.space.weight()
    }

    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.space.weight()
    }

    pub fn is_probability(&self) -> bool {
        (self.total_mass() - 1.0).abs() <= 1e-12
    }

    /// Indices with mass above `1e-12 *` (total mass).
    pub fn support(&self) -> Vec<usize> {
        let threshold = SUPPORT_REL_TOL * self.total_mass();
        (0..self.values.len())
            .filter(|&i| self.mass(i) > threshold)
            .collect()
    }

    /// Symmetric part `mu(x) = (f(x) + f(x^)) / 2`; invariant under the
    /// involution and a fixed point of this operation.
    pub fn symmetric_part(&self) -> DiscreteMeasure {
        let values = (0..self.values.len())
            .map(|i| 0.5 * (self.values[i] + self.values[self.space.involution(i)]))
            .collect();
        DiscreteMeasure {
            space: Arc::clone(&self.space),
            values,
        }
    }

    /// Max pointwise mass discrepancy from the reversed measure; zero for
    /// symmetric measures.
    pub fn symmetry_defect(&self) -> f64 {
        (0..self.values.len())
            .map(|i| (self.mass(i) - self.mass(self.space.involution(i))).abs())
            .fold(0.0, f64::max)
    }

    fn check_same_space(&self, other: &DiscreteMeasure) -> Result<()> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(())
    }

    /// Total variation distance: `max(sum of positive part, sum of negative
    /// part)` of the signed difference. For equal-mass measures this equals
    /// half the L1 mass distance.
    pub fn tv_distance(&self, other: &DiscreteMeasure) -> Result<f64> {
        self.check_same_space(other)?;
        let mut pos = 0.0;
        let mut neg = 0.0;
        for i in 0..self.values.len() {
            let d = self.mass(i) - other.mass(i);
            if d > 0.0 {
                pos += d;
            } else {
                neg -= d;
            }
        }
        Ok(pos.max(neg))
    }

    /// Exact Wasserstein-1 distance between probability measures on a
    /// circle-type space.
    ///
    /// With `c` the cumulative weight difference in angular order and
    /// `delta_k` the arc lengths between consecutive points, the distance is
    /// `min_t sum_k |c_k - t| delta_k`; the minimizer is the delta-weighted
    /// median of the `c_k`.
    pub fn wasserstein1_circle(&self, other: &DiscreteMeasure) -> Result<f64> {
        self.check_same_space(other)?;
        if !self.space.is_circle() {
            return Err(Error::InvalidArgument(
                "wasserstein1_circle needs a circle-type space".into(),
            ));
        }
        if !self.is_probability() {
            return Err(Error::NotProbability {
                mass: self.total_mass(),
            });
        }
        if !other.is_probability() {
            return Err(Error::NotProbability {
                mass: other.total_mass(),
            });
        }
        let order = self.space.sorted_order();
        let m = order.len();
        if m == 1 {
            return Ok(0.0);
        }
        let mut cums = Vec::with_capacity(m);
        let mut arcs = Vec::with_capacity(m);
        let mut c = 0.0;
        for (pos, &idx) in order.iter().enumerate() {
            c += self.mass(idx) - other.mass(idx);
            let next = order[(pos + 1) % m];
            let gap = if pos + 1 < m {
                self.space.coord(next) - self.space.coord(idx)
            } else {
                self.space.coord(next) + 2.0 * std::f64::consts::PI - self.space.coord(idx)
            };
            cums.push(c);
            arcs.push(gap);
        }
        let t = weighted_median(&cums, &arcs);
        Ok(cums
            .iter()
            .zip(&arcs)
            .map(|(&c, &w)| (c - t).abs() * w)
            .sum())
    }
}

/// Weighted median of `values` with nonnegative `weights`: the smallest
/// value at which the cumulative weight reaches half the total.
fn weighted_median(values: &[f64], weights: &[f64]) -> f64 {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let half = 0.5 * weights.iter().sum::<f64>();
    let mut acc = 0.0;
    for &i in &idx {
        acc += weights[i];
        if acc >= half {
            return values[i];
        }
    }
    values[*idx.last().expect("nonempty")]
}

/// The bounded odd density `h` with `f = (1 + h) mu`.
///
/// Values are stored for every point of the space; only values on the
/// support of `mu` are meaningful (all integrals are against `mu`).
#[derive(Debug, Clone)]
pub struct OddCoordinate {
    mu: DiscreteMeasure,
    values: Vec<f64>,
}

impl OddCoordinate {
    /// Validate `-1 <= h <= 1` (with `tol` grace) and oddness on the support.
    pub fn new(mu: &DiscreteMeasure, values: Vec<f64>, tol: f64) -> Result<Self> {
        if values.len() != mu.space().len() {
            return Err(Error::DimensionMismatch {
                expected: mu.space().len(),
                got: values.len(),
            });
        }
        let support = mu.support();
        for &i in &support {
            let v = values[i];
            if !(v.is_finite() && (-1.0 - tol..=1.0 + tol).contains(&v)) {
                return Err(Error::InvalidArgument(format!(
                    "h out of [-1, 1] at point {i}: {v}"
                )));
            }
            let r = values[mu.space().involution(i)];
            if (v + r).abs() > tol.max(1e-9) {
                return Err(Error::InvalidArgument(format!(
                    "h is not odd at point {i}: h = {v}, h^ = {r}"
                )));
            }
        }
        Ok(Self {
            mu: mu.clone(),
            values,
        })
    }

    pub fn mu(&self) -> &DiscreteMeasure {
        &self.mu
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }
}

/// Radon-Nikodym coordinate `h(x) = f(x) / mu(x) - 1` on the support of `mu`.
///
/// `mu` must be the symmetric part of `f` within 1e-12.
pub fn odd_coordinate(f: &DiscreteMeasure, mu: &DiscreteMeasure) -> Result<OddCoordinate> {
    if f.space() != mu.space() {
        return Err(Error::SpaceMismatch);
    }
    let sym = f.symmetric_part();
    let defect = (0..mu.space().len())
        .map(|i| (sym.mass(i) - mu.mass(i)).abs())
        .fold(0.0, f64::max);
    if defect > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "mu is not the symmetric part of f (defect {defect})"
        )));
    }
    let mut values = vec![0.0; mu.space().len()];
    for &i in &mu.support() {
        values[i] = f.value(i) / mu.value(i) - 1.0;
    }
    OddCoordinate::new(mu, values, 1e-9)
}

/// Rebuild `f = (1 + h) mu`; round-trips with [`odd_coordinate`].
pub fn reconstruct(h: &OddCoordinate, mu: &DiscreteMeasure) -> Result<DiscreteMeasure> {
    if h.mu().space() != mu.space() {
        return Err(Error::SpaceMismatch);
    }
    let values = (0..mu.space().len())
        .map(|i| (1.0 + h.value(i)) * mu.value(i))
        .collect();
    DiscreteMeasure::new(mu.space(), values)
}
