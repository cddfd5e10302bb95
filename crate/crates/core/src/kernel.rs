//! Collision kernels: nonnegative symmetric interaction tables.
//!
//! Every kernel satisfies `b(x, x*) = b(x*, x) = b(x^, x*^)` exhaustively;
//! construction validates this and rejects tables that violate it.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::space::{SpaceKind, StateSpace};

/// Absolute tolerance for kernel symmetry validation.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Guard band applied to the strict threshold `d > pi - alpha` so that
/// distances within 1e-12 of the threshold count as equality. Matches the
/// coincidence tolerance of the space constructors.
const THRESHOLD_GUARD: f64 = 1e-12;

/// Nonnegative symmetric interaction table over point pairs.
#[derive(Debug, Clone)]
pub struct CollisionKernel {
    space: Arc<StateSpace>,
    table: Vec<f64>,
    bound_m: f64,
    lipschitz_lambda: Option<f64>,
    /// Per point, the list of partners `x*` with `b(x, x*) > 0`.
    partners: Vec<Vec<usize>>,
}

impl CollisionKernel {
    /// Indicator kernel: 1 where the arc distance strictly exceeds `pi - alpha`.
    ///
    /// On torus grids the comparison is done on integer index distances so
    /// the threshold is exact; elsewhere a 1e-12 guard keeps boundary pairs
    /// (distance equal to `pi - alpha`) at zero.
    pub fn indicator(space: &Arc<StateSpace>, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < PI) {
            return Err(Error::InvalidArgument(format!(
                "indicator kernel needs alpha in (0, pi), got {alpha}"
            )));
        }
        if !space.is_circle() {
            return Err(Error::InvalidArgument(
                "indicator kernel is defined on circle-type spaces".into(),
            ));
        }
        let m = space.len();
        let mut table = vec![0.0; m * m];
        match space.kind() {
            SpaceKind::TorusGrid { n } => {
                // d = c * pi/n > pi - alpha  <=>  c > n (1 - alpha/pi)
                let threshold = n as f64 * (1.0 - alpha / PI);
                for i in 0..m {
                    for j in 0..m {
                        if space.index_distance(i, j) as f64 > threshold {
                            table[i * m + j] = 1.0;
                        }
                    }
                }
            }
            _ => {
                let threshold = PI - alpha;
                for i in 0..m {
                    for j in 0..m {
                        if space.metric(i, j) > threshold + THRESHOLD_GUARD {
                            table[i * m + j] = 1.0;
                        }
                    }
                }
            }
        }
        Self::from_table(space, table, 1.0, None)
    }

    /// Gap kernel on the reflected interval: `max(|x - x*| - 1, 0)`.
    pub fn gap(space: &Arc<StateSpace>) -> Result<Self> {
        if space.kind() != SpaceKind::ReflectedInterval {
            return Err(Error::InvalidArgument(
                "gap kernel is defined on the reflected interval".into(),
            ));
        }
        let m = space.len();
        let mut table = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                table[i * m + j] = (space.metric(i, j) - 1.0).max(0.0);
            }
        }
        Self::from_table(space, table, 1.0, Some(1.0))
    }

    /// Lipschitz ramp kernel: `clamp((d - (pi - alpha)) / ramp, 0, 1)`,
    /// Lipschitz coefficient `1/ramp`.
    pub fn smooth(space: &Arc<StateSpace>, alpha: f64, ramp: f64) -> Result<Self> {
        if !(0.0 < ramp && ramp < alpha && alpha < PI) {
            return Err(Error::InvalidArgument(format!(
                "smooth kernel needs 0 < ramp < alpha < pi, got ramp {ramp}, alpha {alpha}"
            )));
        }
        let m = space.len();
        let mut table = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                let d = space.metric(i, j);
                table[i * m + j] = ((d - (PI - alpha)) / ramp).clamp(0.0, 1.0);
            }
        }
        Self::from_table(space, table, 1.0, Some(1.0 / ramp))
    }

    /// Wrap a user-supplied table after validating shape, sign and symmetry.
    pub fn custom(space: &Arc<StateSpace>, table: Vec<f64>) -> Result<Self> {
        let m = space.len();
        if table.len() != m * m {
            return Err(Error::DimensionMismatch {
                expected: m * m,
                got: table.len(),
            });
        }
        let bound = table.iter().cloned().fold(0.0, f64::max);
        Self::from_table(space, table, bound, None)
    }

    fn from_table(
        space: &Arc<StateSpace>,
        table: Vec<f64>,
        bound_m: f64,
        lipschitz_lambda: Option<f64>,
    ) -> Result<Self> {
        let m = space.len();
        for i in 0..m {
            for j in 0..m {
                let v = table[i * m + j];
                if v < 0.0 {
                    return Err(Error::NegativeEntry { i, j, value: v });
                }
                let t = table[j * m + i];
                if (v - t).abs() > SYMMETRY_TOL {
                    return Err(Error::SymmetryViolation { i, j, lhs: v, rhs: t });
                }
                let r = table[space.involution(i) * m + space.involution(j)];
                if (v - r).abs() > SYMMETRY_TOL {
                    return Err(Error::SymmetryViolation { i, j, lhs: v, rhs: r });
                }
            }
        }
        let partners = (0..m)
            .map(|i| (0..m).filter(|&j| table[i * m + j] > 0.0).collect())
            .collect();
        Ok(Self {
            space: Arc::clone(space),
            table,
            bound_m,
            lipschitz_lambda,
            partners,
        })
    }

    pub fn space(&self) -> &Arc<StateSpace> {
        &self.space
    }

    #[inline]
    pub fn eval(&self, i: usize, j: usize) -> f64 {
        self.table[i * self.space.len() + j]
    }

    /// Sup bound `M` on the kernel.
    pub fn bound_m(&self) -> f64 {
        self.bound_m
    }

    /// Lipschitz coefficient `lambda`, when the kernel came from a
    /// Lipschitz formula.
    pub fn lipschitz_lambda(&self) -> Option<f64> {
        self.lipschitz_lambda
    }

    /// Collision partners of point `i` (positive kernel entries).
    pub fn partners(&self, i: usize) -> &[usize] {
        &self.partners[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn indicator_on_grid_matches_index_rule() {
        let n = 10;
        let s = StateSpace::torus_grid(n).unwrap();
        let b = CollisionKernel::indicator(&s, PI / 2.0).unwrap();
        for i in 0..s.len() {
            for j in 0..s.len() {
                let expected = if space_index(&s, i, j) > n / 2 { 1.0 } else { 0.0 };
                assert_eq!(b.eval(i, j), expected, "pair ({i},{j})");
            }
        }
    }

    fn space_index(s: &StateSpace, i: usize, j: usize) -> usize {
        s.index_distance(i, j)
    }

    #[test]
    fn indicator_antipode_always_collides() {
        let s = StateSpace::atomic_circle(&[0.0, 1.1, -2.3]).unwrap();
        for alpha in [0.2, PI / 2.0, 3.0] {
            let b = CollisionKernel::indicator(&s, alpha).unwrap();
            for i in 0..s.len() {
                assert_eq!(b.eval(i, s.involution(i)), 1.0);
            }
        }
    }

    #[test]
    fn indicator_boundary_equality_excluded() {
        // d(0, pi/2) = pi/2 <= pi - alpha for alpha = pi/2 -> entry 0.
        let s = StateSpace::atomic_circle(&[0.0, PI / 2.0]).unwrap();
        let b = CollisionKernel::indicator(&s, PI / 2.0).unwrap();
        let i = s.find_point(0.0).unwrap();
        let j = s.find_point(PI / 2.0).unwrap();
        assert_eq!(b.eval(i, j), 0.0);
    }

    #[test]
    fn indicator_rejects_bad_alpha() {
        let s = StateSpace::torus_grid(4).unwrap();
        assert!(CollisionKernel::indicator(&s, 0.0).is_err());
        assert!(CollisionKernel::indicator(&s, PI).is_err());
    }

    #[test]
    fn gap_kernel_values() {
        let s = StateSpace::reflected_interval(&[-1.0, -0.9, -0.5, 0.5, 0.6, 0.9, 1.0]).unwrap();
        let b = CollisionKernel::gap(&s).unwrap();
        let at = |x: f64, y: f64| {
            b.eval(s.find_point(x).unwrap(), s.find_point(y).unwrap())
        };
        assert_abs_diff_eq!(at(-1.0, 1.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(at(-0.5, 0.5), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(at(-0.9, 0.6), 0.5, epsilon = 1e-15);
        assert_eq!(b.lipschitz_lambda(), Some(1.0));
    }

    #[test]
    fn gap_kernel_rejects_circle() {
        let s = StateSpace::torus_grid(4).unwrap();
        assert!(CollisionKernel::gap(&s).is_err());
    }

    #[test]
    fn smooth_kernel_ramp_values() {
        let alpha = 1.2;
        let ramp = 0.4;
        // Pick angles so distances hit the ramp ends and its midpoint.
        let s = StateSpace::atomic_circle(&[0.0, PI - alpha, PI - alpha + ramp / 2.0])
            .unwrap();
        let b = CollisionKernel::smooth(&s, alpha, ramp).unwrap();
        let i0 = s.find_point(0.0).unwrap();
        assert_abs_diff_eq!(b.eval(i0, s.involution(i0)), 1.0, epsilon = 1e-15);
        let j = s.find_point(PI - alpha).unwrap();
        assert_abs_diff_eq!(b.eval(i0, j), 0.0, epsilon = 1e-12);
        let k = s.find_point(PI - alpha + ramp / 2.0).unwrap();
        assert_abs_diff_eq!(b.eval(i0, k), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn smooth_kernel_has_positive_antipodal_entries() {
        let s = StateSpace::atomic_circle(&[0.4, 2.0, -1.2]).unwrap();
        let b = CollisionKernel::smooth(&s, 1.0, 0.3).unwrap();
        for i in 0..s.len() {
            assert!(b.eval(i, s.involution(i)) > 0.0);
        }
    }

    #[test]
    fn smooth_kernel_rejects_bad_ordering() {
        let s = StateSpace::torus_grid(4).unwrap();
        assert!(CollisionKernel::smooth(&s, 0.5, 0.5).is_err());
        assert!(CollisionKernel::smooth(&s, 0.5, 0.8).is_err());
    }

    #[test]
    fn custom_accepts_valid_table() {
        let s = StateSpace::atomic_circle(&[0.0, 1.0]).unwrap();
        let m = s.len();
        let mut t = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                t[i * m + j] = s.metric(i, j); // symmetric, involution-invariant
            }
        }
        let b = CollisionKernel::custom(&s, t).unwrap();
        assert!(b.bound_m() >= PI - 1e-12);
    }

    #[test]
    fn custom_rejects_asymmetric_table() {
        let s = StateSpace::atomic_circle(&[0.0, 1.0]).unwrap();
        let m = s.len();
        let mut t = vec![0.0; m * m];
        t[1] = 0.5; // b(0,1) != b(1,0)
        assert!(matches!(
            CollisionKernel::custom(&s, t),
            Err(Error::SymmetryViolation { .. })
        ));
    }

    #[test]
    fn custom_rejects_involution_violation() {
        let s = StateSpace::atomic_circle(&[0.0, 1.0]).unwrap();
        let m = s.len();
        // Symmetric in (i,j) but not invariant under the involution:
        // put weight on the pair (0, 1) only.
        let mut t = vec![0.0; m * m];
        t[1] = 1.0;
        t[m] = 1.0;
        assert!(matches!(
            CollisionKernel::custom(&s, t),
            Err(Error::SymmetryViolation { .. })
        ));
    }

    #[test]
    fn custom_rejects_negative_and_shape() {
        let s = StateSpace::atomic_circle(&[0.0, 1.0]).unwrap();
        assert!(matches!(
            CollisionKernel::custom(&s, vec![0.0; 3]),
            Err(Error::DimensionMismatch { .. })
        ));
        let m = s.len();
        let mut t = vec![0.0; m * m];
        t[0] = -1.0;
        assert!(matches!(
            CollisionKernel::custom(&s, t),
            Err(Error::NegativeEntry { .. })
        ));
    }

    #[test]
    fn constructed_kernels_pass_double_symmetry() {
        let s = StateSpace::torus_grid(9).unwrap();
        let b = CollisionKernel::indicator(&s, 1.1).unwrap();
        let m = s.len();
        for i in 0..m {
            for j in 0..m {
                assert_eq!(b.eval(i, j), b.eval(j, i));
                assert_eq!(
                    b.eval(i, j),
                    b.eval(s.involution(i), s.involution(j))
                );
            }
        }
    }
}
