//! Finite state spaces with a metric and a measurable involution.
//!
//! Three constructors are provided: the equidistant torus grid, atomic
//! configurations on the circle, and point sets on `[-1, 1]` reflected
//! through the origin. All spaces are immutable after construction.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Tolerance used when deciding whether a reversed point already exists.
pub const COINCIDENCE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    /// Equidistant grid of `2n` angles on the torus, quadrature weight `pi/n`.
    TorusGrid { n: usize },
    /// Finite set of atoms on the circle, closed under `phi -> phi + pi`.
    AtomicCircle,
    /// Finite set of points in `[-1, 1]`, closed under `x -> -x`.
    ReflectedInterval,
}

/// A finite point set with a metric and an involution permutation.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    kind: SpaceKind,
    /// Angle in `[-pi, pi)` for circle-type spaces, coordinate in `[-1, 1]`
    /// for the interval.
    coords: Vec<f64>,
    involution: Vec<usize>,
    quad_weight: f64,
}

/// Normalize an angle to `[-pi, pi)`.
pub fn wrap_angle(phi: f64) -> f64 {
    let mut a = phi % (2.0 * PI);
    if a < -PI {
        a += 2.0 * PI;
    } else if a >= PI {
        a -= 2.0 * PI;
    }
    a
}

/// Arc distance between two angles on the 2*pi-torus.
pub fn arc_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).abs() % (2.0 * PI);
    d.min(2.0 * PI - d)
}

impl StateSpace {
    /// Equidistant grid `phi_k = (k - n) pi / n`, `k = 0, ..., 2n - 1`, with
    /// the antipodal involution `k -> (k + n) mod 2n`.
    pub fn torus_grid(n: usize) -> Result<Arc<Self>> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "torus grid needs n >= 2, got {n}"
            )));
        }
        let coords = (0..2 * n)
            .map(|k| (k as f64 - n as f64) * PI / n as f64)
            .collect();
        let involution = (0..2 * n).map(|k| (k + n) % (2 * n)).collect();
        Ok(Arc::new(Self {
            kind: SpaceKind::TorusGrid { n },
            coords,
            involution,
            quad_weight: PI / n as f64,
        }))
    }

    /// Atoms on the circle; the input set is closed under `phi -> phi + pi`.
    ///
    /// Input angles that coincide within [`COINCIDENCE_TOL`] are rejected;
    /// reversed points that already exist are merged.
    pub fn atomic_circle(angles: &[f64]) -> Result<Arc<Self>> {
        if angles.is_empty() {
            return Err(Error::InvalidArgument("empty angle list".into()));
        }
        let mut coords: Vec<f64> = Vec::new();
        for &phi in angles {
            let a = wrap_angle(phi);
            if coords.iter().any(|&c| arc_distance(a, c) <= COINCIDENCE_TOL) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate angle {a} after closure"
                )));
            }
            coords.push(a);
        }
        // Closure under the involution.
        let input_len = coords.len();
        for i in 0..input_len {
            let rev = wrap_angle(coords[i] + PI);
            if !coords.iter().any(|&c| arc_distance(rev, c) <= COINCIDENCE_TOL) {
                coords.push(rev);
            }
        }
        let involution = circle_involution(&coords)?;
        Ok(Arc::new(Self {
            kind: SpaceKind::AtomicCircle,
            coords,
            involution,
            quad_weight: 1.0,
        }))
    }

    /// Points in `[-1, 1]` closed under `x -> -x`; `0` is a fixed point.
    pub fn reflected_interval(points: &[f64]) -> Result<Arc<Self>> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("empty point list".into()));
        }
        let mut coords: Vec<f64> = Vec::new();
        for &x in points {
            if !(-1.0..=1.0).contains(&x) {
                return Err(Error::InvalidArgument(format!(
                    "point {x} outside [-1, 1]"
                )));
            }
            if coords.iter().any(|&c| (x - c).abs() <= COINCIDENCE_TOL) {
                return Err(Error::InvalidArgument(format!("duplicate point {x}")));
            }
            coords.push(x);
        }
        let input_len = coords.len();
        for i in 0..input_len {
            let rev = -coords[i];
            if !coords.iter().any(|&c| (rev - c).abs() <= COINCIDENCE_TOL) {
                coords.push(rev);
            }
        }
        let mut involution = vec![usize::MAX; coords.len()];
        for (i, &x) in coords.iter().enumerate() {
            let j = coords
                .iter()
                .position(|&c| (c + x).abs() <= COINCIDENCE_TOL)
                .ok_or_else(|| Error::Internal("interval closure failed".into()))?;
            involution[i] = j;
        }
        Ok(Arc::new(Self {
            kind: SpaceKind::ReflectedInterval,
            coords,
            involution,
            quad_weight: 1.0,
        }))
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.coords[i]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Index of the reversed point `x -> x^.
    pub fn involution(&self, i: usize) -> usize {
        self.involution[i]
    }

    pub fn is_circle(&self) -> bool {
        !matches!(self.kind, SpaceKind::ReflectedInterval)
    }

    /// Quadrature weight attached to every point (`pi/n` on grids, 1 on
    /// atomic spaces). Integrals are sums of `value * weight`.
    pub fn weight(&self) -> f64 {
        self.quad_weight
    }

    /// Distance on the underlying manifold.
    ///
    /// On the torus grid this is the integer circular index distance times
    /// `pi/n`, which keeps threshold comparisons exact.
    pub fn metric(&self, i: usize, j: usize) -> f64 {
        match self.kind {
            SpaceKind::TorusGrid { n } => {
                self.index_distance(i, j) as f64 * (PI / n as f64)
            }
            SpaceKind::AtomicCircle => arc_distance(self.coords[i], self.coords[j]),
            SpaceKind::ReflectedInterval => (self.coords[i] - self.coords[j]).abs(),
        }
    }

    /// Circular index distance on the grid; panics on non-grid spaces.
    pub fn index_distance(&self, i: usize, j: usize) -> usize {
        match self.kind {
            SpaceKind::TorusGrid { n } => {
                let m = 2 * n;
                let d = (i as isize - j as isize).unsigned_abs() % m;
                d.min(m - d)
            }
            _ => panic!("index_distance is only defined on torus grids"),
        }
    }

    /// Point indices sorted by coordinate (angular order on circles).
    pub fn sorted_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| self.coords[a].total_cmp(&self.coords[b]));
        order
    }

    /// Locate the point matching `coord` within [`COINCIDENCE_TOL`].
    pub fn find_point(&self, coord: f64) -> Option<usize> {
        let target = if self.is_circle() { wrap_angle(coord) } else { coord };
        (0..self.len()).find(|&i| {
            if self.is_circle() {
                arc_distance(self.coords[i], target) <= COINCIDENCE_TOL
            } else {
                (self.coords[i] - target).abs() <= COINCIDENCE_TOL
            }
        })
    }
}

fn circle_involution(coords: &[f64]) -> Result<Vec<usize>> {
    let mut involution = vec![usize::MAX; coords.len()];
    for (i, &phi) in coords.iter().enumerate() {
        let rev = wrap_angle(phi + PI);
        let j = coords
            .iter()
            .position(|&c| arc_distance(rev, c) <= COINCIDENCE_TOL)
            .ok_or_else(|| Error::Internal("circle closure failed".into()))?;
        involution[i] = j;
    }
    Ok(involution)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn torus_grid_two() {
        let s = StateSpace::torus_grid(2).unwrap();
        assert_eq!(s.len(), 4);
        let expected = [-PI, -PI / 2.0, 0.0, PI / 2.0];
        for (i, &e) in expected.iter().enumerate() {
            assert_abs_diff_eq!(s.coord(i), e, epsilon = 1e-15);
        }
        // involution swaps (-pi, 0) and (-pi/2, pi/2)
        assert_eq!(s.involution(0), 2);
        assert_eq!(s.involution(1), 3);
        assert_eq!(s.involution(2), 0);
        assert_eq!(s.involution(3), 1);
    }

    #[test]
    fn torus_grid_202_has_404_points() {
        let s = StateSpace::torus_grid(202).unwrap();
        assert_eq!(s.len(), 404);
        assert_abs_diff_eq!(s.metric(0, 1), PI / 202.0, epsilon = 1e-15);
    }

    #[test]
    fn torus_grid_antipode_distance_is_pi() {
        let s = StateSpace::torus_grid(3).unwrap();
        for k in 0..s.len() {
            assert_abs_diff_eq!(s.metric(k, s.involution(k)), PI, epsilon = 1e-12);
        }
    }

    #[test]
    fn torus_grid_rejects_small_n() {
        assert!(matches!(
            StateSpace::torus_grid(1),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn atomic_circle_epsilon_family() {
        let eps = 0.1;
        let s = StateSpace::atomic_circle(&[0.0, PI / 2.0 + eps]).unwrap();
        assert_eq!(s.len(), 4);
        let mut got: Vec<f64> = s.coords().to_vec();
        got.sort_by(f64::total_cmp);
        let mut want = vec![0.0, PI / 2.0 + eps, -PI, -PI / 2.0 + eps];
        want.sort_by(f64::total_cmp);
        for (g, w) in got.iter().zip(&want) {
            assert_abs_diff_eq!(g, w, epsilon = 1e-12);
        }
    }

    #[test]
    fn atomic_circle_three_dirac_closure() {
        let s =
            StateSpace::atomic_circle(&[0.0, 2.0 * PI / 3.0, -2.0 * PI / 3.0]).unwrap();
        assert_eq!(s.len(), 6);
    }

    #[test]
    fn atomic_circle_already_closed() {
        let s = StateSpace::atomic_circle(&[0.0, PI]).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.involution(0), 1);
        assert_eq!(s.involution(1), 0);
    }

    #[test]
    fn atomic_circle_rejects_duplicates() {
        assert!(matches!(
            StateSpace::atomic_circle(&[0.3, 0.3 + 2.0 * PI]),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn reflected_interval_closure() {
        let s = StateSpace::reflected_interval(&[0.3]).unwrap();
        assert_eq!(s.len(), 2);
        assert_abs_diff_eq!(s.coord(1), -0.3, epsilon = 1e-15);
    }

    #[test]
    fn reflected_interval_fixed_point() {
        let s = StateSpace::reflected_interval(&[0.0]).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.involution(0), 0);
    }

    #[test]
    fn reflected_interval_uniform_grid_involution() {
        let pts: Vec<f64> = (0..21).map(|i| -1.0 + i as f64 * 0.1).collect();
        let s = StateSpace::reflected_interval(&pts).unwrap();
        assert_eq!(s.len(), 21);
        for i in 0..21 {
            assert_eq!(s.involution(i), 20 - i);
        }
    }

    #[test]
    fn reflected_interval_rejects_outside() {
        assert!(matches!(
            StateSpace::reflected_interval(&[1.5]),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn involution_is_involutive_and_isometric() {
        let spaces = [
            StateSpace::torus_grid(7).unwrap(),
            StateSpace::atomic_circle(&[0.1, 1.3, 2.9, -0.7]).unwrap(),
            StateSpace::reflected_interval(&[0.0, 0.25, 0.5, 1.0]).unwrap(),
        ];
        for s in &spaces {
            for i in 0..s.len() {
                assert_eq!(s.involution(s.involution(i)), i);
                for j in 0..s.len() {
                    assert_abs_diff_eq!(s.metric(i, j), s.metric(j, i), epsilon = 0.0);
                    assert_abs_diff_eq!(
                        s.metric(s.involution(i), s.involution(j)),
                        s.metric(i, j),
                        epsilon = 1e-12
                    );
                }
            }
        }
    }

    #[test]
    fn metric_triangle_inequality_exhaustive() {
        let s = StateSpace::atomic_circle(&[0.1, 1.3, 2.9, -0.7]).unwrap();
        for i in 0..s.len() {
            assert_eq!(s.metric(i, i), 0.0);
            for j in 0..s.len() {
                for k in 0..s.len() {
                    assert!(s.metric(i, k) <= s.metric(i, j) + s.metric(j, k) + 1e-12);
                }
            }
        }
    }
}
