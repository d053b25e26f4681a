//! Inner-product spaces and vector arithmetic.
//!
//! Two spaces are supported: Euclidean `R^d` and grid functions on `[0, 1]`
//! whose inner product is the composite trapezoid rule. Every norm, projection
//! and half-space in the crate goes through [`Vector::inner`], so the grid
//! space is an exact weighted Euclidean space and the projection
//! characterizations hold verbatim after discretization.

use crate::error::{invalid, Error, Result};

/// An inner-product space descriptor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Space {
    /// `R^dim` with the dot product.
    Euclidean { dim: usize },
    /// Functions on `[0, 1]` sampled at `nodes` equispaced points, `step = 1 / (nodes - 1)`.
    Grid { nodes: usize, step: f64 },
}

impl Space {
    pub fn euclidean(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("Euclidean dimension must be positive"));
        }
        Ok(Space::Euclidean { dim })
    }

    /// Uniform grid on `[0, 1]` with `nodes >= 2` points.
    pub fn grid(nodes: usize) -> Result<Self> {
        if nodes < 2 {
            return Err(invalid("grid needs at least two nodes"));
        }
        Ok(Space::Grid {
            nodes,
            step: 1.0 / (nodes - 1) as f64,
        })
    }

    /// Grid with the given stepsize; `1 / step` must be (close to) an integer.
    pub fn grid_with_step(step: f64) -> Result<Self> {
        if !(step > 0.0 && step <= 1.0) {
            return Err(invalid(format!("grid step {step} outside (0, 1]")));
        }
        let intervals = (1.0 / step).round();
        if ((1.0 / step) - intervals).abs() > 1e-9 * intervals {
            return Err(invalid(format!("1/step must be an integer, got step {step}")));
        }
        Self::grid(intervals as usize + 1)
    }

    /// Number of coordinates of a vector in this space.
    pub fn dim(&self) -> usize {
        match *self {
            Space::Euclidean { dim } => dim,
            Space::Grid { nodes, .. } => nodes,
        }
    }

    /// Quadrature weight of coordinate `k` (1 for Euclidean spaces).
    #[inline]
    pub fn weight(&self, k: usize) -> f64 {
        match *self {
            Space::Euclidean { .. } => 1.0,
            Space::Grid { nodes, step } => {
                if k == 0 || k + 1 == nodes {
                    0.5 * step
                } else {
                    step
                }
            }
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.weight(k)).collect()
    }

    /// Grid node `t_k = k * step`; for Euclidean spaces returns `k` as a float.
    pub fn node(&self, k: usize) -> f64 {
        match *self {
            Space::Euclidean { .. } => k as f64,
            Space::Grid { nodes, step } => {
                if k + 1 == nodes {
                    1.0
                } else {
                    k as f64 * step
                }
            }
        }
    }

    pub fn is_grid(&self) -> bool {
        matches!(self, Space::Grid { .. })
    }

    pub fn zeros(&self) -> Vector {
        Vector {
            space: *self,
            coords: vec![0.0; self.dim()],
        }
    }

    /// Samples `f` at the grid nodes (or at `0, 1, ..` for Euclidean spaces).
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vector {
        Vector {
            space: *self,
            coords: (0..self.dim()).map(|k| f(self.node(k))).collect(),
        }
    }

    pub fn vector(&self, coords: Vec<f64>) -> Result<Vector> {
        Vector::new(*self, coords)
    }

    pub(crate) fn check(&self, other: &Space) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::SpaceMismatch {
                left: *self,
                right: *other,
            })
        }
    }
}

/// An element of a [`Space`].
#[derive(Debug, Clone, PartialEq)]
pub struct Vector {
    space: Space,
    coords: Vec<f64>,
}

impl Vector {
    pub fn new(space: Space, coords: Vec<f64>) -> Result<Self> {
        if coords.len() != space.dim() {
            return Err(invalid(format!(
                "expected {} coordinates, got {}",
                space.dim(),
                coords.len()
            )));
        }
        if let Some(k) = coords.iter().position(|c| !c.is_finite()) {
            return Err(invalid(format!("coordinate {k} is not finite")));
        }
        Ok(Vector { space, coords })
    }

    pub(crate) fn from_parts(space: Space, coords: Vec<f64>) -> Self {
        debug_assert_eq!(coords.len(), space.dim());
        Vector { space, coords }
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|c| c.is_finite())
    }

    /// Inner product of the space: dot product, or `sum_k w_k x_k y_k` on a grid.
    pub fn inner(&self, other: &Vector) -> Result<f64> {
        self.space.check(&other.space)?;
        Ok(self.inner_unchecked(other))
    }

    pub(crate) fn inner_unchecked(&self, other: &Vector) -> f64 {
        match self.space {
            Space::Euclidean { .. } => self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a * b)
                .sum(),
            Space::Grid { step, .. } => {
                let last = self.coords.len() - 1;
                let mut acc = 0.0;
                for k in 1..last {
                    acc += self.coords[k] * other.coords[k];
                }
                let ends = 0.5 * (self.coords[0] * other.coords[0] + self.coords[last] * other.coords[last]);
                step * (acc + ends)
            }
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.inner_unchecked(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `||self - other||`.
    pub fn distance(&self, other: &Vector) -> Result<f64> {
        Ok(self.sub(other)?.norm())
    }

    /// Coordinatewise `a * x + b * y`.
    pub fn combine(a: f64, x: &Vector, b: f64, y: &Vector) -> Result<Vector> {
        x.space.check(&y.space)?;
        Ok(Self::combine_unchecked(a, x, b, y))
    }

    pub(crate) fn combine_unchecked(a: f64, x: &Vector, b: f64, y: &Vector) -> Vector {
        let coords = x
            .coords
            .iter()
            .zip(&y.coords)
            .map(|(xi, yi)| a * xi + b * yi)
            .collect();
        Vector::from_parts(x.space, coords)
    }

    pub fn add(&self, other: &Vector) -> Result<Vector> {
        Self::combine(1.0, self, 1.0, other)
    }

    pub fn sub(&self, other: &Vector) -> Result<Vector> {
        Self::combine(1.0, self, -1.0, other)
    }

    pub fn scale(&self, a: f64) -> Vector {
        Vector::from_parts(self.space, self.coords.iter().map(|c| a * c).collect())
    }

    /// `self + a * dir`.
    pub fn axpy(&self, a: f64, dir: &Vector) -> Result<Vector> {
        Self::combine(1.0, self, a, dir)
    }

    /// Maximum absolute coordinate.
    pub fn max_abs(&self) -> f64 {
        self.coords.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

/// Euclidean vector from a coordinate slice. Panics on non-finite input.
pub fn euclid(coords: &[f64]) -> Vector {
    Space::Euclidean { dim: coords.len() }
        .vector(coords.to_vec())
        .expect("finite coordinates")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn e(coords: &[f64]) -> Vector {
        Space::euclidean(coords.len()).unwrap().vector(coords.to_vec()).unwrap()
    }

    #[test]
    fn euclidean_dot() {
        let x = e(&[1.0, 2.0, 7.0]);
        assert_eq!(x.inner(&x).unwrap(), 54.0);
    }

    #[test]
    fn grid_weights_sum_to_one() {
        for nodes in [2, 3, 11, 1001, 2001] {
            let s = Space::grid(nodes).unwrap();
            let total: f64 = s.weights().iter().sum();
            assert!((total - 1.0).abs() < 1e-12, "nodes={nodes}: {total}");
        }
    }

    #[test]
    fn grid_constant_inner() {
        let s = Space::grid(3).unwrap();
        assert_eq!(s, Space::Grid { nodes: 3, step: 0.5 });
        let one = s.vector(vec![1.0; 3]).unwrap();
        assert_eq!(one.inner(&one).unwrap(), 1.0);
        let s = Space::grid_with_step(0.001).unwrap();
        assert_eq!(s.dim(), 1001);
        assert_relative_eq!(s.sample(|_| 1.0).norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn grid_inner_of_identity_against_exact_integral() {
        let s = Space::grid_with_step(0.001).unwrap();
        let t = s.sample(|t| t);
        // exact value of the integral of t^2 over [0, 1]
        assert!((t.inner(&t).unwrap() - 1.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn trapezoid_is_second_order_on_cubics() {
        // exact integrals of the products over [0, 1]
        let cases: [(fn(f64) -> f64, fn(f64) -> f64, f64); 3] = [
            (|t| t, |t| t * t, 0.25),
            (|t| t * t * t, |_| 1.0, 0.25),
            (|t| 1.0 + t, |t| t * t - t, 1.0 / 4.0 + 1.0 / 3.0 - 1.0 / 3.0 - 1.0 / 2.0),
        ];
        for (f, g, exact) in cases {
            let err = |step: f64| {
                let s = Space::grid_with_step(step).unwrap();
                (s.sample(f).inner(&s.sample(g)).unwrap() - exact).abs()
            };
            let ratio = err(0.01) / err(0.005);
            assert!((ratio - 4.0).abs() < 0.05, "ratio {ratio}");
        }
    }

    #[test]
    fn norms_and_combinations() {
        assert_eq!(e(&[3.0, 4.0]).norm(), 5.0);
        assert_eq!(e(&[0.0, 0.0]).norm(), 0.0);
        let x = e(&[2.0, 0.0]);
        let y = e(&[0.0, 2.0]);
        assert_eq!(Vector::combine(1.0, &x, 0.0, &y).unwrap(), x);
        assert_eq!(Vector::combine(0.5, &x, 0.5, &y).unwrap(), e(&[1.0, 1.0]));
        assert_eq!(Vector::combine(1.0, &x, -1.0, &x).unwrap(), e(&[0.0, 0.0]));
    }

    #[test]
    fn space_mismatch_is_rejected() {
        let x = e(&[1.0, 2.0]);
        let y = e(&[1.0, 2.0, 3.0]);
        assert!(matches!(x.inner(&y), Err(Error::SpaceMismatch { .. })));
        assert!(Vector::combine(1.0, &x, 1.0, &y).is_err());
        let g = Space::grid(2).unwrap().vector(vec![1.0, 2.0]).unwrap();
        assert!(x.inner(&g).is_err());
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(Space::euclidean(0).is_err());
        assert!(Space::grid(1).is_err());
        assert!(Space::grid_with_step(0.3).is_err());
        let s = Space::euclidean(2).unwrap();
        assert!(s.vector(vec![1.0]).is_err());
        assert!(s.vector(vec![1.0, f64::NAN]).is_err());
    }

    fn pair(space: Space) -> impl Strategy<Value = (Vector, Vector)> {
        let n = space.dim();
        (
            prop::collection::vec(-10.0..10.0f64, n),
            prop::collection::vec(-10.0..10.0f64, n),
        )
            .prop_map(move |(a, b)| (space.vector(a).unwrap(), space.vector(b).unwrap()))
    }

    fn spaces() -> impl Strategy<Value = Space> {
        prop_oneof![
            (1usize..8).prop_map(|d| Space::euclidean(d).unwrap()),
            (2usize..40).prop_map(|n| Space::grid(n).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn cauchy_schwarz((x, y) in spaces().prop_flat_map(pair)) {
            let ip = x.inner(&y).unwrap();
            prop_assert!(ip.abs() <= x.norm() * y.norm() + 1e-12);
            prop_assert_eq!(ip, y.inner(&x).unwrap());
        }

        #[test]
        fn convex_combination_identity((x, y) in spaces().prop_flat_map(pair), a in 0.0..=1.0f64) {
            let lhs = Vector::combine(a, &x, 1.0 - a, &y).unwrap().norm_sq();
            let d = x.sub(&y).unwrap().norm_sq();
            let rhs = a * x.norm_sq() + (1.0 - a) * y.norm_sq() - a * (1.0 - a) * d;
            prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + x.norm_sq() + y.norm_sq()));
        }
    }
}
