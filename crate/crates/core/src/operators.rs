//! Monotone operators and strict pseudocontractions.
//!
//! The integral operators are the four Hammerstein-type maps
//! `S_j(x)(t) = ∫ K_j(t, s) f_j(x(s)) ds + g_j(t)` on `L²[0, 1]`, discretized
//! with the trapezoid rule of the grid space they act on.

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::hilbert::{Space, Vector};

/// Grids with at least this many nodes get a cached dense kernel matrix.
pub const PRECOMPUTE_NODES: usize = 2001;

/// Safety factor applied to the power-iteration estimate of `||M||`.
const LIPSCHITZ_MARGIN: f64 = 1.01;

/// Dense affine map `x -> M x + q` on a Euclidean space.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineOp {
    matrix: Vec<f64>,
    offset: Vector,
    lipschitz: f64,
}

impl AffineOp {
    /// `matrix` is row-major with `dim * dim` entries where `dim = offset.len()`.
    pub fn new(matrix: Vec<f64>, offset: Vector) -> Result<Self> {
        let dim = offset.len();
        if !matches!(offset.space(), Space::Euclidean { .. }) {
            return Err(invalid("affine operators are defined on Euclidean spaces only"));
        }
        if matrix.len() != dim * dim {
            return Err(invalid(format!(
                "matrix has {} entries, expected {}",
                matrix.len(),
                dim * dim
            )));
        }
        if matrix.iter().any(|m| !m.is_finite()) {
            return Err(invalid("matrix entries must be finite"));
        }
        let lipschitz = LIPSCHITZ_MARGIN * spectral_norm(&matrix, dim);
        Ok(AffineOp {
            matrix,
            offset,
            lipschitz,
        })
    }

    /// `x -> x - p`, whose unique zero is `p`.
    pub fn shifted_identity(p: &Vector) -> Result<Self> {
        let dim = p.len();
        let mut matrix = vec![0.0; dim * dim];
        for k in 0..dim {
            matrix[k * dim + k] = 1.0;
        }
        Self::new(matrix, p.scale(-1.0))
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn offset(&self) -> &Vector {
        &self.offset
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    fn apply(&self, x: &Vector) -> Vector {
        let dim = self.dim();
        let coords = (0..dim)
            .map(|r| {
                let row = &self.matrix[r * dim..(r + 1) * dim];
                row.iter().zip(x.coords()).map(|(m, v)| m * v).sum::<f64>() + self.offset.coords()[r]
            })
            .collect();
        Vector::from_parts(x.space(), coords)
    }
}

/// Largest singular value by power iteration on `M^T M`, relative tolerance 1e-8.
fn spectral_norm(matrix: &[f64], dim: usize) -> f64 {
    let mul = |v: &[f64]| -> Vec<f64> {
        (0..dim)
            .map(|r| (0..dim).map(|c| matrix[r * dim + c] * v[c]).sum())
            .collect()
    };
    let mul_t = |v: &[f64]| -> Vec<f64> {
        (0..dim)
            .map(|c| (0..dim).map(|r| matrix[r * dim + c] * v[r]).sum())
            .collect()
    };
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();

    let mut v: Vec<f64> = (0..dim).map(|k| 1.0 + k as f64 / (dim as f64 + 1.0)).collect();
    let n0 = norm(&v);
    v.iter_mut().for_each(|a| *a /= n0);
    let mut estimate = 0.0;
    for _ in 0..10_000 {
        let mv = mul(&v);
        let next = norm(&mv).powi(2);
        let w = mul_t(&mv);
        let nw = norm(&w);
        if nw == 0.0 {
            return next.sqrt();
        }
        v = w.into_iter().map(|a| a / nw).collect();
        if (next - estimate).abs() <= 1e-8 * next {
            return next.sqrt();
        }
        estimate = next;
    }
    estimate.sqrt()
}

/// A monotone, Lipschitz continuous operator `A`.
#[derive(Debug, Clone, PartialEq)]
pub enum MonotoneOp {
    Zero,
    Affine(AffineOp),
}

impl MonotoneOp {
    /// Stored upper bound on the Lipschitz constant (0 for [`MonotoneOp::Zero`]).
    pub fn lipschitz(&self) -> f64 {
        match self {
            MonotoneOp::Zero => 0.0,
            MonotoneOp::Affine(a) => a.lipschitz,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, MonotoneOp::Zero)
    }

    pub fn eval(&self, x: &Vector) -> Result<Vector> {
        match self {
            MonotoneOp::Zero => Ok(x.space().zeros()),
            MonotoneOp::Affine(a) => {
                a.offset.space().check(&x.space())?;
                Ok(a.apply(x))
            }
        }
    }
}

/// The four integral kernels together with their nonlinearities and offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kernel {
    /// `2ts e^{t+s} / (e sqrt(e^2 - 1))` with `f = cos`.
    Exponential,
    /// `sqrt(3) t s` with `f = 1 / (x^2 + 1)`.
    Product,
    /// `sqrt(21)/7 |t - s|` with `f = sin`.
    AbsDiff,
    /// `sqrt(21)/7 (t + s)` with `f = exp(-x^2)`.
    Sum,
}

impl Kernel {
    pub const ALL: [Kernel; 4] = [Kernel::Exponential, Kernel::Product, Kernel::AbsDiff, Kernel::Sum];

    /// Kernels are numbered 1 to 4.
    pub fn from_id(id: u8) -> Result<Kernel> {
        match id {
            1 => Ok(Kernel::Exponential),
            2 => Ok(Kernel::Product),
            3 => Ok(Kernel::AbsDiff),
            4 => Ok(Kernel::Sum),
            _ => Err(invalid(format!("kernel id {id} out of range 1..=4"))),
        }
    }

    pub fn id(self) -> u8 {
        match self {
            Kernel::Exponential => 1,
            Kernel::Product => 2,
            Kernel::AbsDiff => 3,
            Kernel::Sum => 4,
        }
    }

    #[inline]
    pub fn kernel(self, t: f64, s: f64) -> f64 {
        match self {
            Kernel::Exponential => {
                let e = std::f64::consts::E;
                2.0 * t * s * (t + s).exp() / (e * (e * e - 1.0).sqrt())
            }
            Kernel::Product => 3f64.sqrt() * t * s,
            Kernel::AbsDiff => 21f64.sqrt() / 7.0 * (t - s).abs(),
            Kernel::Sum => 21f64.sqrt() / 7.0 * (t + s),
        }
    }

    #[inline]
    pub fn nonlinearity(self, x: f64) -> f64 {
        match self {
            Kernel::Exponential => x.cos(),
            Kernel::Product => 1.0 / (x * x + 1.0),
            Kernel::AbsDiff => x.sin(),
            Kernel::Sum => (-x * x).exp(),
        }
    }

    /// Closed-form `g_j(t)` making `x = 0` a fixed point of the continuous operator.
    pub fn analytic_offset(self, t: f64) -> f64 {
        match self {
            Kernel::Exponential => {
                let e = std::f64::consts::E;
                -2.0 * t * t.exp() / (e * (e * e - 1.0).sqrt())
            }
            Kernel::Product => -(3f64.sqrt()) / 2.0 * t,
            Kernel::AbsDiff => 0.0,
            Kernel::Sum => -(21f64.sqrt()) / 7.0 * (t + 0.5),
        }
    }
}

/// Discretized `S(x)(t_k) = sum_s w_s K(t_k, t_s) f(x(t_s)) + g(t_k)`.
///
/// The offset `g` is the negated quadrature of the integral at `x = 0`, so
/// `x = 0` is an exact fixed point of the discrete operator; it differs from
/// the closed-form offset by the quadrature error only.
#[derive(Clone)]
pub struct IntegralOp {
    kernel: Kernel,
    space: Space,
    offsets: Vec<f64>,
    matrix: Option<Arc<Vec<f64>>>,
}

impl fmt::Debug for IntegralOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IntegralOp")
            .field("kernel", &self.kernel)
            .field("space", &self.space)
            .field("precomputed", &self.matrix.is_some())
            .finish()
    }
}

impl IntegralOp {
    pub fn new(kernel: Kernel, space: Space) -> Result<Self> {
        Self::with_cache(kernel, space, space.dim() >= PRECOMPUTE_NODES)
    }

    /// Like [`IntegralOp::new`] but with explicit control over the kernel-matrix cache.
    pub fn with_cache(kernel: Kernel, space: Space, precompute: bool) -> Result<Self> {
        if !space.is_grid() {
            return Err(invalid("integral operators need a grid space"));
        }
        let n = space.dim();
        let matrix = precompute.then(|| {
            let mut m = Vec::with_capacity(n * n);
            for k in 0..n {
                let t = space.node(k);
                m.extend((0..n).map(|s| kernel.kernel(t, space.node(s))));
            }
            Arc::new(m)
        });
        let mut op = IntegralOp {
            kernel,
            space,
            offsets: vec![0.0; n],
            matrix,
        };
        let f0 = kernel.nonlinearity(0.0);
        let zero_weighted: Vec<f64> = (0..n).map(|s| space.weight(s) * f0).collect();
        op.offsets = op.integrate(&zero_weighted).into_iter().map(|v| -v).collect();
        Ok(op)
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn is_precomputed(&self) -> bool {
        self.matrix.is_some()
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    /// `sum_s K(t_k, t_s) weighted[s]` for every node `k`.
    fn integrate(&self, weighted: &[f64]) -> Vec<f64> {
        let n = self.space.dim();
        match &self.matrix {
            Some(m) => (0..n)
                .map(|k| m[k * n..(k + 1) * n].iter().zip(weighted).map(|(a, b)| a * b).sum())
                .collect(),
            None => (0..n)
                .map(|k| {
                    let t = self.space.node(k);
                    let mut acc = 0.0;
                    for (s, w) in weighted.iter().enumerate() {
                        acc += self.kernel.kernel(t, self.space.node(s)) * w;
                    }
                    acc
                })
                .collect(),
        }
    }

    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        self.space.check(&x.space())?;
        let weighted: Vec<f64> = x
            .coords()
            .iter()
            .enumerate()
            .map(|(s, &v)| self.space.weight(s) * self.kernel.nonlinearity(v))
            .collect();
        let mut out = self.integrate(&weighted);
        out.iter_mut().zip(&self.offsets).for_each(|(o, g)| *o += g);
        Ok(Vector::from_parts(self.space, out))
    }
}

/// User-supplied mapping; the caller asserts its pseudocontractivity.
#[derive(Clone)]
pub struct CustomMap(Arc<dyn Fn(&Vector) -> Result<Vector> + Send + Sync>);

impl CustomMap {
    pub fn new(f: impl Fn(&Vector) -> Result<Vector> + Send + Sync + 'static) -> Self {
        CustomMap(Arc::new(f))
    }
}

impl fmt::Debug for CustomMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CustomMap(..)")
    }
}

#[derive(Debug, Clone)]
pub enum MapKind {
    Identity,
    Integral(IntegralOp),
    Custom(CustomMap),
}

/// An (asymptotically) κ-strict pseudocontractive mapping `S`.
#[derive(Debug, Clone)]
pub struct PseudocontractiveMap {
    kind: MapKind,
    kappa: f64,
}

impl PseudocontractiveMap {
    pub fn new(kind: MapKind, kappa: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&kappa) {
            return Err(invalid(format!("kappa must lie in [0, 1), got {kappa}")));
        }
        Ok(PseudocontractiveMap { kind, kappa })
    }

    pub fn identity() -> Self {
        PseudocontractiveMap {
            kind: MapKind::Identity,
            kappa: 0.0,
        }
    }

    /// Integral operator `id` in 1..=4 on a grid space; nonexpansive, so `kappa = 0`.
    pub fn integral(id: u8, space: Space) -> Result<Self> {
        Ok(PseudocontractiveMap {
            kind: MapKind::Integral(IntegralOp::new(Kernel::from_id(id)?, space)?),
            kappa: 0.0,
        })
    }

    pub fn custom(f: impl Fn(&Vector) -> Result<Vector> + Send + Sync + 'static, kappa: f64) -> Result<Self> {
        Self::new(MapKind::Custom(CustomMap::new(f)), kappa)
    }

    pub fn kind(&self) -> &MapKind {
        &self.kind
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn eval(&self, x: &Vector) -> Result<Vector> {
        match &self.kind {
            MapKind::Identity => Ok(x.clone()),
            MapKind::Integral(op) => op.apply(x),
            MapKind::Custom(CustomMap(f)) => {
                let y = f(x)?;
                x.space().check(&y.space())?;
                Ok(y)
            }
        }
    }

    /// `S^n x` by literal composition; `n = 0` returns `x`.
    pub fn eval_power(&self, x: &Vector, n: usize) -> Result<Vector> {
        if matches!(self.kind, MapKind::Identity) {
            return Ok(x.clone());
        }
        let mut current = x.clone();
        for _ in 0..n {
            current = self.eval(&current)?;
        }
        Ok(current)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::euclid;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn affine(m: &[f64], q: &[f64]) -> MonotoneOp {
        MonotoneOp::Affine(AffineOp::new(m.to_vec(), euclid(q)).unwrap())
    }

    #[test]
    fn zero_and_affine_evaluation() {
        let x = euclid(&[1.0, -2.0, 3.0]);
        assert_eq!(MonotoneOp::Zero.eval(&x).unwrap(), euclid(&[0.0, 0.0, 0.0]));
        let p = euclid(&[0.5, 0.5, 0.5]);
        let a = MonotoneOp::Affine(AffineOp::shifted_identity(&p).unwrap());
        assert_eq!(a.eval(&x).unwrap(), x.sub(&p).unwrap());
        let rot = affine(&[0.0, 1.0, -1.0, 0.0], &[0.0, 0.0]);
        assert_eq!(rot.eval(&euclid(&[1.0, 0.0])).unwrap(), euclid(&[0.0, -1.0]));
        let l = rot.lipschitz();
        assert!((1.0..=1.01 + 1e-12).contains(&l), "{l}");
    }

    #[test]
    fn affine_rejects_bad_shapes() {
        assert!(AffineOp::new(vec![1.0; 3], euclid(&[0.0, 0.0])).is_err());
        let grid = Space::grid(3).unwrap().zeros();
        assert!(AffineOp::new(vec![0.0; 9], grid).is_err());
        let a = affine(&[1.0, 0.0, 0.0, 1.0], &[0.0, 0.0]);
        assert!(a.eval(&euclid(&[1.0, 2.0, 3.0])).is_err());
    }

    #[test]
    fn power_iteration_matches_known_norms() {
        // diag(3, -1): norm 3
        let a = AffineOp::new(vec![3.0, 0.0, 0.0, -1.0], euclid(&[0.0, 0.0])).unwrap();
        assert_relative_eq!(a.lipschitz, 3.03, max_relative = 1e-7);
        // [[1, 1], [0, 1]]: norm is the golden ratio
        let a = AffineOp::new(vec![1.0, 1.0, 0.0, 1.0], euclid(&[0.0, 0.0])).unwrap();
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        assert_relative_eq!(a.lipschitz, 1.01 * golden, max_relative = 1e-7);
    }

    #[test]
    fn kernel_ids() {
        for k in Kernel::ALL {
            assert_eq!(Kernel::from_id(k.id()).unwrap(), k);
        }
        assert!(Kernel::from_id(0).is_err());
        assert!(Kernel::from_id(5).is_err());
        assert!(PseudocontractiveMap::integral(7, Space::grid(5).unwrap()).is_err());
        assert!(PseudocontractiveMap::integral(1, Space::euclidean(5).unwrap()).is_err());
    }

    #[test]
    fn zero_is_a_common_fixed_point() {
        let space = Space::grid_with_step(0.001).unwrap();
        for id in 1..=4 {
            let s = PseudocontractiveMap::integral(id, space).unwrap();
            assert!(s.eval(&space.zeros()).unwrap().norm() <= 1e-10, "kernel {id}");
        }
    }

    #[test]
    fn discrete_offsets_track_closed_form() {
        let space = Space::grid_with_step(0.001).unwrap();
        for k in Kernel::ALL {
            let op = IntegralOp::new(k, space).unwrap();
            let worst = (0..space.dim())
                .map(|i| (op.offsets()[i] - k.analytic_offset(space.node(i))).abs())
                .fold(0.0, f64::max);
            assert!(worst < 1e-6, "{k:?}: {worst}");
        }
    }

    #[test]
    fn cached_and_lazy_kernels_agree() {
        let space = Space::grid(101).unwrap();
        let x = space.sample(|t| (3.0 * t).sin() + 0.2);
        for k in Kernel::ALL {
            let lazy = IntegralOp::with_cache(k, space, false).unwrap();
            let cached = IntegralOp::with_cache(k, space, true).unwrap();
            assert!(!lazy.is_precomputed() && cached.is_precomputed());
            let d = lazy.apply(&x).unwrap().distance(&cached.apply(&x).unwrap()).unwrap();
            assert!(d < 1e-14, "{k:?}: {d}");
        }
        assert!(IntegralOp::new(Kernel::Sum, Space::grid(2001).unwrap()).unwrap().is_precomputed());
        assert!(!IntegralOp::new(Kernel::Sum, Space::grid(1001).unwrap()).unwrap().is_precomputed());
    }

    #[test]
    fn identity_and_powers() {
        let x = euclid(&[1.0, 2.0]);
        let id = PseudocontractiveMap::identity();
        assert_eq!(id.eval(&x).unwrap(), x);
        assert_eq!(id.eval_power(&x, 57).unwrap(), x);

        let space = Space::grid(201).unwrap();
        let one = space.sample(|_| 1.0);
        let s2 = PseudocontractiveMap::integral(2, space).unwrap();
        assert_eq!(s2.eval_power(&one, 1).unwrap(), s2.eval(&one).unwrap());
        assert_eq!(s2.eval_power(&one, 0).unwrap(), one);
        let manual = s2.eval(&s2.eval(&s2.eval(&one).unwrap()).unwrap()).unwrap();
        assert_eq!(s2.eval_power(&one, 3).unwrap(), manual);
    }

    #[test]
    fn integral_op_three_vanishes_at_zero() {
        let space = Space::grid(11).unwrap();
        let s3 = PseudocontractiveMap::integral(3, space).unwrap();
        assert_eq!(s3.eval(&space.zeros()).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn product_kernel_against_direct_quadrature() {
        // S_2(x)(t) = sqrt(3) t (∫ s / (1 + x(s)^2) ds - 1/2); for x = 1 the
        // integral is 1/4 exactly under the trapezoid rule (linear integrand).
        let space = Space::grid(51).unwrap();
        let y = PseudocontractiveMap::integral(2, space).unwrap().eval(&space.sample(|_| 1.0)).unwrap();
        for k in 0..space.dim() {
            let t = space.node(k);
            let expect = 3f64.sqrt() * t * (0.25 - 0.5);
            assert!((y.coords()[k] - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn custom_maps_and_kappa() {
        assert!(PseudocontractiveMap::new(MapKind::Identity, 1.0).is_err());
        let half = PseudocontractiveMap::custom(|x| Ok(x.scale(0.5)), 0.0).unwrap();
        assert_eq!(half.eval_power(&euclid(&[4.0]), 2).unwrap(), euclid(&[1.0]));
        let bad = PseudocontractiveMap::custom(|_| Ok(euclid(&[1.0, 2.0])), 0.0).unwrap();
        assert!(bad.eval(&euclid(&[1.0])).is_err());
    }

    #[test]
    fn affine_fixtures_are_monotone_and_lipschitz() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let fixtures = [
            affine(&[1.0, 0.0, 0.0, 1.0], &[-0.3, 0.7]),
            affine(&[0.0, 1.0, -1.0, 0.0], &[0.0, 0.0]),
            affine(&[2.0, 1.0, -1.0, 0.5], &[1.0, -1.0]),
        ];
        for op in &fixtures {
            let MonotoneOp::Affine(a) = op else { unreachable!() };
            let m = nalgebra::DMatrix::from_row_slice(2, 2, a.matrix());
            let sym = (&m + m.transpose()) * 0.5;
            assert!(sym.symmetric_eigenvalues().min() >= -1e-10);
            let sigma = m.singular_values().max();
            assert!(op.lipschitz() >= sigma && op.lipschitz() <= 1.0101 * sigma);
            for _ in 0..1000 {
                let x = euclid(&[rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)]);
                let y = euclid(&[rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)]);
                let da = op.eval(&x).unwrap().sub(&op.eval(&y).unwrap()).unwrap();
                let dx = x.sub(&y).unwrap();
                assert!(da.inner(&dx).unwrap() >= -1e-10);
                assert!(da.norm() <= op.lipschitz() * dx.norm() * (1.0 + 1e-8));
            }
        }
    }

    #[test]
    fn discretized_integral_ops_are_nonexpansive() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let space = Space::grid_with_step(0.001).unwrap();
        let maps: Vec<_> = (1..=4).map(|id| PseudocontractiveMap::integral(id, space).unwrap()).collect();
        // 1000 random pairs split over the four kernels
        for trial in 0..1000 {
            let amp = rng.gen_range(0.01..3.0);
            let freq = rng.gen_range(0.0..20.0);
            let phase = rng.gen_range(0.0..6.3);
            let shift = rng.gen_range(-1.0..1.0);
            let x = space.sample(|t| amp * (freq * t + phase).sin() + shift);
            let y = space.sample(|t| shift * t - amp * (phase * t).cos());
            let s = &maps[trial % 4];
            let lhs = s.eval(&x).unwrap().distance(&s.eval(&y).unwrap()).unwrap();
            assert!(lhs <= x.distance(&y).unwrap() * (1.0 + 1e-6));
        }
    }
}
