//! Checks shared by the property tests and the acceptance harness.
#![allow(dead_code)]

use parhybrid::solver::IterationTrace;
use parhybrid::{
    euclid, project_oracle, project_two_halfspaces, AffineOp, ConvexSet, Mode, MonotoneOp, Problem,
    PseudocontractiveMap, Schedule, Sequence, Solver, Space, Vector,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const ORACLE_SWEEPS: usize = 20_000;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vector(rng: &mut ChaCha8Rng, space: Space, scale: f64) -> Vector {
    // Box-Muller keeps the dependency list short
    let coords = (0..space.dim())
        .map(|_| {
            let u: f64 = rng.gen_range(f64::EPSILON..1.0);
            let v: f64 = rng.gen();
            scale * (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
        })
        .collect();
    space.vector(coords).unwrap()
}

/// A point and two half-spaces; offsets are drawn so that all three
/// activity patterns (none, one, both) occur.
pub fn halfspace_instance(rng: &mut ChaCha8Rng, space: Space) -> (Vector, ConvexSet, ConvexSet) {
    let x = gaussian_vector(rng, space, 3.0);
    let half = |rng: &mut ChaCha8Rng| {
        let a = gaussian_vector(rng, space, 1.0);
        let b = a.inner(&x).unwrap() + rng.gen_range(-2.0..1.0) * a.norm();
        ConvexSet::half_space(a, b)
    };
    let h1 = half(rng);
    let h2 = half(rng);
    (x, h1, h2)
}

/// Largest distance between the closed form and Dykstra over `count` instances.
pub fn oracle_max_error(space: Space, count: usize, seed: u64) -> f64 {
    let mut rng = rng(seed);
    (0..count)
        .map(|_| {
            let (x, h1, h2) = halfspace_instance(&mut rng, space);
            let exact = project_two_halfspaces(&x, &h1, &h2).unwrap();
            let oracle = project_oracle(&x, &[h1, h2], ORACLE_SWEEPS).unwrap();
            exact.distance(&oracle).unwrap()
        })
        .fold(0.0, f64::max)
}

/// Violated invariants of a CQ trace: Fejér monotonicity of `||x_n - x_0||`,
/// membership of `x_{n+1}` in `C_n ∩ Q_n`, and when a solution is known its
/// containment in every `C_n ∩ Q_n` and the extragradient contraction.
pub fn trace_violations(trace: &IterationTrace) -> Vec<String> {
    let mut out = Vec::new();
    for w in trace.records.windows(2) {
        if w[1].dist_from_start < w[0].dist_from_start - 1e-10 {
            out.push(format!(
                "n = {}: ||x_n - x_0|| fell from {} to {}",
                w[1].n, w[0].dist_from_start, w[1].dist_from_start
            ));
        }
    }
    for r in &trace.records {
        let (c, q) = r.next_violation;
        if c > 1e-9 || q > 1e-9 {
            out.push(format!("n = {}: x_(n+1) violates C_n/Q_n by {c:e}/{q:e}", r.n));
        }
        if let Some((c, q)) = r.target_violation {
            if c > 1e-9 || q > 1e-9 {
                out.push(format!("n = {}: solution violates C_n/Q_n by {c:e}/{q:e}", r.n));
            }
        }
        if let Some(g) = r.contraction_gap {
            if g > 1e-8 {
                out.push(format!("n = {}: contraction gap {g:e}", r.n));
            }
        }
    }
    out
}

pub fn clamp_box(p: &[f64]) -> Vector {
    euclid(&p.iter().map(|v| v.clamp(-1.0, 1.0)).collect::<Vec<_>>())
}

/// `A(x) = x - p` on `[-1, 1]²` with step 0.5; the solution is `p` clamped to the box.
pub fn affine_box_solver(p: [f64; 2], mode: Mode, workers: usize) -> Solver {
    let square = ConvexSet::boxed(euclid(&[-1.0, -1.0]), euclid(&[1.0, 1.0])).unwrap();
    let op = MonotoneOp::Affine(AffineOp::shifted_identity(&euclid(&p)).unwrap());
    let mut problem = Problem::new(Space::euclidean(2).unwrap(), vec![square], vec![op]).unwrap();
    if mode == Mode::Asymptotic {
        problem = problem
            .with_maps(vec![PseudocontractiveMap::identity()])
            .with_asymptotic(Sequence::OnePlusInverseSquare, 10.0)
            .unwrap();
    }
    let zero = || Sequence::Constant(0.0);
    Solver::new(problem, Schedule::new(0.5, zero(), zero(), mode).unwrap())
        .unwrap()
        .with_workers(workers)
        .unwrap()
        .with_reference(clamp_box(&p))
        .unwrap()
}
