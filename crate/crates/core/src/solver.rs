//! The parallel hybrid subextragradient iteration.
//!
//! One iteration, starting from `x_n`:
//!
//! 1. `y_i = P_{K_i}(x_n - λ A_i x_n)` for every `i` (in parallel);
//! 2. `z_i = P_{T_i}(x_n - λ A_i y_i)` with `T_i` from [`build_t`];
//! 3. `z̄` is the `z_i` furthest from `x_n`;
//! 4. `u_j = α_n x_n + (1 - α_n)(β_n z̄ + (1 - β_n) S_j^p z̄)` for every `j`
//!    (in parallel), `p = n + 1` in asymptotic mode and `p = 1` otherwise;
//! 5. `ū` is the `u_j` furthest from `x_n` (`ū = z̄` without mappings);
//! 6. `x_{n+1} = P_{C_n ∩ Q_n}(x_0)`.
//!
//! Ties in steps 3 and 5 go to the lowest index, and all per-index work is
//! gathered into index-ordered buffers before any reduction, so traces are
//! bit-identical for every worker count.

use std::fmt;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::convex::{build_c, build_q, build_t, project_two_halfspaces, ConvexSet};
use crate::error::{invalid, Error, Result};
use crate::hilbert::{Space, Vector};
use crate::operators::{MonotoneOp, PseudocontractiveMap};

/// Iterates are considered divergent beyond `DIVERGENCE_FACTOR * (1 + ||x_0||)`.
pub const DIVERGENCE_FACTOR: f64 = 1e12;

/// Number of leading terms checked when a [`Schedule`] is constructed.
const SCHEDULE_HORIZON: usize = 10_000;

/// A real sequence indexed by the iteration counter `n = 0, 1, ...`.
#[derive(Clone)]
pub enum Sequence {
    Constant(f64),
    /// `1 / (n + shift)`.
    Harmonic { shift: f64 },
    /// `1 + 1 / (n + 1)^2`.
    OnePlusInverseSquare,
    Custom(Arc<dyn Fn(usize) -> f64 + Send + Sync>),
}

impl Sequence {
    pub fn custom(f: impl Fn(usize) -> f64 + Send + Sync + 'static) -> Self {
        Sequence::Custom(Arc::new(f))
    }

    pub fn at(&self, n: usize) -> f64 {
        match self {
            Sequence::Constant(c) => *c,
            Sequence::Harmonic { shift } => 1.0 / (n as f64 + shift),
            Sequence::OnePlusInverseSquare => 1.0 + 1.0 / ((n + 1) as f64).powi(2),
            Sequence::Custom(f) => f(n),
        }
    }
}

impl fmt::Debug for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sequence::Constant(c) => write!(f, "Constant({c})"),
            Sequence::Harmonic { shift } => write!(f, "Harmonic(1/(n+{shift}))"),
            Sequence::OnePlusInverseSquare => f.write_str("OnePlusInverseSquare"),
            Sequence::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Which variant of the method to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Asymptotically strict pseudocontractions: powers `S^{n+1}` and `ε_n > 0`.
    Asymptotic,
    /// Strict pseudocontractions: a single application of `S`, `ε_n = 0`.
    Plain,
    /// No mappings; `ū = z̄`.
    CsvipOnly,
}

/// The common-solution problem: N variational inequalities `(A_i, K_i)` and
/// M mappings `S_j`.
#[derive(Debug, Clone)]
pub struct Problem {
    space: Space,
    sets: Vec<ConvexSet>,
    ops: Vec<MonotoneOp>,
    lipschitz: f64,
    maps: Vec<PseudocontractiveMap>,
    kappa: f64,
    k_seq: Sequence,
    omega: Option<f64>,
}

impl Problem {
    /// The Lipschitz bound defaults to the largest bound reported by the operators.
    pub fn new(space: Space, sets: Vec<ConvexSet>, ops: Vec<MonotoneOp>) -> Result<Self> {
        if sets.is_empty() {
            return Err(invalid("at least one constraint set is required"));
        }
        if sets.len() != ops.len() {
            return Err(invalid(format!("{} sets but {} operators", sets.len(), ops.len())));
        }
        if sets.iter().any(|s| matches!(s, ConvexSet::Empty)) {
            return Err(Error::Infeasible("empty constraint set".into()));
        }
        let lipschitz = ops.iter().map(MonotoneOp::lipschitz).fold(0.0, f64::max);
        Ok(Problem {
            space,
            sets,
            ops,
            lipschitz,
            maps: Vec::new(),
            kappa: 0.0,
            k_seq: Sequence::Constant(1.0),
            omega: None,
        })
    }

    /// Overrides the shared Lipschitz bound; it must dominate every operator's bound.
    pub fn with_lipschitz(mut self, bound: f64) -> Result<Self> {
        if !(bound > 0.0) || bound < self.lipschitz {
            return Err(invalid(format!(
                "Lipschitz bound {bound} must be positive and at least {}",
                self.lipschitz
            )));
        }
        self.lipschitz = bound;
        Ok(self)
    }

    /// Adds the mappings; the shared κ is the largest κ among them.
    pub fn with_maps(mut self, maps: Vec<PseudocontractiveMap>) -> Self {
        self.kappa = maps.iter().map(PseudocontractiveMap::kappa).fold(0.0, f64::max);
        self.maps = maps;
        self
    }

    /// Sets a shared κ, which must dominate every mapping's κ.
    pub fn with_kappa(mut self, kappa: f64) -> Result<Self> {
        let least = self.maps.iter().map(PseudocontractiveMap::kappa).fold(0.0, f64::max);
        if !(least..1.0).contains(&kappa) {
            return Err(invalid(format!("kappa {kappa} must lie in [{least}, 1)")));
        }
        self.kappa = kappa;
        Ok(self)
    }

    /// Asymptotic data: `k_n >= 1` with `k_n -> 1`, and a radius `ω` with `F ⊆ B[0, ω]`.
    pub fn with_asymptotic(mut self, k_seq: Sequence, omega: f64) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(invalid(format!("omega must be positive, got {omega}")));
        }
        if let Some(n) = (0..SCHEDULE_HORIZON).find(|&n| !(k_seq.at(n) >= 1.0)) {
            return Err(invalid(format!("k_{n} = {} is below 1", k_seq.at(n))));
        }
        self.k_seq = k_seq;
        self.omega = Some(omega);
        Ok(self)
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn sets(&self) -> &[ConvexSet] {
        &self.sets
    }

    pub fn ops(&self) -> &[MonotoneOp] {
        &self.ops
    }

    pub fn maps(&self) -> &[PseudocontractiveMap] {
        &self.maps
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn omega(&self) -> Option<f64> {
        self.omega
    }

    pub fn k_seq(&self) -> &Sequence {
        &self.k_seq
    }
}

/// Step size and control sequences.
#[derive(Debug, Clone)]
pub struct Schedule {
    lambda: f64,
    alpha: Sequence,
    beta: Sequence,
    mode: Mode,
}

impl Schedule {
    /// Checks `λ > 0`, `α_n ∈ [0, 1)` and `β_n ∈ [0, 1)` on the first terms;
    /// the problem-dependent bounds `λ < 1/L` and `β_n >= κ` are checked by [`Solver::new`].
    pub fn new(lambda: f64, alpha: Sequence, beta: Sequence, mode: Mode) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(invalid(format!("lambda must be positive, got {lambda}")));
        }
        for n in 0..SCHEDULE_HORIZON {
            let a = alpha.at(n);
            if !(0.0..1.0).contains(&a) {
                return Err(invalid(format!("alpha_{n} = {a} outside [0, 1)")));
            }
            let b = beta.at(n);
            if !(0.0..1.0).contains(&b) {
                return Err(invalid(format!("beta_{n} = {b} outside [0, 1)")));
            }
        }
        Ok(Schedule {
            lambda,
            alpha,
            beta,
            mode,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn alpha(&self) -> &Sequence {
        &self.alpha
    }

    pub fn beta(&self) -> &Sequence {
        &self.beta
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }
}

/// When to stop iterating; checked before each iteration (`max_iters`,
/// target) and after it (residual).
#[derive(Debug, Clone, PartialEq)]
pub struct StopRule {
    pub max_iters: usize,
    /// Stop once `||x_{n+1} - x_n|| <= residual_tol`.
    pub residual_tol: Option<f64>,
    /// Stop once `||x_n - x†|| <= tol`; requires [`Solver::with_reference`].
    pub target_tol: Option<f64>,
}

impl StopRule {
    pub fn iterations(max_iters: usize) -> Self {
        StopRule {
            max_iters,
            residual_tol: None,
            target_tol: None,
        }
    }

    pub fn with_residual(mut self, tol: f64) -> Self {
        self.residual_tol = Some(tol);
        self
    }

    pub fn with_target(mut self, tol: f64) -> Self {
        self.target_tol = Some(tol);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxIters,
    Residual,
    Target,
}

/// Relative violation `(<a, v> - b) / (1 + |b| + ||a|| ||v||)`; nonpositive means inside.
fn relative_violation(set: &ConvexSet, v: &Vector) -> f64 {
    match set {
        ConvexSet::HalfSpace(h) => {
            h.violation(v) / (1.0 + h.offset().abs() + h.normal().norm() * v.norm())
        }
        _ => 0.0,
    }
}

/// Diagnostics of one iteration `n`, i.e. of the map `x_n -> x_{n+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub n: usize,
    /// `x_n`.
    pub iterate: Vector,
    pub i_n: usize,
    /// `None` when the problem has no mappings.
    pub j_n: Option<usize>,
    /// `max_i ||y_i - x_n||`.
    pub max_dist_y: f64,
    /// `||z̄ - x_n|| = max_i ||z_i - x_n||`.
    pub dist_zbar: f64,
    /// `||ū - x_n|| = max_j ||u_j - x_n||`.
    pub dist_ubar: f64,
    pub eps: f64,
    /// `||x_{n+1} - x_n||`.
    pub residual: f64,
    /// `||x_n - x_0||`.
    pub dist_from_start: f64,
    /// `||x_n - x†||` when a reference solution is known.
    pub dist_to_target: Option<f64>,
    /// `max_i` of `(||z_i - x†||² - ||x_n - x†||² + c(||y_i - x_n||² + ||z_i - y_i||²)) / (1 + ||x_n - x†||²)`
    /// with `c = 1 - λL`; nonpositive when the contraction inequality holds.
    pub contraction_gap: Option<f64>,
    /// Relative violations of `x†` in `C_n` and `Q_n`.
    pub target_violation: Option<(f64, f64)>,
    /// Relative violations of `x_{n+1}` in `C_n` and `Q_n`.
    pub next_violation: (f64, f64),
    /// Time since the start of the solve, at the end of this iteration.
    pub wall: Duration,
}

impl IterationRecord {
    /// Equality of everything except the wall-clock time.
    pub fn same_numbers(&self, other: &IterationRecord) -> bool {
        let strip = |r: &IterationRecord| IterationRecord {
            wall: Duration::ZERO,
            ..r.clone()
        };
        strip(self) == strip(other)
    }
}

/// Full history of a solve.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub start: Vector,
    pub records: Vec<IterationRecord>,
    pub stop: StopReason,
    /// Time spent in the iteration loop.
    pub elapsed: Duration,
}

impl IterationTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Bitwise equality of all recorded numbers, ignoring timings.
    pub fn same_numbers(&self, other: &IterationTrace) -> bool {
        self.start == other.start
            && self.stop == other.stop
            && self.records.len() == other.records.len()
            && self.records.iter().zip(&other.records).all(|(a, b)| a.same_numbers(b))
    }
}

/// Mutable iteration state owned by the caller of [`Solver::iterate_once`].
#[derive(Debug, Clone)]
pub struct SolverState {
    pub n: usize,
    pub x0: Vector,
    pub x: Vector,
    pub records: Vec<IterationRecord>,
    started: Instant,
}

/// Index `k` maximizing `values[k]`, lowest index on ties.
pub fn argmax_lowest(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, &v) in values.iter().enumerate() {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((k, v));
        }
    }
    best.map(|(k, _)| k)
}

/// The point of `points` furthest from `x` (lowest index on ties).
pub fn select_furthest<'a>(points: &'a [Vector], x: &Vector) -> Result<(usize, &'a Vector)> {
    if points.is_empty() {
        return Err(invalid("select_furthest needs at least one point"));
    }
    let dists = points
        .iter()
        .map(|p| p.distance(x))
        .collect::<Result<Vec<_>>>()?;
    let k = argmax_lowest(&dists).expect("nonempty");
    Ok((k, &points[k]))
}

/// `(y, z)` of the subextragradient step for one pair `(A, K)`.
pub fn subextragradient_step(
    x: &Vector,
    op: &MonotoneOp,
    set: &ConvexSet,
    lambda: f64,
) -> Result<(Vector, Vector)> {
    if op.is_zero() {
        let y = set.project(x)?;
        return Ok((y.clone(), y));
    }
    let ax = op.eval(x)?;
    let y = set.project(&x.axpy(-lambda, &ax)?)?;
    let t = build_t(x, lambda, &ax, &y)?;
    let ay = op.eval(&y)?;
    let z = t.project(&x.axpy(-lambda, &ay)?)?;
    Ok((y, z))
}

/// `α x + (1 - α)(β z̄ + (1 - β) S^p z̄)` with `p = n + 1` in asymptotic mode
/// and `p = 1` otherwise.
pub fn mann_step(
    x: &Vector,
    z_bar: &Vector,
    map: &PseudocontractiveMap,
    n: usize,
    alpha: f64,
    beta: f64,
    mode: Mode,
) -> Result<Vector> {
    let sz = match mode {
        Mode::Asymptotic => map.eval_power(z_bar, n + 1)?,
        Mode::Plain | Mode::CsvipOnly => map.eval(z_bar)?,
    };
    let inner = Vector::combine(beta, z_bar, 1.0 - beta, &sz)?;
    Vector::combine(alpha, x, 1.0 - alpha, &inner)
}

/// `ε_n = (k_n - 1)(||x_n|| + ω)²`.
pub fn epsilon_n(k_n: f64, x: &Vector, omega: f64) -> Result<f64> {
    if !(k_n >= 1.0) {
        return Err(invalid(format!("k_n = {k_n} must be at least 1")));
    }
    if !(omega > 0.0) {
        return Err(invalid(format!("omega = {omega} must be positive")));
    }
    Ok((k_n - 1.0) * (x.norm() + omega).powi(2))
}

/// Fan-out helper: one task per index, contiguous static chunks, results in index order.
struct Executor {
    workers: usize,
    pool: Option<rayon::ThreadPool>,
}

impl Executor {
    fn new(workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(invalid("worker count must be positive"));
        }
        let pool = if workers > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .build()
                    .map_err(|e| invalid(format!("cannot start worker pool: {e}")))?,
            )
        } else {
            None
        };
        Ok(Executor { workers, pool })
    }

    fn map<T, F>(&self, count: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize) -> Result<T> + Sync + Send,
    {
        match &self.pool {
            Some(pool) if count > 1 => {
                let chunk = count.div_ceil(self.workers);
                pool.install(|| (0..count).into_par_iter().with_min_len(chunk).map(&f).collect())
            }
            _ => (0..count).map(f).collect(),
        }
    }
}

/// Per-index output of steps 1 and 2.
struct Projected {
    z: Vector,
    dist_y: f64,
    dist_z: f64,
    gap: Option<f64>,
}

/// A validated problem/schedule pair plus its worker pool.
pub struct Solver {
    problem: Problem,
    schedule: Schedule,
    reference: Option<Vector>,
    executor: Executor,
}

impl fmt::Debug for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Solver")
            .field("problem", &self.problem)
            .field("schedule", &self.schedule)
            .field("workers", &self.executor.workers)
            .finish()
    }
}

impl Solver {
    pub fn new(problem: Problem, schedule: Schedule) -> Result<Self> {
        let lambda = schedule.lambda;
        let l = problem.lipschitz;
        // all-zero operators have L = 0 and admit any positive step
        if l > 0.0 && lambda * l >= 1.0 {
            return Err(invalid(format!("lambda = {lambda} violates lambda < 1/L with L = {l}")));
        }
        match (schedule.mode, problem.maps.is_empty()) {
            (Mode::CsvipOnly, false) => {
                return Err(invalid("mappings given but the schedule runs without mappings"))
            }
            (Mode::Plain | Mode::Asymptotic, true) => {
                return Err(invalid("this mode needs at least one mapping"))
            }
            _ => {}
        }
        if schedule.mode == Mode::Asymptotic && problem.omega.is_none() {
            return Err(invalid("asymptotic mode requires omega"));
        }
        if schedule.mode != Mode::CsvipOnly {
            if let Some(n) = (0..SCHEDULE_HORIZON).find(|&n| schedule.beta.at(n) < problem.kappa) {
                return Err(invalid(format!(
                    "beta_{n} = {} is below kappa = {}",
                    schedule.beta.at(n),
                    problem.kappa
                )));
            }
        }
        Ok(Solver {
            problem,
            schedule,
            reference: None,
            executor: Executor::new(1)?,
        })
    }

    pub fn with_workers(mut self, workers: usize) -> Result<Self> {
        self.executor = Executor::new(workers)?;
        Ok(self)
    }

    /// A known solution `x† ∈ F`, enabling distance-to-target and the
    /// per-iteration invariant diagnostics.
    pub fn with_reference(mut self, reference: Vector) -> Result<Self> {
        self.problem.space.check(&reference.space())?;
        if let (Mode::Asymptotic, Some(omega)) = (self.schedule.mode, self.problem.omega) {
            if reference.norm() > omega {
                log::warn!(
                    "known solution has norm {} > omega = {omega}; convergence is not guaranteed",
                    reference.norm()
                );
            }
        }
        self.reference = Some(reference);
        Ok(self)
    }

    pub fn workers(&self) -> usize {
        self.executor.workers
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn reference(&self) -> Option<&Vector> {
        self.reference.as_ref()
    }

    pub fn start(&self, x0: Vector) -> Result<SolverState> {
        self.problem.space.check(&x0.space())?;
        if !x0.is_finite() {
            return Err(invalid("starting point must be finite"));
        }
        Ok(SolverState {
            n: 0,
            x: x0.clone(),
            x0,
            records: Vec::new(),
            started: Instant::now(),
        })
    }

    /// Performs iteration `state.n`, appending its record and advancing `state.x`.
    pub fn iterate_once(&self, state: &mut SolverState) -> Result<()> {
        let n = state.n;
        let x = &state.x;
        let lambda = self.schedule.lambda;
        let c = 1.0 - lambda * self.problem.lipschitz;
        let reference = self.reference.as_ref();
        let x_ref_sq = reference.map(|r| Vector::combine_unchecked(1.0, x, -1.0, r).norm_sq());

        // steps 1-2
        let projected = self.executor.map(self.problem.sets.len(), |i| {
            let (y, z) = subextragradient_step(x, &self.problem.ops[i], &self.problem.sets[i], lambda)?;
            let dist_y = Vector::combine_unchecked(1.0, &y, -1.0, x).norm();
            let dist_z = Vector::combine_unchecked(1.0, &z, -1.0, x).norm();
            let gap = reference.map(|r| {
                let zr = Vector::combine_unchecked(1.0, &z, -1.0, r).norm_sq();
                let zy = Vector::combine_unchecked(1.0, &z, -1.0, &y).norm_sq();
                let xr = x_ref_sq.unwrap_or(0.0);
                (zr - xr + c * (dist_y * dist_y + zy)) / (1.0 + xr)
            });
            Ok(Projected { z, dist_y, dist_z, gap })
        })?;

        // step 3
        let dists: Vec<f64> = projected.iter().map(|p| p.dist_z).collect();
        let i_n = argmax_lowest(&dists).expect("at least one set");
        let max_dist_y = projected.iter().map(|p| p.dist_y).fold(0.0, f64::max);
        let contraction_gap = reference.map(|_| {
            projected
                .iter()
                .filter_map(|p| p.gap)
                .fold(f64::NEG_INFINITY, f64::max)
        });
        let z_bar = projected.into_iter().nth(i_n).expect("index in range").z;
        let dist_zbar = dists[i_n];

        // steps 4-5
        let (u_bar, j_n, dist_ubar) = if self.schedule.mode == Mode::CsvipOnly {
            (z_bar, None, dist_zbar)
        } else {
            let alpha = self.schedule.alpha.at(n);
            let beta = self.schedule.beta.at(n);
            if !(0.0..1.0).contains(&alpha) {
                return Err(invalid(format!("alpha_{n} = {alpha} outside [0, 1)")));
            }
            if !(beta >= self.problem.kappa && beta < 1.0) {
                return Err(invalid(format!("beta_{n} = {beta} outside [kappa, 1)")));
            }
            let mode = self.schedule.mode;
            let us = self.executor.map(self.problem.maps.len(), |j| {
                let u = mann_step(x, &z_bar, &self.problem.maps[j], n, alpha, beta, mode)?;
                let d = Vector::combine_unchecked(1.0, &u, -1.0, x).norm();
                Ok((u, d))
            })?;
            let dists: Vec<f64> = us.iter().map(|(_, d)| *d).collect();
            let j = argmax_lowest(&dists).expect("at least one mapping");
            let d = dists[j];
            (us.into_iter().nth(j).expect("index in range").0, Some(j), d)
        };

        // step 6
        let eps = match self.schedule.mode {
            Mode::Asymptotic => epsilon_n(
                self.problem.k_seq.at(n),
                x,
                self.problem.omega.expect("validated in Solver::new"),
            )?,
            Mode::Plain | Mode::CsvipOnly => 0.0,
        };
        let c_set = build_c(x, &u_bar, eps)?;
        let q_set = build_q(&state.x0, x)?;
        let next = project_two_halfspaces(&state.x0, &c_set, &q_set).map_err(|e| match e {
            Error::Infeasible(msg) => Error::Infeasible(format!("iteration {n}: {msg}")),
            other => other,
        })?;

        if !next.is_finite() {
            return Err(Error::Numerical {
                iteration: n,
                message: "non-finite iterate".into(),
            });
        }
        let bound = DIVERGENCE_FACTOR * (1.0 + state.x0.norm());
        if next.norm() > bound {
            return Err(Error::Numerical {
                iteration: n,
                message: format!("iterate norm {} exceeds {bound}", next.norm()),
            });
        }

        let record = IterationRecord {
            n,
            iterate: x.clone(),
            i_n,
            j_n,
            max_dist_y,
            dist_zbar,
            dist_ubar,
            eps,
            residual: Vector::combine_unchecked(1.0, &next, -1.0, x).norm(),
            dist_from_start: Vector::combine_unchecked(1.0, x, -1.0, &state.x0).norm(),
            dist_to_target: x_ref_sq.map(f64::sqrt),
            contraction_gap,
            target_violation: reference.map(|r| (relative_violation(&c_set, r), relative_violation(&q_set, r))),
            next_violation: (relative_violation(&c_set, &next), relative_violation(&q_set, &next)),
            wall: state.started.elapsed(),
        };
        state.records.push(record);
        state.x = next;
        state.n += 1;
        Ok(())
    }

    /// Runs until a stop criterion fires. Returns the final iterate and the trace.
    pub fn solve(&self, stop: &StopRule, x0: Vector) -> Result<(Vector, IterationTrace)> {
        if stop.max_iters == 0 && stop.residual_tol.is_none() && stop.target_tol.is_none() {
            return Err(invalid("stop rule has no active criterion"));
        }
        if stop.target_tol.is_some() && self.reference.is_none() {
            return Err(invalid("target tolerance needs a reference solution"));
        }
        let mut state = self.start(x0)?;
        state.started = Instant::now();
        let reason = loop {
            if let (Some(tol), Some(r)) = (stop.target_tol, &self.reference) {
                if state.x.distance(r)? <= tol {
                    break StopReason::Target;
                }
            }
            if state.n >= stop.max_iters {
                break StopReason::MaxIters;
            }
            self.iterate_once(&mut state)?;
            if let Some(tol) = stop.residual_tol {
                if state.records.last().is_some_and(|r| r.residual <= tol) {
                    break StopReason::Residual;
                }
            }
        };
        let elapsed = state.started.elapsed();
        let trace = IterationTrace {
            start: state.x0,
            records: state.records,
            stop: reason,
            elapsed,
        };
        Ok((state.x, trace))
    }
}
