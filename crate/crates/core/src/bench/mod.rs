//! Experiment harness: builds solvers from [`ExperimentConfig`], runs them,
//! writes traces and compares sequential against parallel execution.

pub mod config;
pub mod report;

use std::f64::consts::PI;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use config::{
    ExperimentConfig, ExperimentId, MapSpec, ModeSpec, OperatorSpec, ScheduleSpec, SequenceSpec, SetSpec, SpaceSpec,
    StartSpec, StopSpec, TargetSpec,
};
pub use report::{emit_solution, emit_trace, Summary, Timing, TRACE_HEADER};

use crate::convex::ConvexSet;
use crate::error::Error;
use crate::hilbert::{Space, Vector};
use crate::operators::{AffineOp, MonotoneOp, PseudocontractiveMap};
use crate::solver::{IterationTrace, Mode, Problem, Schedule, Sequence, Solver, StopRule};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("solver error: {0}")]
    Solver(#[source] Error),

    #[error("determinism failure: {0}")]
    Determinism(String),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl BenchError {
    pub(crate) fn config(field: &str, message: impl Into<String>) -> Self {
        BenchError::Config {
            field: field.to_string(),
            message: message.into(),
        }
    }

    /// Process exit status for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config { .. } => 2,
            BenchError::Solver(_) => 3,
            BenchError::Determinism(_) => 4,
            BenchError::Io { .. } => 1,
        }
    }
}

fn in_field(field: &'static str) -> impl Fn(Error) -> BenchError {
    move |e| BenchError::config(field, e.to_string())
}

/// Centers `scale * (cos(iπ/N) sin(2iπ/N), cos(iπ/N) cos(2iπ/N), sin(iπ/N))`.
pub fn sphere_centers(count: usize, scale: f64, index_base: usize) -> Vec<[f64; 3]> {
    let n = count as f64;
    (index_base..index_base + count)
        .map(|i| {
            let a = i as f64 * PI / n;
            [
                scale * a.cos() * (2.0 * a).sin(),
                scale * a.cos() * (2.0 * a).cos(),
                scale * a.sin(),
            ]
        })
        .collect()
}

fn sequence(spec: &SequenceSpec) -> Sequence {
    match spec {
        SequenceSpec::Constant { value } => Sequence::Constant(*value),
        SequenceSpec::Harmonic { shift } => Sequence::Harmonic { shift: *shift },
        SequenceSpec::OnePlusInverseSquare => Sequence::OnePlusInverseSquare,
    }
}

fn space(spec: &SpaceSpec) -> Result<Space, BenchError> {
    match spec {
        SpaceSpec::Euclidean { dim } => Space::euclidean(*dim),
        SpaceSpec::Grid { step } => Space::grid_with_step(*step),
    }
    .map_err(in_field("space"))
}

fn sets(spec: &SetSpec, space: Space) -> Result<Vec<ConvexSet>, BenchError> {
    let field = in_field("sets");
    match spec {
        SetSpec::SphereBalls {
            count,
            center_scale,
            radius,
            index_base,
        } => {
            if space != Space::euclidean(3).map_err(&field)? {
                return Err(BenchError::config("sets", "sphere_balls needs a 3-dimensional Euclidean space"));
            }
            if *count == 0 {
                return Err(BenchError::config("sets.count", "must be at least 1"));
            }
            sphere_centers(*count, *center_scale, *index_base)
                .into_iter()
                .map(|c| ConvexSet::ball(space.vector(c.to_vec())?, *radius))
                .collect::<Result<_, _>>()
                .map_err(field)
        }
        SetSpec::Ball { count, center, radius } => {
            if *count == 0 {
                return Err(BenchError::config("sets.count", "must be at least 1"));
            }
            let center = match center {
                Some(c) => space.vector(c.clone()).map_err(&field)?,
                None => space.zeros(),
            };
            let ball = ConvexSet::ball(center, *radius).map_err(&field)?;
            Ok(vec![ball; *count])
        }
        SetSpec::Box { lower, upper } => {
            let b = ConvexSet::boxed(
                space.vector(lower.clone()).map_err(&field)?,
                space.vector(upper.clone()).map_err(&field)?,
            )
            .map_err(&field)?;
            Ok(vec![b])
        }
    }
}

fn operator(spec: &OperatorSpec, space: Space) -> Result<MonotoneOp, BenchError> {
    let field = in_field("operators");
    match spec {
        OperatorSpec::Zero => Ok(MonotoneOp::Zero),
        OperatorSpec::ShiftedIdentity { p } => {
            let p = space.vector(p.clone()).map_err(&field)?;
            Ok(MonotoneOp::Affine(AffineOp::shifted_identity(&p).map_err(&field)?))
        }
        OperatorSpec::Affine { matrix, offset } => {
            let offset = space.vector(offset.clone()).map_err(&field)?;
            if matrix.len() != offset.len() || matrix.iter().any(|row| row.len() != offset.len()) {
                return Err(BenchError::config("operators.matrix", "must be square and match the offset"));
            }
            let flat = matrix.iter().flatten().copied().collect();
            Ok(MonotoneOp::Affine(AffineOp::new(flat, offset).map_err(&field)?))
        }
    }
}

fn maps(spec: &MapSpec, space: Space) -> Result<Vec<PseudocontractiveMap>, BenchError> {
    match spec {
        MapSpec::None => Ok(Vec::new()),
        MapSpec::Identity { count } => Ok(vec![PseudocontractiveMap::identity(); *count]),
        MapSpec::Integral { kernels } => kernels
            .iter()
            .map(|&id| PseudocontractiveMap::integral(id, space))
            .collect::<Result<_, _>>()
            .map_err(in_field("maps")),
    }
}

fn start(spec: &StartSpec, space: Space) -> Result<Vector, BenchError> {
    match spec {
        StartSpec::Point { coords } => space.vector(coords.clone()).map_err(in_field("start")),
        StartSpec::Constant { value } => Ok(space.sample(|_| *value)),
        StartSpec::DampedSine => {
            if !space.is_grid() {
                return Err(BenchError::config("start", "damped_sine needs a grid space"));
            }
            Ok(space.sample(|t| 0.01 * (-10.0 * t).exp() * (1000.0 * t).sin()))
        }
    }
}

/// A solver ready to run, plus its starting point and stop rule.
pub struct Prepared {
    pub solver: Solver,
    pub x0: Vector,
    pub stop: StopRule,
}

/// Builds the problem, schedule and solver described by `cfg`.
pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared, BenchError> {
    cfg.validate()?;
    let space = space(&cfg.space)?;
    let sets = sets(&cfg.sets, space)?;
    let op = operator(&cfg.operators, space)?;
    let ops = vec![op; sets.len()];
    let s = &cfg.schedule;

    let mut problem = Problem::new(space, sets, ops)
        .map_err(in_field("sets"))?
        .with_maps(maps(&cfg.maps, space)?)
        .with_kappa(s.kappa)
        .map_err(in_field("schedule.kappa"))?;
    if let Some(l) = s.lipschitz {
        problem = problem.with_lipschitz(l).map_err(in_field("schedule.lipschitz"))?;
    }
    let mode = match s.mode {
        ModeSpec::Plain => Mode::Plain,
        ModeSpec::Asymptotic => Mode::Asymptotic,
        ModeSpec::CsvipOnly => Mode::CsvipOnly,
    };
    if mode == Mode::Asymptotic {
        let (Some(k), Some(omega)) = (&s.k_seq, s.omega) else {
            return Err(BenchError::config("schedule", "asymptotic mode needs k_seq and omega"));
        };
        problem = problem
            .with_asymptotic(sequence(k), omega)
            .map_err(in_field("schedule.k_seq"))?;
    }
    let schedule =
        Schedule::new(s.lambda, sequence(&s.alpha), sequence(&s.beta), mode).map_err(in_field("schedule"))?;
    let mut solver = Solver::new(problem, schedule)
        .map_err(in_field("schedule"))?
        .with_workers(cfg.workers)
        .map_err(in_field("workers"))?;
    let reference = match &cfg.target {
        TargetSpec::None => None,
        TargetSpec::Origin => Some(space.zeros()),
        TargetSpec::Point { coords } => Some(space.vector(coords.clone()).map_err(in_field("target"))?),
    };
    if let Some(r) = reference {
        solver = solver.with_reference(r).map_err(in_field("target"))?;
    }
    let stop = StopRule {
        max_iters: cfg.stop.max_iters,
        residual_tol: cfg.stop.residual_tol,
        target_tol: cfg.stop.target_tol,
    };
    Ok(Prepared {
        solver,
        x0: start(&cfg.start, space)?,
        stop,
    })
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub solution: Vector,
    pub trace: IterationTrace,
    pub summary: Summary,
}

fn summarize(cfg: &ExperimentConfig, solver: &Solver, x: &Vector, trace: &IterationTrace) -> Summary {
    Summary {
        experiment: cfg.experiment.to_string(),
        workers: cfg.workers,
        iterations: trace.len(),
        stop_reason: report::stop_name(trace.stop),
        final_residual: trace.records.last().map(|r| r.residual),
        final_dist_to_target: solver.reference().map(|r| Vector::distance(x, r).unwrap_or(f64::NAN)),
        final_norm: x.norm(),
        final_iterate: (!x.space().is_grid()).then(|| x.coords().to_vec()),
        elapsed_ms: trace.elapsed.as_secs_f64() * 1e3,
        timing: None,
    }
}

/// Runs one experiment and, if `out` is set, writes its files.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport, BenchError> {
    let prepared = prepare(cfg)?;
    let (solution, trace) = prepared
        .solver
        .solve(&prepared.stop, prepared.x0)
        .map_err(BenchError::Solver)?;
    let summary = summarize(cfg, &prepared.solver, &solution, &trace);
    let report = RunReport {
        config: cfg.clone(),
        solution,
        trace,
        summary,
    };
    if let Some(dir) = &cfg.out {
        write_outputs(&report, dir)?;
    }
    Ok(report)
}

/// Runs the same solve with one worker and with `cfg.workers`, requiring
/// bit-identical traces. Timing covers the iteration loop only.
pub fn time_modes(cfg: &ExperimentConfig) -> Result<RunReport, BenchError> {
    let sequential_cfg = ExperimentConfig {
        workers: 1,
        out: None,
        ..cfg.clone()
    };
    let seq = run_experiment(&sequential_cfg)?;
    let par_cfg = ExperimentConfig { out: None, ..cfg.clone() };
    let mut par = run_experiment(&par_cfg)?;
    let identical = seq.trace.same_numbers(&par.trace) && seq.solution == par.solution;
    if !identical {
        let first = seq
            .trace
            .records
            .iter()
            .zip(&par.trace.records)
            .position(|(a, b)| !a.same_numbers(b))
            .unwrap_or(seq.trace.len().min(par.trace.len()));
        return Err(BenchError::Determinism(format!(
            "traces for 1 and {} workers differ from iteration {first}",
            cfg.workers
        )));
    }
    let t_s = seq.trace.elapsed.as_secs_f64() * 1e3;
    let t_p = par.trace.elapsed.as_secs_f64() * 1e3;
    let speedup = if t_p > 0.0 { t_s / t_p } else { 1.0 };
    par.summary.timing = Some(Timing {
        workers: cfg.workers,
        available_parallelism: std::thread::available_parallelism().map_or(1, |n| n.get()),
        sequential_ms: t_s,
        parallel_ms: t_p,
        speedup,
        efficiency: speedup / cfg.workers as f64,
        identical,
    });
    par.config = cfg.clone();
    if let Some(dir) = &cfg.out {
        write_outputs(&par, dir)?;
    }
    Ok(par)
}

fn create(path: &Path) -> Result<BufWriter<File>, BenchError> {
    File::create(path).map(BufWriter::new).map_err(|e| io_error(path, e))
}

fn io_error(path: &Path, source: std::io::Error) -> BenchError {
    BenchError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `trace.csv`, `summary.json`, `config.toml` and, for grid spaces, `solution.csv`.
pub fn write_outputs(report: &RunReport, dir: &Path) -> Result<(), BenchError> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let path = dir.join("trace.csv");
    emit_trace(create(&path)?, &report.trace).map_err(|e| io_error(&path, e))?;
    if report.solution.space().is_grid() {
        let path = dir.join("solution.csv");
        emit_solution(create(&path)?, &report.solution).map_err(|e| io_error(&path, e))?;
    }
    let path = dir.join("summary.json");
    let json = serde_json::to_string_pretty(&report.summary).expect("summary is always serializable");
    fs::write(&path, json + "\n").map_err(|e| io_error(&path, e))?;
    let path = dir.join("config.toml");
    fs::write(&path, report.config.to_toml_string()).map_err(|e| io_error(&path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centers_lie_on_the_scaled_sphere() {
        for (scale, base) in [(0.5, 1), (1.0, 0)] {
            let cs = sphere_centers(100, scale, base);
            assert_eq!(cs.len(), 100);
            for c in cs {
                let r = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
                assert!((r - scale).abs() < 1e-12);
            }
        }
        assert_eq!(sphere_centers(4, 1.0, 0)[0], [0.0, 1.0, 0.0]);
    }

    #[test]
    fn single_ball_custom_run_projects() {
        let mut cfg = ExperimentConfig::builtin(ExperimentId::Example1b).unwrap();
        cfg.experiment = ExperimentId::Custom;
        cfg.sets = SetSpec::Ball {
            count: 1,
            center: None,
            radius: 1.0,
        };
        cfg.maps = MapSpec::None;
        cfg.schedule.mode = ModeSpec::CsvipOnly;
        cfg.start = StartSpec::Point {
            coords: vec![0.0, 3.0, 4.0],
        };
        cfg.target = TargetSpec::Point {
            coords: vec![0.0, 0.6, 0.8],
        };
        cfg.stop = StopSpec {
            max_iters: 200,
            residual_tol: None,
            // tangential error near the sphere grows like the square root of roundoff
            target_tol: Some(1e-5),
        };
        let report = run_experiment(&cfg).unwrap();
        assert_eq!(report.summary.stop_reason, "target", "{:?}", report.summary);
        assert!(report.summary.final_dist_to_target.unwrap() <= 1e-5);
    }

    #[test]
    fn prepare_reports_bad_fields() {
        let mut cfg = ExperimentConfig::builtin(ExperimentId::Example1a).unwrap();
        cfg.schedule.lambda = -1.0;
        let err = prepare(&cfg).err().unwrap();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("schedule"), "{err}");

        let mut cfg = ExperimentConfig::builtin(ExperimentId::Example2a).unwrap();
        cfg.maps = MapSpec::Integral { kernels: vec![5] };
        assert!(prepare(&cfg).err().unwrap().to_string().contains("maps"));

        let mut cfg = ExperimentConfig::builtin(ExperimentId::Example1a).unwrap();
        cfg.space = SpaceSpec::Euclidean { dim: 2 };
        assert!(prepare(&cfg).err().unwrap().to_string().contains("sets"));
    }
}
