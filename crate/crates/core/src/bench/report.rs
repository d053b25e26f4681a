//! CSV traces, grid solutions and JSON summaries.

use std::io::{self, Write};

use serde::Serialize;

use crate::hilbert::Vector;
use crate::solver::{IterationRecord, IterationTrace, StopReason};

pub const TRACE_HEADER: &str = "n,i_n,j_n,dist_zbar,dist_ubar,eps_n,residual,dist_to_target,wall_ms";

fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt<T>(v: Option<T>, f: impl Fn(T) -> String) -> String {
    v.map(f).unwrap_or_default()
}

/// One CSV row, without the trailing newline.
pub fn trace_row(r: &IterationRecord) -> String {
    [
        r.n.to_string(),
        r.i_n.to_string(),
        opt(r.j_n, |j| j.to_string()),
        float(r.dist_zbar),
        float(r.dist_ubar),
        float(r.eps),
        float(r.residual),
        opt(r.dist_to_target, float),
        format!("{:.3}", r.wall.as_secs_f64() * 1e3),
    ]
    .join(",")
}

/// Header plus one row per iteration. Indices are zero-based.
pub fn emit_trace<W: Write>(mut out: W, trace: &IterationTrace) -> io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for r in &trace.records {
        writeln!(out, "{}", trace_row(r))?;
    }
    out.flush()
}

/// `t,x(t)` for grid vectors, `k,x_k` otherwise.
pub fn emit_solution<W: Write>(mut out: W, x: &Vector) -> io::Result<()> {
    let space = x.space();
    if space.is_grid() {
        writeln!(out, "t,x(t)")?;
        for (k, v) in x.coords().iter().enumerate() {
            writeln!(out, "{},{}", space.node(k), float(*v))?;
        }
    } else {
        writeln!(out, "k,x_k")?;
        for (k, v) in x.coords().iter().enumerate() {
            writeln!(out, "{k},{}", float(*v))?;
        }
    }
    out.flush()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub experiment: String,
    pub workers: usize,
    pub iterations: usize,
    pub stop_reason: &'static str,
    pub final_residual: Option<f64>,
    pub final_dist_to_target: Option<f64>,
    pub final_norm: f64,
    /// Full final iterate for Euclidean spaces; grid solutions go to `solution.csv`.
    pub final_iterate: Option<Vec<f64>>,
    pub elapsed_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub workers: usize,
    pub available_parallelism: usize,
    pub sequential_ms: f64,
    pub parallel_ms: f64,
    pub speedup: f64,
    pub efficiency: f64,
    pub identical: bool,
}

pub fn stop_name(reason: StopReason) -> &'static str {
    match reason {
        StopReason::MaxIters => "max_iters",
        StopReason::Residual => "residual",
        StopReason::Target => "target",
    }
}
