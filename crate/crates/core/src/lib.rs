//! Parallel hybrid projection methods for common solutions of variational
//! inequalities that are also common fixed points of strict
//! pseudocontractions.
//!
//! The crate is organized bottom-up:
//!
//! - [`hilbert`]: Euclidean and trapezoid-discretized `L²[0, 1]` spaces;
//! - [`convex`]: sets, projections and the half-spaces `T`, `C`, `Q`;
//! - [`operators`]: monotone operators and pseudocontractive mappings;
//! - [`solver`]: the iteration itself with deterministic parallel fan-out;
//! - [`bench`]: built-in experiments, config files, CSV traces and timing.
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod bench;
pub mod convex;
pub mod error;
pub mod hilbert;
pub mod operators;
pub mod solver;

pub use convex::{build_c, build_q, build_t, project_oracle, project_two_halfspaces, ConvexSet};
pub use error::{Error, Result};
pub use hilbert::{euclid, Space, Vector};
pub use operators::{AffineOp, Kernel, MonotoneOp, PseudocontractiveMap};
pub use solver::{
    IterationRecord, IterationTrace, Mode, Problem, Schedule, Sequence, Solver, StopReason, StopRule,
};
