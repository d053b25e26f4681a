//! Experiment configuration: built-in experiment ids and TOML config files.
//!
//! A config file is flat TOML with a `schema` version. Built-in ids fix every
//! problem parameter; only `workers`, `out` and `[stop]` may be overridden.
//!
//! ```toml
//! schema = 1
//! experiment = "custom"
//! workers = 2
//!
//! [space]
//! kind = "euclidean"
//! dim = 3
//!
//! [sets]
//! kind = "ball"
//! radius = 1.0
//!
//! [operators]
//! kind = "zero"
//!
//! [maps]
//! kind = "none"
//!
//! [start]
//! kind = "point"
//! coords = [3.0, 0.0, 0.0]
//!
//! [schedule]
//! mode = "csvip_only"
//! lambda = 1.0
//! alpha = { kind = "constant", value = 0.0 }
//! beta = { kind = "constant", value = 0.0 }
//!
//! [stop]
//! max_iters = 100
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::BenchError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentId {
    /// 1000 balls with centers on the sphere of radius 1/2, `x_0 = (1, 2, 7)`.
    Example1a,
    /// 1000 unit balls with centers on the unit sphere, `x_0 = (-3, -5, -9)`.
    Example1b,
    /// Four integral operators on `L²[0, 1]`, `x_0(t) = 1`.
    Example2a,
    /// Four integral operators on `L²[0, 1]`, `x_0(t) = e^{-10t} sin(1000t) / 100`.
    Example2b,
    Custom,
}

impl ExperimentId {
    pub const BUILTIN: [ExperimentId; 4] = [
        ExperimentId::Example1a,
        ExperimentId::Example1b,
        ExperimentId::Example2a,
        ExperimentId::Example2b,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentId::Example1a => "example1a",
            ExperimentId::Example1b => "example1b",
            ExperimentId::Example2a => "example2a",
            ExperimentId::Example2b => "example2b",
            ExperimentId::Custom => "custom",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentId {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [ExperimentId::Custom]
            .into_iter()
            .chain(ExperimentId::BUILTIN)
            .find(|id| id.as_str() == s)
            .ok_or_else(|| BenchError::config("experiment", format!("unknown experiment id `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceSpec {
    Euclidean { dim: usize },
    /// Trapezoid grid on `[0, 1]`; `1 / step` must be an integer.
    Grid { step: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetSpec {
    /// `count` balls in R³ with centers
    /// `scale * (cos(iπ/N) sin(2iπ/N), cos(iπ/N) cos(2iπ/N), sin(iπ/N))`
    /// for `i = index_base, .., index_base + N - 1`.
    SphereBalls {
        count: usize,
        center_scale: f64,
        radius: f64,
        #[serde(default = "default_index_base")]
        index_base: usize,
    },
    /// `count` copies of one ball; the center defaults to the origin.
    Ball {
        #[serde(default = "default_count")]
        count: usize,
        #[serde(default)]
        center: Option<Vec<f64>>,
        radius: f64,
    },
    Box { lower: Vec<f64>, upper: Vec<f64> },
}

fn default_index_base() -> usize {
    1
}

fn default_count() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    Zero,
    /// `A(x) = x - p` for every set.
    ShiftedIdentity { p: Vec<f64> },
    /// `A(x) = M x + q` (rows of `M`) for every set.
    Affine { matrix: Vec<Vec<f64>>, offset: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSpec {
    None,
    Identity {
        #[serde(default = "default_count")]
        count: usize,
    },
    /// Integral operators by kernel id (1 to 4).
    Integral { kernels: Vec<u8> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StartSpec {
    Point { coords: Vec<f64> },
    /// Constant function (grid) or constant vector.
    Constant { value: f64 },
    /// `x_0(t) = e^{-10t} sin(1000t) / 100` on a grid.
    DampedSine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SequenceSpec {
    Constant { value: f64 },
    /// `1 / (n + shift)`.
    Harmonic { shift: f64 },
    /// `1 + 1 / (n + 1)^2`.
    OnePlusInverseSquare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeSpec {
    Plain,
    Asymptotic,
    CsvipOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    pub mode: ModeSpec,
    pub lambda: f64,
    pub alpha: SequenceSpec,
    pub beta: SequenceSpec,
    #[serde(default)]
    pub kappa: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_seq: Option<SequenceSpec>,
    /// Shared Lipschitz bound; defaults to the operators' own bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopSpec {
    pub max_iters: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_tol: Option<f64>,
}

/// Known solution `x†`, used for the distance-to-target column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    None,
    Origin,
    Point { coords: Vec<f64> },
}

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub experiment: ExperimentId,
    pub workers: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub space: SpaceSpec,
    pub sets: SetSpec,
    pub operators: OperatorSpec,
    pub maps: MapSpec,
    pub start: StartSpec,
    pub schedule: ScheduleSpec,
    pub stop: StopSpec,
    pub target: TargetSpec,
}

/// What a config file may contain before resolution.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    schema: u32,
    experiment: ExperimentId,
    workers: Option<usize>,
    out: Option<PathBuf>,
    space: Option<SpaceSpec>,
    sets: Option<SetSpec>,
    operators: Option<OperatorSpec>,
    maps: Option<MapSpec>,
    start: Option<StartSpec>,
    schedule: Option<ScheduleSpec>,
    stop: Option<StopSpec>,
    target: Option<TargetSpec>,
}

fn required<T>(value: Option<T>, field: &str) -> Result<T, BenchError> {
    value.ok_or_else(|| BenchError::config(field, "missing section (required for custom experiments)"))
}

fn zero() -> SequenceSpec {
    SequenceSpec::Constant { value: 0.0 }
}

impl ExperimentConfig {
    /// The exact parameters of a built-in experiment.
    pub fn builtin(id: ExperimentId) -> Result<Self, BenchError> {
        let ball_schedule = ScheduleSpec {
            mode: ModeSpec::Plain,
            lambda: 1.0,
            alpha: zero(),
            beta: zero(),
            kappa: 0.0,
            omega: None,
            k_seq: None,
            lipschitz: None,
        };
        let integral_schedule = ScheduleSpec {
            // 1/(k+1) with k = n + 1 counted from one
            alpha: SequenceSpec::Harmonic { shift: 2.0 },
            ..ball_schedule.clone()
        };
        let cfg = |space, sets, maps, start, schedule, max_iters, target| ExperimentConfig {
            schema: SCHEMA_VERSION,
            experiment: id,
            workers: 1,
            out: None,
            space,
            sets,
            operators: OperatorSpec::Zero,
            maps,
            start,
            schedule,
            stop: StopSpec {
                max_iters,
                residual_tol: None,
                target_tol: None,
            },
            target,
        };
        let r3 = SpaceSpec::Euclidean { dim: 3 };
        let grid = SpaceSpec::Grid { step: 0.001 };
        let sphere = |center_scale| SetSpec::SphereBalls {
            count: 1000,
            center_scale,
            radius: 1.0,
            index_base: 1,
        };
        let unit_balls = SetSpec::Ball {
            count: 4,
            center: None,
            radius: 1.0,
        };
        let kernels = MapSpec::Integral {
            kernels: vec![1, 2, 3, 4],
        };
        Ok(match id {
            ExperimentId::Example1a => cfg(
                r3,
                sphere(0.5),
                MapSpec::Identity { count: 1 },
                StartSpec::Point {
                    coords: vec![1.0, 2.0, 7.0],
                },
                ball_schedule,
                5000,
                TargetSpec::None,
            ),
            ExperimentId::Example1b => cfg(
                r3,
                sphere(1.0),
                MapSpec::Identity { count: 1 },
                StartSpec::Point {
                    coords: vec![-3.0, -5.0, -9.0],
                },
                ball_schedule,
                1700,
                TargetSpec::Origin,
            ),
            ExperimentId::Example2a => cfg(
                grid,
                unit_balls,
                kernels,
                StartSpec::Constant { value: 1.0 },
                integral_schedule,
                20,
                TargetSpec::Origin,
            ),
            ExperimentId::Example2b => cfg(
                grid,
                unit_balls,
                kernels,
                StartSpec::DampedSine,
                integral_schedule,
                20,
                TargetSpec::Origin,
            ),
            ExperimentId::Custom => {
                return Err(BenchError::config(
                    "experiment",
                    "`custom` has no built-in parameters; use a config file",
                ))
            }
        })
    }

    pub fn from_toml_str(text: &str) -> Result<Self, BenchError> {
        let file: ConfigFile =
            toml::from_str(text).map_err(|e| BenchError::config("config", e.to_string().trim_end().to_string()))?;
        if file.schema != SCHEMA_VERSION {
            return Err(BenchError::config(
                "schema",
                format!("unsupported schema version {} (expected {SCHEMA_VERSION})", file.schema),
            ));
        }
        let mut cfg = if file.experiment == ExperimentId::Custom {
            ExperimentConfig {
                schema: file.schema,
                experiment: ExperimentId::Custom,
                workers: 1,
                out: None,
                space: required(file.space, "space")?,
                sets: required(file.sets, "sets")?,
                operators: required(file.operators, "operators")?,
                maps: required(file.maps, "maps")?,
                start: required(file.start, "start")?,
                schedule: required(file.schedule, "schedule")?,
                stop: required(file.stop, "stop")?,
                target: file.target.unwrap_or(TargetSpec::None),
            }
        } else {
            let fixed = [
                ("space", file.space.is_some()),
                ("sets", file.sets.is_some()),
                ("operators", file.operators.is_some()),
                ("maps", file.maps.is_some()),
                ("start", file.start.is_some()),
                ("schedule", file.schedule.is_some()),
                ("target", file.target.is_some()),
            ];
            if let Some((field, _)) = fixed.iter().find(|(_, present)| *present) {
                return Err(BenchError::config(
                    field,
                    format!("built-in experiment `{}` fixes this section", file.experiment),
                ));
            }
            let mut cfg = Self::builtin(file.experiment)?;
            if let Some(stop) = file.stop {
                cfg.stop = stop;
            }
            cfg
        };
        if let Some(w) = file.workers {
            cfg.workers = w;
        }
        cfg.out = file.out;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            BenchError::Config { field, message } => BenchError::Config {
                field,
                message: format!("{}: {message}", path.display()),
            },
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    /// Field-level checks that do not need the numerical layer.
    pub fn validate(&self) -> Result<(), BenchError> {
        if self.workers == 0 {
            return Err(BenchError::config("workers", "must be at least 1"));
        }
        if self.stop.max_iters == 0 && self.stop.residual_tol.is_none() && self.stop.target_tol.is_none() {
            return Err(BenchError::config("stop", "no active stop criterion"));
        }
        if self.stop.target_tol.is_some() && self.target == TargetSpec::None {
            return Err(BenchError::config("stop.target_tol", "needs a [target] section"));
        }
        Ok(())
    }
}
