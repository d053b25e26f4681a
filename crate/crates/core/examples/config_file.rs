// A custom experiment from TOML: three balls in R³, written to a scratch
// directory as `trace.csv`, `summary.json` and `config.toml`.

use parhybrid::bench::{self, ExperimentConfig};

const CONFIG: &str = r#"
schema = 1
experiment = "custom"
workers = 2

[space]
kind = "euclidean"
dim = 3

[sets]
kind = "sphere_balls"
count = 3
center_scale = 1.0
radius = 1.0

[operators]
kind = "zero"

[maps]
kind = "identity"

[start]
kind = "point"
coords = [4.0, -1.0, 2.0]

[schedule]
mode = "plain"
lambda = 1.0
alpha = { kind = "constant", value = 0.0 }
beta = { kind = "constant", value = 0.0 }

[stop]
max_iters = 500
"#;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = ExperimentConfig::from_toml_str(CONFIG)?;
    let dir = std::env::temp_dir().join(format!("parhybrid-config-example-{}", std::process::id()));
    cfg.out = Some(dir.clone());
    let report = bench::run_experiment(&cfg)?;
    println!("{} iterations, stopped on {}", report.summary.iterations, report.summary.stop_reason);
    println!("x = {:?}", report.solution.coords());
    for name in ["trace.csv", "summary.json", "config.toml"] {
        let len = std::fs::metadata(dir.join(name))?.len();
        println!("wrote {name} ({len} bytes)");
    }
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("config file example failed");
}
