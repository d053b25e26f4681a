// Sequential against parallel execution of the integral-operator
// experiment. The two traces must agree bit for bit.

use parhybrid::bench::{self, ExperimentConfig, ExperimentId};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = ExperimentConfig::builtin(ExperimentId::Example2a)?;
    cfg.workers = std::thread::available_parallelism().map_or(2, |n| n.get().max(2));
    let report = bench::time_modes(&cfg)?;
    let t = report.summary.timing.expect("time_modes always reports timing");
    println!(
        "workers {}  T_s {:.1} ms  T_p {:.1} ms  S_p {:.2}  E_p {:.2}  identical {}",
        t.workers, t.sequential_ms, t.parallel_ms, t.speedup, t.efficiency, t.identical
    );
    if t.available_parallelism < 2 {
        println!("(only {} core available; speedup is not meaningful here)", t.available_parallelism);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("parallel timing example failed");
}
