// Common point of 1000 unit balls. With centers on the sphere of radius 1/2
// started at (1, 2, 7), prints x_n at fixed n. With centers on the unit
// sphere, whose only common point is the origin, prints the iteration at
// which each tolerance on `||x_n||` is first reached.

use parhybrid::bench::{self, ExperimentConfig, ExperimentId};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = ExperimentConfig::builtin(ExperimentId::Example1a)?;
    cfg.stop.max_iters = 5001;
    let report = bench::run_experiment(&cfg)?;
    println!("{:>6} {:>28}", "n", "x_n");
    for n in [250, 1000, 5000] {
        let x = report.trace.records[n].iterate.coords();
        println!("{n:>6} ({:8.4}, {:8.4}, {:8.4})", x[0], x[1], x[2]);
    }

    let cfg = ExperimentConfig::builtin(ExperimentId::Example1b)?;
    let report = bench::run_experiment(&cfg)?;
    println!("\n{:>8} {:>6} {:>28}", "TOL", "n", "x_n");
    for tol in [0.1, 0.05, 0.025, 0.01, 0.0075] {
        let hit = report
            .trace
            .records
            .iter()
            .find(|r| r.dist_to_target.is_some_and(|d| d <= tol))
            .ok_or(format!("tolerance {tol} not reached"))?;
        let x = hit.iterate.coords();
        println!("{tol:>8} {:>6} ({:8.4}, {:8.4}, {:8.4})", hit.n, x[0], x[1], x[2]);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("ball feasibility example failed");
}
