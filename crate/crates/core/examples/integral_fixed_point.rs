// Common fixed point of four nonlinear integral operators on `L²[0, 1]`,
// discretized by the trapezoid rule with step 0.001. The solution is `x = 0`.

use parhybrid::bench::{self, ExperimentConfig, ExperimentId};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    for id in [ExperimentId::Example2a, ExperimentId::Example2b] {
        let report = bench::run_experiment(&ExperimentConfig::builtin(id)?)?;
        println!("{id}: ||x_0|| = {:.5}", report.trace.start.norm());
        for r in report.trace.records.iter().skip(1).step_by(5) {
            println!("  n = {:>2}  ||x_n|| = {:.5}", r.n, r.iterate.norm());
        }
        let max = report.solution.max_abs();
        println!("  n = {:>2}  ||x_n|| = {:.5}  max |x(t)| = {max:.2e}", report.trace.len(), report.solution.norm());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("integral fixed point example failed");
}
