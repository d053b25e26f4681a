// Variational inequality for `A(x) = x - p` over the box `[-1, 1]²`. The
// solution is `p` clamped to the box. Runs the plain method and the
// asymptotic variant with `k_n = 1 + 1/(n+1)²`.

use parhybrid::{
    euclid, AffineOp, ConvexSet, Mode, MonotoneOp, Problem, PseudocontractiveMap, Schedule, Sequence, Solver,
    Space, StopRule,
};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let p = euclid(&[2.0, 0.5]);
    let solution = euclid(&[1.0, 0.5]);
    let square = ConvexSet::boxed(euclid(&[-1.0, -1.0]), euclid(&[1.0, 1.0]))?;
    let op = MonotoneOp::Affine(AffineOp::shifted_identity(&p)?);
    let problem = Problem::new(Space::euclidean(2)?, vec![square], vec![op])?;
    let zero = || Sequence::Constant(0.0);

    let plain = Solver::new(problem.clone(), Schedule::new(0.5, zero(), zero(), Mode::CsvipOnly)?)?
        .with_reference(solution.clone())?;
    let (x, trace) = plain.solve(&StopRule::iterations(5000).with_target(1e-4), euclid(&[0.0, 0.0]))?;
    println!("plain:      {:?} after {} iterations ({:?})", x.coords(), trace.len(), trace.stop);

    let asymptotic = problem
        .with_maps(vec![PseudocontractiveMap::identity()])
        .with_asymptotic(Sequence::OnePlusInverseSquare, 10.0)?;
    let solver = Solver::new(asymptotic, Schedule::new(0.5, zero(), zero(), Mode::Asymptotic)?)?;
    let (x, trace) = solver.solve(&StopRule::iterations(2000), euclid(&[0.0, 0.0]))?;
    println!(
        "asymptotic: {:?} after {} iterations, error {:.2e}",
        x.coords(),
        trace.len(),
        x.distance(&solution)?
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("affine VI example failed");
}
