mod common;

use parhybrid::bench::{self, ExperimentConfig, ExperimentId};
use parhybrid::{
    euclid, ConvexSet, Mode, MonotoneOp, Problem, PseudocontractiveMap, Schedule, Sequence, Solver, Space, StopRule,
};
use proptest::prelude::*;

fn balls_through(common_point: [f64; 3], centers: &[[f64; 3]]) -> Vec<ConvexSet> {
    centers
        .iter()
        .map(|c| {
            let c = euclid(c);
            let r = c.distance(&euclid(&common_point)).unwrap() + 0.05;
            ConvexSet::ball(c, r).unwrap()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn affine_box_invariants(p in prop::array::uniform2(-3.0f64..3.0), x0 in prop::array::uniform2(-2.0f64..2.0)) {
        for mode in [Mode::CsvipOnly, Mode::Asymptotic] {
            let solver = common::affine_box_solver(p, mode, 1);
            let (_, trace) = solver.solve(&StopRule::iterations(150), euclid(&x0)).unwrap();
            let bad = common::trace_violations(&trace);
            prop_assert!(bad.is_empty(), "{mode:?}: {bad:?}");
        }
    }

    #[test]
    fn ball_family_invariants(
        point in prop::array::uniform3(-1.0f64..1.0),
        centers in prop::collection::vec(prop::array::uniform3(-3.0f64..3.0), 1..12),
        x0 in prop::array::uniform3(-6.0f64..6.0),
        beta in 0.0f64..0.9,
    ) {
        let sets = balls_through(point, &centers);
        let n = sets.len();
        let problem = Problem::new(Space::euclidean(3).unwrap(), sets, vec![MonotoneOp::Zero; n])
            .unwrap()
            .with_maps(vec![PseudocontractiveMap::identity(); 2]);
        let schedule = Schedule::new(1.0, Sequence::Harmonic { shift: 2.0 }, Sequence::Constant(beta), Mode::Plain).unwrap();
        let solver = Solver::new(problem, schedule).unwrap().with_reference(euclid(&point)).unwrap();
        let (_, trace) = solver.solve(&StopRule::iterations(100), euclid(&x0)).unwrap();
        let bad = common::trace_violations(&trace);
        prop_assert!(bad.is_empty(), "{bad:?}");
        prop_assert!(trace.records.iter().all(|r| r.dist_from_start <= euclid(&x0).distance(&euclid(&point)).unwrap() + 1e-9));
    }
}

#[test]
fn residual_decays_on_affine_fixture() {
    let solver = common::affine_box_solver([2.0, 0.5], Mode::CsvipOnly, 1);
    let (_, trace) = solver.solve(&StopRule::iterations(2000), euclid(&[0.0, 0.0])).unwrap();
    let early = trace.records[10].residual;
    let late = trace.records[1999].residual;
    assert!(late < 1e-2 * early, "{early} -> {late}");
    let d = |n: usize| trace.records[n].dist_to_target.unwrap();
    assert!(d(1999) < d(100) && d(100) < d(0));
}

#[test]
fn traces_identical_across_worker_counts() {
    let mut runs = Vec::new();
    for (id, iters) in [(ExperimentId::Example1b, 150), (ExperimentId::Example2a, 4)] {
        for workers in [1, 2, 8] {
            let mut cfg = ExperimentConfig::builtin(id).unwrap();
            cfg.workers = workers;
            cfg.stop.max_iters = iters;
            runs.push((id, workers, bench::run_experiment(&cfg).unwrap()));
        }
    }
    for group in runs.chunks(3) {
        let (id, _, base) = &group[0];
        for (_, workers, other) in &group[1..] {
            assert!(base.trace.same_numbers(&other.trace), "{id} with {workers} workers");
            assert_eq!(base.solution, other.solution);
        }
    }
}
