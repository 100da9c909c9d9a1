mod common;

use proptest::prelude::*;

use chaingather::chain::ClosedChain;
use chaingather::experiment::round_bound;
use chaingather::geom::Symmetry;
use chaingather::harness::{read_trace, write_trace, CheckSet, InvariantChecker};
use chaingather::{gen_quasiline_cycle, gen_random_cycle, simulate, GridPoint, QuasiCycleSpec, SimOptions, SimReport};

/// Neighbours on the chain are at most one unit apart, and no two chain
/// neighbours of a fresh chain coincide.
fn adjacency_ok(points: &[GridPoint], allow_equal: bool) -> bool {
    let n = points.len();
    (0..n).all(|i| {
        let d = (points[(i + 1) % n] - points[i]).l1();
        d == 1 || (allow_equal && d == 0) || n == 1
    })
}

fn positions(chain: &ClosedChain) -> Vec<GridPoint> {
    chain.robots.iter().map(|r| r.pos).collect()
}

fn sorted_frame(report: &SimReport, round: usize) -> Vec<(i64, i64)> {
    let mut v: Vec<(i64, i64)> = report.records[round].robots.iter().map(|r| (r[1], r[2])).collect();
    v.sort_unstable();
    v
}

fn run(chain: &ClosedChain) -> SimReport {
    simulate(chain, SimOptions::default(), ())
}

fn even_n() -> impl Strategy<Value = usize> {
    (4usize..80).prop_map(|h| 2 * h)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_cycles_are_closed_chains(n in even_n(), seed in any::<u64>()) {
        let c = gen_random_cycle(n, seed).unwrap();
        prop_assert_eq!(c.len(), n);
        prop_assert!(adjacency_ok(&positions(&c), false));
        prop_assert!(c.validate().is_empty());
        prop_assert_eq!(gen_random_cycle(n, seed).unwrap(), c);
    }

    #[test]
    fn quasiline_cycles_are_valid_when_built(side in 12u32..40, stair in 0u32..4, zigs in 0u32..3, seed in 0u64..50) {
        if let Ok(c) = gen_quasiline_cycle(&QuasiCycleSpec::octagon(side, stair, zigs), seed) {
            prop_assert!(adjacency_ok(&positions(&c), false));
            prop_assert!(c.validate().is_empty());
        }
    }

    #[test]
    fn random_cycles_gather_with_all_checks(n in even_n(), seed in any::<u64>()) {
        let c = gen_random_cycle(n, seed).unwrap();
        let mut checker = InvariantChecker::new(CheckSet::all());
        let report = simulate(&c, SimOptions { max_rounds: None, record_frames: true }, &mut checker);
        prop_assert!(report.succeeded(), "{:?}", report.failure);
        prop_assert!(report.rounds_used <= round_bound(n));
        prop_assert!(checker.passed(), "{:?}", checker.first_failure());
        for rec in &report.records {
            let pts: Vec<GridPoint> = rec.robots.iter().map(|r| GridPoint::new(r[1], r[2])).collect();
            prop_assert!(adjacency_ok(&pts, false));
        }
        let fin = &report.final_chain;
        let (w, h) = fin.bounding_box();
        prop_assert!(w <= 1 && h <= 1);
        prop_assert_eq!(report.removed_ids().len() + fin.len(), n);
    }

    #[test]
    fn behaviour_commutes_with_lattice_symmetries(n in even_n(), seed in any::<u64>(), s in 0usize..8) {
        let sym = Symmetry::all().nth(s).unwrap();
        let c = gen_random_cycle(n, seed).unwrap();
        let t = ClosedChain::from_positions(c.robots.iter().map(|r| sym.apply(r.pos)));
        let (a, b) = (run(&c), run(&t));
        prop_assert_eq!(a.rounds_used, b.rounds_used);
        prop_assert_eq!(a.merge_count(), b.merge_count());
        for (ra, rb) in a.records.iter().zip(&b.records) {
            prop_assert_eq!(&ra.events.removed, &rb.events.removed);
            let moved: Vec<GridPoint> = ra.robots.iter().map(|r| sym.apply(GridPoint::new(r[1], r[2]))).collect();
            let other: Vec<GridPoint> = rb.robots.iter().map(|r| GridPoint::new(r[1], r[2])).collect();
            prop_assert_eq!(moved, other);
        }
    }

    #[test]
    fn index_origin_does_not_matter(n in even_n(), seed in any::<u64>(), shift in 0usize..160) {
        let c = gen_random_cycle(n, seed).unwrap();
        let mut pts = positions(&c);
        pts.rotate_left(shift % n);
        let (a, b) = (run(&c), run(&ClosedChain::from_positions(pts)));
        prop_assert_eq!(a.rounds_used, b.rounds_used);
        for round in 0..a.records.len() {
            prop_assert_eq!(sorted_frame(&a, round), sorted_frame(&b, round));
        }
    }

    #[test]
    fn simulation_and_traces_are_reproducible(n in even_n(), seed in any::<u64>()) {
        let c = gen_random_cycle(n, seed).unwrap();
        let a = run(&c);
        prop_assert_eq!(&a, &run(&c));
        let mut bytes = Vec::new();
        write_trace(&a, &mut bytes).unwrap();
        let back = read_trace(bytes.as_slice()).unwrap();
        prop_assert_eq!(&back, &a);
        let mut again = Vec::new();
        write_trace(&back, &mut again).unwrap();
        prop_assert_eq!(again, bytes);
    }
}
