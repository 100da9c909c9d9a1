use chaingather::harness::{CheckSet, InvariantChecker};
use chaingather::{simulate, ClosedChain, GridPoint, SimOptions};

#[test]
fn short_doubled_needle_gathers() {
    let pts = [(0, 1), (0, 2), (1, 2), (0, 2), (0, 1), (0, 0), (1, 0), (0, 0)];
    let c = ClosedChain::from_positions(pts.iter().map(|&(x, y)| GridPoint::new(x, y)));
    let mut checker = InvariantChecker::new(CheckSet::all());
    let report = simulate(&c, SimOptions::default(), &mut checker);
    assert!(report.gathered, "{:?}", report.failure);
    assert!(checker.passed(), "{:?}", checker.first_failure());
}
