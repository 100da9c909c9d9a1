#![allow(dead_code)]

use chaingather::chain::ClosedChain;
use chaingather::scheduler::{apply_round, compute_round, RoundEvents, RoundPlan};
use chaingather::GridPoint;

/// Lattice path from `start` following moves like `"N1 E4 S1"`. A closing
/// return to `start` is dropped.
pub fn walk(start: (i64, i64), moves: &str) -> Vec<GridPoint> {
    let mut p = GridPoint::new(start.0, start.1);
    let mut out = vec![p];
    for m in moves.split_whitespace() {
        let (d, count) = m.split_at(1);
        let step = match d {
            "N" => GridPoint::new(0, 1),
            "S" => GridPoint::new(0, -1),
            "E" => GridPoint::new(1, 0),
            "W" => GridPoint::new(-1, 0),
            _ => panic!("bad move {m}"),
        };
        for _ in 0..count.parse::<usize>().unwrap() {
            p = p + step;
            out.push(p);
        }
    }
    if out.len() > 1 && out.last() == out.first() {
        out.pop();
    }
    out
}

pub fn chain_of(start: (i64, i64), moves: &str) -> ClosedChain {
    let chain = ClosedChain::from_positions(walk(start, moves));
    assert!(chain.validate().is_empty(), "invalid chain {moves}: {:?}", chain.validate());
    chain
}

/// A `white, black × k, white` bump on the top side of a large loop; the
/// whites sit at `(0, 0)` and `(k - 1, 0)`, the blacks one row above.
pub fn bump(k: usize) -> ClosedChain {
    let w = k - 1;
    chain_of((0, 0), &format!("N1 E{w} S1 E15 S20 W{} N20 E15", w + 30))
}

pub struct Step {
    pub before: ClosedChain,
    pub plan: RoundPlan,
    pub after: ClosedChain,
    pub events: RoundEvents,
}

/// Plan and apply one round.
pub fn step(chain: &ClosedChain) -> Step {
    let plan = compute_round(chain, chain.round);
    let (after, events) = apply_round(chain, &plan).expect("round applies");
    Step {
        before: chain.clone(),
        plan,
        after,
        events,
    }
}

/// Advance `rounds` rounds.
pub fn advance(chain: &ClosedChain, rounds: u64) -> ClosedChain {
    let mut c = chain.clone();
    for _ in 0..rounds {
        c = step(&c).after;
    }
    c
}

pub fn id_at(chain: &ClosedChain, p: (i64, i64)) -> Vec<u64> {
    chain
        .robots
        .iter()
        .filter(|r| r.pos == GridPoint::new(p.0, p.1))
        .map(|r| r.id.0)
        .collect()
}
