//! The simulation loop.

use serde::{Deserialize, Serialize};

use crate::chain::{bounding_box, is_gathered, validate_chain, ClosedChain, RobotId};
use crate::run::{ChainDir, Phase};
use crate::scheduler::{apply_round, compute_round, RoundEvents, RoundPlan, DEFAULT_ROUND_FACTOR};

/// Called once per completed round, with the state before and after.
pub trait RoundObserver {
    fn on_round(&mut self, before: &ClosedChain, plan: &RoundPlan, after: &ClosedChain, events: &RoundEvents);
}

impl RoundObserver for () {
    fn on_round(&mut self, _: &ClosedChain, _: &RoundPlan, _: &ClosedChain, _: &RoundEvents) {}
}

impl<A: RoundObserver, B: RoundObserver> RoundObserver for (A, B) {
    fn on_round(&mut self, before: &ClosedChain, plan: &RoundPlan, after: &ClosedChain, events: &RoundEvents) {
        self.0.on_round(before, plan, after, events);
        self.1.on_round(before, plan, after, events);
    }
}

impl<T: RoundObserver + ?Sized> RoundObserver for &mut T {
    fn on_round(&mut self, before: &ClosedChain, plan: &RoundPlan, after: &ClosedChain, events: &RoundEvents) {
        (**self).on_round(before, plan, after, events);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimOptions {
    /// Round budget; `None` means `30 · n`.
    pub max_rounds: Option<u64>,
    /// Keep robot positions and tokens of every round in the report.
    pub record_frames: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            max_rounds: None,
            record_frames: true,
        }
    }
}

/// A robot in a trace frame: `[id, x, y]`.
pub type RobotRecord = [i64; 3];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenRecord {
    /// Chain index of the holder.
    pub owner: usize,
    pub run_id: u64,
    pub dir: ChainDir,
    #[serde(flatten)]
    pub phase: Phase,
    pub age: u32,
}

/// State after one round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub round: u64,
    pub robots: Vec<RobotRecord>,
    pub runs: Vec<TokenRecord>,
    pub events: RoundEvents,
}

impl TraceRecord {
    fn capture(chain: &ClosedChain, events: RoundEvents, frames: bool) -> Self {
        let (robots, runs) = if frames {
            (robot_records(chain), token_records(chain))
        } else {
            (Vec::new(), Vec::new())
        };
        TraceRecord {
            round: events.round,
            robots,
            runs,
            events,
        }
    }
}

pub fn robot_records(chain: &ClosedChain) -> Vec<RobotRecord> {
    chain
        .robots
        .iter()
        .map(|r| [r.id.0 as i64, r.pos.x, r.pos.y])
        .collect()
}

pub fn token_records(chain: &ClosedChain) -> Vec<TokenRecord> {
    chain
        .robots
        .iter()
        .enumerate()
        .flat_map(|(i, r)| {
            r.runs.iter().map(move |run| TokenRecord {
                owner: i,
                run_id: run.id,
                dir: run.dir,
                phase: run.phase,
                age: run.age,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SimFailure {
    InvalidInitialChain { detail: String },
    RoundBudgetExceeded { max_rounds: u64 },
    Aborted { round: u64, detail: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimReport {
    pub initial: ClosedChain,
    pub max_rounds: u64,
    pub rounds_used: u64,
    pub gathered: bool,
    pub failure: Option<SimFailure>,
    pub final_chain: ClosedChain,
    pub records: Vec<TraceRecord>,
}

impl SimReport {
    pub fn initial_len(&self) -> usize {
        self.initial.len()
    }

    pub fn final_box(&self) -> (i64, i64) {
        bounding_box(&self.final_chain)
    }

    pub fn merge_count(&self) -> usize {
        self.records.iter().map(|r| r.events.merges.len()).sum()
    }

    pub fn events(&self) -> impl Iterator<Item = &RoundEvents> {
        self.records.iter().map(|r| &r.events)
    }

    pub fn succeeded(&self) -> bool {
        self.gathered && self.failure.is_none()
    }

    /// Ids of robots removed over the whole run.
    pub fn removed_ids(&self) -> Vec<RobotId> {
        self.events()
            .flat_map(|e| e.removed.iter().map(|&(r, _)| r))
            .collect()
    }
}

/// Run rounds until the chain is gathered or the budget is spent.
pub fn simulate(initial: &ClosedChain, options: SimOptions, mut observer: impl RoundObserver) -> SimReport {
    let n = initial.len() as u64;
    let max_rounds = options.max_rounds.unwrap_or(DEFAULT_ROUND_FACTOR * n.max(1));
    let mut report = SimReport {
        initial: initial.clone(),
        max_rounds,
        rounds_used: 0,
        gathered: false,
        failure: None,
        final_chain: initial.clone(),
        records: Vec::new(),
    };
    let violations = validate_chain(initial);
    if !violations.is_empty() {
        report.failure = Some(SimFailure::InvalidInitialChain {
            detail: violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "),
        });
        return report;
    }
    let mut chain = initial.clone();
    loop {
        if is_gathered(&chain) {
            report.gathered = true;
            break;
        }
        if report.rounds_used >= max_rounds {
            report.failure = Some(SimFailure::RoundBudgetExceeded { max_rounds });
            break;
        }
        let plan = compute_round(&chain, chain.round);
        match apply_round(&chain, &plan) {
            Ok((next, events)) => {
                observer.on_round(&chain, &plan, &next, &events);
                report
                    .records
                    .push(TraceRecord::capture(&next, events, options.record_frames));
                chain = next;
                report.rounds_used += 1;
            }
            Err(e) => {
                report.failure = Some(SimFailure::Aborted {
                    round: chain.round,
                    detail: e.to_string(),
                });
                break;
            }
        }
    }
    report.final_chain = chain;
    report
}
