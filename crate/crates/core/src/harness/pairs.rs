//! Progress-pair bookkeeping over a finished event log.
//!
//! A progress pair is a good pair started on a round such that no merge
//! happened in that round or the twelve before it. Every start round must see
//! either a merge in that window or a new progress pair, and every progress
//! pair must be credited its own merge within `n` rounds.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::chain::{ClosedChain, RobotId};
use crate::harness::invariants::{good_pairs_started, GoodPair};
use crate::run::TerminationCause;
use crate::scheduler::{RoundEvents, TerminationEvent, START_PERIOD};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Credit {
    pub round: u64,
    /// Position of the merge in that round's merge list.
    pub merge: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgressPair {
    pub pair: GoodPair,
    /// Robots from one start to the other, both included.
    pub span: usize,
    /// Chain length when the pair started.
    pub chain_len: usize,
    pub credit: Option<Credit>,
    /// The credit is not the first merge ending one of the pair's runs.
    pub ambiguous: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowOutcome {
    /// A merge happened in the start round or the twelve rounds before.
    Merge,
    /// No merge, and a progress pair started.
    ProgressPair,
    /// Neither: the window contradicts the progress-pair existence claim.
    Missing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowRecord {
    pub start_round: u64,
    pub outcome: WindowOutcome,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairLedger {
    pub good_pairs: usize,
    pub progress: Vec<ProgressPair>,
    pub windows: Vec<WindowRecord>,
}

impl PairLedger {
    pub fn uncredited(&self) -> impl Iterator<Item = &ProgressPair> {
        self.progress.iter().filter(|p| p.credit.is_none())
    }

    pub fn missing_windows(&self) -> impl Iterator<Item = &WindowRecord> {
        self.windows.iter().filter(|w| w.outcome == WindowOutcome::Missing)
    }

    pub fn ambiguous(&self) -> usize {
        self.progress.iter().filter(|p| p.ambiguous).count()
    }

    pub fn ambiguous_fraction(&self) -> f64 {
        if self.progress.is_empty() {
            0.0
        } else {
            self.ambiguous() as f64 / self.progress.len() as f64
        }
    }

    /// Merges credited to more than one pair; empty by construction.
    pub fn shared_credits(&self) -> Vec<Credit> {
        let mut seen = HashSet::new();
        self.progress
            .iter()
            .filter_map(|p| p.credit)
            .filter(|c| !seen.insert((c.round, c.merge)))
            .collect()
    }
}

struct PendingPair {
    pair: GoodPair,
    ids: HashSet<RobotId>,
    chain_len: usize,
}

/// Replay the robot order from `initial` through the removals in `events`,
/// find progress pairs and credit merges to them greedily in start order.
pub fn track_progress_pairs(initial: &ClosedChain, events: &[RoundEvents]) -> PairLedger {
    let mut ids: Vec<RobotId> = initial.robots.iter().map(|r| r.id).collect();
    let mut ledger = PairLedger::default();
    let mut pending: Vec<PendingPair> = Vec::new();
    let merge_rounds: HashSet<u64> = events.iter().filter(|e| !e.merges.is_empty()).map(|e| e.round).collect();
    let quiet = |round: u64| (round.saturating_sub(START_PERIOD - 1)..=round).all(|r| !merge_rounds.contains(&r));

    for ev in events {
        let n = ids.len();
        let pairs = good_pairs_started(ev, n);
        ledger.good_pairs += pairs.len();
        let progress_here = quiet(ev.round) && !pairs.is_empty();
        if ev.round % START_PERIOD == 0 {
            let outcome = if !quiet(ev.round) {
                WindowOutcome::Merge
            } else if progress_here {
                WindowOutcome::ProgressPair
            } else {
                WindowOutcome::Missing
            };
            ledger.windows.push(WindowRecord {
                start_round: ev.round,
                outcome,
            });
        }
        if progress_here {
            for pair in pairs {
                let index_of = |run: u64| ev.run_starts.iter().find(|s| s.run_id == run).map(|s| s.index);
                let (Some(a), Some(b)) = (index_of(pair.forward_run), index_of(pair.backward_run)) else {
                    continue;
                };
                let len = (b + n - a) % n;
                let len = if len == 0 { n } else { len };
                let span: HashSet<RobotId> = (0..=len).map(|k| ids[(a + k) % n]).collect();
                pending.push(PendingPair {
                    pair,
                    ids: span,
                    chain_len: n,
                });
            }
        }
        let gone: HashSet<RobotId> = ev.removed.iter().map(|&(r, _)| r).collect();
        ids.retain(|id| !gone.contains(id));
    }

    // Run id to (round, termination) for linking runs to the merges that end them.
    let ends: HashMap<u64, (u64, &TerminationEvent)> = events
        .iter()
        .flat_map(|e| e.run_terminations.iter().map(move |t| (t.run_id, (e.round, t))))
        .collect();
    let merges_at = |round: u64| events.iter().find(|e| e.round == round).map(|e| e.merges.as_slice()).unwrap_or_default();

    let mut taken: HashSet<(u64, usize)> = HashSet::new();
    for p in pending {
        let start = p.pair.started_round;
        let horizon = start + p.chain_len as u64;
        let mut linked: Vec<Credit> = Vec::new();
        for run in [p.pair.forward_run, p.pair.backward_run] {
            let Some(&(round, t)) = ends.get(&run) else { continue };
            match t.cause {
                TerminationCause::Merged => {
                    linked.extend(merges_at(round).iter().enumerate().filter_map(|(k, m)| {
                        (m.blacks.contains(&t.robot) || m.whites.contains(&t.robot)).then_some(Credit { round, merge: k })
                    }));
                }
                TerminationCause::PassingTargetRemoved | TerminationCause::LongOpTargetRemoved => {
                    // The target fell to a merge applied in the round before.
                    let Some(target) = t.target else { continue };
                    for r in [round.saturating_sub(1), round] {
                        linked.extend(merges_at(r).iter().enumerate().filter_map(|(k, m)| {
                            m.blacks.contains(&target).then_some(Credit { round: r, merge: k })
                        }));
                    }
                }
                TerminationCause::SequentRunAhead | TerminationCause::EndpointAhead => {}
            }
        }
        linked.sort_by_key(|c| (c.round, c.merge));
        linked.dedup();
        let free = |c: &&Credit| !taken.contains(&(c.round, c.merge));
        let (credit, ambiguous) = match linked.iter().find(free) {
            Some(&c) => (Some(c), linked.first() != Some(&c)),
            None => {
                // No merge ends a run of this pair: fall back to the first
                // free merge on its line and log the credit as ambiguous.
                let fallback = events
                    .iter()
                    .filter(|e| e.round > start && e.round <= horizon)
                    .flat_map(|e| {
                        e.merges.iter().enumerate().filter_map(|(k, m)| {
                            m.blacks.iter().any(|b| p.ids.contains(b)).then_some(Credit { round: e.round, merge: k })
                        })
                    })
                    .find(|c| !taken.contains(&(c.round, c.merge)));
                (fallback, fallback.is_some())
            }
        };
        if let Some(c) = credit {
            taken.insert((c.round, c.merge));
        }
        ledger.progress.push(ProgressPair {
            pair: p.pair,
            span: p.ids.len(),
            chain_len: p.chain_len,
            credit,
            ambiguous,
        });
    }
    ledger
}
