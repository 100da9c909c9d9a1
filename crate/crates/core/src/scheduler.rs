//! Fully synchronous rounds: every robot looks at the same snapshot, computes,
//! and all moves are committed at once.

use std::collections::{BTreeMap, HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{
    contract_coincident_neighbors, local_view, validate_chain, ClosedChain, RobotId, UnplannedCoincidence,
    Violation,
};
use crate::geom::GridPoint;
use crate::pattern::{match_merge, match_run_start, MergeRole, Role, RunStartDecision};
use crate::run::{
    plan_run_action, termination_check, ChainDir, Phase, RunAction, RunFlag, RunOp, RunState, TerminationCause,
};

/// Runs may start only on rounds divisible by this.
pub const START_PERIOD: u64 = 13;

/// Empirical round budget factor used by default (`30 · n`).
pub const DEFAULT_ROUND_FACTOR: u64 = 30;

/// Bound on rounds used by the acceptance checks (`2nL + n` with `L = 13`).
pub const ROUND_BOUND_FACTOR: u64 = 2 * START_PERIOD + 1;

/// Outcome planned for one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunPlan {
    Terminate(TerminationCause),
    Act(RunAction),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlannedRun {
    pub run_id: u64,
    pub dir: ChainDir,
    pub plan: RunPlan,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RobotPlan {
    pub merge: Option<MergeRole>,
    pub runs: Vec<PlannedRun>,
    pub start: RunStartDecision,
}

/// Everything decided from one round-start snapshot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundPlan {
    pub round: u64,
    pub robots: Vec<RobotPlan>,
}

impl RoundPlan {
    pub fn has_merge(&self) -> bool {
        self.robots
            .iter()
            .any(|r| matches!(&r.merge, Some(m) if m.role == Role::Black))
    }

    pub fn start_count(&self) -> usize {
        self.robots.iter().map(|r| r.start.starts.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeEvent {
    pub whites: [RobotId; 2],
    pub blacks: Vec<RobotId>,
    pub hop: GridPoint,
    pub removed: Vec<RobotId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunStartEvent {
    pub run_id: u64,
    pub robot: RobotId,
    /// Chain index of the starter in the round-start snapshot.
    pub index: usize,
    pub dir: ChainDir,
    pub long_op_c: bool,
    /// Offset of the starter's neighbour along the new run's line.
    pub line_step: GridPoint,
    /// Offset of the starter's outer neighbour (the one behind the run).
    pub outer: GridPoint,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TerminationEvent {
    pub run_id: u64,
    pub robot: RobotId,
    pub dir: ChainDir,
    pub cause: TerminationCause,
    pub started_round: u64,
    /// Target corner at the time of termination (causes 4 and 5).
    pub target: Option<RobotId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HopEvent {
    pub robot: RobotId,
    pub from: GridPoint,
    pub to: GridPoint,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunOpEvent {
    pub run_id: u64,
    pub robot: RobotId,
    pub op: RunOp,
}

/// Trace of one round.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundEvents {
    pub round: u64,
    pub merges: Vec<MergeEvent>,
    pub run_starts: Vec<RunStartEvent>,
    pub run_terminations: Vec<TerminationEvent>,
    pub run_ops: Vec<RunOpEvent>,
    pub hops: Vec<HopEvent>,
    /// `(removed, survivor)` for every robot fused away this round.
    pub removed: Vec<(RobotId, RobotId)>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ApplyError {
    #[error("round {round}: chain broken after hops at {violations:?}")]
    Broken { round: u64, violations: Vec<Violation> },
    #[error("round {round}: {source}")]
    Coincidence {
        round: u64,
        #[source]
        source: UnplannedCoincidence,
    },
}

/// Plan one round from the current snapshot.
///
/// Per robot: merge detection, then termination and planning for each run it
/// holds, then (every [`START_PERIOD`] rounds) run starts. A merge participant
/// does not start runs.
pub fn compute_round(chain: &ClosedChain, round_index: u64) -> RoundPlan {
    let start_round = round_index % START_PERIOD == 0;
    let robots = (0..chain.len())
        .into_par_iter()
        .map(|i| plan_robot(chain, i, start_round))
        .collect();
    RoundPlan {
        round: round_index,
        robots,
    }
}

fn plan_robot(chain: &ClosedChain, i: usize, start_round: bool) -> RobotPlan {
    let view = local_view(chain, i);
    let merge = match_merge(&view);
    let runs = chain.robots[i]
        .runs
        .iter()
        .map(|run| {
            let flag = RunFlag::from(run);
            let plan = match termination_check(&view, &flag, merge.as_ref()) {
                Some(cause) => RunPlan::Terminate(cause),
                None => RunPlan::Act(plan_run_action(&view, &flag)),
            };
            PlannedRun {
                run_id: run.id,
                dir: run.dir,
                plan,
            }
        })
        .collect();
    let start = if start_round && merge.is_none() {
        match_run_start(&view)
    } else {
        RunStartDecision::default()
    };
    RobotPlan { merge, runs, start }
}

/// Commit a plan: hops, token moves, new runs, contraction of merged robots.
pub fn apply_round(chain: &ClosedChain, plan: &RoundPlan) -> Result<(ClosedChain, RoundEvents), ApplyError> {
    let n = chain.len();
    let round = chain.round;
    let mut ev = RoundEvents {
        round,
        ..Default::default()
    };

    // Hops.
    let mut next = chain.clone();
    for (i, rp) in plan.robots.iter().enumerate() {
        let hop = robot_hop(rp);
        if let Some(h) = hop {
            let r = &mut next.robots[i];
            ev.hops.push(HopEvent {
                robot: r.id,
                from: r.pos,
                to: r.pos + h,
            });
            r.pos = r.pos + h;
        }
    }
    let broken: Vec<Violation> = validate_chain(&next)
        .into_iter()
        .filter(|v| !matches!(v.kind, crate::chain::ViolationKind::Coincident))
        .collect();
    if !broken.is_empty() {
        return Err(ApplyError::Broken {
            round,
            violations: broken,
        });
    }

    // Merge bookkeeping on snapshot indices.
    let mut weight: HashMap<RobotId, u32> = HashMap::new();
    let mut patterns: BTreeMap<(usize, usize), MergeEvent> = BTreeMap::new();
    for (i, rp) in plan.robots.iter().enumerate() {
        let Some(m) = &rp.merge else { continue };
        if m.role != Role::Black {
            weight.entry(chain.robots[i].id).or_insert(0);
            continue;
        }
        *weight.entry(chain.robots[i].id).or_insert(0) += m.black_count();
        for p in &m.patterns {
            let first = offset_index(n, i, p.start);
            let last = offset_index(n, i, p.end());
            weight.entry(chain.robots[first].id).or_insert(0);
            weight.entry(chain.robots[last].id).or_insert(0);
            patterns.entry((first, p.k)).or_insert_with(|| MergeEvent {
                whites: [chain.robots[first].id, chain.robots[last].id],
                blacks: (1..=p.k).map(|j| chain.robots[(first + j) % n].id).collect(),
                hop: p.hop,
                removed: Vec::new(),
            });
        }
    }

    // Token moves, on snapshot indices.
    let mut moved: Vec<Vec<RunState>> = vec![Vec::new(); n];
    for (i, rp) in plan.robots.iter().enumerate() {
        let holder = &chain.robots[i];
        for (run, pr) in holder.runs.iter().zip(&rp.runs) {
            debug_assert_eq!(run.id, pr.run_id);
            match &pr.plan {
                RunPlan::Terminate(cause) => ev.run_terminations.push(TerminationEvent {
                    run_id: run.id,
                    robot: holder.id,
                    dir: run.dir,
                    cause: *cause,
                    started_round: run.started_round,
                    target: run.target,
                }),
                RunPlan::Act(action) => {
                    ev.run_ops.push(RunOpEvent {
                        run_id: run.id,
                        robot: holder.id,
                        op: action.op,
                    });
                    let mut r = run.clone();
                    r.phase = action.next_phase;
                    r.age += 1;
                    if let Some(steps) = action.target_steps {
                        r.target = Some(chain.robots[chain.step_index(i, r.dir, steps as usize)].id);
                        r.target_lost = false;
                    }
                    if r.phase.is_free() {
                        r.target = None;
                    }
                    let to = chain.step_index(i, r.dir, 1);
                    moved[to].push(r);
                }
            }
        }
    }
    for (i, runs) in moved.into_iter().enumerate() {
        let robot = &mut next.robots[i];
        robot.runs.clear();
        for r in runs {
            if robot.run_in(r.dir).is_some() {
                ev.run_terminations.push(TerminationEvent {
                    run_id: r.id,
                    robot: robot.id,
                    dir: r.dir,
                    cause: TerminationCause::SequentRunAhead,
                    started_round: r.started_round,
                    target: r.target,
                });
            } else {
                robot.runs.push(r);
            }
        }
    }

    // New runs.
    for (i, rp) in plan.robots.iter().enumerate() {
        for &dir in &rp.start.starts {
            if next.robots[i].run_in(dir).is_some() {
                continue;
            }
            let id = next.next_run_id;
            next.next_run_id += 1;
            let run = RunState::new(id, dir, round, rp.start.long_op_c);
            ev.run_starts.push(RunStartEvent {
                run_id: id,
                robot: chain.robots[i].id,
                index: i,
                dir,
                long_op_c: rp.start.long_op_c,
                line_step: chain.robots[chain.step_index(i, dir, 1)].pos - chain.robots[i].pos,
                outer: chain.robots[chain.step_index(i, dir.opposite(), 1)].pos - chain.robots[i].pos,
            });
            next.robots[i].runs.push(run);
        }
    }

    // Fuse merged neighbours.
    let (contraction, dropped) =
        contract_coincident_neighbors(&mut next, &weight).map_err(|source| ApplyError::Coincidence { round, source })?;
    for (robot, r) in dropped {
        ev.run_terminations.push(TerminationEvent {
            run_id: r.id,
            robot,
            dir: r.dir,
            cause: TerminationCause::Merged,
            started_round: r.started_round,
            target: r.target,
        });
    }
    // A run handed to a robot that hopped in a merge this round ends with it.
    for robot in &mut next.robots {
        if weight.get(&robot.id).is_some_and(|&w| w > 0) {
            for r in robot.runs.drain(..) {
                ev.run_terminations.push(TerminationEvent {
                    run_id: r.id,
                    robot: robot.id,
                    dir: r.dir,
                    cause: TerminationCause::Merged,
                    started_round: r.started_round,
                    target: r.target,
                });
            }
        }
    }
    let gone: HashSet<RobotId> = contraction.removed.iter().map(|&(r, _)| r).collect();
    for m in patterns.values_mut() {
        m.removed = m
            .whites
            .iter()
            .chain(&m.blacks)
            .copied()
            .filter(|id| gone.contains(id))
            .collect();
    }
    ev.merges = patterns.into_values().collect();
    ev.removed = contraction.removed;

    for robot in &mut next.robots {
        let here = robot.id;
        for r in &mut robot.runs {
            match r.target {
                // A merge hop flattens the target corner just as removal does.
                Some(t) if gone.contains(&t) || weight.get(&t).is_some_and(|&w| w > 0) => r.target_lost = true,
                Some(t) if t == here => {
                    r.phase = match r.phase {
                        Phase::Passing { .. } => Phase::SETTLING,
                        _ => Phase::Normal,
                    };
                    r.target = None;
                }
                _ => {}
            }
        }
    }

    let broken = validate_chain(&next);
    if !broken.is_empty() {
        return Err(ApplyError::Broken {
            round,
            violations: broken,
        });
    }
    next.round = round + 1;
    Ok((next, ev))
}

fn offset_index(n: usize, i: usize, rel: i64) -> usize {
    (i as i64 + rel).rem_euclid(n as i64) as usize
}

/// Displacement of one robot this round: a merge hop wins over reshapement;
/// a merge white never moves; two runs on one robot hop only if they agree.
fn robot_hop(rp: &RobotPlan) -> Option<GridPoint> {
    if let Some(m) = &rp.merge {
        return (m.role == Role::Black && !m.hop.is_zero()).then_some(m.hop);
    }
    let mut hops = rp.runs.iter().filter_map(|r| match &r.plan {
        RunPlan::Act(a) => a.hop,
        RunPlan::Terminate(_) => None,
    });
    let first = hops.next()?;
    hops.all(|h| h == first).then_some(first)
}
