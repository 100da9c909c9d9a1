//! Per-round checks of the run invariants, chain validity and length.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::chain::{local_view, validate_chain, ClosedChain, RobotId};
use crate::geom::{Axis, GridPoint};
use crate::pattern::match_merge;
use crate::run::{sequent_run_ahead, ChainDir, Phase, RunOp};
use crate::scheduler::{RoundEvents, RoundPlan, RunPlan};
use crate::sim::RoundObserver;

pub const RUN_ADVANCEMENT: &str = "run_advancement";
pub const QUASI_LINE_WINDOW: &str = "quasi_line_window";
pub const NO_SEQUENT_RUN_AHEAD: &str = "no_sequent_run_ahead";
pub const RUN_OPERATION: &str = "run_operation";
pub const GOOD_PAIR_SIDE: &str = "good_pair_side";
pub const CHAIN_VALID: &str = "chain_valid";
pub const LENGTH_MONOTONE: &str = "length_monotone";

pub const CHECK_NAMES: [&str; 7] = [
    RUN_ADVANCEMENT,
    QUASI_LINE_WINDOW,
    NO_SEQUENT_RUN_AHEAD,
    RUN_OPERATION,
    GOOD_PAIR_SIDE,
    CHAIN_VALID,
    LENGTH_MONOTONE,
];

/// Runs younger than this may still be reshaping their start corner.
pub const WINDOW_MIN_AGE: u32 = 3;

/// Robots in front of a runner inspected by the quasi-line check, on top of
/// the runner and its outer neighbour. The chain behind is the runner's trail
/// and, on chains that still merge, need not belong to any quasi line.
pub const WINDOW_AHEAD: usize = 3;

/// Which checks run; all on by default.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckSet {
    pub run_advancement: bool,
    pub quasi_line_window: bool,
    pub no_sequent_run_ahead: bool,
    pub run_operation: bool,
    pub good_pair_side: bool,
    pub chain_valid: bool,
    pub length_monotone: bool,
}

impl CheckSet {
    pub fn all() -> Self {
        CheckSet {
            run_advancement: true,
            quasi_line_window: true,
            no_sequent_run_ahead: true,
            run_operation: true,
            good_pair_side: true,
            chain_valid: true,
            length_monotone: true,
        }
    }

    pub fn none() -> Self {
        CheckSet {
            run_advancement: false,
            quasi_line_window: false,
            no_sequent_run_ahead: false,
            run_operation: false,
            good_pair_side: false,
            chain_valid: false,
            length_monotone: false,
        }
    }

    pub fn enabled(&self, name: &str) -> bool {
        match name {
            RUN_ADVANCEMENT => self.run_advancement,
            QUASI_LINE_WINDOW => self.quasi_line_window,
            NO_SEQUENT_RUN_AHEAD => self.no_sequent_run_ahead,
            RUN_OPERATION => self.run_operation,
            GOOD_PAIR_SIDE => self.good_pair_side,
            CHAIN_VALID => self.chain_valid,
            LENGTH_MONOTONE => self.length_monotone,
            _ => false,
        }
    }

    /// Turn one check on or off by name; `false` if the name is unknown.
    pub fn set(&mut self, name: &str, on: bool) -> bool {
        let slot = match name {
            RUN_ADVANCEMENT => &mut self.run_advancement,
            QUASI_LINE_WINDOW => &mut self.quasi_line_window,
            NO_SEQUENT_RUN_AHEAD => &mut self.no_sequent_run_ahead,
            RUN_OPERATION => &mut self.run_operation,
            GOOD_PAIR_SIDE => &mut self.good_pair_side,
            CHAIN_VALID => &mut self.chain_valid,
            LENGTH_MONOTONE => &mut self.length_monotone,
            _ => return false,
        };
        *slot = on;
        true
    }
}

impl Default for CheckSet {
    fn default() -> Self {
        CheckSet::all()
    }
}

/// Result of one named check in one round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
    /// Offending chain indices (after the round, unless the detail says otherwise).
    pub indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub round: u64,
    pub checks: Vec<CheckResult>,
}

impl InvariantReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn failed(&self, name: &str) -> bool {
        self.failures().any(|c| c.name == name)
    }
}

/// A pair of runs started toward each other on the same quasi line with
/// their outer neighbours on one side of it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoodPair {
    /// Run moving forward from the lower end.
    pub forward_run: u64,
    pub backward_run: u64,
    pub started_round: u64,
    /// Step along the line from the forward run's start.
    pub line_step: GridPoint,
    /// Offset of both outer neighbours from their endpoints.
    pub outer: GridPoint,
}

struct Collector {
    checks: Vec<CheckResult>,
}

impl Collector {
    fn push(&mut self, name: &str, bad: Vec<(usize, String)>) {
        let pass = bad.is_empty();
        let detail = bad.iter().take(4).map(|(_, d)| d.as_str()).collect::<Vec<_>>().join("; ");
        let detail = if bad.len() > 4 {
            format!("{detail}; and {} more", bad.len() - 4)
        } else {
            detail
        };
        let mut indices: Vec<usize> = bad.into_iter().map(|(i, _)| i).collect();
        indices.sort_unstable();
        indices.dedup();
        self.checks.push(CheckResult {
            name: name.to_string(),
            pass,
            detail,
            indices,
        });
    }
}

/// Where each run sits: run id to `(chain index, dir)`.
fn run_positions(chain: &ClosedChain) -> HashMap<u64, (usize, ChainDir)> {
    chain
        .robots
        .iter()
        .enumerate()
        .flat_map(|(i, r)| r.runs.iter().map(move |run| (run.id, (i, run.dir))))
        .collect()
}

/// Evaluate the enabled checks on one completed round.
pub fn check_invariants(
    before: &ClosedChain,
    plan: &RoundPlan,
    after: &ClosedChain,
    events: &RoundEvents,
    pairs: &[GoodPair],
    enabled: &CheckSet,
) -> InvariantReport {
    let mut out = Collector { checks: Vec::new() };
    let after_runs = run_positions(after);
    if enabled.run_advancement {
        out.push(RUN_ADVANCEMENT, run_advancement(before, plan, after, events, &after_runs));
    }
    if enabled.quasi_line_window {
        out.push(QUASI_LINE_WINDOW, quasi_line_windows(before, plan));
    }
    if enabled.no_sequent_run_ahead {
        out.push(NO_SEQUENT_RUN_AHEAD, no_sequent_run_ahead(before, plan));
    }
    if enabled.run_operation {
        out.push(RUN_OPERATION, run_operations(before, plan));
    }
    if enabled.good_pair_side {
        out.push(GOOD_PAIR_SIDE, good_pair_sides(after, pairs, &after_runs));
    }
    if enabled.chain_valid {
        let bad = validate_chain(after)
            .into_iter()
            .map(|v| (v.index, v.to_string()))
            .collect();
        out.push(CHAIN_VALID, bad);
    }
    if enabled.length_monotone {
        let expected = before.len().checked_sub(events.removed.len());
        let bad = if expected != Some(after.len()) {
            vec![(0, format!("length {} -> {}, {} removed", before.len(), after.len(), events.removed.len()))]
        } else {
            Vec::new()
        };
        out.push(LENGTH_MONOTONE, bad);
    }
    InvariantReport {
        round: events.round,
        checks: out.checks,
    }
}

/// Every surviving run sits exactly one robot further in its direction; no
/// run appears from nowhere.
fn run_advancement(
    before: &ClosedChain,
    plan: &RoundPlan,
    after: &ClosedChain,
    events: &RoundEvents,
    after_runs: &HashMap<u64, (usize, ChainDir)>,
) -> Vec<(usize, String)> {
    let mut bad = Vec::new();
    let ended: HashMap<u64, _> = events.run_terminations.iter().map(|t| (t.run_id, t.cause)).collect();
    let mut seen = std::collections::HashSet::new();
    for (i, (robot, rp)) in before.robots.iter().zip(&plan.robots).enumerate() {
        for (run, pr) in robot.runs.iter().zip(&rp.runs) {
            seen.insert(run.id);
            let now = after_runs.get(&run.id);
            match (&pr.plan, now) {
                (RunPlan::Terminate(_), Some(&(j, _))) => {
                    bad.push((j, format!("run {} planned to stop at {i} but lives at {j}", run.id)));
                }
                (RunPlan::Terminate(_), None) => {}
                (RunPlan::Act(_), None) => {
                    if !ended.contains_key(&run.id) {
                        bad.push((i, format!("run {} vanished from {i} without a termination", run.id)));
                    }
                }
                (RunPlan::Act(_), Some(&(j, dir))) => {
                    let expected: RobotId = before.robots[before.step_index(i, run.dir, 1)].id;
                    if after.robots[j].id != expected || dir != run.dir {
                        bad.push((j, format!("run {} moved from {i} to robot {} (index {j}), expected robot {expected}", run.id, after.robots[j].id)));
                    }
                }
            }
        }
    }
    let started: std::collections::HashSet<u64> = events.run_starts.iter().map(|s| s.run_id).collect();
    for (&id, &(j, _)) in after_runs {
        if !seen.contains(&id) && !started.contains(&id) {
            bad.push((j, format!("run {id} at {j} was never started")));
        }
    }
    bad
}

/// Maximal straight pieces of a path: `(axis, edges, first index)`.
fn segments(points: &[GridPoint]) -> Vec<(Option<Axis>, usize, usize)> {
    let mut segs: Vec<(Option<Axis>, usize, usize)> = Vec::new();
    let mut last_step: Option<GridPoint> = None;
    for (k, w) in points.windows(2).enumerate() {
        let step = w[1] - w[0];
        match segs.last_mut() {
            Some(seg) if last_step == Some(step) => seg.1 += 1,
            _ => segs.push((step.axis(), 1, k)),
        }
        last_step = Some(step);
    }
    segs
}

/// Whether the robots from `behind` steps against `dir` to `ahead` steps
/// along `dir` around `center` form a piece of a quasi line on some axis:
/// crossing pieces hold at most two robots, inner pieces along the axis at
/// least three. Returns the offending chain indices otherwise.
pub fn window_is_quasi_line(
    chain: &ClosedChain,
    center: usize,
    dir: ChainDir,
    behind: usize,
    ahead: usize,
) -> Result<(), Vec<usize>> {
    let n = chain.len();
    let behind = behind.min(n.saturating_sub(1));
    let ahead = ahead.min(n.saturating_sub(1) - behind);
    if behind + ahead < 2 {
        return Ok(());
    }
    let first = chain.step_index(center, dir.opposite(), behind);
    let idx: Vec<usize> = (0..=behind + ahead).map(|k| chain.step_index(first, dir, k)).collect();
    let points: Vec<GridPoint> = idx.iter().map(|&k| chain.robots[k].pos).collect();
    let segs = segments(&points);
    let last = segs.len() - 1;
    let mut worst: Option<Vec<usize>> = None;
    for axis in [Axis::X, Axis::Y] {
        let offending: Vec<usize> = segs
            .iter()
            .enumerate()
            .filter(|&(s, &(a, len, _))| match a {
                Some(a) if a == axis => len < 2 && s != 0 && s != last,
                Some(_) => len > 1,
                None => true,
            })
            .flat_map(|(_, &(_, len, first))| first..=first + len)
            .map(|k| idx[k])
            .collect();
        if offending.is_empty() {
            return Ok(());
        }
        if worst.as_ref().is_none_or(|w| offending.len() < w.len()) {
            worst = Some(offending);
        }
    }
    Err(worst.unwrap_or_default())
}

/// Chain steps from index `from` to index `to` walking in `dir`.
fn steps_between(n: usize, from: usize, to: usize, dir: ChainDir) -> usize {
    match dir {
        ChainDir::Forward => (to + n - from) % n,
        ChainDir::Backward => (from + n - to) % n,
    }
}

/// Windows of the runs that keep acting this round, on the round-start
/// snapshot. A run that reached the end of its line stops instead.
fn quasi_line_windows(chain: &ClosedChain, plan: &RoundPlan) -> Vec<(usize, String)> {
    let mut bad = Vec::new();
    for (i, (robot, rp)) in chain.robots.iter().zip(&plan.robots).enumerate() {
        let acting = robot
            .runs
            .iter()
            .zip(&rp.runs)
            .filter(|(_, pr)| matches!(pr.plan, RunPlan::Act(_)))
            .map(|(r, _)| r);
        for run in acting.filter(|r| r.age >= WINDOW_MIN_AGE) {
            // A quasi line ends where a merge pattern begins, and for a run in
            // a multi-round operation at the corner it is heading for.
            let to_target = run
                .target
                .and_then(|t| chain.index_of(t))
                .map(|j| steps_between(chain.len(), i, j, run.dir))
                .unwrap_or(WINDOW_AHEAD);
            let ahead = (0..=WINDOW_AHEAD)
                .find(|&k| match_merge(&local_view(chain, chain.step_index(i, run.dir, k))).is_some())
                .unwrap_or(WINDOW_AHEAD)
                .min(to_target);
            if let Err(idx) = window_is_quasi_line(chain, i, run.dir, 1, ahead) {
                bad.push((i, format!("run {} at {i} (age {}): no quasi line through {idx:?}", run.id, run.age)));
            }
        }
    }
    bad
}

/// Runs that keep going this round see no sequent run in front of them.
fn no_sequent_run_ahead(before: &ClosedChain, plan: &RoundPlan) -> Vec<(usize, String)> {
    let mut bad = Vec::new();
    for (i, (robot, rp)) in before.robots.iter().zip(&plan.robots).enumerate() {
        if robot.runs.is_empty() {
            continue;
        }
        let view = local_view(before, i);
        for (run, pr) in robot.runs.iter().zip(&rp.runs) {
            if let (RunPlan::Act(_), Some(d)) = (&pr.plan, sequent_run_ahead(&view, run.dir)) {
                bad.push((i, format!("run {} at {i} sees a sequent run {d} ahead", run.id)));
            }
        }
    }
    bad
}

/// Every acting run passes or performs a corner operation.
fn run_operations(before: &ClosedChain, plan: &RoundPlan) -> Vec<(usize, String)> {
    let mut bad = Vec::new();
    for (i, (robot, rp)) in before.robots.iter().zip(&plan.robots).enumerate() {
        for (run, pr) in robot.runs.iter().zip(&rp.runs) {
            if let RunPlan::Act(a) = &pr.plan {
                if a.op == RunOp::Stuck {
                    bad.push((i, format!("run {} at {i} has no applicable operation", run.id)));
                }
            }
        }
    }
    bad
}

/// Offset of the robot behind the runner, if the runner sits on a corner of
/// its line: the step ahead runs along the line, the step behind crosses it.
fn corner_outer(chain: &ClosedChain, i: usize, dir: ChainDir, line_step: GridPoint) -> Option<GridPoint> {
    let here = chain.robots[i].pos;
    let fwd = chain.robots[chain.step_index(i, dir, 1)].pos - here;
    let back = chain.robots[chain.step_index(i, dir.opposite(), 1)].pos - here;
    (fwd == line_step && back.orthogonal_to(line_step)).then_some(back)
}

/// Free runners of a good pair sitting on a corner keep the corner shape the
/// pair started with: their outer neighbour stays on the pair's side.
fn good_pair_sides(
    after: &ClosedChain,
    pairs: &[GoodPair],
    after_runs: &HashMap<u64, (usize, ChainDir)>,
) -> Vec<(usize, String)> {
    let mut bad = Vec::new();
    for p in pairs {
        let (Some(&(i, fdir)), Some(&(j, bdir))) = (after_runs.get(&p.forward_run), after_runs.get(&p.backward_run)) else {
            continue;
        };
        for (k, dir, run_id, step) in [(i, fdir, p.forward_run, p.line_step), (j, bdir, p.backward_run, -p.line_step)] {
            let free = after.robots[k]
                .run_in(dir)
                .is_some_and(|r| r.id == run_id && r.phase == Phase::Normal);
            if !free {
                continue;
            }
            if let Some(outer) = corner_outer(after, k, dir, step) {
                if outer != p.outer {
                    bad.push((k, format!("run {run_id} of pair ({}, {}) turned its outer neighbour from {} to {outer}", p.forward_run, p.backward_run, p.outer)));
                }
            }
        }
    }
    bad
}

/// Good pairs among the runs started this round, read off the start events.
pub fn good_pairs_started(events: &RoundEvents, n: usize) -> Vec<GoodPair> {
    facing_pairs(events, n)
        .into_iter()
        .filter_map(|(f, b)| {
            let (fs, bs) = (&events.run_starts[f], &events.run_starts[b]);
            let good = bs.line_step == -fs.line_step && fs.outer == bs.outer && fs.outer.orthogonal_to(fs.line_step);
            good.then_some(GoodPair {
                forward_run: fs.run_id,
                backward_run: bs.run_id,
                started_round: events.round,
                line_step: fs.line_step,
                outer: fs.outer,
            })
        })
        .collect()
}

/// Pairs `(forward, backward)` of start-event positions such that the
/// backward run is the next start in front of the forward run.
pub fn facing_pairs(events: &RoundEvents, n: usize) -> Vec<(usize, usize)> {
    let starts = &events.run_starts;
    let mut out = Vec::new();
    for (f, fs) in starts.iter().enumerate().filter(|(_, s)| s.dir == ChainDir::Forward) {
        // Distance in front; a start on the same robot is a full loop away.
        let dist = |s: &crate::scheduler::RunStartEvent| match (s.index + n - fs.index) % n {
            0 => n,
            d => d,
        };
        let next = starts
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != f)
            .min_by_key(|(_, s)| (dist(s), s.dir == ChainDir::Forward));
        if let Some((b, bs)) = next {
            if bs.dir == ChainDir::Backward {
                out.push((f, b));
            }
        }
    }
    out
}

/// Observer running [`check_invariants`] every round and tracking good pairs.
#[derive(Debug, Default)]
pub struct InvariantChecker {
    pub enabled: CheckSet,
    pub pairs: Vec<GoodPair>,
    pub rounds_checked: u64,
    /// Reports of rounds with at least one failing check.
    pub failures: Vec<InvariantReport>,
    /// Failing check counts by name.
    pub failure_counts: std::collections::BTreeMap<String, u64>,
}

impl InvariantChecker {
    pub fn new(enabled: CheckSet) -> Self {
        InvariantChecker {
            enabled,
            ..Default::default()
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn first_failure(&self) -> Option<&InvariantReport> {
        self.failures.first()
    }
}

impl RoundObserver for InvariantChecker {
    fn on_round(&mut self, before: &ClosedChain, plan: &RoundPlan, after: &ClosedChain, events: &RoundEvents) {
        let report = check_invariants(before, plan, after, events, &self.pairs, &self.enabled);
        self.rounds_checked += 1;
        // Forget pairs with a finished run, then adopt this round's pairs.
        let live = run_positions(after);
        self.pairs
            .retain(|p| live.contains_key(&p.forward_run) && live.contains_key(&p.backward_run));
        self.pairs.extend(good_pairs_started(events, before.len()));
        if !report.passed() {
            for c in report.failures() {
                *self.failure_counts.entry(c.name.clone()).or_default() += 1;
            }
            self.failures.push(report);
        }
    }
}
