//! Run states: moving tokens that drive the reshapement of the chain.
//!
//! A run moves exactly one robot along the chain per round, in the direction
//! fixed when it started. Its holder (the runner) may hop diagonally to cut
//! the corner it sits on, pause hopping for a few rounds to reach the next
//! corner, or pass an opposing run without hopping.

use serde::{Deserialize, Serialize};

use crate::chain::{LocalView, RobotId, VIEW_PATH_LENGTH};
use crate::geom::GridPoint;
use crate::pattern::{endpoint_at, straight_run_ahead, MergeRole};

/// Opposing runs closer than this (in chain edges) pass each other.
pub const PASSING_DISTANCE: usize = 3;

/// Rounds a corner-to-corner move takes when only two robots follow the runner
/// on its line.
pub const LONG_OP_STEPS: u8 = 3;

/// Direction of travel along the chain, in index space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainDir {
    Forward,
    Backward,
}

impl ChainDir {
    pub const BOTH: [ChainDir; 2] = [ChainDir::Forward, ChainDir::Backward];

    pub fn opposite(self) -> ChainDir {
        match self {
            ChainDir::Forward => ChainDir::Backward,
            ChainDir::Backward => ChainDir::Forward,
        }
    }

    pub fn sign(self) -> i64 {
        match self {
            ChainDir::Forward => 1,
            ChainDir::Backward => -1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LongOpKind {
    /// Only two robots follow on the line: walk three robots to the next corner.
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "phase", rename_all = "snake_case")]
pub enum Phase {
    Normal,
    LongOp { kind: LongOpKind, steps_left: u8 },
    /// `steps_left == 0`: passed, walking on without hops to the next corner.
    Passing { steps_left: u32 },
}

impl Phase {
    /// Done passing but not yet at a corner.
    pub const SETTLING: Phase = Phase::Passing { steps_left: 0 };

    /// Free to pick a fresh operation this round.
    pub fn is_free(self) -> bool {
        matches!(self, Phase::Normal | Phase::SETTLING)
    }
}

/// A live run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunState {
    /// Simulator bookkeeping; never consulted by the rules.
    pub id: u64,
    pub dir: ChainDir,
    pub phase: Phase,
    /// Rounds since the run was installed.
    pub age: u32,
    pub started_round: u64,
    /// Started as one of two runs at a double endpoint.
    pub long_op_c: bool,
    /// Corner this run is heading for while in a multi-round operation.
    pub target: Option<RobotId>,
    /// The target corner was removed by a merge since the operation began.
    pub target_lost: bool,
}

impl RunState {
    pub fn new(id: u64, dir: ChainDir, started_round: u64, long_op_c: bool) -> Self {
        RunState {
            id,
            dir,
            phase: Phase::Normal,
            age: 0,
            started_round,
            long_op_c,
            target: None,
            target_lost: false,
        }
    }
}

/// The part of a run that other robots can observe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunFlag {
    pub dir: ChainDir,
    pub phase: Phase,
    pub age: u32,
    pub long_op_c: bool,
    pub target_lost: bool,
}

impl From<&RunState> for RunFlag {
    fn from(r: &RunState) -> Self {
        RunFlag {
            dir: r.dir,
            phase: r.phase,
            age: r.age,
            long_op_c: r.long_op_c,
            target_lost: r.target_lost,
        }
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationCause {
    /// A sequent run is visible in front.
    SequentRunAhead = 1,
    /// The far endpoint of the quasi line is visible in front.
    EndpointAhead = 2,
    /// The runner took part in a merge.
    Merged = 3,
    /// The passing target corner was removed.
    PassingTargetRemoved = 4,
    /// The long-operation target corner was removed.
    LongOpTargetRemoved = 5,
}

impl TerminationCause {
    pub fn code(self) -> u8 {
        self as u8
    }
}

/// What the runner does with its run this round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum RunOp {
    /// Corner cut (one-round operation, also the first hop at a double endpoint).
    Reshape,
    /// Start of the three-round corner walk.
    BeginLongOp,
    ContinueLongOp,
    BeginPassing,
    ContinuePassing,
    /// No operation applies: the runner is not on a quasi line.
    Stuck,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunAction {
    pub op: RunOp,
    /// Diagonal displacement of the runner, if it hops.
    pub hop: Option<GridPoint>,
    /// Phase after this round's token move.
    pub next_phase: Phase,
    /// Signed steps to the corner the run is heading for, for multi-round ops.
    pub target_steps: Option<u32>,
}

/// First matching stop condition for `run`, held by the robot owning `view`.
pub fn termination_check(view: &LocalView, run: &RunFlag, merge: Option<&MergeRole>) -> Option<TerminationCause> {
    if merge.is_some() {
        return Some(TerminationCause::Merged);
    }
    if run.target_lost {
        match run.phase {
            Phase::Passing { .. } => return Some(TerminationCause::PassingTargetRemoved),
            Phase::LongOp { .. } => return Some(TerminationCause::LongOpTargetRemoved),
            Phase::Normal => {}
        }
    }
    // A neighbouring merge in the start round can dissolve the endpoint
    // before the run's first move.
    if run.age == 0 && !endpoint_at(view, 0, run.dir) {
        return Some(TerminationCause::EndpointAhead);
    }
    if sequent_run_ahead(view, run.dir).is_some() {
        return Some(TerminationCause::SequentRunAhead);
    }
    let ahead = view.side(run.dir);
    let horizon = horizon(view, run.dir);
    // The whole endpoint template must fit in view: three robots beyond it.
    let sign = run.dir.sign();
    let max_t = ahead.len().saturating_sub(3).min(VIEW_PATH_LENGTH - 3).min(horizon);
    if (1..=max_t as i64).any(|t| endpoint_at(view, sign * t, run.dir.opposite())) {
        return Some(TerminationCause::EndpointAhead);
    }
    // Aligned stretches of a quasi line hold at least three robots, so a
    // free runner with fewer than two aligned robots ahead is at its end.
    if run.phase.is_free() && horizon >= PASSING_DISTANCE && straight_run_ahead(view, run.dir) < 2 {
        return Some(TerminationCause::EndpointAhead);
    }
    None
}

/// Number of robots in front of the viewer, in `dir`, before the first one
/// holding an oncoming run. An oncoming run hides everything behind it: that
/// part of the line belongs to its own partner.
pub fn horizon(view: &LocalView, dir: ChainDir) -> usize {
    let ahead = view.side(dir);
    ahead
        .iter()
        .position(|e| e.runs.iter().any(|r| r.dir == dir.opposite()))
        .unwrap_or(ahead.len())
}

/// Distance to the nearest visible run moving in `dir` in front of the viewer.
pub fn sequent_run_ahead(view: &LocalView, dir: ChainDir) -> Option<usize> {
    view.side(dir)[..horizon(view, dir)]
        .iter()
        .position(|e| e.runs.iter().any(|r| r.dir == dir))
        .map(|i| i + 1)
}

/// Nearest opposing run in front within passing distance: `(distance, flag)`.
fn opposing_run(view: &LocalView, run: &RunFlag) -> Option<(usize, RunFlag)> {
    view.side(run.dir)
        .iter()
        .take(PASSING_DISTANCE)
        .enumerate()
        .find_map(|(i, e)| {
            e.runs
                .iter()
                .find(|r| r.dir == run.dir.opposite())
                .map(|r| (i + 1, *r))
        })
}

/// Robots an opposing run has already walked since its current operation began.
fn walked_in_op(flag: &RunFlag) -> u32 {
    match flag.phase {
        Phase::LongOp { steps_left, .. } => u32::from(LONG_OP_STEPS.saturating_sub(steps_left)),
        _ => 0,
    }
}

/// Plan this round's operation for a run that did not terminate.
pub fn plan_run_action(view: &LocalView, run: &RunFlag) -> RunAction {
    if let Phase::Passing { steps_left } = run.phase {
        if steps_left > 0 {
            return passing(steps_left - 1);
        }
    }
    if let Some((dist, other)) = opposing_run(view, run) {
        // Target: one robot past the corner where the opposing run's current
        // operation began; never short of our own long-op corner.
        let own = match run.phase {
            Phase::LongOp { steps_left, .. } => u32::from(steps_left),
            _ => 0,
        };
        let steps = (dist as u32 + walked_in_op(&other) + 1).max(own);
        return RunAction {
            op: RunOp::BeginPassing,
            hop: None,
            next_phase: Phase::Passing { steps_left: steps - 1 },
            target_steps: Some(steps),
        };
    }
    if let Phase::LongOp { kind, steps_left } = run.phase {
        let left = steps_left.saturating_sub(1);
        return RunAction {
            op: RunOp::ContinueLongOp,
            hop: None,
            next_phase: if left == 0 { Phase::Normal } else { Phase::LongOp { kind, steps_left: left } },
            target_steps: None,
        };
    }
    let straight = straight_run_ahead(view, run.dir);
    let corner_hop = corner_cut(view, run.dir);
    if run.age == 0 && run.long_op_c && straight >= 2 {
        if let Some(h) = corner_hop {
            return reshape(h);
        }
    }
    match straight {
        s if s >= 3 => match corner_hop {
            Some(h) => reshape(h),
            None if run.phase == Phase::SETTLING => passing(0),
            None => stuck(),
        },
        2 => RunAction {
            op: RunOp::BeginLongOp,
            hop: None,
            next_phase: Phase::LongOp {
                kind: LongOpKind::B,
                steps_left: LONG_OP_STEPS - 1,
            },
            target_steps: Some(u32::from(LONG_OP_STEPS)),
        },
        _ => stuck(),
    }
}

fn reshape(h: GridPoint) -> RunAction {
    RunAction {
        op: RunOp::Reshape,
        hop: Some(h),
        next_phase: Phase::Normal,
        target_steps: None,
    }
}

fn passing(left: u32) -> RunAction {
    RunAction {
        op: RunOp::ContinuePassing,
        hop: None,
        next_phase: Phase::Passing { steps_left: left },
        target_steps: None,
    }
}

fn stuck() -> RunAction {
    RunAction {
        op: RunOp::Stuck,
        hop: None,
        next_phase: Phase::Normal,
        target_steps: None,
    }
}

/// Diagonal hop cutting the corner at the viewer: one step along the line in
/// `dir` plus one step toward the neighbour behind. `None` unless the two
/// chain edges at the viewer are orthogonal.
pub fn corner_cut(view: &LocalView, dir: ChainDir) -> Option<GridPoint> {
    let fwd = view.offset(dir, 1)?;
    let back = view.offset(dir.opposite(), 1)?;
    fwd.orthogonal_to(back).then(|| fwd + back)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::ViewEntry;

    fn flag(dir: ChainDir) -> RunFlag {
        let mut f = RunFlag::from(&RunState::new(0, dir, 0, false));
        f.age = 1;
        f
    }

    fn straight_view() -> LocalView {
        // Column below the viewer, long line ahead.
        let ahead: Vec<_> = (1..=11).map(|x| (x, 0)).collect();
        let behind: Vec<_> = (1..=11).map(|y| (0, -y)).collect();
        LocalView::from_offsets(&ahead, &behind)
    }

    #[test]
    fn fresh_run_without_endpoint_is_withdrawn() {
        let mut f = flag(ChainDir::Forward);
        f.age = 0;
        // Interior of a straight line: not an endpoint any more.
        let ahead: Vec<_> = (1..=11).map(|x| (x, 0)).collect();
        let behind: Vec<_> = (1..=11).map(|x| (-x, 0)).collect();
        let v = LocalView::from_offsets(&ahead, &behind);
        assert_eq!(termination_check(&v, &f, None), Some(TerminationCause::EndpointAhead));
        assert_eq!(termination_check(&straight_view(), &f, None), None);
    }

    #[test]
    fn end_of_aligned_stretch_terminates() {
        let v = LocalView::from_offsets(&[(1, 0), (1, 1), (2, 1), (3, 1)], &[(0, -1), (0, -2), (0, -3)]);
        assert_eq!(
            termination_check(&v, &flag(ChainDir::Forward), None),
            Some(TerminationCause::EndpointAhead)
        );
    }

    #[test]
    fn oncoming_run_hides_the_line_behind_it() {
        let mut v = straight_view();
        v.ahead[5].runs.push(flag(ChainDir::Backward));
        v.ahead[7].runs.push(flag(ChainDir::Forward));
        assert_eq!(termination_check(&v, &flag(ChainDir::Forward), None), None);
    }

    #[test]
    fn corner_cut_on_long_line() {
        let a = plan_run_action(&straight_view(), &flag(ChainDir::Forward));
        assert_eq!(a.op, RunOp::Reshape);
        assert_eq!(a.hop, Some(GridPoint::new(1, -1)));
    }

    #[test]
    fn two_ahead_begins_long_op() {
        let v = LocalView::from_offsets(&[(1, 0), (2, 0), (2, 1), (3, 1)], &[(0, -1), (-1, -1)]);
        let a = plan_run_action(&v, &flag(ChainDir::Forward));
        assert_eq!(a.op, RunOp::BeginLongOp);
        assert_eq!(a.hop, None);
        assert_eq!(
            a.next_phase,
            Phase::LongOp {
                kind: LongOpKind::B,
                steps_left: 2
            }
        );
    }

    #[test]
    fn opposing_run_at_three_begins_passing() {
        let mut v = straight_view();
        v.ahead[2].runs.push(flag(ChainDir::Backward));
        let a = plan_run_action(&v, &flag(ChainDir::Forward));
        assert_eq!(a.op, RunOp::BeginPassing);
        assert_eq!(a.target_steps, Some(4));
        assert_eq!(a.next_phase, Phase::Passing { steps_left: 3 });
        // At distance four nothing happens yet.
        let mut v = straight_view();
        v.ahead[3].runs.push(flag(ChainDir::Backward));
        assert_eq!(plan_run_action(&v, &flag(ChainDir::Forward)).op, RunOp::Reshape);
    }

    #[test]
    fn sequent_run_terminates() {
        let mut v = straight_view();
        v.ahead[4] = ViewEntry {
            offset: v.ahead[4].offset,
            runs: vec![flag(ChainDir::Forward)],
        };
        assert_eq!(
            termination_check(&v, &flag(ChainDir::Forward), None),
            Some(TerminationCause::SequentRunAhead)
        );
    }

    #[test]
    fn endpoint_ahead_terminates() {
        // Line of 8 robots ahead, then a vertical column of three.
        let ahead: Vec<(i64, i64)> = (1..=8).map(|x| (x, 0)).chain([(8, -1), (8, -2), (8, -3)]).collect();
        let behind: Vec<_> = (1..=11).map(|y| (0, -y)).collect();
        let v = LocalView::from_offsets(&ahead, &behind);
        assert_eq!(
            termination_check(&v, &flag(ChainDir::Forward), None),
            Some(TerminationCause::EndpointAhead)
        );
    }

    #[test]
    fn stuck_when_no_operation_fits() {
        let v = LocalView::from_offsets(&[(1, 0), (1, 1)], &[(0, -1)]);
        assert_eq!(plan_run_action(&v, &flag(ChainDir::Forward)).op, RunOp::Stuck);
    }
}
