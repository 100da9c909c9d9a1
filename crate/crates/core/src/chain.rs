//! The closed chain: robots, validity rules, local views and contraction.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geom::GridPoint;
use crate::run::{ChainDir, RunFlag, RunState};

/// Number of chain neighbours a robot sees in each direction.
pub const VIEW_PATH_LENGTH: usize = 11;

/// Simulator bookkeeping id. Rules never read it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RobotId(pub u64);

impl fmt::Display for RobotId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Robot {
    pub id: RobotId,
    pub pos: GridPoint,
    /// At most two runs, with different directions.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub runs: Vec<RunState>,
}

impl Robot {
    pub fn new(id: u64, pos: GridPoint) -> Self {
        Robot {
            id: RobotId(id),
            pos,
            runs: Vec::new(),
        }
    }

    pub fn run_in(&self, dir: ChainDir) -> Option<&RunState> {
        self.runs.iter().find(|r| r.dir == dir)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosedChain {
    pub robots: Vec<Robot>,
    pub round: u64,
    /// Next id handed to a freshly started run.
    pub next_run_id: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ViolationKind {
    EmptyChain,
    /// Consecutive robots further apart than one lattice step.
    Gap { distance: i64 },
    /// Consecutive robots on diagonal neighbours.
    Diagonal,
    /// Consecutive robots on the same point between rounds.
    Coincident,
    TooManyRuns { count: usize },
    DuplicateRunDirection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// Chain index of the first robot of the offending pair (or the robot itself).
    pub index: usize,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "index {}: {:?}", self.index, self.kind)
    }
}

/// One visible neighbour: its offset from the viewer and the runs it holds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViewEntry {
    pub offset: GridPoint,
    pub runs: Vec<RunFlag>,
}

/// What a robot sees: up to eleven neighbours along the chain in each direction.
///
/// `ahead[k]` is the robot `k + 1` steps in [`ChainDir::Forward`], `behind[k]`
/// the robot `k + 1` steps in [`ChainDir::Backward`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalView {
    pub ahead: Vec<ViewEntry>,
    pub behind: Vec<ViewEntry>,
    pub own_runs: Vec<RunFlag>,
}

impl LocalView {
    /// Build a view from explicit offsets, without runs. Mostly for tests.
    pub fn from_offsets(ahead: &[(i64, i64)], behind: &[(i64, i64)]) -> Self {
        let wrap = |pts: &[(i64, i64)]| {
            pts.iter()
                .map(|&p| ViewEntry {
                    offset: p.into(),
                    runs: Vec::new(),
                })
                .collect()
        };
        LocalView {
            ahead: wrap(ahead),
            behind: wrap(behind),
            own_runs: Vec::new(),
        }
    }

    pub fn side(&self, dir: ChainDir) -> &[ViewEntry] {
        match dir {
            ChainDir::Forward => &self.ahead,
            ChainDir::Backward => &self.behind,
        }
    }

    /// Offset of the robot `steps` along the chain in `dir`; `steps == 0` is self.
    pub fn offset(&self, dir: ChainDir, steps: usize) -> Option<GridPoint> {
        if steps == 0 {
            Some(GridPoint::ORIGIN)
        } else {
            self.side(dir).get(steps - 1).map(|e| e.offset)
        }
    }

    /// Runs held by the robot `steps` along the chain in `dir`.
    pub fn runs_at(&self, dir: ChainDir, steps: usize) -> Option<&[RunFlag]> {
        if steps == 0 {
            Some(&self.own_runs)
        } else {
            self.side(dir).get(steps - 1).map(|e| e.runs.as_slice())
        }
    }

    /// Run flags at signed chain position `rel`.
    pub fn runs_at_rel(&self, rel: i64) -> Option<&[RunFlag]> {
        if rel >= 0 {
            self.runs_at(ChainDir::Forward, rel as usize)
        } else {
            self.runs_at(ChainDir::Backward, rel.unsigned_abs() as usize)
        }
    }

    /// Offset at signed chain position `rel` (negative = behind).
    pub fn at(&self, rel: i64) -> Option<GridPoint> {
        if rel >= 0 {
            self.offset(ChainDir::Forward, rel as usize)
        } else {
            self.offset(ChainDir::Backward, (-rel) as usize)
        }
    }

    /// Signed range of visible chain positions, self included.
    pub fn reach(&self) -> (i64, i64) {
        (-(self.behind.len() as i64), self.ahead.len() as i64)
    }

    /// Apply a lattice symmetry to every offset.
    pub fn transformed(&self, s: crate::geom::Symmetry) -> LocalView {
        let map = |v: &[ViewEntry]| {
            v.iter()
                .map(|e| ViewEntry {
                    offset: s.apply(e.offset),
                    runs: e.runs.clone(),
                })
                .collect()
        };
        LocalView {
            ahead: map(&self.ahead),
            behind: map(&self.behind),
            own_runs: self.own_runs.clone(),
        }
    }
}

impl ClosedChain {
    /// Build a chain from positions; ids are assigned in order.
    pub fn from_positions<I, P>(positions: I) -> Self
    where
        I: IntoIterator<Item = P>,
        P: Into<GridPoint>,
    {
        let robots = positions
            .into_iter()
            .enumerate()
            .map(|(i, p)| Robot::new(i as u64, p.into()))
            .collect();
        ClosedChain {
            robots,
            round: 0,
            next_run_id: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.robots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.robots.is_empty()
    }

    pub fn positions(&self) -> Vec<GridPoint> {
        self.robots.iter().map(|r| r.pos).collect()
    }

    /// Index `steps` robots from `index` in `dir`, modulo the chain length.
    pub fn step_index(&self, index: usize, dir: ChainDir, steps: usize) -> usize {
        let n = self.len();
        let s = steps % n;
        match dir {
            ChainDir::Forward => (index + s) % n,
            ChainDir::Backward => (index + n - s) % n,
        }
    }

    pub fn index_of(&self, id: RobotId) -> Option<usize> {
        self.robots.iter().position(|r| r.id == id)
    }

    pub fn run_count(&self) -> usize {
        self.robots.iter().map(|r| r.runs.len()).sum()
    }

    /// All validity violations; empty iff the chain is well formed.
    pub fn validate(&self) -> Vec<Violation> {
        validate_chain(self)
    }

    pub fn local_view(&self, index: usize) -> LocalView {
        local_view(self, index)
    }

    pub fn bounding_box(&self) -> (i64, i64) {
        bounding_box(self)
    }

    pub fn is_gathered(&self) -> bool {
        is_gathered(self)
    }
}

pub fn validate_chain(chain: &ClosedChain) -> Vec<Violation> {
    let n = chain.len();
    let mut out = Vec::new();
    if n == 0 {
        out.push(Violation {
            index: 0,
            kind: ViolationKind::EmptyChain,
        });
        return out;
    }
    if n > 1 {
        // With two robots both pairs are the same edge.
        let pairs = if n == 2 { 1 } else { n };
        for i in 0..pairs {
            let d = chain.robots[(i + 1) % n].pos - chain.robots[i].pos;
            let kind = if d.is_zero() {
                Some(ViolationKind::Coincident)
            } else if d.is_diagonal() {
                Some(ViolationKind::Diagonal)
            } else if !d.is_unit() {
                Some(ViolationKind::Gap { distance: d.l1() })
            } else {
                None
            };
            if let Some(kind) = kind {
                out.push(Violation { index: i, kind });
            }
        }
    }
    for (i, r) in chain.robots.iter().enumerate() {
        if r.runs.len() > 2 {
            out.push(Violation {
                index: i,
                kind: ViolationKind::TooManyRuns { count: r.runs.len() },
            });
        } else if r.runs.len() == 2 && r.runs[0].dir == r.runs[1].dir {
            out.push(Violation {
                index: i,
                kind: ViolationKind::DuplicateRunDirection,
            });
        }
    }
    out
}

/// Snapshot of the chain as seen from `index`.
///
/// Each side holds `min(11, n - 1)` entries so that self never appears and no
/// robot appears twice within one side.
///
/// # Panics
/// If `index` is out of range.
pub fn local_view(chain: &ClosedChain, index: usize) -> LocalView {
    let n = chain.len();
    assert!(index < n, "robot index {index} out of range for chain of {n}");
    let me = chain.robots[index].pos;
    let depth = VIEW_PATH_LENGTH.min(n - 1);
    let side = |dir: ChainDir| {
        (1..=depth)
            .map(|k| {
                let r = &chain.robots[chain.step_index(index, dir, k)];
                ViewEntry {
                    offset: r.pos - me,
                    runs: r.runs.iter().map(RunFlag::from).collect(),
                }
            })
            .collect()
    };
    LocalView {
        ahead: side(ChainDir::Forward),
        behind: side(ChainDir::Backward),
        own_runs: chain.robots[index].runs.iter().map(RunFlag::from).collect(),
    }
}

/// Width and height of the axis-parallel hull, measured in lattice steps.
pub fn bounding_box(chain: &ClosedChain) -> (i64, i64) {
    let mut it = chain.robots.iter().map(|r| r.pos);
    let Some(first) = it.next() else {
        return (0, 0);
    };
    let (mut lo, mut hi) = (first, first);
    for p in it {
        lo = GridPoint::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = GridPoint::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    (hi.x - lo.x, hi.y - lo.y)
}

/// All robots inside one 2×2 block of grid points.
pub fn is_gathered(chain: &ClosedChain) -> bool {
    let (w, h) = bounding_box(chain);
    w <= 1 && h <= 1
}

/// A consecutive coincidence that no merge accounts for.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("robots {a} and {b} coincide at {pos} outside any merge")]
pub struct UnplannedCoincidence {
    pub a: RobotId,
    pub b: RobotId,
    pub pos: GridPoint,
}

/// Result of contracting coincident chain neighbours.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Contraction {
    /// `(removed, survivor)` pairs.
    pub removed: Vec<(RobotId, RobotId)>,
}

impl Contraction {
    pub fn survivor_of(&self, id: RobotId) -> RobotId {
        self.removed
            .iter()
            .find(|(r, _)| *r == id)
            .map(|&(_, s)| s)
            .unwrap_or(id)
    }
}

/// Fuse every maximal group of consecutive robots sharing one point.
///
/// `weight` scores each merge participant (number of merge patterns in which it
/// hopped as a black robot); robots absent from the map are not part of any
/// merge and must not be involved in a coincidence. In each group the robot
/// with the highest weight survives, ties going to the first robot of the group
/// in chain order. Runs held by removed robots end with them and are returned
/// together with their former holder.
pub fn contract_coincident_neighbors(
    chain: &mut ClosedChain,
    weight: &HashMap<RobotId, u32>,
) -> Result<(Contraction, Vec<(RobotId, RunState)>), UnplannedCoincidence> {
    let n = chain.len();
    let mut out = Contraction::default();
    let mut dropped = Vec::new();
    if n < 2 {
        return Ok((out, dropped));
    }
    let same = |i: usize| chain.robots[i].pos == chain.robots[(i + 1) % n].pos;
    // Anchor the scan at a break between groups, if any.
    let Some(start) = (0..n).find(|&i| !same(i)).map(|i| (i + 1) % n) else {
        // Whole chain on one point.
        check_participants(chain, weight, 0..n)?;
        let keep = best_of(chain, weight, 0..n);
        let survivor = chain.robots[keep].id;
        for i in (0..n).filter(|&i| i != keep) {
            out.removed.push((chain.robots[i].id, survivor));
        }
        finish(chain, &out, &mut dropped);
        return Ok((out, dropped));
    };
    let mut k = 0;
    while k < n {
        let first = (start + k) % n;
        let mut len = 1;
        while len < n && same((start + k + len - 1) % n) {
            len += 1;
        }
        if len > 1 {
            let members: Vec<usize> = (0..len).map(|j| (first + j) % n).collect();
            check_participants(chain, weight, members.iter().copied())?;
            let keep = best_of(chain, weight, members.iter().copied());
            let survivor = chain.robots[keep].id;
            for &i in members.iter().filter(|&&i| i != keep) {
                out.removed.push((chain.robots[i].id, survivor));
            }
        }
        k += len;
    }
    finish(chain, &out, &mut dropped);
    Ok((out, dropped))
}

fn check_participants(
    chain: &ClosedChain,
    weight: &HashMap<RobotId, u32>,
    members: impl Iterator<Item = usize>,
) -> Result<(), UnplannedCoincidence> {
    let members: Vec<usize> = members.collect();
    for w in members.windows(2) {
        let (a, b) = (&chain.robots[w[0]], &chain.robots[w[1]]);
        if !weight.contains_key(&a.id) && !weight.contains_key(&b.id) {
            return Err(UnplannedCoincidence {
                a: a.id,
                b: b.id,
                pos: a.pos,
            });
        }
    }
    Ok(())
}

fn best_of(
    chain: &ClosedChain,
    weight: &HashMap<RobotId, u32>,
    members: impl Iterator<Item = usize>,
) -> usize {
    let mut best: Option<(usize, u32)> = None;
    for i in members {
        let w = weight.get(&chain.robots[i].id).copied().unwrap_or(0);
        if best.map_or(true, |(_, bw)| w > bw) {
            best = Some((i, w));
        }
    }
    best.expect("non-empty group").0
}

fn finish(chain: &mut ClosedChain, c: &Contraction, dropped: &mut Vec<(RobotId, RunState)>) {
    if c.removed.is_empty() {
        return;
    }
    let gone: HashSet<RobotId> = c.removed.iter().map(|&(r, _)| r).collect();
    for r in chain.robots.iter_mut().filter(|r| gone.contains(&r.id)) {
        let id = r.id;
        dropped.extend(r.runs.drain(..).map(|run| (id, run)));
    }
    chain.robots.retain(|r| !gone.contains(&r.id));
}
