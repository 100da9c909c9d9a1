//! Shape classifiers over a [`LocalView`].
//!
//! Every classifier is written in terms of relative offsets and unit steps
//! only, so it commutes with the eight lattice symmetries: robots have no
//! compass.

use crate::chain::{LocalView, VIEW_PATH_LENGTH};
use crate::geom::GridPoint;
use crate::run::ChainDir;

/// Largest black subchain a merge may use.
pub const MAX_MERGE_LEN: usize = VIEW_PATH_LENGTH;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Black,
    White,
}

/// One visible merge pattern: `white, black × k, white`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MergePattern {
    /// Signed chain position of the first white, relative to the viewer.
    pub start: i64,
    /// Number of black robots.
    pub k: usize,
    /// Displacement of every black robot (points from the blacks to the whites).
    pub hop: GridPoint,
}

impl MergePattern {
    /// Signed chain position of the second white.
    pub fn end(&self) -> i64 {
        self.start + self.k as i64 + 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeRole {
    pub role: Role,
    /// Zero for whites; a unit step for ordinary blacks; a diagonal for a black
    /// shared by two patterns with orthogonal hops.
    pub hop: GridPoint,
    /// The patterns the viewer takes part in.
    pub patterns: Vec<MergePattern>,
}

impl MergeRole {
    /// Black subchain length of the first pattern.
    pub fn k(&self) -> usize {
        self.patterns[0].k
    }

    /// `(first white, last white)` of the first pattern, relative to the viewer.
    pub fn pattern_span(&self) -> (i64, i64) {
        (self.patterns[0].start, self.patterns[0].end())
    }

    /// Number of patterns in which the viewer is black.
    pub fn black_count(&self) -> u32 {
        match self.role {
            Role::Black => self.patterns.len() as u32,
            Role::White => 0,
        }
    }
}

/// Test whether a merge pattern begins at signed position `start` with `k` blacks.
fn pattern_at(view: &LocalView, start: i64, k: usize) -> Option<MergePattern> {
    let end = start + k as i64 + 1;
    let (lo, hi) = view.reach();
    if start < lo || end > hi {
        return None;
    }
    let p = |i: i64| view.at(i).expect("inside reach");
    let hop = p(start) - p(start + 1);
    if !hop.is_unit() {
        return None;
    }
    if p(end) - p(end - 1) != hop {
        return None;
    }
    if k >= 2 {
        let a = p(start + 2) - p(start + 1);
        if !a.orthogonal_to(hop) {
            return None;
        }
        if (start + 2..end - 1).any(|i| p(i + 1) - p(i) != a) {
            return None;
        }
    }
    // Each white of a longest pattern cannot see the other one, so a white
    // runner may cut its corner this round; the merge waits for it to leave.
    if k == MAX_MERGE_LEN {
        let free_runner = |i: i64| {
            view.runs_at_rel(i)
                .is_some_and(|rs| rs.iter().any(|r| r.phase.is_free()))
        };
        if free_runner(start) || free_runner(end) {
            return None;
        }
    }
    Some(MergePattern { start, k, hop })
}

/// Merge role of the viewer, if any pattern involving it is fully visible.
///
/// A robot is black when it lies strictly inside a visible pattern; if it is
/// black in two patterns with orthogonal hops, it hops diagonally along their
/// sum. Otherwise it is white when it is an end of a visible pattern.
pub fn match_merge(view: &LocalView) -> Option<MergeRole> {
    let mut black = Vec::new();
    let mut white = Vec::new();
    for k in 1..=MAX_MERGE_LEN {
        let k_i = k as i64;
        // Patterns where self is one of the blacks.
        for start in -k_i..=-1 {
            if let Some(p) = pattern_at(view, start, k) {
                black.push(p);
            }
        }
        for start in [0, -(k_i + 1)] {
            if let Some(p) = pattern_at(view, start, k) {
                white.push(p);
            }
        }
    }
    // The tip of a fold (k = 1, both whites on one point) that is also the
    // white of a wider pattern stays put: on a short doubled needle every
    // robot is otherwise black and the chain flips back and forth forever.
    let fold = |p: &MergePattern| p.k == 1 && view.at(p.start) == view.at(p.end());
    if white.iter().any(|p| !fold(p)) {
        black.retain(|p| !fold(p));
    }
    if !black.is_empty() {
        let mut hops: Vec<GridPoint> = black.iter().map(|p| p.hop).collect();
        hops.sort();
        hops.dedup();
        let hop = match hops.as_slice() {
            [h] => *h,
            [a, b] if a.orthogonal_to(*b) => *a + *b,
            // Opposing hops cannot be honoured together.
            _ => return None,
        };
        return Some(MergeRole {
            role: Role::Black,
            hop,
            patterns: black,
        });
    }
    if !white.is_empty() {
        return Some(MergeRole {
            role: Role::White,
            hop: GridPoint::ORIGIN,
            patterns: white,
        });
    }
    None
}

/// Decision of the run-start check.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunStartDecision {
    pub starts: Vec<ChainDir>,
    /// Set when the viewer is an endpoint in both directions.
    pub long_op_c: bool,
}

/// Offset of the robot at `steps` along `dir` from the chain position `center`.
fn rel(view: &LocalView, center: i64, dir: ChainDir, steps: i64) -> Option<GridPoint> {
    view.at(center + dir.sign() * steps)
}

/// Whether the robot at signed position `center` is an endpoint of a quasi
/// line lying in direction `dir` from it.
///
/// Template: the robot and its next two neighbours in `dir` are collinear on
/// an axis; the step to its neighbour on the other side is orthogonal to that
/// axis; and the chain behind does not continue as an interior zig (single
/// orthogonal step followed by at least two steps parallel to the line).
pub fn endpoint_at(view: &LocalView, center: i64, dir: ChainDir) -> bool {
    let back = dir.opposite();
    let get = |d: ChainDir, s: i64| rel(view, center, d, s);
    let (Some(p0), Some(f1), Some(f2), Some(b1), Some(b2), Some(b3)) = (
        get(dir, 0),
        get(dir, 1),
        get(dir, 2),
        get(back, 1),
        get(back, 2),
        get(back, 3),
    ) else {
        return false;
    };
    let a = f1 - p0;
    if !a.is_unit() || f2 - f1 != a {
        return false;
    }
    let e1 = b1 - p0;
    if !e1.orthogonal_to(a) {
        return false;
    }
    let e2 = b2 - b1;
    let e3 = b3 - b2;
    !(e2 == -a && e3 == -a)
}

/// Run-start check for the viewer.
pub fn match_run_start(view: &LocalView) -> RunStartDecision {
    let starts: Vec<ChainDir> = ChainDir::BOTH
        .into_iter()
        .filter(|&d| endpoint_at(view, 0, d))
        .collect();
    let long_op_c = starts.len() == 2;
    RunStartDecision { starts, long_op_c }
}

/// Number of robots after the viewer in `dir` lying on the viewer's axis line,
/// capped by the view depth.
pub fn straight_run_ahead(view: &LocalView, dir: ChainDir) -> usize {
    straight_from(view, 0, dir)
}

/// [`straight_run_ahead`] measured from signed position `center`.
pub fn straight_from(view: &LocalView, center: i64, dir: ChainDir) -> usize {
    let Some(origin) = view.at(center) else {
        return 0;
    };
    let Some(first) = rel(view, center, dir, 1) else {
        return 0;
    };
    let a = first - origin;
    if !a.is_unit() {
        return 0;
    }
    let mut count = 1;
    while count < VIEW_PATH_LENGTH {
        match rel(view, center, dir, count as i64 + 1) {
            Some(p) if p - origin == GridPoint::new(a.x * (count as i64 + 1), a.y * (count as i64 + 1)) => count += 1,
            _ => break,
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Symmetry;

    fn view(ahead: &[(i64, i64)], behind: &[(i64, i64)]) -> LocalView {
        LocalView::from_offsets(ahead, behind)
    }

    #[test]
    fn k2_pattern_black_role() {
        // white (0,0); blacks (0,1),(1,1); white (1,0); self = (0,1).
        let v = view(&[(1, 0), (1, -1)], &[(0, -1)]);
        let m = match_merge(&v).expect("pattern");
        assert_eq!(m.role, Role::Black);
        assert_eq!(m.hop, GridPoint::new(0, -1));
        assert_eq!(m.k(), 2);
        assert_eq!(m.pattern_span(), (-1, 2));
    }

    #[test]
    fn k1_spike() {
        let v = view(&[(0, -1), (1, -1)], &[(0, -1), (-1, -1)]);
        let m = match_merge(&v).unwrap();
        assert_eq!(m.role, Role::Black);
        assert_eq!(m.k(), 1);
        assert_eq!(m.hop, GridPoint::new(0, -1));
    }

    #[test]
    fn fold_tip_yields_to_wider_pattern() {
        // Doubled needle (0,1),(0,2),(1,2),(0,2),(0,1),(0,0),(1,0),(0,0); self = (1,2).
        let side = [(-1, 0), (-1, -1), (-1, -2), (0, -2), (-1, -2), (-1, -1), (-1, 0)];
        let v = view(&side, &side);
        assert!(match_merge(&v).map_or(true, |m| m.role != Role::Black));
    }

    #[test]
    fn straight_line_has_no_merge() {
        let ahead: Vec<_> = (1..=11).map(|x| (x, 0)).collect();
        let behind: Vec<_> = (1..=11).map(|x| (-x, 0)).collect();
        assert_eq!(match_merge(&view(&ahead, &behind)), None);
    }

    #[test]
    fn k12_is_out_of_sight() {
        // Self is the first of twelve blacks along y = 1.
        let mut ahead: Vec<_> = (1..12).map(|x| (x, 0)).collect();
        ahead.push((11, -1));
        let v = view(&ahead, &[(0, -1), (-1, -1)]);
        assert_eq!(match_merge(&v), None);
        // The same shape with eleven blacks merges.
        let mut ahead: Vec<_> = (1..11).map(|x| (x, 0)).collect();
        ahead.push((10, -1));
        let v = view(&ahead, &[(0, -1), (-1, -1)]);
        assert_eq!(match_merge(&v).unwrap().k(), 11);
    }

    #[test]
    fn overlap_by_three_gives_diagonal() {
        // Pattern 1 (hop down): w1 (-2,-1), blacks (-2,0) (-1,0) (0,0)=r, white a (0,-1).
        // Pattern 2 (hop left): white b (-1,0), blacks r (0,0), a (0,-1), (0,-2), white (-1,-2).
        let v = view(&[(0, -1), (0, -2), (-1, -2)], &[(-1, 0), (-2, 0), (-2, -1)]);
        let m = match_merge(&v).unwrap();
        assert_eq!(m.role, Role::Black);
        assert_eq!(m.hop, GridPoint::new(-1, -1));
        assert_eq!(m.patterns.len(), 2);
    }

    #[test]
    fn run_start_double_endpoint() {
        let v = view(&[(1, 0), (2, 0), (3, 0)], &[(0, -1), (0, -2), (0, -3)]);
        let d = match_run_start(&v);
        assert_eq!(d.starts, vec![ChainDir::Forward, ChainDir::Backward]);
        assert!(d.long_op_c);
    }

    #[test]
    fn run_start_stairway_endpoint() {
        // Behind: one vertical step then a stairway (-x, +y, ...).
        let v = view(&[(1, 0), (2, 0), (3, 0)], &[(0, 1), (-1, 1), (-1, 2)]);
        let d = match_run_start(&v);
        assert_eq!(d.starts, vec![ChainDir::Forward]);
        assert!(!d.long_op_c);
    }

    #[test]
    fn interior_zig_does_not_start() {
        let v = view(&[(1, 0), (2, 0), (3, 0)], &[(0, 1), (-1, 1), (-2, 1)]);
        assert!(match_run_start(&v).starts.is_empty());
    }

    #[test]
    fn straight_counts() {
        let v = view(&[(1, 0), (2, 0), (3, 0), (3, 1)], &[]);
        assert_eq!(straight_run_ahead(&v, ChainDir::Forward), 3);
        let v = view(&[(1, 0), (1, 1)], &[]);
        assert_eq!(straight_run_ahead(&v, ChainDir::Forward), 1);
        let full: Vec<_> = (1..=11).map(|x| (0, x)).collect();
        assert_eq!(straight_run_ahead(&view(&full, &[]), ChainDir::Forward), 11);
        assert_eq!(straight_run_ahead(&view(&[], &[]), ChainDir::Forward), 0);
    }

    #[test]
    fn classifiers_commute_with_symmetries() {
        let v = view(&[(1, 0), (1, -1)], &[(0, -1)]);
        let base = match_merge(&v).unwrap();
        for s in Symmetry::all() {
            let m = match_merge(&v.transformed(s)).unwrap();
            assert_eq!(m.hop, s.apply(base.hop));
            assert_eq!(m.pattern_span(), base.pattern_span());
        }
    }
}
