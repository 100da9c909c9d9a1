//! Constructors for valid initial chains.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::chain::ClosedChain;
use crate::geom::GridPoint;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenError {
    #[error("rectangle needs w >= 2 and h >= 2, got {w}x{h}")]
    RectangleTooSmall { w: i64, h: i64 },
    #[error("random cycle needs n >= 4, got {0}")]
    TooFewRobots(usize),
    #[error("random cycle length must be even on the square lattice, got {0}")]
    OddLength(usize),
    #[error("could not build a cycle of {0} robots without reversals")]
    NoReversalFreeCycle(usize),
    #[error("segment {index}: {reason}")]
    BadSegment { index: usize, reason: String },
    #[error("legs do not close: end point is {offset} away from the start")]
    NotClosed { offset: GridPoint },
    #[error("consecutive segments {index} and {next} point in opposite directions")]
    Reversal { index: usize, next: usize },
}

/// Compass heading of a segment. Only used to build shapes; robots never see it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Heading {
    East,
    North,
    West,
    South,
}

impl Heading {
    pub fn step(self) -> GridPoint {
        match self {
            Heading::East => GridPoint::new(1, 0),
            Heading::North => GridPoint::new(0, 1),
            Heading::West => GridPoint::new(-1, 0),
            Heading::South => GridPoint::new(0, -1),
        }
    }

    /// Quarter turn counter-clockwise.
    pub fn left(self) -> Heading {
        match self {
            Heading::East => Heading::North,
            Heading::North => Heading::West,
            Heading::West => Heading::South,
            Heading::South => Heading::East,
        }
    }

    pub fn reverse(self) -> Heading {
        self.left().left()
    }
}

/// One straight quasi line of a [`QuasiCycleSpec`] plus the stairway that
/// follows it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub heading: Heading,
    /// Edges along `heading`.
    pub length: u32,
    /// Single orthogonal steps inserted along the line, all toward the side
    /// the chain turns to after the segment.
    #[serde(default)]
    pub zigs: u32,
    /// Stairway steps between this segment and the next one.
    #[serde(default)]
    pub stair: u32,
}

/// A closed loop of quasi lines joined by stairways.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuasiCycleSpec {
    pub segments: Vec<Segment>,
}

impl QuasiCycleSpec {
    /// Counter-clockwise octagon: four lines of `side` edges with `stair`-step
    /// stairways at the corners and `zigs` zigs per line.
    pub fn octagon(side: u32, stair: u32, zigs: u32) -> Self {
        let segments = [Heading::East, Heading::North, Heading::West, Heading::South]
            .into_iter()
            .map(|heading| Segment {
                heading,
                length: side,
                zigs,
                stair,
            })
            .collect();
        QuasiCycleSpec { segments }
    }
}

/// Selects a generator family; the CLI parses this from `family:params`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum GenSpec {
    Rectangle { w: i64, h: i64 },
    QuasilineCycle { spec: QuasiCycleSpec, seed: u64 },
    Random { n: usize, seed: u64 },
}

impl GenSpec {
    pub fn build(&self) -> Result<ClosedChain, GenError> {
        match self {
            GenSpec::Rectangle { w, h } => gen_rectangle(*w, *h),
            GenSpec::QuasilineCycle { spec, seed } => gen_quasiline_cycle(spec, *seed),
            GenSpec::Random { n, seed } => gen_random_cycle(*n, *seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("bad generator spec `{text}`: {reason}")]
pub struct ParseGenError {
    pub text: String,
    pub reason: String,
}

impl GenSpec {
    /// The octagon parameters `(side, stair, zigs)` if this is an octagon loop.
    fn octagon_params(spec: &QuasiCycleSpec) -> Option<(u32, u32, u32)> {
        let first = spec.segments.first()?;
        let params = (first.length, first.stair, first.zigs);
        (QuasiCycleSpec::octagon(params.0, params.1, params.2) == *spec).then_some(params)
    }

    /// Whether [`fmt::Display`] output parses back to `self`.
    pub fn has_text_form(&self) -> bool {
        match self {
            GenSpec::QuasilineCycle { spec, .. } => Self::octagon_params(spec).is_some(),
            _ => true,
        }
    }
}

impl fmt::Display for GenSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GenSpec::Rectangle { w, h } => write!(f, "rectangle:{w}x{h}"),
            GenSpec::Random { n, seed } => write!(f, "random:n={n},seed={seed}"),
            GenSpec::QuasilineCycle { spec, seed } => match Self::octagon_params(spec) {
                Some((side, stair, zigs)) => write!(f, "octagon:side={side},stair={stair},zigs={zigs},seed={seed}"),
                None => write!(f, "quasiline:{}-segments,seed={seed}", spec.segments.len()),
            },
        }
    }
}

impl FromStr for GenSpec {
    type Err = ParseGenError;

    /// `rectangle:WxH`, `random:n=N[,seed=S]` or
    /// `octagon:side=A[,stair=B][,zigs=C][,seed=S]`.
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let err = |reason: &str| ParseGenError {
            text: text.to_string(),
            reason: reason.to_string(),
        };
        let (family, params) = text.split_once(':').ok_or_else(|| err("expected `family:params`"))?;
        if family == "rectangle" {
            let (w, h) = params.split_once('x').ok_or_else(|| err("expected WxH"))?;
            let w = w.trim().parse().map_err(|_| err("bad width"))?;
            let h = h.trim().parse().map_err(|_| err("bad height"))?;
            return Ok(GenSpec::Rectangle { w, h });
        }
        let mut kv = std::collections::BTreeMap::new();
        for item in params.split(',').filter(|s| !s.trim().is_empty()) {
            let (k, v) = item.split_once('=').ok_or_else(|| err("expected key=value"))?;
            let v: u64 = v.trim().parse().map_err(|_| err(&format!("bad value for `{}`", k.trim())))?;
            kv.insert(k.trim().to_string(), v);
        }
        let mut take = |key: &str| kv.remove(key);
        let spec = match family {
            "random" => GenSpec::Random {
                n: take("n").ok_or_else(|| err("missing n"))? as usize,
                seed: take("seed").unwrap_or(0),
            },
            "octagon" => {
                let narrow = |v: u64| u32::try_from(v).map_err(|_| err("value out of range"));
                let side = narrow(take("side").ok_or_else(|| err("missing side"))?)?;
                let stair = narrow(take("stair").unwrap_or(0))?;
                let zigs = narrow(take("zigs").unwrap_or(0))?;
                GenSpec::QuasilineCycle {
                    spec: QuasiCycleSpec::octagon(side, stair, zigs),
                    seed: take("seed").unwrap_or(0),
                }
            }
            _ => return Err(err("unknown family; use rectangle, random or octagon")),
        };
        if let Some(k) = kv.keys().next() {
            return Err(err(&format!("unknown key `{k}`")));
        }
        Ok(spec)
    }
}

/// Perimeter of the `w × h` block of grid points, counter-clockwise from the origin.
pub fn gen_rectangle(w: i64, h: i64) -> Result<ClosedChain, GenError> {
    if w < 2 || h < 2 {
        return Err(GenError::RectangleTooSmall { w, h });
    }
    let mut pts = Vec::new();
    pts.extend((0..w - 1).map(|x| (x, 0)));
    pts.extend((0..h - 1).map(|y| (w - 1, y)));
    pts.extend((1..w).rev().map(|x| (x, h - 1)));
    pts.extend((1..h).rev().map(|y| (0, y)));
    Ok(ClosedChain::from_positions(pts))
}

fn walk(steps: &[GridPoint]) -> Vec<GridPoint> {
    let mut p = GridPoint::ORIGIN;
    let mut out = Vec::with_capacity(steps.len());
    for &s in steps {
        out.push(p);
        p = p + s;
    }
    out
}

/// Seeded closed lattice walk of `n` unit steps with no immediate reversal.
///
/// Steps are drawn with balanced counts (so the walk closes), shuffled, and
/// reversals are repaired by random swaps.
pub fn gen_random_cycle(n: usize, seed: u64) -> Result<ClosedChain, GenError> {
    if n < 4 {
        return Err(GenError::TooFewRobots(n));
    }
    if n % 2 == 1 {
        return Err(GenError::OddLength(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = n / 2;
    for _attempt in 0..64 {
        let horizontal = rng.gen_range(1..half);
        let mut steps = Vec::with_capacity(n);
        for _ in 0..horizontal {
            steps.push(GridPoint::new(1, 0));
            steps.push(GridPoint::new(-1, 0));
        }
        for _ in horizontal..half {
            steps.push(GridPoint::new(0, 1));
            steps.push(GridPoint::new(0, -1));
        }
        steps.shuffle(&mut rng);
        if repair_reversals(&mut steps, &mut rng) {
            return Ok(ClosedChain::from_positions(walk(&steps)));
        }
    }
    Err(GenError::NoReversalFreeCycle(n))
}

fn reversal_at(steps: &[GridPoint], i: usize) -> bool {
    let n = steps.len();
    steps[i] + steps[(i + 1) % n] == GridPoint::ORIGIN
}

fn repair_reversals(steps: &mut [GridPoint], rng: &mut ChaCha8Rng) -> bool {
    let n = steps.len();
    let budget = 200 * n + 1000;
    for _ in 0..budget {
        let Some(i) = (0..n).find(|&i| reversal_at(steps, i)) else {
            return true;
        };
        let j = rng.gen_range(0..n);
        let a = (i + 1) % n;
        steps.swap(a, j);
        let local = [a, j, (a + n - 1) % n, (j + n - 1) % n];
        let before = local.iter().filter(|&&k| reversal_at(steps, k)).count();
        if before > 1 {
            // Swap made things worse around the touched indices; undo half the time.
            if rng.gen_bool(0.5) {
                steps.swap(a, j);
            }
        }
    }
    (0..n).all(|i| !reversal_at(steps, i))
}

/// Closed loop of quasi lines and stairways described by `spec`.
///
/// Zig positions along each line are drawn from `seed`. The first tread of a
/// line is at least twelve edges long and later treads at least three, so the
/// zigs never form a merge pattern with the corner behind them.
pub fn gen_quasiline_cycle(spec: &QuasiCycleSpec, seed: u64) -> Result<ClosedChain, GenError> {
    const FIRST_TREAD: u32 = 12;
    const TREAD: u32 = 3;
    let segs = &spec.segments;
    if segs.len() < 2 {
        return Err(GenError::BadSegment {
            index: 0,
            reason: "need at least two segments".into(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut steps: Vec<GridPoint> = Vec::new();
    for (i, seg) in segs.iter().enumerate() {
        let j = (i + 1) % segs.len();
        let next = &segs[j];
        let h = seg.heading.step();
        let nh = next.heading.step();
        if h + nh == GridPoint::ORIGIN {
            return Err(GenError::Reversal { index: i, next: j });
        }
        let parallel = h == nh;
        if parallel && seg.stair == 0 {
            return Err(GenError::BadSegment {
                index: i,
                reason: "parallel lines need a stairway between them".into(),
            });
        }
        // Side the chain moves to after this segment.
        let side = if parallel { seg.heading.left().step() } else { nh };
        if seg.length < 2 {
            return Err(GenError::BadSegment {
                index: i,
                reason: "a quasi line needs at least three robots".into(),
            });
        }
        let room = seg.length as i64 - FIRST_TREAD as i64 - 2;
        let needed = seg.zigs as i64 * TREAD as i64;
        if seg.zigs > 0 && room < needed {
            return Err(GenError::BadSegment {
                index: i,
                reason: format!("length {} too short for {} zigs", seg.length, seg.zigs),
            });
        }
        // Zig k sits before edge `pos[k]`; spread the slack at random.
        let mut cuts: Vec<u32> = Vec::new();
        if seg.zigs > 0 {
            let slack = (room - needed) as u32;
            let mut extra: Vec<u32> = (0..seg.zigs).map(|_| rng.gen_range(0..=slack)).collect();
            extra.sort_unstable();
            let mut at = FIRST_TREAD;
            for (k, e) in extra.iter().enumerate() {
                let pos = FIRST_TREAD + e + k as u32 * TREAD;
                at = at.max(pos);
                cuts.push(at);
                at += TREAD;
            }
        }
        for e in 0..seg.length {
            if cuts.contains(&e) {
                steps.push(side);
            }
            steps.push(h);
        }
        if parallel {
            for s in 0..seg.stair {
                steps.push(side);
                if s + 1 < seg.stair {
                    steps.push(h);
                }
            }
        } else {
            for _ in 0..seg.stair {
                steps.push(nh);
                steps.push(h);
            }
        }
    }
    let end = steps.iter().fold(GridPoint::ORIGIN, |a, &s| a + s);
    if !end.is_zero() {
        return Err(GenError::NotClosed { offset: end });
    }
    Ok(ClosedChain::from_positions(walk(&steps)))
}
