//! Integer lattice geometry: points, unit steps and the eight grid symmetries.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A lattice point. Coordinates are plain `i64`; chains up to 10^6 robots
/// stay far away from overflow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct GridPoint {
    pub x: i64,
    pub y: i64,
}

impl GridPoint {
    pub const ORIGIN: GridPoint = GridPoint { x: 0, y: 0 };

    pub const fn new(x: i64, y: i64) -> Self {
        GridPoint { x, y }
    }

    /// Manhattan norm.
    pub fn l1(self) -> i64 {
        self.x.abs() + self.y.abs()
    }

    /// True for the four axis unit vectors.
    pub fn is_unit(self) -> bool {
        self.l1() == 1
    }

    /// True for the four diagonal unit vectors `(±1, ±1)`.
    pub fn is_diagonal(self) -> bool {
        self.x.abs() == 1 && self.y.abs() == 1
    }

    pub fn is_zero(self) -> bool {
        self.x == 0 && self.y == 0
    }

    /// Axis of a unit vector, `None` for anything else.
    pub fn axis(self) -> Option<Axis> {
        match (self.x, self.y) {
            (1, 0) | (-1, 0) => Some(Axis::X),
            (0, 1) | (0, -1) => Some(Axis::Y),
            _ => None,
        }
    }

    /// Dot product.
    pub fn dot(self, other: GridPoint) -> i64 {
        self.x * other.x + self.y * other.y
    }

    /// Two unit vectors are orthogonal.
    pub fn orthogonal_to(self, other: GridPoint) -> bool {
        self.is_unit() && other.is_unit() && self.dot(other) == 0
    }
}

impl Add for GridPoint {
    type Output = GridPoint;
    fn add(self, o: GridPoint) -> GridPoint {
        GridPoint::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for GridPoint {
    type Output = GridPoint;
    fn sub(self, o: GridPoint) -> GridPoint {
        GridPoint::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for GridPoint {
    type Output = GridPoint;
    fn neg(self) -> GridPoint {
        GridPoint::new(-self.x, -self.y)
    }
}

impl fmt::Display for GridPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

impl From<(i64, i64)> for GridPoint {
    fn from((x, y): (i64, i64)) -> Self {
        GridPoint::new(x, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
}

/// One of the eight symmetries of the square lattice that fix the origin.
///
/// `rotation` counts quarter turns counter-clockwise, applied after the
/// optional reflection across the x axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Symmetry {
    pub reflect: bool,
    pub rotation: u8,
}

impl Symmetry {
    pub const IDENTITY: Symmetry = Symmetry {
        reflect: false,
        rotation: 0,
    };

    pub fn all() -> impl Iterator<Item = Symmetry> {
        [false, true]
            .into_iter()
            .flat_map(|reflect| (0..4).map(move |rotation| Symmetry { reflect, rotation }))
    }

    pub fn apply(self, p: GridPoint) -> GridPoint {
        let mut q = if self.reflect {
            GridPoint::new(p.x, -p.y)
        } else {
            p
        };
        for _ in 0..self.rotation {
            q = GridPoint::new(-q.y, q.x);
        }
        q
    }
}
