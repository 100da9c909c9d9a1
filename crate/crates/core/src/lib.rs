//! Deterministic simulator for gathering closed robot chains on the square grid.

pub mod chain;
pub mod config;
pub mod experiment;
pub mod generator;
pub mod geom;
pub mod harness;
pub mod pattern;
pub mod run;
pub mod scheduler;
pub mod sim;

pub use chain::{ClosedChain, LocalView, Robot, RobotId};
pub use generator::{gen_quasiline_cycle, gen_random_cycle, gen_rectangle, GenSpec, QuasiCycleSpec};
pub use geom::GridPoint;
pub use sim::{simulate, SimOptions, SimReport};
