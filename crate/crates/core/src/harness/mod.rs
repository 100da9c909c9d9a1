//! Instrumentation around the simulator: invariant checks, progress-pair
//! ledger, trace files and frame rendering.

pub mod invariants;
pub mod pairs;
pub mod render;
pub mod trace;

pub use invariants::{check_invariants, CheckResult, CheckSet, GoodPair, InvariantChecker, InvariantReport};
pub use pairs::{track_progress_pairs, PairLedger, ProgressPair, WindowOutcome};
pub use render::{render_frames, render_svg, FrameSelection, FrameStyle};
pub use trace::{read_trace, read_trace_file, write_trace, write_trace_file, TraceError};
