//! One configured run with all instrumentation attached, and scaling benches.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::generator::{GenError, GenSpec, QuasiCycleSpec};
use crate::harness::{track_progress_pairs, InvariantChecker, PairLedger};
use crate::scheduler::{RoundEvents, ROUND_BOUND_FACTOR};
use crate::sim::{simulate, SimOptions, SimReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;
pub const EXIT_BOUND: i32 = 4;

/// Rounds allowed for `n` robots by the linear bound (`27 · n`).
pub fn round_bound(n: usize) -> u64 {
    ROUND_BOUND_FACTOR * n as u64
}

pub struct RunOutcome {
    pub report: SimReport,
    pub checker: InvariantChecker,
    pub ledger: PairLedger,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub gen: String,
    pub n: usize,
    pub rounds_used: u64,
    pub bound: u64,
    pub gathered: bool,
    pub final_box: (i64, i64),
    pub merges: usize,
    pub final_len: usize,
    pub invariant_failures: u64,
    pub good_pairs: usize,
    pub progress_pairs: usize,
    pub uncredited_pairs: usize,
    pub ambiguous_credits: usize,
    pub missing_windows: usize,
}

impl RunOutcome {
    pub fn within_bound(&self) -> bool {
        self.report.succeeded() && self.report.rounds_used <= round_bound(self.report.initial_len())
    }

    pub fn invariants_hold(&self) -> bool {
        self.checker.passed()
    }

    /// Invariant failures take precedence over bound violations.
    pub fn exit_code(&self) -> i32 {
        if !self.invariants_hold() {
            EXIT_INVARIANT
        } else if !self.within_bound() {
            EXIT_BOUND
        } else {
            EXIT_OK
        }
    }

    pub fn summary(&self, gen: &GenSpec) -> RunSummary {
        let r = &self.report;
        RunSummary {
            gen: gen.to_string(),
            n: r.initial_len(),
            rounds_used: r.rounds_used,
            bound: round_bound(r.initial_len()),
            gathered: r.gathered,
            final_box: r.final_box(),
            merges: r.merge_count(),
            final_len: r.final_chain.len(),
            invariant_failures: self.checker.failures.len() as u64,
            good_pairs: self.ledger.good_pairs,
            progress_pairs: self.ledger.progress.len(),
            uncredited_pairs: self.ledger.uncredited().count(),
            ambiguous_credits: self.ledger.ambiguous(),
            missing_windows: self.ledger.missing_windows().count(),
        }
    }
}

fn events_of(report: &SimReport) -> Vec<RoundEvents> {
    report.events().cloned().collect()
}

/// Build the chain, simulate it with the configured checks and fill the ledger.
pub fn execute(cfg: &RunConfig) -> Result<RunOutcome, GenError> {
    let chain = cfg.gen.build()?;
    let mut checker = InvariantChecker::new(cfg.checks.clone());
    let options = SimOptions {
        max_rounds: Some(cfg.budget(chain.len())),
        record_frames: cfg.frames,
    };
    let report = simulate(&chain, options, &mut checker);
    let ledger = track_progress_pairs(&chain, &events_of(&report));
    Ok(RunOutcome {
        report,
        checker,
        ledger,
    })
}

/// Re-run the initial chain of a stored report with checks and compare.
pub fn replay(stored: &SimReport, checks: &crate::harness::CheckSet) -> (RunOutcome, bool) {
    let mut checker = InvariantChecker::new(checks.clone());
    let frames = stored.records.first().is_none_or(|r| !r.robots.is_empty());
    let options = SimOptions {
        max_rounds: Some(stored.max_rounds),
        record_frames: frames,
    };
    let report = simulate(&stored.initial, options, &mut checker);
    let same = report == *stored;
    let ledger = track_progress_pairs(&report.initial, &events_of(&report));
    (
        RunOutcome {
            report,
            checker,
            ledger,
        },
        same,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchFamily {
    /// Square `size × size` rectangles; seeds are ignored.
    Rectangle,
    /// Random cycles of `size` robots.
    Random,
    /// Octagon loops with lines of `size` edges, two-step stairways and one zig.
    Octagon,
}

impl BenchFamily {
    pub fn spec(self, size: usize, seed: u64) -> GenSpec {
        match self {
            BenchFamily::Rectangle => GenSpec::Rectangle {
                w: size as i64,
                h: size as i64,
            },
            BenchFamily::Random => GenSpec::Random { n: size, seed },
            BenchFamily::Octagon => GenSpec::QuasilineCycle {
                spec: QuasiCycleSpec::octagon(size as u32, 2, 1),
                seed,
            },
        }
    }

    pub fn seeds(self, seeds: u64) -> u64 {
        match self {
            BenchFamily::Rectangle => 1,
            _ => seeds.max(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub size: usize,
    /// Chain length (mean over instances for families whose length varies).
    pub n: usize,
    pub instances: usize,
    pub mean_rounds: f64,
    pub max_rounds: u64,
    /// Largest `rounds / n` over the instances.
    pub max_ratio: f64,
    pub all_gathered: bool,
}

impl BenchRow {
    pub fn within_bound(&self) -> bool {
        self.all_gathered && self.max_ratio <= ROUND_BOUND_FACTOR as f64
    }
}

/// Simulate every `(size, seed)` instance in parallel; one row per size.
pub fn bench(family: BenchFamily, sizes: &[usize], seeds: u64) -> Result<Vec<BenchRow>, GenError> {
    let jobs: Vec<(usize, GenSpec)> = sizes
        .iter()
        .flat_map(|&size| (0..family.seeds(seeds)).map(move |seed| (size, family.spec(size, seed))))
        .collect();
    let results: Vec<(usize, usize, u64, bool)> = jobs
        .par_iter()
        .map(|(size, spec)| {
            let chain = spec.build()?;
            let options = SimOptions {
                max_rounds: None,
                record_frames: false,
            };
            let report = simulate(&chain, options, ());
            Ok((*size, chain.len(), report.rounds_used, report.succeeded()))
        })
        .collect::<Result<_, GenError>>()?;
    Ok(sizes
        .iter()
        .map(|&size| {
            let rows: Vec<_> = results.iter().filter(|r| r.0 == size).collect();
            let count = rows.len().max(1);
            BenchRow {
                size,
                n: rows.iter().map(|r| r.1).sum::<usize>() / count,
                instances: rows.len(),
                mean_rounds: rows.iter().map(|r| r.2 as f64).sum::<f64>() / count as f64,
                max_rounds: rows.iter().map(|r| r.2).max().unwrap_or(0),
                max_ratio: rows
                    .iter()
                    .map(|r| r.2 as f64 / r.1.max(1) as f64)
                    .fold(0.0, f64::max),
                all_gathered: rows.iter().all(|r| r.3),
            }
        })
        .collect())
}
