//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

mod common;

use std::collections::HashSet;
use std::time::Instant;

use rayon::prelude::*;

use chaingather::chain::{ClosedChain, RobotId, VIEW_PATH_LENGTH};
use chaingather::config::RunConfig;
use chaingather::experiment::{execute, round_bound, RunOutcome};
use chaingather::generator::QuasiCycleSpec;
use chaingather::harness::invariants::{good_pairs_started, QUASI_LINE_WINDOW, RUN_ADVANCEMENT};
use chaingather::harness::{check_invariants, read_trace, write_trace, CheckSet, InvariantReport};
use chaingather::pattern::MAX_MERGE_LEN;
use chaingather::run::{ChainDir, LongOpKind, Phase, RunAction, RunOp, RunState, PASSING_DISTANCE};
use chaingather::scheduler::{compute_round, RoundEvents, RunPlan, ROUND_BOUND_FACTOR, START_PERIOD};
use chaingather::GenSpec;

use common::{advance, bump, chain_of, step};

/// Smallest distance between sequent runs that start on consecutive start rounds.
const PIPELINE_DISTANCE: usize = 12;
const PASSING_ROUNDS: u64 = 6;
const MIN_SEPARATION_AFTER_PASSING: usize = 3;
const MAX_AMBIGUOUS_FRACTION: f64 = 0.01;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

struct Instance {
    gen: GenSpec,
    outcome: RunOutcome,
}

fn run_all(specs: Vec<GenSpec>) -> Vec<Instance> {
    specs
        .into_par_iter()
        .map(|gen| {
            let mut cfg = RunConfig::new(gen.clone());
            cfg.frames = false;
            let outcome = execute(&cfg).unwrap_or_else(|e| panic!("{gen}: {e}"));
            Instance { gen, outcome }
        })
        .collect()
}

fn bound_corpus() -> Vec<GenSpec> {
    let rects = [4, 8, 16, 32, 64].map(|s| GenSpec::Rectangle { w: s, h: s });
    let randoms = [64, 128, 256, 512, 1024]
        .into_iter()
        .flat_map(|n| (0..10).map(move |seed| GenSpec::Random { n, seed }));
    rects.into_iter().chain(randoms).collect()
}

fn quasiline_corpus() -> Vec<GenSpec> {
    let mut out = Vec::new();
    for side in [12, 16, 24, 40] {
        for stair in 0..=3 {
            for zigs in 0..=2 {
                for seed in 0..2 {
                    let gen = GenSpec::QuasilineCycle {
                        spec: QuasiCycleSpec::octagon(side, stair, zigs),
                        seed,
                    };
                    if gen.build().is_ok() {
                        out.push(gen);
                    }
                }
            }
        }
    }
    out
}

fn first_events(o: &RunOutcome) -> Option<&RoundEvents> {
    o.report.events().next()
}

fn criterion_bound(runs: &[Instance]) -> Verdict {
    let bad: Vec<String> = runs
        .iter()
        .filter(|r| !r.outcome.within_bound())
        .map(|r| format!("{} ({} rounds, gathered={})", r.gen, r.outcome.report.rounds_used, r.outcome.report.gathered))
        .collect();
    let worst = runs
        .iter()
        .map(|r| r.outcome.report.rounds_used as f64 / r.outcome.report.initial_len() as f64)
        .fold(0.0, f64::max);
    let constants = ROUND_BOUND_FACTOR == 2 * START_PERIOD + 1 && START_PERIOD == 13;
    verdict(
        bad.is_empty() && constants,
        format!(
            "{} instances, worst rounds/n = {worst:.3} (bound {ROUND_BOUND_FACTOR}); {}",
            runs.len(),
            if bad.is_empty() { "all gathered".to_string() } else { format!("failed: {}", bad.join(", ")) }
        ),
    )
}

fn criterion_quasiline(runs: &[Instance]) -> Verdict {
    let mut bad = Vec::new();
    let mut windows = 0;
    for r in runs {
        let o = &r.outcome;
        let n = o.report.initial_len();
        let Some(ev) = first_events(o) else {
            bad.push(format!("{}: gathered before round 0", r.gen));
            continue;
        };
        if !ev.merges.is_empty() {
            bad.push(format!("{}: merges at round 0", r.gen));
        }
        if good_pairs_started(ev, n).is_empty() {
            bad.push(format!("{}: no good pair at round 0", r.gen));
        }
        if !o.within_bound() {
            bad.push(format!("{}: {} rounds > {}", r.gen, o.report.rounds_used, round_bound(n)));
        }
        let missing: Vec<u64> = o.ledger.missing_windows().map(|w| w.start_round).collect();
        if !missing.is_empty() {
            bad.push(format!("{}: no merge and no progress pair at rounds {missing:?}", r.gen));
        }
        windows += o.ledger.windows.len();
    }
    verdict(
        bad.is_empty(),
        format!("{} cycles, {windows} start windows checked; {}", runs.len(), summary_of(&bad)),
    )
}

fn criterion_invariants(runs: &[&Instance]) -> Verdict {
    let rounds: u64 = runs.iter().map(|r| r.outcome.checker.rounds_checked).sum();
    let bad: Vec<String> = runs
        .iter()
        .filter_map(|r| {
            let f: &InvariantReport = r.outcome.checker.first_failure()?;
            let names: Vec<&str> = f.failures().map(|c| c.name.as_str()).collect();
            Some(format!("{} round {}: {}", r.gen, f.round, names.join(",")))
        })
        .collect();
    verdict(
        bad.is_empty(),
        format!("{} runs, {rounds} rounds checked; {}", runs.len(), summary_of(&bad)),
    )
}

fn criterion_accounting(runs: &[Instance]) -> Verdict {
    let mut bad = Vec::new();
    let mut pairs = 0;
    let mut ambiguous = 0;
    for r in runs {
        let l = &r.outcome.ledger;
        pairs += l.progress.len();
        ambiguous += l.ambiguous();
        for p in &l.progress {
            match p.credit {
                None => bad.push(format!("{}: pair started {} uncredited", r.gen, p.pair.started_round)),
                Some(c) if c.round > p.pair.started_round + p.chain_len as u64 => {
                    bad.push(format!("{}: pair started {} credited late at {}", r.gen, p.pair.started_round, c.round))
                }
                Some(_) => {}
            }
        }
        if !l.shared_credits().is_empty() {
            bad.push(format!("{}: shared credits {:?}", r.gen, l.shared_credits()));
        }
    }
    let fraction = if pairs == 0 { 0.0 } else { ambiguous as f64 / pairs as f64 };
    verdict(
        bad.is_empty() && pairs > 0 && fraction < MAX_AMBIGUOUS_FRACTION,
        format!("{pairs} progress pairs, {ambiguous} ambiguous ({:.2}%); {}", fraction * 100.0, summary_of(&bad)),
    )
}

fn ids(chain: &ClosedChain, at: &[usize]) -> HashSet<RobotId> {
    at.iter().map(|&i| chain.robots[i].id).collect()
}

fn criterion_merges() -> Verdict {
    let mut bad = Vec::new();
    for k in [1, 2, 5, 11] {
        let c = bump(k);
        let s = step(&c);
        let whites = ids(&c, &[0, k + 1]);
        let removed: HashSet<RobotId> = s.events.removed.iter().map(|&(r, _)| r).collect();
        if s.after.len() + 2 != c.len() || s.events.merges.len() != 1 || removed != whites {
            bad.push(format!("k={k}: {} -> {}, removed {removed:?}", c.len(), s.after.len()));
        }
    }
    let k12 = bump(MAX_MERGE_LEN + 1);
    let s = step(&k12);
    if !s.events.merges.is_empty() || !s.events.hops.is_empty() || s.after.len() != k12.len() {
        bad.push(format!("k=12 acted: {:?}", s.events.merges));
    }

    // Overlap by two: an S whose middle robots a, b are black in one pattern
    // and white in the other. Only the outer whites go.
    let c = chain_of((0, 0), "N1 E2 S1 E2 N1 E15 S21 W34 N20 E15");
    let s = step(&c);
    let removed: HashSet<RobotId> = s.events.removed.iter().map(|&(r, _)| r).collect();
    let (a, b) = (c.robots[4].id, c.robots[3].id);
    let apart = s.after.index_of(a).zip(s.after.index_of(b)).is_some_and(|(i, j)| s.after.robots[i].pos != s.after.robots[j].pos);
    if s.events.merges.len() != 2 || removed != ids(&c, &[0, 7]) || !apart {
        bad.push(format!("overlap by two: removed {removed:?}"));
    }

    // Overlap by three: r is black in both patterns and hops diagonally onto
    // a and b, which are removed; the outer whites fuse as in a single merge.
    let c = chain_of((-2, -1), "N1 E2 S2 W1 S15 W16 N16 E15");
    let s = step(&c);
    let (b, r, a) = (c.robots[2].id, c.robots[3].id, c.robots[4].id);
    let fused_into_r = s.events.removed.iter().filter(|&&(x, into)| (x == a || x == b) && into == r).count();
    let removed: HashSet<RobotId> = s.events.removed.iter().map(|&(x, _)| x).collect();
    if fused_into_r != 2 || removed != ids(&c, &[0, 2, 4, 6]) || s.after.index_of(r).is_none() {
        bad.push(format!("overlap by three: removed {:?}", s.events.removed));
    }
    verdict(
        bad.is_empty() && MAX_MERGE_LEN == VIEW_PATH_LENGTH && VIEW_PATH_LENGTH == 11,
        format!("k=1,2,5,11 shorten by 2, k=12 idle, overlap by two and three; {}", summary_of(&bad)),
    )
}

fn token(chain: &ClosedChain, id: u64) -> Option<(usize, RunState)> {
    chain
        .robots
        .iter()
        .enumerate()
        .find_map(|(i, r)| r.runs.iter().find(|run| run.id == id).map(|run| (i, run.clone())))
}

/// Runner `A` meets an oncoming run three robots ahead that is two robots
/// into a corner-to-corner move; a sequent run trails `A` at the pipelined
/// distance.
fn criterion_passing() -> Verdict {
    let mut c = chain_of((0, 0), "E40 N12 W40 S12");
    let place = |c: &mut ClosedChain, at: usize, id: u64, dir: ChainDir, phase: Phase| {
        let mut run = RunState::new(id, dir, 0, false);
        run.age = 5;
        run.phase = phase;
        c.robots[at].runs.push(run);
    };
    let a_at = 15;
    place(&mut c, a_at, 1, ChainDir::Forward, Phase::Normal);
    place(
        &mut c,
        a_at + PASSING_DISTANCE,
        2,
        ChainDir::Backward,
        Phase::LongOp {
            kind: LongOpKind::B,
            steps_left: 1,
        },
    );
    place(&mut c, a_at - PIPELINE_DISTANCE, 3, ChainDir::Forward, Phase::Normal);
    c.next_run_id = 4;
    c.round = 1;

    let mut passing_rounds = None;
    let mut min_separation = usize::MAX;
    let mut trailing_done = false;
    for rounds in 1..=40u64 {
        c = step(&c).after;
        let (Some((ia, ra)), Some((it, rt))) = (token(&c, 1), token(&c, 3)) else {
            return verdict(false, format!("a run terminated in round {rounds}"));
        };
        min_separation = min_separation.min(ia - it);
        if passing_rounds.is_none() && ra.phase == Phase::SETTLING {
            passing_rounds = Some(rounds);
        }
        if rt.phase == Phase::SETTLING {
            trailing_done = true;
            break;
        }
    }
    let pass = passing_rounds == Some(PASSING_ROUNDS) && trailing_done && min_separation >= MIN_SEPARATION_AFTER_PASSING;
    verdict(
        pass,
        format!(
            "passing took {passing_rounds:?} rounds (expected {PASSING_ROUNDS}), trailing run at distance {PIPELINE_DISTANCE} kept separation >= {min_separation}"
        ),
    )
}

fn trace_bytes(o: &RunOutcome) -> Vec<u8> {
    let mut out = Vec::new();
    write_trace(&o.report, &mut out).expect("trace writes");
    out
}

fn only(name: &str) -> CheckSet {
    let mut set = CheckSet::none();
    set.set(name, true);
    set
}

/// Move one acting run a further robot ahead after a real round.
fn teleport_is_caught() -> Result<(), String> {
    let mut c = GenSpec::Rectangle { w: 30, h: 30 }.build().map_err(|e| e.to_string())?;
    c = advance(&c, START_PERIOD + 2);
    let s = step(&c);
    let checks = only(RUN_ADVANCEMENT);
    if check_invariants(&s.before, &s.plan, &s.after, &s.events, &[], &checks).failed(RUN_ADVANCEMENT) {
        return Err("clean round flagged".into());
    }
    let mut bent = s.after.clone();
    let (from, run) = bent
        .robots
        .iter()
        .enumerate()
        .find_map(|(i, r)| r.runs.first().map(|run| (i, run.clone())))
        .ok_or("no run to move")?;
    let to = bent.step_index(from, run.dir, 1);
    bent.robots[from].runs.retain(|r| r.id != run.id);
    bent.robots[to].runs.push(run);
    let report = check_invariants(&s.before, &s.plan, &bent, &s.events, &[], &checks);
    report.failed(RUN_ADVANCEMENT).then_some(()).ok_or_else(|| "teleport missed".into())
}

/// A runner on a straight stretch whose line turns into a three-robot
/// orthogonal stretch one robot ahead.
fn bent_window_is_caught() -> Result<(), String> {
    let checks = only(QUASI_LINE_WINDOW);
    let flagged = |moves: &str| {
        let mut c = chain_of((0, 0), moves);
        let mut run = RunState::new(0, ChainDir::Forward, 0, false);
        run.age = 5;
        c.robots[0].runs.push(run);
        // The rules end this run; a faulty rule set keeps it walking.
        let mut plan = compute_round(&c, 1);
        plan.robots[0].runs[0].plan = RunPlan::Act(RunAction {
            op: RunOp::ContinuePassing,
            hop: None,
            next_phase: Phase::Normal,
            target_steps: None,
        });
        check_invariants(&c, &plan, &c, &RoundEvents::default(), &[], &checks).failed(QUASI_LINE_WINDOW)
    };
    if flagged("E40 N12 W41 S12 E1") {
        return Err("straight line flagged".into());
    }
    flagged("E1 S2 E39 N14 W41 S12 E1").then_some(()).ok_or_else(|| "bend missed".into())
}

fn criterion_determinism() -> Verdict {
    let mut bad = Vec::new();
    for text in ["random:n=256,seed=7", "octagon:side=24,stair=2,zigs=1,seed=1", "rectangle:16x16"] {
        let gen: GenSpec = text.parse().expect("spec");
        let cfg = RunConfig::new(gen);
        let (a, b) = (execute(&cfg).expect("run"), execute(&cfg).expect("run"));
        let bytes = trace_bytes(&a);
        if bytes != trace_bytes(&b) {
            bad.push(format!("{text}: traces differ"));
        }
        match read_trace(bytes.as_slice()) {
            Ok(back) if back == a.report => {
                let mut again = Vec::new();
                write_trace(&back, &mut again).expect("trace writes");
                if again != bytes {
                    bad.push(format!("{text}: rewrite differs"));
                }
            }
            Ok(_) => bad.push(format!("{text}: read back differs")),
            Err(e) => bad.push(format!("{text}: {e}")),
        }
    }
    if let Err(e) = teleport_is_caught() {
        bad.push(format!("{RUN_ADVANCEMENT}: {e}"));
    }
    if let Err(e) = bent_window_is_caught() {
        bad.push(format!("{QUASI_LINE_WINDOW}: {e}"));
    }
    verdict(
        bad.is_empty(),
        format!("byte-identical traces, round trip, teleported token and bent window caught; {}", summary_of(&bad)),
    )
}

fn summary_of(bad: &[String]) -> String {
    match bad.len() {
        0 => "no violations".into(),
        n if n <= 3 => bad.join("; "),
        n => format!("{} ... and {} more", bad[..3].join("; "), n - 3),
    }
}

fn main() {
    let t0 = Instant::now();
    let bound_runs = run_all(bound_corpus());
    let quasi_runs = run_all(quasiline_corpus());
    let all: Vec<&Instance> = bound_runs.iter().chain(&quasi_runs).collect();

    let results = [
        ("1 linear bound", criterion_bound(&bound_runs)),
        ("2 quasiline family", criterion_quasiline(&quasi_runs)),
        ("3 invariant suite", criterion_invariants(&all)),
        ("4 progress-pair accounting", criterion_accounting(&quasi_runs)),
        ("5 merge micro-scenarios", criterion_merges()),
        ("6 run passing", criterion_passing()),
        ("7 determinism and persistence", criterion_determinism()),
    ];
    let mut failed = 0;
    for (name, v) in &results {
        println!("{} criterion {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        failed += usize::from(!v.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1}s",
        results.len() - failed,
        t0.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
