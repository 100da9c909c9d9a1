use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use chaingather::config::{RenderConfig, RunConfig};
use chaingather::experiment::{
    bench, execute, replay, round_bound, BenchFamily, RunOutcome, EXIT_BOUND, EXIT_INVARIANT, EXIT_OK, EXIT_USAGE,
};
use chaingather::harness::invariants::CHECK_NAMES;
use chaingather::harness::{read_trace_file, render_frames, write_trace_file, CheckSet, FrameSelection, FrameStyle};
use chaingather::GenSpec;

/// Simulate and verify local gathering of closed robot chains on the grid.
///
/// Exit codes: 0 success, 2 usage error, 3 invariant failure, 4 bound violation.
#[derive(Parser)]
#[command(name = "chaingather", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one chain, write trace and summary.
    Run(RunArgs),
    /// Print a generated chain as JSON positions.
    Generate {
        #[arg(long)]
        gen: GenSpec,
        /// Output file (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-simulate a trace, check it is reproduced exactly and passes the checks.
    Verify {
        trace: PathBuf,
        #[arg(long, default_value = "all")]
        checks: String,
    },
    /// Draw SVG frames of a trace.
    Render {
        trace: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        select: SelectArgs,
    },
    /// Rounds needed per size over several seeds.
    Bench {
        #[arg(long, value_enum)]
        family: Family,
        /// Comma-separated sizes (side length, or n for random chains).
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        /// Also write the table as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Family {
    Rectangle,
    Random,
    Octagon,
}

#[derive(Args, Default)]
struct SelectArgs {
    /// Draw every k-th round.
    #[arg(long)]
    every: Option<u64>,
    /// Draw exactly these rounds.
    #[arg(long, value_delimiter = ',')]
    rounds: Vec<u64>,
}

impl SelectArgs {
    fn selection(&self) -> FrameSelection {
        FrameSelection {
            every: self.every,
            rounds: self.rounds.clone(),
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// TOML file with the run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Generator, e.g. `rectangle:10x10`, `random:n=200,seed=3`,
    /// `octagon:side=24,stair=2,zigs=1,seed=0`.
    #[arg(long)]
    gen: Option<GenSpec>,
    #[arg(long)]
    max_rounds: Option<u64>,
    /// `all`, `none`, or a comma list of check names (prefix `-` to disable).
    #[arg(long)]
    checks: Option<String>,
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Drop per-round positions from the trace.
    #[arg(long)]
    no_frames: bool,
    /// Render frames into this directory.
    #[arg(long)]
    render: Option<PathBuf>,
    #[command(flatten)]
    select: SelectArgs,
    /// Write the summary as JSON here.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Print the effective configuration as TOML and exit.
    #[arg(long)]
    dump_config: bool,
}

struct Usage(String);

impl<E: std::fmt::Display> From<E> for Usage {
    fn from(e: E) -> Self {
        Usage(e.to_string())
    }
}

fn parse_checks(text: &str, base: CheckSet) -> Result<CheckSet, Usage> {
    let mut set = base;
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match item {
            "all" => set = CheckSet::all(),
            "none" => set = CheckSet::none(),
            _ => {
                let (name, on) = match item.strip_prefix('-') {
                    Some(rest) => (rest, false),
                    None => (item, true),
                };
                if !set.set(name, on) {
                    return Err(Usage(format!("unknown check `{name}`; known: {}", CHECK_NAMES.join(", "))));
                }
            }
        }
    }
    Ok(set)
}

fn config_from(args: &RunArgs) -> Result<RunConfig, Usage> {
    let mut cfg = match (&args.config, &args.gen) {
        (Some(path), _) => RunConfig::load(path)?,
        (None, Some(gen)) => RunConfig::new(gen.clone()),
        (None, None) => return Err(Usage("either --config or --gen is required".into())),
    };
    if let Some(gen) = &args.gen {
        cfg.gen = gen.clone();
    }
    if args.max_rounds.is_some() {
        cfg.max_rounds = args.max_rounds;
    }
    if let Some(text) = &args.checks {
        cfg.checks = parse_checks(text, cfg.checks.clone())?;
    }
    if args.trace.is_some() {
        cfg.trace = args.trace.clone();
    }
    if args.no_frames {
        cfg.frames = false;
    }
    if let Some(dir) = &args.render {
        cfg.render = Some(RenderConfig {
            dir: dir.clone(),
            selection: args.select.selection(),
        });
    }
    Ok(cfg)
}

fn report_outcome(outcome: &RunOutcome) {
    for f in outcome.checker.failures.iter().take(5) {
        for c in f.failures() {
            eprintln!("round {}: {} failed at {:?}: {}", f.round, c.name, c.indices, c.detail);
        }
    }
    if !outcome.within_bound() {
        let r = &outcome.report;
        eprintln!(
            "bound violated: gathered={} rounds={} bound={} failure={:?}",
            r.gathered,
            r.rounds_used,
            round_bound(r.initial_len()),
            r.failure
        );
    }
}

fn cmd_run(args: &RunArgs) -> Result<i32, Usage> {
    let cfg = config_from(args)?;
    if args.dump_config {
        print!("{}", cfg.to_toml()?);
        return Ok(EXIT_OK);
    }
    let outcome = execute(&cfg)?;
    if let Some(path) = &cfg.trace {
        write_trace_file(&outcome.report, path)?;
    }
    if let Some(render) = &cfg.render {
        let files = render_frames(&outcome.report, &render.selection, &FrameStyle::default(), &render.dir)?;
        eprintln!("wrote {} frames to {}", files.len(), render.dir.display());
    }
    let summary = outcome.summary(&cfg.gen);
    let json = serde_json::to_string_pretty(&summary)?;
    println!("{json}");
    if let Some(path) = &args.summary {
        std::fs::write(path, json + "\n")?;
    }
    report_outcome(&outcome);
    Ok(outcome.exit_code())
}

fn cmd_generate(gen: &GenSpec, out: Option<&Path>) -> Result<i32, Usage> {
    let chain = gen.build()?;
    let points: Vec<[i64; 2]> = chain.robots.iter().map(|r| [r.pos.x, r.pos.y]).collect();
    let json = serde_json::to_string(&points)?;
    match out {
        Some(path) => std::fs::write(path, json + "\n")?,
        None => println!("{json}"),
    }
    Ok(EXIT_OK)
}

fn cmd_verify(trace: &Path, checks: &str) -> Result<i32, Usage> {
    let stored = read_trace_file(trace)?;
    let (outcome, same) = replay(&stored, &parse_checks(checks, CheckSet::all())?);
    println!(
        "reproduced={same} rounds={} gathered={} invariant_failures={} progress_pairs={} uncredited={} missing_windows={}",
        outcome.report.rounds_used,
        outcome.report.gathered,
        outcome.checker.failures.len(),
        outcome.ledger.progress.len(),
        outcome.ledger.uncredited().count(),
        outcome.ledger.missing_windows().count()
    );
    report_outcome(&outcome);
    if !same {
        eprintln!("trace differs from a fresh simulation of its initial chain");
        return Ok(EXIT_INVARIANT);
    }
    Ok(outcome.exit_code())
}

fn cmd_render(trace: &Path, out: &Path, select: &SelectArgs) -> Result<i32, Usage> {
    let report = read_trace_file(trace)?;
    let files = render_frames(&report, &select.selection(), &FrameStyle::default(), out)?;
    println!("wrote {} frames to {}", files.len(), out.display());
    Ok(EXIT_OK)
}

fn cmd_bench(family: Family, sizes: &[usize], seeds: u64, json: Option<&Path>) -> Result<i32, Usage> {
    let family = match family {
        Family::Rectangle => BenchFamily::Rectangle,
        Family::Random => BenchFamily::Random,
        Family::Octagon => BenchFamily::Octagon,
    };
    let rows = bench(family, sizes, seeds)?;
    println!("{:>8} {:>8} {:>9} {:>12} {:>10} {:>9}", "size", "n", "instances", "mean_rounds", "max_rounds", "max/n");
    for r in &rows {
        println!(
            "{:>8} {:>8} {:>9} {:>12.1} {:>10} {:>9.3}",
            r.size, r.n, r.instances, r.mean_rounds, r.max_rounds, r.max_ratio
        );
    }
    if let Some(path) = json {
        std::fs::write(path, serde_json::to_string_pretty(&rows)? + "\n")?;
    }
    Ok(if rows.iter().all(|r| r.within_bound()) {
        EXIT_OK
    } else {
        EXIT_BOUND
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Generate { gen, out } => cmd_generate(gen, out.as_deref()),
        Command::Verify { trace, checks } => cmd_verify(trace, checks),
        Command::Render { trace, out, select } => cmd_render(trace, out, select),
        Command::Bench {
            family,
            sizes,
            seeds,
            json,
        } => cmd_bench(*family, sizes, *seeds, json.as_deref()),
    };
    let code = match result {
        Ok(code) => code,
        Err(Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
    };
    ExitCode::from(code as u8)
}
