//! Python bindings: chains, generators, simulation with checks, traces, frames, benches.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use chaingather::chain::{is_gathered, validate_chain};
use chaingather::config::RunConfig;
use chaingather::experiment::{self, BenchFamily, RunOutcome};
use chaingather::harness::{read_trace_file, render_frames, write_trace_file, CheckSet, FrameSelection, FrameStyle};
use chaingather::{ClosedChain, GenSpec, GridPoint};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn io_err(e: impl std::fmt::Display) -> PyErr {
    PyIOError::new_err(e.to_string())
}

/// Parse a generator spec and build its chain.
pub fn build_chain(spec: &str) -> Result<ClosedChain, String> {
    let gen: GenSpec = spec.parse().map_err(|e: chaingather::generator::ParseGenError| e.to_string())?;
    gen.build().map_err(|e| e.to_string())
}

/// Resolve `"all"`, `"none"` or a comma list of check names.
pub fn check_set(names: &str) -> Result<CheckSet, String> {
    let mut set = CheckSet::none();
    for name in names.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match name {
            "all" => set = CheckSet::all(),
            "none" => set = CheckSet::none(),
            _ if set.set(name, true) => {}
            _ => return Err(format!("unknown check `{name}`")),
        }
    }
    Ok(set)
}

/// A closed chain of robots on the grid.
#[pyclass(name = "Chain", module = "chaingather_py")]
#[derive(Clone)]
pub struct PyChain {
    inner: ClosedChain,
}

#[pymethods]
impl PyChain {
    /// Chain through the given lattice points, in order.
    #[new]
    fn new(positions: Vec<(i64, i64)>) -> Self {
        PyChain {
            inner: ClosedChain::from_positions(positions.into_iter().map(|(x, y)| GridPoint::new(x, y))),
        }
    }

    /// Build a chain from a generator spec such as `"rectangle:10x10"`.
    #[staticmethod]
    fn generate(spec: &str) -> PyResult<Self> {
        build_chain(spec).map(|inner| PyChain { inner }).map_err(value_err)
    }

    #[getter]
    fn positions(&self) -> Vec<(i64, i64)> {
        self.inner.robots.iter().map(|r| (r.pos.x, r.pos.y)).collect()
    }

    /// Descriptions of every adjacency or run-state violation; empty if valid.
    fn violations(&self) -> Vec<String> {
        validate_chain(&self.inner).iter().map(ToString::to_string).collect()
    }

    fn is_gathered(&self) -> bool {
        is_gathered(&self.inner)
    }

    fn bounding_box(&self) -> (i64, i64) {
        self.inner.bounding_box()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Chain(n={})", self.inner.len())
    }
}

/// A finished simulation with its invariant checks and progress-pair ledger.
#[pyclass(name = "Report", module = "chaingather_py")]
pub struct PyReport {
    outcome: RunOutcome,
    gen: Option<GenSpec>,
}

#[pymethods]
impl PyReport {
    #[getter]
    fn rounds_used(&self) -> u64 {
        self.outcome.report.rounds_used
    }

    #[getter]
    fn gathered(&self) -> bool {
        self.outcome.report.gathered
    }

    #[getter]
    fn merge_count(&self) -> usize {
        self.outcome.report.merge_count()
    }

    #[getter]
    fn initial(&self) -> PyChain {
        PyChain {
            inner: self.outcome.report.initial.clone(),
        }
    }

    #[getter]
    fn final_chain(&self) -> PyChain {
        PyChain {
            inner: self.outcome.report.final_chain.clone(),
        }
    }

    /// Whether gathering finished within `27 · n` rounds.
    fn within_bound(&self) -> bool {
        self.outcome.within_bound()
    }

    /// `(round, check name, chain indices, detail)` for every failed check.
    fn invariant_failures(&self) -> Vec<(u64, String, Vec<usize>, String)> {
        self.outcome
            .checker
            .failures
            .iter()
            .flat_map(|r| r.failures().map(move |c| (r.round, c.name.clone(), c.indices.clone(), c.detail.clone())))
            .collect()
    }

    /// Robot positions after `round`, if frames were recorded.
    fn positions(&self, round: u64) -> PyResult<Vec<(i64, i64)>> {
        self.outcome
            .report
            .records
            .iter()
            .find(|r| r.round == round)
            .map(|r| r.robots.iter().map(|p| (p[1], p[2])).collect())
            .ok_or_else(|| value_err(format!("no record for round {round}")))
    }

    fn summary<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let gen = self.gen.clone().unwrap_or(GenSpec::Rectangle { w: 0, h: 0 });
        let s = self.outcome.summary(&gen);
        let d = PyDict::new_bound(py);
        if self.gen.is_some() {
            d.set_item("gen", s.gen)?;
        }
        d.set_item("n", s.n)?;
        d.set_item("rounds_used", s.rounds_used)?;
        d.set_item("bound", s.bound)?;
        d.set_item("gathered", s.gathered)?;
        d.set_item("final_box", s.final_box)?;
        d.set_item("merges", s.merges)?;
        d.set_item("final_len", s.final_len)?;
        d.set_item("invariant_failures", s.invariant_failures)?;
        d.set_item("good_pairs", s.good_pairs)?;
        d.set_item("progress_pairs", s.progress_pairs)?;
        d.set_item("uncredited_pairs", s.uncredited_pairs)?;
        d.set_item("ambiguous_credits", s.ambiguous_credits)?;
        d.set_item("missing_windows", s.missing_windows)?;
        Ok(d)
    }

    fn write_trace(&self, path: PathBuf) -> PyResult<()> {
        write_trace_file(&self.outcome.report, &path).map_err(io_err)
    }

    /// Write SVG frames; returns the file paths.
    #[pyo3(signature = (dir, every=None, rounds=None))]
    fn render(&self, dir: PathBuf, every: Option<u64>, rounds: Option<Vec<u64>>) -> PyResult<Vec<PathBuf>> {
        let selection = FrameSelection {
            every,
            rounds: rounds.unwrap_or_default(),
        };
        render_frames(&self.outcome.report, &selection, &FrameStyle::default(), &dir).map_err(io_err)
    }

    fn __repr__(&self) -> String {
        let r = &self.outcome.report;
        format!("Report(n={}, rounds_used={}, gathered={})", r.initial_len(), r.rounds_used, r.gathered)
    }
}

/// Simulate a chain with the named checks (`"all"`, `"none"` or a comma list).
#[pyfunction]
#[pyo3(signature = (chain, max_rounds=None, checks="all", frames=true))]
fn simulate(chain: &PyChain, max_rounds: Option<u64>, checks: &str, frames: bool) -> PyResult<PyReport> {
    let checks = check_set(checks).map_err(value_err)?;
    let mut checker = chaingather::harness::InvariantChecker::new(checks);
    let options = chaingather::SimOptions {
        max_rounds,
        record_frames: frames,
    };
    let report = chaingather::simulate(&chain.inner, options, &mut checker);
    let events: Vec<_> = report.events().cloned().collect();
    let ledger = chaingather::harness::track_progress_pairs(&report.initial, &events);
    Ok(PyReport {
        outcome: RunOutcome {
            report,
            checker,
            ledger,
        },
        gen: None,
    })
}

/// Run a TOML run configuration (the same schema the CLI reads).
#[pyfunction]
fn run_config(toml_text: &str) -> PyResult<PyReport> {
    let cfg = RunConfig::from_toml(toml_text).map_err(value_err)?;
    let outcome = experiment::execute(&cfg).map_err(value_err)?;
    Ok(PyReport {
        outcome,
        gen: Some(cfg.gen),
    })
}

/// Load a trace file and re-check it by simulating its initial chain again.
/// Returns the report and whether the trace was reproduced exactly.
#[pyfunction]
fn verify_trace(path: PathBuf) -> PyResult<(PyReport, bool)> {
    let stored = read_trace_file(&path).map_err(io_err)?;
    let (outcome, same) = experiment::replay(&stored, &CheckSet::all());
    Ok((PyReport { outcome, gen: None }, same))
}

/// Rounds per size: list of dicts with `size, n, instances, mean_rounds, max_rounds, max_ratio`.
#[pyfunction]
#[pyo3(name = "bench", signature = (family, sizes, seeds=10))]
fn bench_sizes<'py>(py: Python<'py>, family: &str, sizes: Vec<usize>, seeds: u64) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let family = match family {
        "rectangle" => BenchFamily::Rectangle,
        "random" => BenchFamily::Random,
        "octagon" => BenchFamily::Octagon,
        other => return Err(value_err(format!("unknown family `{other}`"))),
    };
    let rows = py.allow_threads(|| experiment::bench(family, &sizes, seeds)).map_err(value_err)?;
    rows.into_iter()
        .map(|r| {
            let d = PyDict::new_bound(py);
            d.set_item("size", r.size)?;
            d.set_item("n", r.n)?;
            d.set_item("instances", r.instances)?;
            d.set_item("mean_rounds", r.mean_rounds)?;
            d.set_item("max_rounds", r.max_rounds)?;
            d.set_item("max_ratio", r.max_ratio)?;
            d.set_item("all_gathered", r.all_gathered)?;
            Ok(d)
        })
        .collect()
}

/// Rounds allowed by the linear bound for `n` robots.
#[pyfunction]
fn round_bound(n: usize) -> u64 {
    experiment::round_bound(n)
}

#[pymodule]
fn chaingather_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyChain>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add_function(wrap_pyfunction!(verify_trace, m)?)?;
    m.add_function(wrap_pyfunction!(bench_sizes, m)?)?;
    m.add_function(wrap_pyfunction!(round_bound, m)?)?;
    Ok(())
}
