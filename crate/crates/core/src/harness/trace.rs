//! Line-delimited JSON traces: a header line, one line per round, a summary line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::chain::ClosedChain;
use crate::sim::{SimFailure, SimReport, TraceRecord};

pub const TRACE_FORMAT: &str = "chaingather-trace";
pub const TRACE_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "line", rename_all = "snake_case")]
enum Line {
    Header {
        format: String,
        version: u32,
        max_rounds: u64,
        initial: ClosedChain,
    },
    Round(TraceRecord),
    Summary {
        rounds_used: u64,
        gathered: bool,
        failure: Option<SimFailure>,
        final_chain: ClosedChain,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("trace i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("trace line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("trace schema mismatch: found {format} v{version}, expected {TRACE_FORMAT} v{TRACE_VERSION}")]
    SchemaMismatch { format: String, version: u32 },
    #[error("trace line {line}: expected {expected}")]
    Unexpected { line: usize, expected: &'static str },
    #[error("trace truncated after {rounds} round lines")]
    Truncated { rounds: usize },
    #[error("trace summary claims {claimed} rounds but {found} round lines were read")]
    RoundCount { claimed: u64, found: usize },
}

fn write_line(sink: &mut impl Write, line: &Line) -> Result<(), TraceError> {
    serde_json::to_writer(&mut *sink, line).map_err(|source| TraceError::Json { line: 0, source })?;
    sink.write_all(b"\n")?;
    Ok(())
}

/// Serialize a report. The output is a pure function of the report.
pub fn write_trace(report: &SimReport, mut sink: impl Write) -> Result<(), TraceError> {
    write_line(
        &mut sink,
        &Line::Header {
            format: TRACE_FORMAT.to_string(),
            version: TRACE_VERSION,
            max_rounds: report.max_rounds,
            initial: report.initial.clone(),
        },
    )?;
    for rec in &report.records {
        write_line(&mut sink, &Line::Round(rec.clone()))?;
    }
    write_line(
        &mut sink,
        &Line::Summary {
            rounds_used: report.rounds_used,
            gathered: report.gathered,
            failure: report.failure.clone(),
            final_chain: report.final_chain.clone(),
        },
    )?;
    sink.flush()?;
    Ok(())
}

pub fn read_trace(source: impl BufRead) -> Result<SimReport, TraceError> {
    let mut lines = source.lines().enumerate();
    let parse = |no: usize, text: &str| -> Result<Line, TraceError> {
        serde_json::from_str(text).map_err(|source| TraceError::Json { line: no + 1, source })
    };
    let Some((no, first)) = lines.next() else {
        return Err(TraceError::Truncated { rounds: 0 });
    };
    let first = first?;
    // Check the schema before trusting the rest of the header.
    let probe: serde_json::Value =
        serde_json::from_str(&first).map_err(|source| TraceError::Json { line: no + 1, source })?;
    let format = probe.get("format").and_then(|v| v.as_str()).unwrap_or_default().to_string();
    let version = probe.get("version").and_then(|v| v.as_u64()).unwrap_or_default() as u32;
    if format != TRACE_FORMAT || version != TRACE_VERSION {
        return Err(TraceError::SchemaMismatch { format, version });
    }
    let Line::Header { max_rounds, initial, .. } = parse(no, &first)? else {
        return Err(TraceError::Unexpected { line: 1, expected: "header" });
    };
    let mut records = Vec::new();
    for (no, text) in lines {
        match parse(no, &text?)? {
            Line::Round(rec) => records.push(rec),
            Line::Summary {
                rounds_used,
                gathered,
                failure,
                final_chain,
            } => {
                if rounds_used != records.len() as u64 {
                    return Err(TraceError::RoundCount {
                        claimed: rounds_used,
                        found: records.len(),
                    });
                }
                return Ok(SimReport {
                    initial,
                    max_rounds,
                    rounds_used,
                    gathered,
                    failure,
                    final_chain,
                    records,
                });
            }
            Line::Header { .. } => {
                return Err(TraceError::Unexpected {
                    line: no + 1,
                    expected: "round or summary",
                })
            }
        }
    }
    Err(TraceError::Truncated { rounds: records.len() })
}

pub fn write_trace_file(report: &SimReport, path: &Path) -> Result<(), TraceError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    write_trace(report, BufWriter::new(File::create(path)?))
}

pub fn read_trace_file(path: &Path) -> Result<SimReport, TraceError> {
    read_trace(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::gen_rectangle;
    use crate::sim::{simulate, SimOptions};

    fn bytes(report: &SimReport) -> Vec<u8> {
        let mut out = Vec::new();
        write_trace(report, &mut out).unwrap();
        out
    }

    #[test]
    fn gathered_start_has_no_round_lines() {
        let report = simulate(&gen_rectangle(2, 2).unwrap(), SimOptions::default(), ());
        let text = String::from_utf8(bytes(&report)).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(read_trace(text.as_bytes()).unwrap(), report);
    }

    #[test]
    fn round_trip_and_truncation() {
        let report = simulate(&gen_rectangle(6, 5).unwrap(), SimOptions::default(), ());
        let raw = bytes(&report);
        assert_eq!(read_trace(raw.as_slice()).unwrap(), report);
        let text = String::from_utf8(raw).unwrap();
        let cut: Vec<&str> = text.lines().collect();
        let short = cut[..cut.len() - 1].join("\n");
        assert!(matches!(read_trace(short.as_bytes()), Err(TraceError::Truncated { .. })));
    }

    #[test]
    fn foreign_header_is_a_schema_mismatch() {
        let text = "{\"line\":\"header\",\"format\":\"chaingather-trace\",\"version\":99}\n";
        assert!(matches!(read_trace(text.as_bytes()), Err(TraceError::SchemaMismatch { version: 99, .. })));
    }
}
