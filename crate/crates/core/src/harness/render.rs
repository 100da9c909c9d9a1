//! Static SVG frames: chain edges, robots, runner arrowheads, merge highlights.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::run::ChainDir;
use crate::scheduler::MergeEvent;
use crate::sim::{RobotRecord, SimReport, TokenRecord};

/// Which rounds to draw. With neither field set every round is drawn.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrameSelection {
    /// Draw every `every`-th round, starting at round 0.
    pub every: Option<u64>,
    /// Draw exactly these rounds.
    pub rounds: Vec<u64>,
}

impl FrameSelection {
    pub fn includes(&self, round: u64) -> bool {
        if !self.rounds.is_empty() {
            return self.rounds.contains(&round);
        }
        match self.every {
            Some(k) if k > 0 => round % k == 0,
            _ => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrameStyle {
    /// Pixels per lattice unit.
    pub scale: f64,
    pub margin: f64,
    pub robot_radius: f64,
}

impl Default for FrameStyle {
    fn default() -> Self {
        FrameStyle {
            scale: 24.0,
            margin: 24.0,
            robot_radius: 5.0,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RenderError {
    #[error("render i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("round {0} has no robot positions; record frames when simulating")]
    NoFrame(u64),
}

/// One frame as an SVG document.
pub fn render_svg(
    title: &str,
    robots: &[RobotRecord],
    tokens: &[TokenRecord],
    merges: &[MergeEvent],
    style: &FrameStyle,
) -> String {
    let (mut x0, mut y0, mut x1, mut y1) = (0i64, 0i64, 0i64, 0i64);
    if let Some(first) = robots.first() {
        (x0, y0, x1, y1) = (first[1], first[2], first[1], first[2]);
    }
    for r in robots {
        x0 = x0.min(r[1]);
        x1 = x1.max(r[1]);
        y0 = y0.min(r[2]);
        y1 = y1.max(r[2]);
    }
    let s = style.scale;
    let m = style.margin;
    let width = (x1 - x0) as f64 * s + 2.0 * m;
    let height = (y1 - y0) as f64 * s + 2.0 * m + 16.0;
    // Lattice y grows upward, SVG y downward.
    let px = |x: i64| (x - x0) as f64 * s + m;
    let py = |y: i64| (y1 - y) as f64 * s + m + 16.0;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="4" y="14" font-family="monospace" font-size="12">{title}</text>"#);
    if !robots.is_empty() {
        let mut pts = String::new();
        for r in robots.iter().chain(robots.first()) {
            let _ = write!(pts, "{:.1},{:.1} ", px(r[1]), py(r[2]));
        }
        let _ = writeln!(
            out,
            r##"<polyline points="{}" fill="none" stroke="#888" stroke-width="2"/>"##,
            pts.trim_end()
        );
    }
    let blacks: HashSet<u64> = merges.iter().flat_map(|e| e.blacks.iter().map(|b| b.0)).collect();
    let whites: HashSet<u64> = merges.iter().flat_map(|e| e.whites.iter().map(|w| w.0)).collect();
    for r in robots {
        let id = r[0] as u64;
        let (fill, stroke) = if blacks.contains(&id) {
            ("black", "black")
        } else if whites.contains(&id) {
            ("white", "black")
        } else {
            ("#bbb", "#555")
        };
        let _ = writeln!(
            out,
            r#"<circle cx="{:.1}" cy="{:.1}" r="{:.1}" fill="{fill}" stroke="{stroke}"/>"#,
            px(r[1]),
            py(r[2]),
            style.robot_radius
        );
    }
    let n = robots.len();
    for t in tokens.iter().filter(|t| t.owner < n) {
        let next = match t.dir {
            ChainDir::Forward => (t.owner + 1) % n,
            ChainDir::Backward => (t.owner + n - 1) % n,
        };
        let (a, b) = (robots[t.owner], robots[next]);
        let (ax, ay) = (px(a[1]), py(a[2]));
        let (dx, dy) = (px(b[1]) - ax, py(b[2]) - ay);
        let len = (dx * dx + dy * dy).sqrt().max(1e-9);
        let (ux, uy) = (dx / len, dy / len);
        // Arrowhead just past the runner, pointing along the run.
        let tip = (ax + ux * s * 0.55, ay + uy * s * 0.55);
        let base = (ax + ux * s * 0.2, ay + uy * s * 0.2);
        let w = s * 0.18;
        let colour = match t.dir {
            ChainDir::Forward => "#c0392b",
            ChainDir::Backward => "#2c6fbb",
        };
        let _ = writeln!(
            out,
            r#"<polygon points="{:.1},{:.1} {:.1},{:.1} {:.1},{:.1}" fill="{colour}"/>"#,
            tip.0,
            tip.1,
            base.0 - uy * w,
            base.1 + ux * w,
            base.0 + uy * w,
            base.1 - ux * w
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Write `frame_<round>.svg` for every selected round of `report` into `dir`.
/// Each frame shows the chain after that round, with its merges highlighted.
pub fn render_frames(
    report: &SimReport,
    selection: &FrameSelection,
    style: &FrameStyle,
    dir: &Path,
) -> Result<Vec<PathBuf>, RenderError> {
    std::fs::create_dir_all(dir)?;
    let width = report.records.len().max(1).to_string().len().max(6);
    let mut written = Vec::new();
    for rec in report.records.iter().filter(|r| selection.includes(r.round)) {
        if rec.robots.is_empty() {
            return Err(RenderError::NoFrame(rec.round));
        }
        let title = format!("round {}  robots {}", rec.round, rec.robots.len());
        let svg = render_svg(&title, &rec.robots, &rec.runs, &rec.events.merges, style);
        let path = dir.join(format!("frame_{:0width$}.svg", rec.round));
        std::fs::write(&path, svg)?;
        written.push(path);
    }
    Ok(written)
}
