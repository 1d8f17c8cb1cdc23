//! CSV tables, key-value reports and hand-written SVG.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

/// Shortest representation that round-trips.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// In-memory CSV table; written with a header row and `\n` terminators.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        // Writing to a Vec cannot fail.
        w.write_record(&self.header).expect("in-memory csv");
        for r in &self.rows {
            w.write_record(r).expect("in-memory csv");
        }
        w.into_inner().expect("in-memory csv")
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        fs::write(path, self.to_bytes()).map_err(io_err(path))
    }
}

/// `key=value` lines.
#[derive(Default)]
pub struct Report {
    text: String,
}

impl Report {
    pub fn kv(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.text, "{key}={value}");
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        fs::write(path, &self.text).map_err(io_err(path))
    }
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(io_err(path))
}

pub fn out_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

pub const SVG_SIZE: f64 = 800.0;
const MARGIN: f64 = 50.0;

/// 800x800 drawing with a linear, aspect preserving map from a data window.
pub struct Canvas {
    x0: f64,
    y0: f64,
    scale: f64,
    body: String,
}

impl Canvas {
    /// The window `[xmin, xmax] x [ymin, ymax]` is centred and scaled to fit.
    pub fn new(xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Self {
        let span = (xmax - xmin).max(ymax - ymin).max(1e-9);
        let cx = 0.5 * (xmin + xmax);
        let cy = 0.5 * (ymin + ymax);
        Canvas {
            x0: cx - 0.5 * span,
            y0: cy - 0.5 * span,
            scale: (SVG_SIZE - 2.0 * MARGIN) / span,
            body: String::new(),
        }
    }

    pub fn map(&self, x: f64, y: f64) -> (f64, f64) {
        (MARGIN + (x - self.x0) * self.scale, SVG_SIZE - MARGIN - (y - self.y0) * self.scale)
    }

    pub fn line(&mut self, a: (f64, f64), b: (f64, f64), style: &str) {
        let (x1, y1) = self.map(a.0, a.1);
        let (x2, y2) = self.map(b.0, b.1);
        let _ = writeln!(self.body, r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" {style}/>"#);
    }

    pub fn polyline(&mut self, pts: &[(f64, f64)], style: &str) {
        if pts.len() < 2 {
            return;
        }
        let mut coords = String::new();
        for (i, &(x, y)) in pts.iter().enumerate() {
            let (px, py) = self.map(x, y);
            if i > 0 {
                coords.push(' ');
            }
            let _ = write!(coords, "{px:.2},{py:.2}");
        }
        let _ = writeln!(self.body, r#"<polyline points="{coords}" fill="none" {style}/>"#);
    }

    pub fn circle(&mut self, c: (f64, f64), r: f64, style: &str) {
        let (x, y) = self.map(c.0, c.1);
        let _ = writeln!(self.body, r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r}" {style}/>"#);
    }

    /// Square marker of side `side` pixels centred on `c`.
    pub fn square(&mut self, c: (f64, f64), side: f64, style: &str) {
        let (x, y) = self.map(c.0, c.1);
        let h = side / 2.0;
        let _ = writeln!(
            self.body,
            r#"<rect x="{:.2}" y="{:.2}" width="{side}" height="{side}" {style}/>"#,
            x - h,
            y - h
        );
    }

    /// Text at pixel coordinates.
    pub fn label(&mut self, px: f64, py: f64, text: &str) {
        let escaped = text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");
        let _ = writeln!(self.body, r#"<text x="{px:.2}" y="{py:.2}" font-family="sans-serif" font-size="14">{escaped}</text>"#);
    }

    pub fn finish(self) -> String {
        format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"800\" viewBox=\"0 0 800 800\">\n<rect x=\"0\" y=\"0\" width=\"800\" height=\"800\" fill=\"white\"/>\n{}</svg>\n",
            self.body
        )
    }
}

/// Distinct stroke colours for trajectories.
pub fn palette(i: usize) -> &'static str {
    const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];
    COLORS[i % COLORS.len()]
}
