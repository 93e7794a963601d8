//! File formats: configuration JSON, solution indexes, node exports.
//!
//! JSON floats are written in the shortest form that parses back to the
//! same double, so files round-trip exactly.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::configuration::{node_locations, Configuration};
use crate::error::{Error, Result};
use crate::solvers::{Provenance, SolutionSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(rename = "type")]
    ctype: Vec<usize>,
    points: Vec<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meta: Option<Value>,
}

fn malformed(message: impl Into<String>) -> Error {
    Error::Malformed {
        line: 0,
        column: 0,
        message: message.into(),
    }
}

pub fn configuration_to_json(c: &Configuration, meta: Option<Value>) -> String {
    let file = ConfigFile {
        ctype: c.ctype().counts().to_vec(),
        points: c
            .points()
            .iter()
            .map(|l| l.iter().map(|p| [p.re, p.im]).collect())
            .collect(),
        meta,
    };
    let mut s = serde_json::to_string_pretty(&file).expect("plain data serializes");
    s.push('\n');
    s
}

/// Parse a configuration file, returning its `meta` block alongside.
pub fn configuration_from_json(text: &str) -> Result<(Configuration, Option<Value>)> {
    let file: ConfigFile = serde_json::from_str(text).map_err(|e| Error::Malformed {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if file.ctype.len() != file.points.len() {
        return Err(malformed(format!(
            "type lists {} levels but points has {}",
            file.ctype.len(),
            file.points.len()
        )));
    }
    for (k, (n, level)) in file.ctype.iter().zip(&file.points).enumerate() {
        if *n != level.len() {
            return Err(malformed(format!(
                "level {} declares {} points but lists {}",
                k + 1,
                n,
                level.len()
            )));
        }
    }
    let points = file
        .points
        .iter()
        .map(|l| l.iter().map(|&[re, im]| Complex64::new(re, im)).collect())
        .collect();
    Ok((Configuration::new(points)?, file.meta))
}

pub fn read_configuration(path: &Path) -> Result<(Configuration, Option<Value>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    configuration_from_json(&text)
}

/// Write through a temporary file in the same directory, then rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let io = |e: std::io::Error| Error::Io(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn complex_json(z: Complex64) -> Value {
    serde_json::json!([z.re, z.im])
}

pub fn provenance_meta(p: &Provenance) -> Value {
    serde_json::json!({
        "solver": p.solver,
        "branch": p.branch,
        "alpha": p.alpha.map(complex_json),
        "residual": p.residual,
        "nondegenerate": p.nondegenerate,
        "reduces_to": p.reduces_to.as_ref().map(|t| t.to_string()),
    })
}

#[derive(Debug, Serialize)]
struct IndexEntry<'a> {
    file: &'a str,
    branch: &'a str,
    alpha: Option<[f64; 2]>,
    residual: f64,
    nondegenerate: bool,
    reduces_to: Option<String>,
}

#[derive(Debug, Serialize)]
struct Index<'a> {
    #[serde(rename = "type")]
    ctype: &'a [usize],
    solutions: Vec<IndexEntry<'a>>,
}

/// The index of a solution set; `files[i]` names the file of solution `i`.
pub fn solution_index_json(set: &SolutionSet, files: &[String]) -> String {
    let index = Index {
        ctype: set.ctype.counts(),
        solutions: set
            .solutions
            .iter()
            .zip(files)
            .map(|(s, f)| IndexEntry {
                file: f,
                branch: &s.provenance.branch,
                alpha: s.provenance.alpha.map(|a| [a.re, a.im]),
                residual: s.provenance.residual,
                nondegenerate: s.provenance.nondegenerate,
                reduces_to: s.provenance.reduces_to.as_ref().map(|t| t.to_string()),
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&index).expect("plain data serializes");
    s.push('\n');
    s
}

/// Shortest decimal that parses back to `x`, with an exponent for very
/// large or small magnitudes.
fn shortest(x: f64) -> String {
    serde_json::to_string(&x).expect("finite float")
}

/// Node locations as CSV with one-based `level,index`.
pub fn nodes_csv(c: &Configuration) -> String {
    let mut out = String::from("level,index,re,im\n");
    for (k, level) in node_locations(c).locations.iter().enumerate() {
        for (i, z) in level.iter().enumerate() {
            writeln!(out, "{},{},{},{}", k + 1, i + 1, shortest(z.re), shortest(z.im)).expect("writing to a string");
        }
    }
    out
}

pub fn nodes_json(c: &Configuration) -> String {
    let nodes: Vec<Vec<[f64; 2]>> = node_locations(c)
        .locations
        .iter()
        .map(|l| l.iter().map(|z| [z.re, z.im]).collect())
        .collect();
    let v = serde_json::json!({ "type": c.ctype().counts(), "nodes": nodes });
    let mut s = serde_json::to_string_pretty(&v).expect("plain data serializes");
    s.push('\n');
    s
}

pub const SVG_WIDTH: f64 = 640.0;
pub const SVG_HEIGHT: f64 = 480.0;
pub const SVG_MARGIN: f64 = 40.0;

/// Affine map from the log cylinder to SVG user units. The rectangle
/// `[x_min, x_max] x [-pi, pi]` fills the plot area; imaginary parts
/// grow upwards:
///
/// ```text
/// X = M + (re - x_min) / (x_max - x_min) * (W - 2M)
/// Y = M + (pi - im) / (2 pi) * (H - 2M)
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Viewport {
    pub x_min: f64,
    pub x_max: f64,
}

impl Viewport {
    /// One unit of padding either side of the real parts.
    pub fn for_configuration(c: &Configuration) -> Self {
        let nodes = node_locations(c);
        let (lo, hi) = nodes
            .locations
            .iter()
            .flatten()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), z| (lo.min(z.re), hi.max(z.re)));
        Viewport {
            x_min: lo - 1.0,
            x_max: hi + 1.0,
        }
    }

    pub fn map(&self, z: Complex64) -> (f64, f64) {
        let x = SVG_MARGIN + (z.re - self.x_min) / (self.x_max - self.x_min) * (SVG_WIDTH - 2.0 * SVG_MARGIN);
        let y = SVG_MARGIN + (PI - z.im) / (2.0 * PI) * (SVG_HEIGHT - 2.0 * SVG_MARGIN);
        (x, y)
    }
}

const MARKER_SIZE: f64 = 5.0;

fn marker(shape: usize, x: f64, y: f64, level: usize, index: usize) -> String {
    let r = MARKER_SIZE;
    let attrs = format!(r#"class="node level-{level}" data-level="{level}" data-index="{index}""#);
    match shape % 4 {
        0 => format!(r#"<circle {attrs} cx="{x}" cy="{y}" r="{r}"/>"#),
        1 => format!(
            r#"<rect {attrs} x="{}" y="{}" width="{}" height="{}"/>"#,
            x - r,
            y - r,
            2.0 * r,
            2.0 * r
        ),
        2 => format!(
            r#"<polygon {attrs} points="{},{} {},{} {},{}"/>"#,
            x,
            y - r,
            x + r,
            y + r,
            x - r,
            y + r
        ),
        _ => format!(
            r#"<polygon {attrs} points="{},{} {},{} {},{} {},{}"/>"#,
            x,
            y - r,
            x + r,
            y,
            x,
            y + r,
            x - r,
            y
        ),
    }
}

/// Scatter plot of the node locations over the fundamental domain, one
/// marker shape per level (circle, square, triangle, diamond, repeating).
pub fn nodes_svg(c: &Configuration) -> String {
    let vp = Viewport::for_configuration(c);
    let (w, h, m) = (SVG_WIDTH, SVG_HEIGHT, SVG_MARGIN);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(
        s,
        "<desc>nodes of a {} configuration; X = {m} + (re - {}) / {} * {}, Y = {m} + (pi - im) / (2 pi) * {}</desc>",
        c.ctype(),
        vp.x_min,
        vp.x_max - vp.x_min,
        w - 2.0 * m,
        h - 2.0 * m
    );
    let _ = writeln!(
        s,
        r#"<rect class="domain" x="{m}" y="{m}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        w - 2.0 * m,
        h - 2.0 * m
    );
    let labels = ["-π", "-π/2", "0", "π/2", "π"];
    for (j, label) in labels.iter().enumerate() {
        let im = -PI + j as f64 * PI / 2.0;
        let (_, y) = vp.map(Complex64::new(vp.x_min, im));
        let _ = writeln!(
            s,
            r#"<line class="tick" x1="{}" y1="{y}" x2="{m}" y2="{y}" stroke="black"/><text x="{}" y="{}" font-size="12" text-anchor="end">{label}</text>"#,
            m - 6.0,
            m - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(s, r#"<g fill="none" stroke="black">"#);
    for (k, level) in node_locations(c).locations.iter().enumerate() {
        for (i, &z) in level.iter().enumerate() {
            let (x, y) = vp.map(z);
            let _ = writeln!(s, "{}", marker(k, x, y, k + 1, i + 1));
        }
    }
    s.push_str("</g>\n</svg>\n");
    s
}
