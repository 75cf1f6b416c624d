//! Deterministic CSV, SVG and run-manifest emission.

use capbound_core::geometry::{GridMask, Point, Polyline};
use capbound_core::{CellSet, Result};
use serde::Serialize;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Shortest-roundtrip float formatting: deterministic and byte-stable
/// across runs of the same build.
pub fn fmt(v: f64) -> String {
    format!("{v}")
}

pub struct Csv {
    path: PathBuf,
    lines: Vec<String>,
    columns: usize,
}

impl Csv {
    pub fn new(path: impl Into<PathBuf>, header: &[&str]) -> Self {
        Csv {
            path: path.into(),
            lines: vec![header.join(",")],
            columns: header.len(),
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.columns, "csv row width mismatch");
        self.lines.push(cells.join(","));
    }

    pub fn save(self) -> Result<PathBuf> {
        let mut text = self.lines.join("\n");
        text.push('\n');
        write_file(&self.path, text.as_bytes())?;
        Ok(self.path)
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| io_err(path, e))?;
    }
    let mut f = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(bytes).map_err(|e| io_err(path, e))
}

fn io_err(path: &Path, e: std::io::Error) -> capbound_core::Error {
    capbound_core::Error::Scene {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Minimal SVG canvas in domain coordinates (y flipped for display).
pub struct Svg {
    min: Point,
    max: Point,
    body: String,
}

impl Svg {
    pub fn new(min: Point, max: Point) -> Self {
        Svg {
            min,
            max,
            body: String::new(),
        }
    }

    fn tx(&self, p: Point) -> (f64, f64) {
        (p.x - self.min.x, self.max.y - p.y)
    }

    pub fn polyline(&mut self, pts: &[Point], stroke: &str, width: f64, close: bool) {
        let mut d = String::new();
        for (k, p) in pts.iter().enumerate() {
            let (x, y) = self.tx(*p);
            d.push_str(if k == 0 { "M" } else { "L" });
            d.push_str(&format!("{x:.4} {y:.4} "));
        }
        if close {
            d.push('Z');
        }
        self.body.push_str(&format!(
            "<path d=\"{d}\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"{width:.4}\"/>\n"
        ));
    }

    pub fn curve(&mut self, curve: &Polyline, stroke: &str, width: f64) {
        self.polyline(curve.vertices(), stroke, width, false);
    }

    pub fn cells(&mut self, mask: &GridMask, cells: &CellSet, fill: &str) {
        for c in cells.iter() {
            let p = mask.center(c as usize);
            let (x, y) = self.tx(Point::new(p.x - mask.h / 2.0, p.y + mask.h / 2.0));
            self.body.push_str(&format!(
                "<rect x=\"{x:.4}\" y=\"{y:.4}\" width=\"{w:.4}\" height=\"{w:.4}\" fill=\"{fill}\"/>\n",
                w = mask.h
            ));
        }
    }

    pub fn dot(&mut self, p: Point, r: f64, fill: &str) {
        let (x, y) = self.tx(p);
        self.body.push_str(&format!(
            "<circle cx=\"{x:.4}\" cy=\"{y:.4}\" r=\"{r:.4}\" fill=\"{fill}\"/>\n"
        ));
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let w = self.max.x - self.min.x;
        let h = self.max.y - self.min.y;
        let doc = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {w:.4} {h:.4}\" width=\"640\">\n{}</svg>\n",
            self.body
        );
        write_file(path, doc.as_bytes())
    }
}

/// Run manifest: tool version, scene fingerprint, seed, stage wall times
/// and the files produced. Written next to the outputs.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool_version: String,
    pub scene_hash: String,
    pub seed: u64,
    pub wall_times: BTreeMap<String, f64>,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(scene_hash: String, seed: u64) -> Self {
        Manifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            scene_hash,
            seed,
            wall_times: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn time(&mut self, stage: &str, secs: f64) {
        self.wall_times.insert(stage.to_string(), secs);
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn save(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        write_file(&path, text.as_bytes())?;
        Ok(path)
    }
}
