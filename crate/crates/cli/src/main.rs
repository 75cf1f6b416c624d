//! capbound: batch front end for conformal capacities, capacitary
//! distances, boundary-element suites, traces and invariance checks.
//!
//! Exit codes: 0 success, 2 scene/validation error, 3 numerical failure.

mod output;

use capbound_core::boundary::BoundaryElementEstimate;
use capbound_core::capmetric::MetricContext;
use capbound_core::maps::{invariance_check, AnalyticMap, C};
use capbound_core::scene::{scene_hash, SceneFile};
use capbound_core::sobolev::{make_function, trace, FormulaTag};
use capbound_core::suites;
use capbound_core::{condenser_capacity, Error, Point, Result};
use clap::{Args, Parser, Subcommand};
use output::{fmt, Csv, Manifest, Svg};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "capbound", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Scene file (JSON).
    #[arg(long)]
    scene: PathBuf,
    /// Override the scene resolution.
    #[arg(long)]
    h: Option<f64>,
    /// Override the scene refinement count.
    #[arg(long)]
    refine: Option<u32>,
    /// Override the scene seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (CAPBOUND_JOBS as fallback).
    #[arg(long)]
    jobs: Option<usize>,
    /// Write real wall times into CSV rows (off by default so reruns are
    /// byte-identical).
    #[arg(long)]
    timings: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Condenser capacity of the scene's plate pair.
    Capacity {
        #[command(flatten)]
        common: Common,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Capacitary distances for a CSV of point pairs.
    Distance {
        #[command(flatten)]
        common: Common,
        /// Input CSV with columns x1,y1,x2,y2.
        #[arg(long)]
        pairs: PathBuf,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Directory for optimizing-curve SVG overlays.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Boundary-element suite (disk, slit, comb or fan).
    Boundary {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        suite: String,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Boundary traces of a catalog function along suite elements.
    Trace {
        #[command(flatten)]
        common: Common,
        /// Function tag: coordinate_x, harmonic_re_z, sqrt_singularity,
        /// radial_log.
        #[arg(long)]
        function: String,
        /// Elements directory produced by the boundary subcommand.
        #[arg(long)]
        elements: PathBuf,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Capacity budget for the companion weak-Luzin report.
        #[arg(long, default_value_t = 12.0)]
        luzin_eps: f64,
    },
    /// Capacity and metric behavior under an analytic test map.
    Invariance {
        #[command(flatten)]
        common: Common,
        /// Map spec: identity | mobius:<ax>,<ay> | stretch:<lambda> |
        /// power:<alpha> | joukowski.
        #[arg(long)]
        map: String,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Aggregates the CSV outputs of a results directory.
    Report {
        /// Results directory to scan.
        #[arg(long)]
        dir: PathBuf,
        /// Summary document to write.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("capbound: {e}");
            std::process::exit(if e.is_validation() { 2 } else { 3 });
        }
    }
}

fn init_jobs(jobs: Option<usize>) {
    let jobs = jobs.or_else(|| {
        std::env::var("CAPBOUND_JOBS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = jobs {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
}

struct LoadedScene {
    scene: SceneFile,
    hash: String,
}

fn load_scene(common: &Common) -> Result<LoadedScene> {
    init_jobs(common.jobs);
    let (mut scene, text) = SceneFile::load(&common.scene)?;
    if let Some(h) = common.h {
        scene.resolution = h;
        scene.validate(&common.scene.display().to_string())?;
    }
    if let Some(r) = common.refine {
        scene.refine = r;
    }
    if let Some(s) = common.seed {
        scene.seed = s;
    }
    Ok(LoadedScene {
        scene,
        hash: scene_hash(text.as_bytes()),
    })
}

fn wall_cell(timings: bool, secs: f64) -> String {
    if timings {
        fmt(secs)
    } else {
        "na".to_string()
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Capacity { common, out } => cmd_capacity(&common, &out),
        Command::Distance {
            common,
            pairs,
            out,
            svg,
        } => cmd_distance(&common, &pairs, &out, svg.as_deref()),
        Command::Boundary { common, suite, out } => cmd_boundary(&common, &suite, &out),
        Command::Trace {
            common,
            function,
            elements,
            out,
            luzin_eps,
        } => cmd_trace(&common, &function, &elements, &out, luzin_eps),
        Command::Invariance { common, map, out } => cmd_invariance(&common, &map, &out),
        Command::Report { dir, out } => cmd_report(&dir, &out),
    }
}

fn cmd_capacity(common: &Common, out: &Path) -> Result<()> {
    let loaded = load_scene(common)?;
    let scene = &loaded.scene;
    let condenser = scene.condenser()?;
    let t0 = std::time::Instant::now();
    let (est, _field) = condenser_capacity(&condenser, scene.resolution, scene.refine)?;
    let elapsed = t0.elapsed().as_secs_f64();
    let mut csv = Csv::new(out, &["value", "h_list", "error_indicator", "iterations", "wall_time"]);
    csv.row(&[
        fmt(est.value),
        est.resolutions_used
            .iter()
            .map(|h| fmt(*h))
            .collect::<Vec<_>>()
            .join(";"),
        fmt(est.error_indicator),
        est.iterations.to_string(),
        wall_cell(common.timings, est.wall_time),
    ]);
    let path = csv.save()?;
    let mut manifest = Manifest::new(loaded.hash, scene.seed);
    manifest.time("capacity", elapsed);
    manifest.output(&path);
    manifest.save(out.parent().unwrap_or(Path::new(".")))?;
    Ok(())
}

fn parse_pairs(path: &Path) -> Result<Vec<(Point, Point)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Scene {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let mut pairs = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (ln == 0 && line.starts_with(|c: char| c.is_alphabetic())) {
            continue;
        }
        let nums: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Scene {
                path: format!("{}:{}", path.display(), ln + 1),
                message: e.to_string(),
            })?;
        if nums.len() != 4 {
            return Err(Error::Scene {
                path: format!("{}:{}", path.display(), ln + 1),
                message: "expected x1,y1,x2,y2".to_string(),
            });
        }
        pairs.push((Point::new(nums[0], nums[1]), Point::new(nums[2], nums[3])));
    }
    Ok(pairs)
}

fn cmd_distance(common: &Common, pairs: &Path, out: &Path, svg: Option<&Path>) -> Result<()> {
    let loaded = load_scene(common)?;
    let scene = &loaded.scene;
    let pairs = parse_pairs(pairs)?;
    let ctx = scene.metric_context()?;
    let t0 = std::time::Instant::now();
    let mut csv = Csv::new(
        out,
        &["x1", "y1", "x2", "y2", "value", "term_F", "term_boundary", "curve_id"],
    );
    let estimates = capbound_core::capmetric::rho_many(&ctx, &pairs)?;
    let mut manifest = Manifest::new(loaded.hash, scene.seed);
    for (k, ((x, y), d)) in pairs.iter().zip(&estimates).enumerate() {
        let curve_id = format!("curve{k:03}");
        csv.row(&[
            fmt(x.x),
            fmt(x.y),
            fmt(y.x),
            fmt(y.y),
            fmt(d.value),
            fmt(d.term_f),
            fmt(d.term_boundary),
            curve_id.clone(),
        ]);
        if let Some(dir) = svg {
            let bb = scene.domain.bounding_box();
            let mut canvas = Svg::new(bb.min, bb.max);
            let mut outline = scene.domain.outline(256);
            outline.push(outline[0]);
            canvas.polyline(&outline, "#888", scene.resolution / 2.0, false);
            canvas.curve(&d.curve, "#c22", scene.resolution);
            canvas.dot(*x, scene.resolution, "#22c");
            canvas.dot(*y, scene.resolution, "#22c");
            let path = dir.join(format!("distance_{curve_id}.svg"));
            canvas.save(&path)?;
            manifest.output(&path);
        }
    }
    manifest.time("distance", t0.elapsed().as_secs_f64());
    let path = csv.save()?;
    manifest.output(&path);
    manifest.save(out.parent().unwrap_or(Path::new(".")))?;
    Ok(())
}

/// Serialized boundary element, the interchange format between the
/// boundary and trace subcommands.
#[derive(Serialize, Deserialize)]
struct ElementFile {
    suite: String,
    id: String,
    tol: f64,
    sequences: Vec<capbound_core::boundary::BoundarySequence>,
}

fn cmd_boundary(common: &Common, suite: &str, out: &Path) -> Result<()> {
    let loaded = load_scene(common)?;
    let seed = loaded.scene.seed;
    let t0 = std::time::Instant::now();
    let mut manifest = Manifest::new(loaded.hash, seed);
    std::fs::create_dir_all(out.join("elements")).map_err(|e| Error::Scene {
        path: out.display().to_string(),
        message: e.to_string(),
    })?;
    let mut verdicts = Csv::new(
        out.join("verdicts.csv"),
        &["suite", "i", "j", "verdict", "cross_deep"],
    );
    let mut profiles = Csv::new(
        out.join("profiles.csv"),
        &["suite", "sequence", "depth", "tail_max"],
    );
    let mut elements: Vec<ElementFile> = Vec::new();

    match suite {
        "disk" => {
            let (ctx, outcome) = suites::disk_suite(seed)?;
            for (i, j, v, cross) in &outcome.verdicts {
                verdicts.row(&[
                    "disk".into(),
                    i.to_string(),
                    j.to_string(),
                    format!("{v:?}"),
                    fmt(*cross),
                ]);
            }
            for (si, p) in outcome.profiles.iter().enumerate() {
                for (d, v) in &p.rows {
                    profiles.row(&["disk".into(), si.to_string(), d.to_string(), fmt(*v)]);
                }
            }
            for (k, (seq, imp)) in outcome
                .sequences
                .iter()
                .zip(&outcome.impressions)
                .enumerate()
            {
                elements.push(ElementFile {
                    suite: "disk".into(),
                    id: format!("radial{k}"),
                    tol: suites::DISK_TOL_DISTINCT,
                    sequences: vec![seq.clone()],
                });
                let bb = ctx.config.domain.bounding_box();
                let mut canvas = Svg::new(bb.min, bb.max);
                let mut outline = ctx.config.domain.outline(256);
                outline.push(outline[0]);
                canvas.polyline(&outline, "#888", outcome.h / 2.0, false);
                canvas.cells(ctx.fine_mask(), &imp.cells, "#c22");
                canvas.save(&out.join(format!("disk_radial{k}.svg")))?;
            }
        }
        "slit" => {
            let (ctx, outcome) = suites::slit_suite(seed)?;
            verdicts.row(&[
                "slit".into(),
                "0".into(),
                "1".into(),
                format!("{:?}", outcome.verdict),
                fmt(outcome.cross_deep),
            ]);
            for (si, p) in outcome.profiles.iter().enumerate() {
                for (d, v) in &p.rows {
                    profiles.row(&["slit".into(), si.to_string(), d.to_string(), fmt(*v)]);
                }
            }
            elements.push(ElementFile {
                suite: "slit".into(),
                id: "above".into(),
                tol: suites::SLIT_TOL,
                sequences: vec![outcome.above.clone()],
            });
            elements.push(ElementFile {
                suite: "slit".into(),
                id: "below".into(),
                tol: suites::SLIT_TOL,
                sequences: vec![outcome.below.clone()],
            });
            let _ = ctx;
        }
        "comb" => {
            let levels = 3;
            let (ctx, outcome) = suites::comb_suite(levels, seed)?;
            let mut column = Csv::new(
                out.join("comb_column.csv"),
                &["level", "rho"],
            );
            for (n, v) in &outcome.column {
                column.row(&[n.to_string(), fmt(*v)]);
            }
            manifest.output(&column.save()?);
            elements.push(ElementFile {
                suite: "comb".into(),
                id: "bottom".into(),
                tol: suites::DISK_TOL_DISTINCT,
                sequences: outcome.bottom_sequences.clone(),
            });
            let bb = ctx.config.domain.bounding_box();
            let mut canvas = Svg::new(bb.min, bb.max);
            let mut outline = ctx.config.domain.outline(4);
            outline.push(outline[0]);
            canvas.polyline(&outline, "#888", suites::COMB_H, false);
            canvas.cells(ctx.fine_mask(), &outcome.impression.cells, "#c22");
            canvas.save(&out.join("comb_bottom.svg"))?;
        }
        "fan" => {
            let (ctx, outcome) = suites::fan_suite(seed)?;
            for (si, p) in outcome.profiles.iter().enumerate() {
                for (d, v) in &p.rows {
                    profiles.row(&["fan".into(), si.to_string(), d.to_string(), fmt(*v)]);
                }
            }
            for (i, j, v, cross) in &outcome.verdicts {
                verdicts.row(&[
                    "fan".into(),
                    i.to_string(),
                    j.to_string(),
                    format!("{v:?}"),
                    fmt(*cross),
                ]);
            }
            for (k, (seq, imp)) in outcome
                .sequences
                .iter()
                .zip(&outcome.impressions)
                .enumerate()
            {
                elements.push(ElementFile {
                    suite: "fan".into(),
                    id: format!("sector{k}"),
                    tol: suites::FAN_TOL,
                    sequences: vec![seq.clone()],
                });
                let bb = ctx.config.domain.bounding_box();
                let mut canvas = Svg::new(bb.min, bb.max);
                let mut outline = ctx.config.domain.outline(256);
                outline.push(outline[0]);
                canvas.polyline(&outline, "#888", suites::FAN_H / 2.0, false);
                canvas.cells(ctx.fine_mask(), &imp.cells, "#c22");
                canvas.save(&out.join(format!("fan_sector{k}.svg")))?;
            }
        }
        other => {
            return Err(Error::invalid(
                "suite",
                format!("unknown suite {other}; expected disk|slit|comb|fan"),
            ))
        }
    }

    for el in &elements {
        let path = out.join("elements").join(format!("{}_{}.json", el.suite, el.id));
        let text = serde_json::to_string_pretty(el).expect("element serializes");
        output::write_file(&path, text.as_bytes())?;
        manifest.output(&path);
    }
    manifest.output(&verdicts.save()?);
    manifest.output(&profiles.save()?);
    manifest.time(&format!("boundary_{suite}"), t0.elapsed().as_secs_f64());
    manifest.save(out)?;
    Ok(())
}

fn cmd_trace(
    common: &Common,
    function: &str,
    elements_dir: &Path,
    out: &Path,
    luzin_eps: f64,
) -> Result<()> {
    let loaded = load_scene(common)?;
    let scene = &loaded.scene;
    let tag = FormulaTag::parse(function)?;
    let ctx: MetricContext = scene.metric_context()?;
    let u = make_function(&scene.domain, tag, scene.resolution)?;
    let t0 = std::time::Instant::now();

    let mut files: Vec<PathBuf> = std::fs::read_dir(elements_dir)
        .map_err(|e| Error::Scene {
            path: elements_dir.display().to_string(),
            message: e.to_string(),
        })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().map(|x| x == "json").unwrap_or(false))
        .collect();
    files.sort();
    let mut ids = Vec::new();
    let mut estimates = Vec::new();
    for f in &files {
        let text = std::fs::read_to_string(f).map_err(|e| Error::Scene {
            path: f.display().to_string(),
            message: e.to_string(),
        })?;
        let ef: ElementFile = serde_json::from_str(&text).map_err(|e| Error::Scene {
            path: f.display().to_string(),
            message: e.to_string(),
        })?;
        ids.push(format!("{}_{}", ef.suite, ef.id));
        estimates.push(BoundaryElementEstimate::from_parts(ef.sequences, ef.tol)?);
    }
    let report = trace(&u, &estimates, &ctx, 5e-2)?;
    let mut csv = Csv::new(
        out,
        &["element", "traces", "spread", "verdict", "trapping_capacity"],
    );
    for (id, row) in ids.iter().zip(&report.rows) {
        csv.row(&[
            id.clone(),
            row.member_traces
                .iter()
                .map(|v| fmt(*v))
                .collect::<Vec<_>>()
                .join(";"),
            fmt(row.spread),
            format!("{:?}", row.verdict),
            fmt(row.trapping_capacity),
        ]);
    }
    let path = csv.save()?;
    let mut manifest = Manifest::new(loaded.hash, scene.seed);
    manifest.time("trace", t0.elapsed().as_secs_f64());
    manifest.output(&path);

    // companion weak-Luzin report for the same function
    let t1 = std::time::Instant::now();
    let luzin = capbound_core::sobolev::weak_luzin(
        &u,
        &scene.domain,
        luzin_eps,
        capbound_core::sobolev::LuzinParams {
            modulus_coeff: None,
            refine: scene.refine.min(1),
        },
    )?;
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("trace");
    let parent = out.parent().unwrap_or(Path::new("."));
    let mut lcsv = Csv::new(
        parent.join(format!("{stem}_luzin.csv")),
        &["eps", "cells", "cap_u", "error_indicator", "modulus", "metric_kind", "budget_exceeded"],
    );
    lcsv.row(&[
        fmt(luzin.eps),
        luzin.u_cells.len().to_string(),
        fmt(luzin.cap_u.value),
        fmt(luzin.cap_u.error_indicator),
        fmt(luzin.modulus),
        "euclidean".to_string(),
        luzin.budget_exceeded.to_string(),
    ]);
    manifest.output(&lcsv.save()?);
    let bb = scene.domain.bounding_box();
    let mut canvas = Svg::new(bb.min, bb.max);
    let mut outline = scene.domain.outline(256);
    outline.push(outline[0]);
    canvas.polyline(&outline, "#888", scene.resolution / 2.0, false);
    canvas.cells(&u.mask, &luzin.u_cells, "#c22");
    let svg_path = parent.join(format!("{stem}_luzin.svg"));
    canvas.save(&svg_path)?;
    manifest.output(&svg_path);
    manifest.time("luzin", t1.elapsed().as_secs_f64());
    manifest.save(parent)?;
    Ok(())
}

fn parse_map(spec: &str) -> Result<AnalyticMap> {
    let lower = spec.trim().to_lowercase();
    if lower == "identity" {
        return Ok(AnalyticMap::identity());
    }
    if lower == "joukowski" {
        return Ok(AnalyticMap::Joukowski);
    }
    if let Some(rest) = lower.strip_prefix("mobius:") {
        let parts: Vec<f64> = rest
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::invalid("map", e.to_string()))?;
        if parts.len() != 2 {
            return Err(Error::invalid("map", "mobius:<ax>,<ay>"));
        }
        return Ok(AnalyticMap::disk_automorphism(C::new(parts[0], parts[1])));
    }
    if let Some(rest) = lower.strip_prefix("stretch:") {
        let lambda: f64 = rest
            .trim()
            .parse()
            .map_err(|e: std::num::ParseFloatError| Error::invalid("map", e.to_string()))?;
        return Ok(AnalyticMap::AffineStretch { lambda });
    }
    if let Some(rest) = lower.strip_prefix("power:") {
        let alpha: f64 = rest
            .trim()
            .parse()
            .map_err(|e: std::num::ParseFloatError| Error::invalid("map", e.to_string()))?;
        return Ok(AnalyticMap::Power { alpha });
    }
    Err(Error::invalid(
        "map",
        format!("unknown map spec {spec}; expected identity|mobius:ax,ay|stretch:l|power:a|joukowski"),
    ))
}

fn cmd_invariance(common: &Common, map_spec: &str, out: &Path) -> Result<()> {
    let loaded = load_scene(common)?;
    let scene = &loaded.scene;
    let map = parse_map(map_spec)?;
    map.validate()?;
    let condenser = scene.condenser()?;
    let t0 = std::time::Instant::now();
    let report = invariance_check(&map, &condenser, scene.resolution, scene.refine)?;
    let k = report.distortion;
    let mut csv = Csv::new(
        out,
        &["map", "distortion", "cp_source", "cp_image", "ratio", "band_lo", "band_hi"],
    );
    csv.row(&[
        map_spec.to_string(),
        fmt(k),
        fmt(report.cp_source),
        fmt(report.cp_image),
        fmt(report.ratio),
        fmt(1.0 / (k * k)),
        fmt(k * k),
    ]);
    let path = csv.save()?;
    let mut manifest = Manifest::new(loaded.hash, scene.seed);
    manifest.time("invariance", t0.elapsed().as_secs_f64());
    manifest.output(&path);
    manifest.save(out.parent().unwrap_or(Path::new(".")))?;
    Ok(())
}

fn cmd_report(dir: &Path, out: &Path) -> Result<()> {
    let mut files: Vec<PathBuf> = walk_csvs(dir)?;
    files.sort();
    let mut doc = String::from("# capbound run summary\n\n");
    doc.push_str(&format!("source directory: {}\n\n", dir.display()));
    for f in &files {
        let text = std::fs::read_to_string(f).unwrap_or_default();
        let mut lines = text.lines();
        let header = lines.next().unwrap_or("");
        let rows: Vec<&str> = lines.collect();
        doc.push_str(&format!(
            "## {}\n\ncolumns: `{}`\nrows: {}\n\n",
            f.strip_prefix(dir).unwrap_or(f).display(),
            header,
            rows.len()
        ));
        for r in rows.iter().take(8) {
            doc.push_str(&format!("    {r}\n"));
        }
        if rows.len() > 8 {
            doc.push_str(&format!("    ... ({} more)\n", rows.len() - 8));
        }
        doc.push('\n');
    }
    if files.is_empty() {
        doc.push_str("no CSV outputs found\n");
    }
    output::write_file(out, doc.as_bytes())?;
    Ok(())
}

fn walk_csvs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let rd = std::fs::read_dir(dir).map_err(|e| Error::Scene {
        path: dir.display().to_string(),
        message: e.to_string(),
    })?;
    for entry in rd.filter_map(|e| e.ok()) {
        let p = entry.path();
        if p.is_dir() {
            out.extend(walk_csvs(&p)?);
        } else if p.extension().map(|x| x == "csv").unwrap_or(false) {
            out.push(p);
        }
    }
    Ok(out)
}

