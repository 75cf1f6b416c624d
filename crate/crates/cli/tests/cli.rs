//! End-to-end checks of the capbound binary: exit codes, CSV shapes,
//! and byte-identical reruns.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_capbound"))
}

fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf()
}

fn scene(name: &str) -> PathBuf {
    workspace_root().join("scenes").join(name)
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("capbound_test_{tag}_{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn capacity_of_annulus_scene_matches_oracle() {
    let dir = tmp_dir("capacity");
    let out = dir.join("capacity.csv");
    let status = bin()
        .args(["capacity", "--scene"])
        .arg(scene("annulus_small.json"))
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "value,h_list,error_indicator,iterations,wall_time"
    );
    let row = lines.next().unwrap();
    let value: f64 = row.split(',').next().unwrap().parse().unwrap();
    let oracle = std::f64::consts::TAU;
    assert!(
        (value - oracle).abs() / oracle < 0.05,
        "capacity {value} vs {oracle}"
    );
    assert!(dir.join("manifest.json").exists());
}

#[test]
fn malformed_scene_exits_2_with_field_path() {
    let dir = tmp_dir("badscene");
    let bad = dir.join("bad.json");
    std::fs::write(
        &bad,
        r#"{ "domain": { "kind": "disk", "params": { "center": {"x":0,"y":0}, "radius": 1.0 } },
            "resolution": 0.05, "plataes": [] }"#,
    )
    .unwrap();
    let output = bin()
        .args(["capacity", "--scene"])
        .arg(&bad)
        .arg("--out")
        .arg(dir.join("out.csv"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("plataes"), "stderr: {stderr}");
}

#[test]
fn unreachable_resolution_exits_2() {
    let dir = tmp_dir("unresolved");
    let bad = dir.join("comb5.json");
    std::fs::write(
        &bad,
        r#"{ "domain": { "kind": "comb", "params": { "levels": 5 } },
            "resolution": 0.012345679012345678, "plates": [] }"#,
    )
    .unwrap();
    let output = bin()
        .args(["capacity", "--scene"])
        .arg(&bad)
        .arg("--out")
        .arg(dir.join("out.csv"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("unresolved feature"), "stderr: {stderr}");
}

#[test]
fn reruns_are_byte_identical_and_report_aggregates() {
    let dir = tmp_dir("repro");
    let run = |out: &Path| {
        let status = bin()
            .args(["distance", "--scene"])
            .arg(scene("disk_metric.json"))
            .arg("--pairs")
            .arg(scene("pairs_example.csv"))
            .arg("--out")
            .arg(out)
            .arg("--jobs")
            .arg("2")
            .status()
            .unwrap();
        assert!(status.success());
    };
    let out1 = dir.join("run1").join("distance.csv");
    let out2 = dir.join("run2").join("distance.csv");
    run(&out1);
    run(&out2);
    let bytes1 = std::fs::read(&out1).unwrap();
    let bytes2 = std::fs::read(&out2).unwrap();
    assert_eq!(bytes1, bytes2, "reruns must be byte-identical");

    // a capacity CSV in the same tree, then aggregate
    let cap_out = dir.join("run1").join("capacity.csv");
    let status = bin()
        .args(["capacity", "--scene"])
        .arg(scene("annulus_small.json"))
        .arg("--out")
        .arg(&cap_out)
        .status()
        .unwrap();
    assert!(status.success());
    let summary = dir.join("summary.md");
    let status = bin()
        .args(["report", "--dir"])
        .arg(&dir)
        .arg("--out")
        .arg(&summary)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&summary).unwrap();
    assert!(text.contains("distance.csv"));
    assert!(text.contains("capacity.csv"));
}

#[test]
fn boundary_slit_then_trace_chain() {
    let dir = tmp_dir("slitchain");
    let suite_out = dir.join("slit");
    let status = bin()
        .args(["boundary", "--scene"])
        .arg(scene("slit.json"))
        .arg("--suite")
        .arg("slit")
        .arg("--out")
        .arg(&suite_out)
        .status()
        .unwrap();
    assert!(status.success());
    let verdicts = std::fs::read_to_string(suite_out.join("verdicts.csv")).unwrap();
    assert!(verdicts.contains("Distinct"), "{verdicts}");
    assert!(suite_out.join("elements").join("slit_above.json").exists());

    let trace_out = dir.join("trace.csv");
    let status = bin()
        .args(["trace", "--scene"])
        .arg(scene("slit.json"))
        .arg("--function")
        .arg("coordinate_x")
        .arg("--elements")
        .arg(suite_out.join("elements"))
        .arg("--out")
        .arg(&trace_out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&trace_out).unwrap();
    // coordinate_x approaches 0.5 along both slit sequences
    assert!(text.lines().count() >= 3);
    assert!(text.contains("0.5"), "{text}");
}

#[test]
fn distance_rejects_bad_pairs_file() {
    let dir = tmp_dir("badpairs");
    let pairs = dir.join("pairs.csv");
    std::fs::write(&pairs, "x1,y1,x2,y2\n0.1,0.2,nope,0.4\n").unwrap();
    let output = bin()
        .args(["distance", "--scene"])
        .arg(scene("disk_metric.json"))
        .arg("--pairs")
        .arg(&pairs)
        .arg("--out")
        .arg(dir.join("out.csv"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn invariance_identity_ratio_near_one() {
    let dir = tmp_dir("invariance");
    let out = dir.join("inv.csv");
    let status = bin()
        .args(["invariance", "--scene"])
        .arg(scene("annulus_small.json"))
        .arg("--map")
        .arg("identity")
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let row = text.lines().nth(1).unwrap();
    let ratio: f64 = row.split(',').nth(4).unwrap().parse().unwrap();
    assert!((ratio - 1.0).abs() < 0.02, "ratio {ratio}");
}
