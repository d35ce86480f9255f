use std::fs;
use std::path::Path;
use std::process::Command;

use maxlab::mesh::{build_box_mesh, export_mesh};
use serde_json::Value;

fn maxlab(dir: &Path, config: &str, extra: &[&str]) -> (i32, String) {
    let cfg = dir.join("config.json");
    fs::write(&cfg, config).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_maxlab"))
        .arg("--config")
        .arg(&cfg)
        .args(extra)
        .env_remove("MAXLAB_JOBS")
        .output()
        .unwrap();
    let text = String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code().unwrap(), text)
}

fn report(dir: &Path, config: &str) -> (i32, Value) {
    let json = dir.join("report.json");
    let (code, _) = maxlab(dir, config, &["--out-json", json.to_str().unwrap()]);
    (code, serde_json::from_str(&fs::read_to_string(json).unwrap()).unwrap())
}

const CUBE: &str = r#"{"domain": {"kind": "box3d", "dims": [1, 1, 1]}, "levels": [2, 3]}"#;

#[test]
fn decreasing_levels_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = maxlab(dir.path(), r#"{"domain": {"kind": "box3d", "dims": [1, 1, 1]}, "levels": [4, 2]}"#, &[]);
    assert_eq!(code, 4);
    assert!(text.contains("strictly increasing"));
}

#[test]
fn malformed_config_and_missing_mesh_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(maxlab(dir.path(), "{ not json", &[]).0, 4);
    let (code, text) = maxlab(
        dir.path(),
        r#"{"domain": {"kind": "imported", "path": "/nonexistent/m.txt"}, "levels": [0]}"#,
        &["--validate"],
    );
    assert_eq!(code, 4);
    assert!(text.contains("not found"));
}

#[test]
fn validate_reports_budget() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = maxlab(dir.path(), CUBE, &["--validate"]);
    assert_eq!((code, text.as_str()), (0, ""));
    let big = r#"{"domain": {"kind": "box3d", "dims": [1, 1, 1]}, "levels": [8]}"#;
    let (code, text) = maxlab(dir.path(), big, &["--validate"]);
    assert_eq!(code, 0);
    assert!(text.starts_with("warning") && text.contains("4184"));
    let (code, text) = maxlab(dir.path(), big, &["--validate", "--max-dofs", "3000"]);
    assert_eq!(code, 4);
    assert!(text.starts_with("error"));
    assert_eq!(maxlab(dir.path(), big, &["--max-dofs", "3000"]).0, 4);
}

#[test]
fn hole_skips_convex_checks() {
    let dir = tempfile::tempdir().unwrap();
    let (code, r) = report(
        dir.path(),
        r#"{"domain": {"kind": "square_with_hole2d", "outer": 3, "inner": 1}, "levels": [6, 12]}"#,
    );
    assert_eq!(code, 0);
    assert_eq!((r["d_D"].as_u64(), r["d_N"].as_u64()), (Some(1), Some(1)));
    let status = |prefix: &str| {
        r["checks"]
            .as_array()
            .unwrap()
            .iter()
            .find(|c| c["name"].as_str().unwrap().starts_with(prefix))
            .unwrap()["status"]
            .as_str()
            .unwrap()
            .to_owned()
    };
    for p in ["iii:", "iv_a:", "iv_b:", "vi:"] {
        assert_eq!(status(p), "skipped: nonconvex");
    }
    for p in ["i:", "v_a:", "v_b:"] {
        assert_eq!(status(p), "pass");
    }
}

#[test]
fn outputs_deterministic_and_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let (j1, j2, csv) = (dir.path().join("a.json"), dir.path().join("b.json"), dir.path().join("l.csv"));
    let (code, _) = maxlab(
        dir.path(),
        CUBE,
        &["--out-json", j1.to_str().unwrap(), "--out-csv", csv.to_str().unwrap(), "--jobs", "2"],
    );
    assert_eq!(code, 0);
    assert_eq!(maxlab(dir.path(), CUBE, &["--out-json", j2.to_str().unwrap(), "--jobs", "1"]).0, 0);
    let a = fs::read(&j1).unwrap();
    assert_eq!(a, fs::read(&j2).unwrap());

    let r: Value = serde_json::from_slice(&a).unwrap();
    let levels = r["levels"].as_array().unwrap();
    let mut rows = csv::Reader::from_path(&csv).unwrap();
    let header = rows.headers().unwrap().clone();
    let records: Vec<_> = rows.records().map(|x| x.unwrap()).collect();
    assert_eq!(records.len(), levels.len());
    for (rec, lvl) in records.iter().zip(levels) {
        for (key, field) in header.iter().zip(rec.iter()) {
            assert_eq!(field.parse::<f64>().unwrap(), lvl[key].as_f64().unwrap(), "{key}");
        }
    }
}

#[test]
fn helmholtz_and_interlacing_tasks() {
    let dir = tempfile::tempdir().unwrap();
    let (code, r) = report(
        dir.path(),
        r#"{"domain": {"kind": "rect2d", "dims": [1, 1]}, "levels": [4, 8],
            "tasks": ["helmholtz", "interlacing"], "helmholtz_fields": 10}"#,
    );
    assert_eq!(code, 0);
    assert!(r.get("checks").is_none());
    assert_eq!(r["domain"]["kind"], "rect2d");
    let h = r["helmholtz_checks"].as_array().unwrap();
    assert_eq!(h.len(), 6);
    assert!(h.iter().all(|c| c["satisfied"] == true));
    let rows = r["interlacing"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|c| c["holds"] == true));
}

#[test]
fn imported_mesh_runs() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = dir.path().join("cube.mesh");
    export_mesh(&build_box_mesh([1.0; 3], 1).unwrap(), &mesh).unwrap();
    let config = format!(
        r#"{{"domain": {{"kind": "imported", "path": "{}", "convex": true}}, "levels": [1, 2]}}"#,
        mesh.display()
    );
    let (code, r) = report(dir.path(), &config);
    assert_eq!(code, 0);
    assert_eq!(r["levels"][1]["n"], 2);
    assert_eq!(r["checks"].as_array().unwrap().len(), 8);
}

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let config = maxlab::cli::RunConfig::load(&path).unwrap();
        let diags = maxlab::cli::validate(&config, maxlab::cli::DEFAULT_MAX_DOFS);
        assert!(diags.is_empty(), "{}: {diags:?}", path.display());
        n += 1;
    }
    assert!(n >= 4);
}
