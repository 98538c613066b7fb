use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn pxe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pxe"))
        .args(args)
        .env_remove("PXE_WORKERS")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, v: &Value) -> PathBuf {
    let p = dir.join("run.json");
    fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn small_config() -> Value {
    json!({
        "grid": {"d": 2, "N": 64, "L": 8.0},
        "medium": {
            "c0": 1.0,
            "terms": [{"kind": "example", "alpha": 0.5, "r1": 1.0, "r2": 3.0}]
        },
        "evolution": {"Z": 0.5, "n": 4, "substeps": 2, "solver_tol": 1e-10},
        "frequency": {"M": 4, "tau_max": 2.0, "filter": {"kind": "none"}},
        "data": {"initial": {"kind": "random", "modes": 2}},
        "seed": 11
    })
}

fn read_json(p: impl AsRef<Path>) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn bootstrap_prints_step_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = pxe(&[
        "bootstrap",
        "--s",
        "0",
        "--r",
        "0.5",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let ledger: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(ledger["claim2_count"], 4);
    assert_eq!(ledger["claim3_count"], 3);
    assert_eq!(ledger["exact"], true);
    let m = read_json(dir.path().join("manifest.json"));
    assert_eq!(m["exit_code"], 0);
    assert_eq!(m["command"], "bootstrap");
}

#[test]
fn bootstrap_rejects_out_of_range_exponents() {
    let dir = tempfile::tempdir().unwrap();
    let out = pxe(&[
        "bootstrap",
        "--s",
        "-1/4",
        "--r",
        "1/2",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("0 <= s < r < 1"));
    let out = pxe(&["bootstrap", "--s", "0.1", "--r", "abc"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn zero_data_simulation_gives_zero_fields() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config();
    cfg["data"]["initial"] = json!({"kind": "zero"});
    let path = write_config(dir.path(), &cfg);
    let out_dir = dir.path().join("out");
    let out = pxe(&[
        "simulate",
        "--config",
        path.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
        "--workers",
        "2",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let fields: Vec<_> = fs::read_dir(out_dir.join("fields")).unwrap().collect();
    assert_eq!(fields.len(), 4);
    for f in fields {
        let bytes = fs::read(f.unwrap().path()).unwrap();
        assert_eq!(&bytes[..6], b"PXFLD1");
        assert!(bytes[32..].iter().all(|&b| b == 0));
    }
    let st = read_json(out_dir.join("reports/space_time.json"));
    assert_eq!(st["manifest"]["t_values"].as_array().unwrap().len(), 4);
    assert_eq!(st["manifest"]["z_values"], json!([0.5]));
    assert_eq!(read_json(out_dir.join("manifest.json"))["workers"], 2);
}

#[test]
fn evolve_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), &small_config());
    let run = |name: &str| {
        let out_dir = dir.path().join(name);
        let out = pxe(&[
            "evolve",
            "--config",
            path.to_str().unwrap(),
            "--out-dir",
            out_dir.to_str().unwrap(),
            "--tau",
            "1.5",
        ]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        (
            fs::read(out_dir.join("reports/trace.json")).unwrap(),
            fs::read(out_dir.join("fields/evolved.pxfld")).unwrap(),
        )
    };
    let a = run("a");
    let b = run("b");
    assert_eq!(a, b);
    let trace: Value = serde_json::from_slice(&a.0).unwrap();
    assert_eq!(trace.as_array().unwrap().len(), 4);
}

#[test]
fn shipped_configs_validate() {
    let text = fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../configs/inverse.json"
    ))
    .unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    for cfg in [small_config(), v] {
        let dir = tempfile::tempdir().unwrap();
        let path = write_config(dir.path(), &cfg);
        let out_dir = dir.path().join("out");
        let out = pxe(&[
            "validate",
            "--config",
            path.to_str().unwrap(),
            "--out-dir",
            out_dir.to_str().unwrap(),
        ]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();

    let mut bad = small_config();
    bad["grid"]["N"] = json!(63);
    let p = write_config(dir.path(), &bad);
    let out = pxe(&[
        "evolve",
        "--config",
        p.to_str().unwrap(),
        "--out-dir",
        &format!("{d}/c1"),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!dir.path().join("c1/manifest.json").exists());

    let out = pxe(&["simulate", "--config", &format!("{d}/missing.json")]);
    assert_eq!(out.status.code(), Some(1));

    let p = write_config(dir.path(), &small_config());
    let out = pxe(&[
        "validate",
        "--config",
        p.to_str().unwrap(),
        "--out-dir",
        &format!("{d}/c2"),
        "--set",
        r#"medium.terms=[{"kind":"expr","expr":"-0.5*math::exp(-r^2)"}]"#,
    ]);
    assert_eq!(out.status.code(), Some(2));
    let report = read_json(dir.path().join("c2/reports/validation.json"));
    assert_eq!(report["passed"], false);

    let out = pxe(&[
        "evolve",
        "--config",
        p.to_str().unwrap(),
        "--out-dir",
        &format!("{d}/c3"),
        "--set",
        "evolution.max_krylov_iter=1",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let m = read_json(dir.path().join("c3/manifest.json"));
    assert_eq!(m["exit_code"], 3);
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn overrides_change_the_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(dir.path(), &small_config());
    let hash = |extra: &[&str], name: &str| {
        let out_dir = dir.path().join(name);
        let mut args = vec![
            "validate",
            "--config",
            p.to_str().unwrap(),
            "--out-dir",
            out_dir.to_str().unwrap(),
        ];
        args.extend_from_slice(extra);
        assert_eq!(pxe(&args).status.code(), Some(0));
        read_json(out_dir.join("manifest.json"))["config_hash"].clone()
    };
    let a = hash(&[], "a");
    let b = hash(&[], "b");
    let c = hash(&["--set", "seed=12"], "c");
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn workers_fall_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_pxe"))
        .args([
            "bootstrap",
            "--s",
            "0",
            "--r",
            "1/2",
            "--out-dir",
            dir.path().to_str().unwrap(),
        ])
        .env("PXE_WORKERS", "3")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(read_json(dir.path().join("manifest.json"))["workers"], 3);
}

#[test]
fn analyze_reads_field_binaries() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(dir.path(), &small_config());
    let ev = dir.path().join("ev");
    assert_eq!(
        pxe(&[
            "evolve",
            "--config",
            p.to_str().unwrap(),
            "--out-dir",
            ev.to_str().unwrap()
        ])
        .status
        .code(),
        Some(0)
    );
    let field = ev.join("fields/evolved.pxfld");
    let an = dir.path().join("an");
    let out = pxe(&[
        "analyze",
        field.to_str().unwrap(),
        "--out-dir",
        an.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rep = read_json(an.join("reports/analysis.json"));
    assert_eq!(rep[0]["N"], 64);
    assert_eq!(rep[0]["sobolev"].as_array().unwrap().len(), 3);
    assert_eq!(rep[0]["z"], 0.5);
}
