use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use scalar_qve::export::{parse_scan_csv, parse_spectrum_csv};
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_scalar-qve");

const SLOW_PULSE: &str =
    "[[pulses]]\nE01 = 0.1414213562373095\ndelta = 0.0\nomega = 0.1\ntau = 100.0\n";

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn run(task: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    Command::new(BIN)
        .arg(task)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .env_remove("SCALAR_QVE_THREADS")
        .output()
        .unwrap()
}

fn manifest(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

/// Every file in the run directory apart from the manifest is listed in
/// it, and nothing else is.
fn assert_manifest_complete(out: &Path) {
    let m = manifest(out);
    let listed: BTreeSet<String> = m["artifacts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| a["path"].as_str().unwrap().to_string())
        .collect();
    let present: BTreeSet<String> = std::fs::read_dir(out)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n != "manifest.json")
        .collect();
    assert_eq!(listed, present);
}

#[test]
fn validate_zero_field_passes_with_zero_density() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "v.toml",
        "[[pulses]]\nE01 = 0.0\ndelta = 0.0\nomega = 0.5\ntau = 5.0\n\n[grid]\nkx = [-1.0, 1.0, 8]\nky = [-1.0, 1.0, 8]\n",
    );
    let out = dir.path().join("out");
    let o = run("validate", &cfg, &out, &[]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let m = manifest(&out);
    assert_eq!(m["status"], "ok");
    assert_eq!(m["metrics"]["all_pass"], true);
    assert_eq!(m["metrics"]["density"], 0.0);
    assert_manifest_complete(&out);
}

#[test]
fn sweep_reports_mirror_residual_and_lists_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "s.toml",
        &format!(
            "task = \"sweep\"\n{SLOW_PULSE}\n[grid]\nkx = [-1.0, 1.0, 16]\nky = [-1.0, 1.0, 12]\n\n[output]\nbinary = true\nraster = \"log\"\n"
        ),
    );
    let out = dir.path().join("out");
    let o = run("sweep", &cfg, &out, &["--threads", "2"]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let m = manifest(&out);
    assert!(m["metrics"]["ky_mirror_residual"].as_f64().unwrap() <= 1e-4);
    assert!(m["metrics"]["density"].as_f64().unwrap() > 0.0);
    assert_eq!(m["threads"], 2);
    assert_manifest_complete(&out);

    let s =
        parse_spectrum_csv(&std::fs::read_to_string(out.join("spectrum.csv")).unwrap()).unwrap();
    assert_eq!((s.grid.kx.count, s.grid.ky.count), (16, 12));
    let png = image::open(out.join("spectrum.png")).unwrap();
    assert_eq!((png.width(), png.height()), (16, 12));
    let side: Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("spectrum.png.json")).unwrap())
            .unwrap();
    assert_eq!(side["scale"], "log");

    // Config hash in the manifest matches the inputs.
    let again = dir.path().join("again");
    run("sweep", &cfg, &again, &["--threads", "1"]);
    assert_eq!(manifest(&again)["config_hash"], m["config_hash"]);
    assert_eq!(
        std::fs::read(again.join("spectrum.png")).unwrap(),
        std::fs::read(out.join("spectrum.png")).unwrap()
    );
}

#[test]
fn malformed_config_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    for body in [
        format!("{SLOW_PULSE}width = 3.0\n[grid]\nkx = [-1.0, 1.0, 4]\nky = [-1.0, 1.0, 4]\n"),
        format!("{SLOW_PULSE}\n[grid]\nkx = [-1.0, 1.0, 4]\nky = [-1.0, 1.0, 4]\ncolor = 1\n"),
        format!(
            "task = \"scan\"\n{SLOW_PULSE}\n[grid]\nkx = [-1.0, 1.0, 4]\nky = [-1.0, 1.0, 4]\n"
        ),
        SLOW_PULSE.to_string(),
        "not toml [".to_string(),
    ] {
        let cfg = write_config(dir.path(), "bad.toml", &body);
        let o = run("sweep", &cfg, &out, &[]);
        assert_eq!(o.status.code(), Some(2), "{body}");
        assert!(!o.stderr.is_empty());
        assert!(!out.exists());
    }
}

#[test]
fn missing_config_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        "sweep",
        &dir.path().join("absent.toml"),
        &dir.path().join("out"),
        &[],
    );
    assert_eq!(o.status.code(), Some(5));
}

#[test]
fn thread_override_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "s.toml",
        &format!("{SLOW_PULSE}\n[grid]\nkx = [-0.5, 0.5, 4]\nky = [-0.5, 0.5, 4]\n"),
    );
    let out = dir.path().join("out");
    let status = |env: &str, extra: &[&str]| {
        Command::new(BIN)
            .args(["sweep", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .args(extra)
            .env("SCALAR_QVE_THREADS", env)
            .output()
            .unwrap()
            .status
            .code()
    };
    assert_eq!(status("many", &[]), Some(2));
    assert_eq!(status("3", &[]), Some(0));
    assert_eq!(manifest(&out)["threads"], 3);
    assert_eq!(status("many", &["--threads", "1"]), Some(0));
    assert_eq!(manifest(&out)["threads"], 1);
}

#[test]
fn node_failures_are_partial_unless_strict() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "s.toml",
        &format!("{SLOW_PULSE}\n[grid]\nkx = [-0.5, 0.5, 3]\nky = [-0.5, 0.5, 3]\n\n[solver]\nmax_steps = 20\n"),
    );
    let out = dir.path().join("partial");
    let o = run("sweep", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(4));
    let m = manifest(&out);
    assert_eq!(m["status"], "partial");
    assert_eq!(m["failures"].as_array().unwrap().len(), 9);
    let s =
        parse_spectrum_csv(&std::fs::read_to_string(out.join("spectrum.csv")).unwrap()).unwrap();
    assert!(s.values.iter().all(|v| v.is_nan()));

    let strict = dir.path().join("strict");
    let o = run("sweep", &cfg, &strict, &["--strict"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(manifest(&strict)["status"], "failed");
}

#[test]
fn mode_scan_and_semiclassical_tasks() {
    let dir = tempfile::tempdir().unwrap();

    let cfg = write_config(
        dir.path(),
        "m.toml",
        &format!("{SLOW_PULSE}\n[mode]\nk = [0.0, 0.0, 0.0]\ncompare = true\n"),
    );
    let out = dir.path().join("mode");
    assert_eq!(run("mode", &cfg, &out, &[]).status.code(), Some(0));
    let m = manifest(&out);
    let f = m["metrics"]["f_inf"].as_f64().unwrap();
    assert!(f > 0.0 && f < 1e-6);
    assert!(m["metrics"]["max_discrepancy"].as_f64().unwrap() <= 1e-6);
    assert_manifest_complete(&out);

    let cfg = write_config(
        dir.path(),
        "sc.toml",
        &format!(
            "{SLOW_PULSE}\n[grid]\nkx = [-1.0, 1.0, 6]\nky = [-1.0, 1.0, 6]\n\n[scan]\nparameter = \"pulses[0].delta\"\nvalues = [0.5, 0.0]\n"
        ),
    );
    let out = dir.path().join("scan");
    assert_eq!(run("scan", &cfg, &out, &[]).status.code(), Some(0));
    let t = parse_scan_csv(&std::fs::read_to_string(out.join("scan.csv")).unwrap()).unwrap();
    assert_eq!(
        t.rows.iter().map(|r| r.value).collect::<Vec<_>>(),
        [0.0, 0.5]
    );
    assert!(t.rows.iter().all(|r| r.density > 0.0 && !r.failed()));

    let cfg = write_config(
        dir.path(),
        "semi.toml",
        &format!("{SLOW_PULSE}\n[semiclassical]\nmomenta = [[0.0, 0.0, 0.0]]\n"),
    );
    let out = dir.path().join("semi");
    assert_eq!(run("semiclassical", &cfg, &out, &[]).status.code(), Some(0));
    let csv = std::fs::read_to_string(out.join("semiclassical.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("kx,ky,kz,pairs,K1"));
    let cols: Vec<&str> = lines[1].split(',').collect();
    assert!(cols[3].parse::<usize>().unwrap() >= 2);
    let (single, exact): (f64, f64) = (cols[9].parse().unwrap(), cols[10].parse().unwrap());
    assert!((single.ln() - exact.ln()).abs() <= 0.35 * exact.ln().abs());
}
