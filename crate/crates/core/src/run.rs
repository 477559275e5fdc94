//! Task orchestration behind the command-line front end.
//!
//! A run parses and validates its config before touching the file system,
//! so config errors leave no files behind. Every other outcome ends with a
//! `manifest.json` in the output directory that lists every artifact.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{DensityKind, RunConfig, Task};
use crate::error::{Error, Result};
use crate::export::{self, SemiclassicalRow};
use crate::integrator::{solve_mode, solve_mode_all, Formulation, ModeResult, SolverSettings};
use crate::semiclassical::{SearchRegion, SeedLattice, Semiclassical};
use crate::sweep::{
    azimuthal_profile, azimuthal_spectrum, compute_spectrum, dominant_azimuthal_mode, full_density,
    kinetic_origin, parameter_scan, ring_band, slice_density, symmetry_residual, MirrorAxis,
    Spectrum, SweepOptions, FLAT_PROFILE_FLOOR,
};

/// Environment variable read when `--threads` is absent.
pub const THREADS_ENV: &str = "SCALAR_QVE_THREADS";
pub const MANIFEST_NAME: &str = "manifest.json";
pub const DEFAULT_PROFILE_SAMPLES: usize = 512;

/// Validation thresholds.
pub const MAX_INVARIANT_DRIFT: f64 = 1e-8;
pub const MIN_OCCUPATION: f64 = -1e-12;

pub fn discrepancy_limit(f: f64) -> f64 {
    1e-6 + 1e-6 * f.abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Ok,
    Partial,
    Failed,
}

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    ConfigError = 2,
    NumericalFailure = 3,
    PartialFailure = 4,
    IoError = 5,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }

    fn for_error(e: &Error) -> Self {
        match e {
            Error::InvalidConfig(_) | Error::Parse { .. } => ExitStatus::ConfigError,
            Error::Io { .. } => ExitStatus::IoError,
            _ => ExitStatus::NumericalFailure,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub strict: bool,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub exit: ExitStatus,
    pub out_dir: Option<PathBuf>,
    pub error: Option<Error>,
    /// One-line human summary.
    pub summary: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Artifact {
    pub path: String,
    pub kind: &'static str,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub task: Task,
    pub config: &'a RunConfig,
    pub config_hash: String,
    pub field_hash: String,
    pub threads: usize,
    pub strict: bool,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub status: RunStatus,
    pub exit_code: i32,
    pub metrics: Value,
    pub artifacts: Vec<Artifact>,
    pub failures: Vec<String>,
    pub error: Option<String>,
}

struct Writer {
    dir: PathBuf,
    artifacts: Vec<Artifact>,
}

impl Writer {
    fn put(&mut self, name: &str, kind: &'static str, bytes: &[u8]) -> Result<()> {
        export::write_file(&self.dir.join(name), bytes)?;
        self.record(name, kind)
    }

    fn record(&mut self, name: &str, kind: &'static str) -> Result<()> {
        use sha2::{Digest, Sha256};
        let path = self.dir.join(name);
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        self.artifacts.push(Artifact {
            path: name.to_string(),
            kind,
            bytes: bytes.len(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
        Ok(())
    }
}

struct TaskOutput {
    metrics: Value,
    failures: Vec<String>,
    /// Checks that did not pass (validate task); the run fails.
    violations: Vec<String>,
}

fn now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// `--threads`, then the environment override, then 0 (automatic).
pub fn resolve_threads(flag: Option<usize>) -> Result<usize> {
    if let Some(n) = flag {
        return Ok(n);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| {
            Error::InvalidConfig(format!("{THREADS_ENV}=`{v}` is not a thread count"))
        }),
        Err(_) => Ok(0),
    }
}

fn config_failure(e: Error) -> RunOutcome {
    RunOutcome {
        exit: ExitStatus::for_error(&e),
        out_dir: None,
        summary: format!("error: {e}"),
        error: Some(e),
    }
}

pub fn run(task: Task, options: &RunOptions) -> RunOutcome {
    let started = now();
    let src = match std::fs::read_to_string(&options.config) {
        Ok(s) => s,
        Err(e) => return config_failure(Error::io(&options.config, e)),
    };
    let config = match RunConfig::parse(&src, task) {
        Ok(c) => c,
        Err(e) => return config_failure(e),
    };
    let threads = match resolve_threads(options.threads) {
        Ok(t) => t,
        Err(e) => return config_failure(e),
    };
    let strict = options.strict || config.output.strict;
    let dir = options
        .out
        .clone()
        .or_else(|| config.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    if let Err(e) = std::fs::create_dir_all(&dir) {
        let e = Error::io(&dir, e);
        return RunOutcome {
            exit: ExitStatus::IoError,
            out_dir: None,
            summary: format!("error: {e}"),
            error: Some(e),
        };
    }

    let mut writer = Writer {
        dir: dir.clone(),
        artifacts: Vec::new(),
    };
    let sweep_options = SweepOptions {
        threads,
        strict,
        particle: config.particle,
    };
    let result = match task {
        Task::Mode => run_mode(&config, &mut writer),
        Task::Sweep => run_sweep(&config, &sweep_options, &mut writer),
        Task::Scan => run_scan(&config, &sweep_options, &mut writer),
        Task::Semiclassical => run_semiclassical(&config, &mut writer),
        Task::Validate => run_validate(&config, &sweep_options, &mut writer),
    };

    let (status, exit, output, error) = match result {
        Ok(out) if !out.violations.is_empty() => {
            (RunStatus::Failed, ExitStatus::NumericalFailure, out, None)
        }
        Ok(out) if !out.failures.is_empty() && strict => {
            (RunStatus::Failed, ExitStatus::NumericalFailure, out, None)
        }
        Ok(out) if !out.failures.is_empty() => {
            (RunStatus::Partial, ExitStatus::PartialFailure, out, None)
        }
        Ok(out) => (RunStatus::Ok, ExitStatus::Success, out, None),
        Err(e) => (
            RunStatus::Failed,
            ExitStatus::for_error(&e),
            TaskOutput {
                metrics: Value::Null,
                failures: Vec::new(),
                violations: Vec::new(),
            },
            Some(e),
        ),
    };
    let summary = match (&error, status) {
        (Some(e), _) => format!("error: {e}"),
        (None, RunStatus::Failed) if !output.violations.is_empty() => {
            format!(
                "{}: {} check(s) failed: {}",
                task.name(),
                output.violations.len(),
                output.violations.join("; ")
            )
        }
        (None, s) => format!(
            "{}: {} ({} artifact(s), {} failure(s)) in {}",
            task.name(),
            match s {
                RunStatus::Ok => "ok",
                RunStatus::Partial => "partial",
                RunStatus::Failed => "failed",
            },
            writer.artifacts.len(),
            output.failures.len(),
            dir.display()
        ),
    };
    let mut failures = output.failures;
    failures.extend(output.violations);
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        task,
        config: &config,
        config_hash: config.hash(),
        field_hash: config.field.config_hash(),
        threads,
        strict,
        started_unix: started,
        finished_unix: now(),
        status,
        exit_code: exit.code(),
        metrics: output.metrics,
        artifacts: writer.artifacts,
        failures,
        error: error.as_ref().map(|e| e.to_string()),
    };
    let json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    if let Err(e) = export::write_atomic(&dir.join(MANIFEST_NAME), &json) {
        return RunOutcome {
            exit: ExitStatus::IoError,
            out_dir: Some(dir),
            summary: format!("error: {e}"),
            error: Some(e),
        };
    }
    RunOutcome {
        exit,
        out_dir: Some(dir),
        error,
        summary,
    }
}

fn finite(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

fn mode_json(r: &ModeResult) -> Value {
    json!({
        "f_inf": r.f_inf,
        "invariant_drift": r.invariant_drift,
        "settled": r.settled(),
        "late_change": r.late_change,
        "n_steps": r.n_steps,
        "n_rejected": r.n_rejected,
        "n_rhs": r.n_rhs,
        "t_span": [r.t_span.0, r.t_span.1],
        "max_step_phase": r.max_step_phase,
        "final_potential": r.final_potential,
    })
}

fn run_mode(config: &RunConfig, w: &mut Writer) -> Result<TaskOutput> {
    let m = config.mode.as_ref().expect("validated");
    let mode = config.particle.mode(m.k);
    let mut failures = Vec::new();
    let (metrics, primary) = if m.compare {
        let all = solve_mode_all(&config.field, &mode, &config.solver)?;
        let per: serde_json::Map<String, Value> = Formulation::ALL
            .iter()
            .map(|&f| (f.name().to_string(), mode_json(all.result(f))))
            .collect();
        let main = all.result(config.solver.formulation).clone();
        let limit = discrepancy_limit(main.f_inf);
        if all.max_discrepancy() > limit {
            failures.push(format!(
                "formulations disagree by {:e} (limit {:e})",
                all.max_discrepancy(),
                limit
            ));
        }
        (
            json!({
                "k": m.k,
                "formulation": config.solver.formulation.name(),
                "f_inf": main.f_inf,
                "max_invariant_drift": Formulation::ALL.iter().map(|&f| all.result(f).invariant_drift).fold(0.0, f64::max),
                "max_discrepancy": all.max_discrepancy(),
                "formulations": per,
            }),
            main,
        )
    } else {
        let r = solve_mode(&config.field, &mode, &config.solver)?;
        let mut v = mode_json(&r);
        v["k"] = json!(m.k);
        v["formulation"] = json!(config.solver.formulation.name());
        v["max_invariant_drift"] = json!(r.invariant_drift);
        (v, r)
    };
    if !primary.settled() {
        failures.push(format!(
            "F still changing at t_end (late change {:e})",
            primary.late_change
        ));
    }
    w.put(
        "mode.json",
        "mode",
        &serde_json::to_vec_pretty(&metrics).expect("serializes"),
    )?;
    if let Some(traj) = &primary.trajectory {
        let mut csv = String::from("t,F,drift\n");
        for s in traj {
            csv.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", s.t, s.f, s.drift));
        }
        w.put("trajectory.csv", "trajectory", csv.as_bytes())?;
    }
    Ok(TaskOutput {
        metrics,
        failures,
        violations: Vec::new(),
    })
}

fn write_spectrum(config: &RunConfig, s: &Spectrum, w: &mut Writer) -> Result<()> {
    w.put(
        "spectrum.csv",
        "spectrum-csv",
        export::spectrum_csv(s).as_bytes(),
    )?;
    if config.output.binary {
        w.put("spectrum.bin", "spectrum-raster", &export::encode_raster(s))?;
    }
    if let Some(scale) = config.output.raster {
        export::export_raster(s, &w.dir.join("spectrum.png"), scale)?;
        w.record("spectrum.png", "heatmap")?;
        w.record("spectrum.png.json", "heatmap-sidecar")?;
    }
    Ok(())
}

/// Mirror residuals and ring analysis of a spectrum.
pub fn spectrum_metrics(s: &Spectrum, profile_samples: usize) -> Value {
    let residual = |axis| match symmetry_residual(s, axis) {
        Ok(r) => finite(r),
        Err(_) => Value::Null,
    };
    let (cx, cy) = kinetic_origin(s);
    let ring = match ring_band(s) {
        None => json!({ "error": "no finite maximum" }),
        Some(band) => match azimuthal_profile(s, band, profile_samples) {
            Err(e) => json!({ "band": [band.0, band.1], "error": e.to_string() }),
            Ok(profile) => {
                let amps = azimuthal_spectrum(&profile);
                let dominant = match dominant_azimuthal_mode(&profile) {
                    Ok(m) => json!(m),
                    Err(Error::FlatProfile) => json!("flat"),
                    Err(e) => json!(e.to_string()),
                };
                json!({
                    "band": [band.0, band.1],
                    "dominant_mode": dominant,
                    "flat_floor": FLAT_PROFILE_FLOOR,
                    "amplitudes": amps.iter().skip(1).take(12).map(|&a| finite(a)).collect::<Vec<_>>(),
                })
            }
        },
    };
    let peak_k = s.argmax().map(|(ix, iy)| s.grid.node(ix, iy));
    json!({
        "peak_f": finite(s.peak()),
        "peak_k": peak_k,
        "min_f": finite(s.min_value()),
        "kinetic_origin": [cx, cy],
        "ky_mirror_residual": residual(MirrorAxis::Ky),
        "kx_mirror_residual": residual(MirrorAxis::Kx),
        "ring": ring,
        "max_invariant_drift": s.metadata.max_invariant_drift,
        "unsettled_nodes": s.metadata.unsettled_nodes,
        "total_steps": s.metadata.total_steps,
        "failed_nodes": s.metadata.failures.len(),
    })
}

fn node_failures(s: &Spectrum) -> Vec<String> {
    s.metadata
        .failures
        .iter()
        .map(|f| format!("node {} k={:?}: {}", f.index, f.k, f.message))
        .collect()
}

fn run_sweep(config: &RunConfig, options: &SweepOptions, w: &mut Writer) -> Result<TaskOutput> {
    let grid = config.grid.expect("validated");
    let s = compute_spectrum(&config.field, &grid, &config.solver, options)?;
    write_spectrum(config, &s, w)?;
    let mut metrics = spectrum_metrics(
        &s,
        config
            .sweep
            .profile_samples
            .unwrap_or(DEFAULT_PROFILE_SAMPLES),
    );
    let slice = slice_density(&s);
    metrics["density"] = finite(slice.density);
    metrics["density_kind"] = json!("slice");
    metrics["boundary_ratio"] = finite(slice.boundary_ratio);
    metrics["truncated"] = json!(slice.truncated);
    let mut failures = node_failures(&s);
    if config.sweep.density == DensityKind::Full {
        let spec = config.sweep.full.unwrap_or_default();
        match full_density(&config.field, &grid, &config.solver, options, &spec) {
            Ok(full) => {
                metrics["density"] = finite(full.density);
                metrics["density_kind"] = json!("full");
                metrics["slice_density"] = finite(slice.density);
                metrics["truncated"] = json!(full.truncated || slice.truncated);
            }
            Err(e) => failures.push(format!("full density: {e}")),
        }
    }
    Ok(TaskOutput {
        metrics,
        failures,
        violations: Vec::new(),
    })
}

fn run_scan(config: &RunConfig, options: &SweepOptions, w: &mut Writer) -> Result<TaskOutput> {
    let grid = config.grid.expect("validated");
    let scan = config.scan.as_ref().expect("validated");
    let table = parameter_scan(
        &config.field,
        &scan.parameter,
        &scan.values,
        &grid,
        &config.solver,
        options,
    )?;
    w.put("scan.csv", "scan-csv", export::scan_csv(&table).as_bytes())?;
    let failures = table
        .rows
        .iter()
        .filter(|r| r.failed())
        .map(|r| match &r.error {
            Some(e) => format!("{} = {}: {e}", table.parameter, r.value),
            None => format!(
                "{} = {}: {} failed nodes",
                table.parameter, r.value, r.failed_nodes
            ),
        })
        .collect();
    let densities: Vec<Value> = table.rows.iter().map(|r| finite(r.density)).collect();
    let peak = table
        .rows
        .iter()
        .map(|r| r.peak_f)
        .filter(|v| v.is_finite())
        .fold(f64::NAN, f64::max);
    let metrics = json!({
        "parameter": table.parameter,
        "values": table.rows.iter().map(|r| r.value).collect::<Vec<_>>(),
        "density": densities,
        "peak_f": finite(peak),
        "rows": table.rows.len(),
    });
    Ok(TaskOutput {
        metrics,
        failures,
        violations: Vec::new(),
    })
}

fn run_semiclassical(config: &RunConfig, w: &mut Writer) -> Result<TaskOutput> {
    let sc = config.semiclassical.as_ref().expect("validated");
    let region = SearchRegion::default_for(&config.field, config.solver.envelope_cut);
    let seeds = match sc.seeds {
        Some((n_re, n_im)) => {
            let base = SeedLattice::default();
            SeedLattice {
                n_re,
                n_im,
                budget: n_re * n_im * base.max_iterations,
                ..base
            }
        }
        None => SeedLattice::carrier_resolving(&config.field, &region),
    };
    let engine = Semiclassical::new(&config.field, region, seeds)?;
    let mut rows = Vec::with_capacity(sc.momenta.len());
    let mut failures = Vec::new();
    for &k in &sc.momenta {
        let mode = config.particle.mode(k);
        let mut row = SemiclassicalRow {
            k,
            pairs: 0,
            k1: f64::NAN,
            k2: f64::NAN,
            alpha: f64::NAN,
            f_boson: f64::NAN,
            f_fermion: f64::NAN,
            f_single: f64::NAN,
            f_exact: f64::NAN,
            error: None,
        };
        match engine.report(&mode) {
            Ok(r) => {
                row.pairs = r.pairs.len();
                row.k1 = r.k_values[0];
                row.k2 = r.k_values.get(1).copied().unwrap_or(f64::NAN);
                row.alpha = r.alpha.unwrap_or(f64::NAN);
                row.f_boson = r.f_boson;
                row.f_fermion = r.f_fermion;
                row.f_single = r.single_pair;
            }
            Err(e) => {
                failures.push(format!("k={k:?}: {e}"));
                row.error = Some(e.to_string());
            }
        }
        if sc.exact {
            match solve_mode(&config.field, &mode, &config.solver) {
                Ok(m) => row.f_exact = m.f_inf,
                Err(e) => {
                    failures.push(format!("k={k:?} (mode equations): {e}"));
                    row.error.get_or_insert(e.to_string());
                }
            }
        }
        rows.push(row);
    }
    w.put(
        "semiclassical.csv",
        "semiclassical-csv",
        export::semiclassical_csv(&rows).as_bytes(),
    )?;
    let worst_log_error = rows
        .iter()
        .filter(|r| r.f_exact > 0.0 && r.f_single > 0.0)
        .map(|r| ((r.f_exact.ln() - r.f_single.ln()) / r.f_exact.ln()).abs())
        .fold(f64::NAN, f64::max);
    let metrics = json!({
        "momenta": rows.len(),
        "seeds": [seeds.n_re, seeds.n_im],
        "max_relative_log_error": finite(worst_log_error),
        "rows": rows,
    });
    Ok(TaskOutput {
        metrics,
        failures,
        violations: Vec::new(),
    })
}

fn run_validate(config: &RunConfig, options: &SweepOptions, w: &mut Writer) -> Result<TaskOutput> {
    let settings = SolverSettings {
        max_steps: config.solver.max_steps,
        envelope_cut: config.solver.envelope_cut,
        t_span: config.solver.t_span,
        ..SolverSettings::oracle()
    };
    let mut checks = Vec::new();
    let mut violations = Vec::new();
    let mut check = |name: String, value: f64, limit: f64, pass: bool| {
        if !pass {
            violations.push(format!("{name}: {value:e} (limit {limit:e})"));
        }
        checks.push(json!({ "check": name, "value": finite(value), "limit": limit, "pass": pass }));
    };
    for &k in &config.validate.momenta {
        let mode = config.particle.mode(k);
        let all = solve_mode_all(&config.field, &mode, &settings)?;
        for f in Formulation::ALL {
            let r = all.result(f);
            check(
                format!("{} invariant drift at k={k:?}", f.name()),
                r.invariant_drift,
                MAX_INVARIANT_DRIFT,
                r.invariant_drift <= MAX_INVARIANT_DRIFT,
            );
            check(
                format!("{} F >= {MIN_OCCUPATION:e} at k={k:?}", f.name()),
                r.f_inf,
                MIN_OCCUPATION,
                r.f_inf >= MIN_OCCUPATION,
            );
        }
        let f = all.bogoliubov.f_inf;
        let limit = discrepancy_limit(f);
        check(
            format!("formulation discrepancy at k={k:?}"),
            all.max_discrepancy(),
            limit,
            all.max_discrepancy() <= limit,
        );
    }
    let mut metrics = json!({ "momenta": config.validate.momenta.len() });
    let mut failures = Vec::new();
    if let Some(grid) = config.grid {
        let s = compute_spectrum(&config.field, &grid, &config.solver, options)?;
        write_spectrum(config, &s, w)?;
        let min = s.min_value();
        check(
            "spectrum F >= -1e-12".into(),
            min,
            MIN_OCCUPATION,
            !(min < MIN_OCCUPATION),
        );
        check(
            "spectrum invariant drift".into(),
            s.metadata.max_invariant_drift,
            MAX_INVARIANT_DRIFT,
            s.metadata.max_invariant_drift <= MAX_INVARIANT_DRIFT,
        );
        metrics["density"] = finite(slice_density(&s).density);
        metrics["peak_f"] = finite(s.peak());
        metrics["max_invariant_drift"] = json!(s.metadata.max_invariant_drift);
        failures = node_failures(&s);
    }
    metrics["all_pass"] = json!(violations.is_empty());
    metrics["checks"] = Value::Array(checks);
    w.put(
        "validate.json",
        "validation",
        &serde_json::to_vec_pretty(&metrics).expect("serializes"),
    )?;
    Ok(TaskOutput {
        metrics,
        failures,
        violations,
    })
}

/// Reads a manifest back as JSON.
pub fn read_manifest(dir: &Path) -> Result<Value> {
    let path = dir.join(MANIFEST_NAME);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse("manifest", e.to_string()))
}
