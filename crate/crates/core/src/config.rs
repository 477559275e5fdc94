//! Run configuration files (TOML).
//!
//! ```toml
//! task = "sweep"            # optional; must match the subcommand
//!
//! [[pulses]]
//! E01 = 0.1414213562373095
//! delta = 0.0
//! omega = 0.1
//! tau = 100.0
//!
//! [grid]
//! kx = [-1.0, 1.0, 96]
//! ky = [-1.0, 1.0, 96]
//!
//! [solver]
//! rel_tol = 1e-9
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{parse_parameter_path, EllipticPulse, FieldConfig, Vec3};
use crate::integrator::SolverSettings;
use crate::sweep::{FullDensitySpec, MomentumGrid, Particle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Mode,
    Sweep,
    Scan,
    Semiclassical,
    Validate,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Mode => "mode",
            Task::Sweep => "sweep",
            Task::Scan => "scan",
            Task::Semiclassical => "semiclassical",
            Task::Validate => "validate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RasterScale {
    Linear,
    #[default]
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: Option<String>,
    pub strict: bool,
    /// Also write the spectrum as a binary raster.
    pub binary: bool,
    /// Also write a PNG heatmap at this scale.
    pub raster: Option<RasterScale>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSection {
    pub k: Vec3,
    /// Run all three formulations and report their discrepancies.
    #[serde(default)]
    pub compare: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DensityKind {
    #[default]
    Slice,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub density: DensityKind,
    /// Used when `density = "full"`.
    pub full: Option<FullDensitySpec>,
    /// Azimuthal samples for the ring analysis.
    pub profile_samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    /// `pulses[i].key` or `pulses[].key`.
    pub parameter: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemiclassicalSection {
    pub momenta: Vec<Vec3>,
    /// Seeds along `Re t` and `Im t`; by default the lattice resolves the carrier.
    #[serde(default)]
    pub seeds: Option<(usize, usize)>,
    /// Also integrate the mode equations for comparison.
    #[serde(default = "yes")]
    pub exact: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateSection {
    pub momenta: Vec<Vec3>,
}

impl Default for ValidateSection {
    fn default() -> Self {
        ValidateSection {
            momenta: vec![[0.0; 3], [0.3, 0.2, 0.0], [-0.5, 0.1, 0.2]],
        }
    }
}

/// Raw file layout; converted into [`RunConfig`] after validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    task: Option<Task>,
    pulses: Vec<EllipticPulse>,
    #[serde(default)]
    particle: Particle,
    #[serde(default)]
    solver: SolverSettings,
    grid: Option<MomentumGrid>,
    #[serde(default)]
    output: OutputSection,
    mode: Option<ModeSection>,
    sweep: Option<SweepSection>,
    scan: Option<ScanSection>,
    semiclassical: Option<SemiclassicalSection>,
    validate: Option<ValidateSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub task: Task,
    pub field: FieldConfig,
    pub particle: Particle,
    pub solver: SolverSettings,
    pub grid: Option<MomentumGrid>,
    pub output: OutputSection,
    pub mode: Option<ModeSection>,
    pub sweep: SweepSection,
    pub scan: Option<ScanSection>,
    pub semiclassical: Option<SemiclassicalSection>,
    pub validate: ValidateSection,
}

impl RunConfig {
    /// Parses and validates a config for `task`. A `task` key in the file
    /// must agree with it.
    pub fn parse(src: &str, task: Task) -> Result<Self> {
        let raw: RawConfig =
            toml::from_str(src).map_err(|e| Error::InvalidConfig(e.message().to_string()))?;
        if let Some(t) = raw.task {
            if t != task {
                return Err(Error::InvalidConfig(format!(
                    "config is for task `{}`, not `{}`",
                    t.name(),
                    task.name()
                )));
            }
        }
        let field = FieldConfig::new(raw.pulses)?;
        raw.particle.validate()?;
        raw.solver.validate()?;
        if let Some(g) = &raw.grid {
            g.validate()?;
        }
        let need_grid = |what: &str| -> Result<()> {
            if raw.grid.is_none() {
                return Err(Error::InvalidConfig(format!(
                    "task `{what}` needs a [grid] section"
                )));
            }
            Ok(())
        };
        match task {
            Task::Mode => {
                let m = raw.mode.as_ref().ok_or_else(|| {
                    Error::InvalidConfig("task `mode` needs a [mode] section".into())
                })?;
                if m.k.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidConfig("mode momentum must be finite".into()));
                }
            }
            Task::Sweep => need_grid("sweep")?,
            Task::Scan => {
                need_grid("scan")?;
                let s = raw.scan.as_ref().ok_or_else(|| {
                    Error::InvalidConfig("task `scan` needs a [scan] section".into())
                })?;
                parse_parameter_path(&s.parameter)?;
                if s.values.is_empty() || s.values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidConfig(
                        "scan values must be finite and non-empty".into(),
                    ));
                }
                for &v in &s.values {
                    field.with_parameter(&s.parameter, v)?;
                }
            }
            Task::Semiclassical => {
                let s = raw.semiclassical.as_ref().ok_or_else(|| {
                    Error::InvalidConfig(
                        "task `semiclassical` needs a [semiclassical] section".into(),
                    )
                })?;
                if s.momenta.is_empty() || s.momenta.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidConfig(
                        "semiclassical momenta must be finite and non-empty".into(),
                    ));
                }
                if let Some((a, b)) = s.seeds {
                    if a == 0 || b == 0 {
                        return Err(Error::InvalidConfig("seed counts must be >= 1".into()));
                    }
                }
            }
            Task::Validate => {
                if let Some(v) = &raw.validate {
                    if v.momenta.iter().flatten().any(|x| !x.is_finite()) {
                        return Err(Error::InvalidConfig(
                            "validate momenta must be finite".into(),
                        ));
                    }
                }
            }
        }
        let sweep = raw.sweep.unwrap_or_default();
        if sweep.density == DensityKind::Full {
            let spec = sweep.full.unwrap_or_default();
            if !(spec.kz_max > 0.0
                && spec.rel_tol >= 0.0
                && spec.abs_tol >= 0.0
                && spec.max_panels >= 1)
            {
                return Err(Error::InvalidConfig("invalid [sweep.full] settings".into()));
            }
        }
        if let Some(n) = sweep.profile_samples {
            if n < 64 {
                return Err(Error::InvalidConfig("profile_samples must be >= 64".into()));
            }
        }
        Ok(RunConfig {
            task,
            field,
            particle: raw.particle,
            solver: raw.solver,
            grid: raw.grid,
            output: raw.output,
            mode: raw.mode,
            sweep,
            scan: raw.scan,
            semiclassical: raw.semiclassical,
            validate: raw.validate.unwrap_or_default(),
        })
    }

    /// SHA-256 (hex) of the resolved configuration.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }
}
