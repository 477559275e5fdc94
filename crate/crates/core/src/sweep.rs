//! Momentum-grid sweeps, number densities, parameter scans and spectrum
//! analysis (mirror residuals, azimuthal profiles around the ring).

use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::{num_complex::Complex64, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{keldysh_gamma, parse_parameter_path, FieldConfig, Vec3};
use crate::integrator::{solve_mode, SolverSettings};
use crate::quadrature;
use crate::qve::ModeCoordinates;

/// `(min, max, count)` along one momentum axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "(f64, f64, usize)", into = "(f64, f64, usize)")]
pub struct AxisRange {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl TryFrom<(f64, f64, usize)> for AxisRange {
    type Error = Error;
    fn try_from((min, max, count): (f64, f64, usize)) -> Result<Self> {
        AxisRange::new(min, max, count)
    }
}

impl From<AxisRange> for (f64, f64, usize) {
    fn from(a: AxisRange) -> Self {
        (a.min, a.max, a.count)
    }
}

impl AxisRange {
    pub fn new(min: f64, max: f64, count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::InvalidConfig(format!(
                "axis needs >= 2 nodes, got {count}"
            )));
        }
        if !(min.is_finite() && max.is_finite() && max > min) {
            return Err(Error::InvalidConfig(format!(
                "axis range [{min}, {max}] is empty"
            )));
        }
        Ok(AxisRange { min, max, count })
    }

    /// Symmetric `[-half, half]`.
    pub fn centered(half: f64, count: usize) -> Result<Self> {
        Self::new(-half, half, count)
    }

    pub fn spacing(&self) -> f64 {
        (self.max - self.min) / (self.count - 1) as f64
    }

    /// Node `j`, computed about the centre so that mirrored nodes of a
    /// symmetric range are exact negatives.
    pub fn node(&self, j: usize) -> f64 {
        let center = 0.5 * (self.min + self.max);
        let half = 0.5 * (self.max - self.min);
        let n1 = (self.count - 1) as f64;
        center + half * ((2.0 * j as f64 - n1) / n1)
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(|j| self.node(j))
    }

    pub fn is_symmetric(&self) -> bool {
        self.min == -self.max
    }
}

/// Nodes in the `(kx, ky)` plane at fixed `kz`. Values are stored
/// row-major with `kx` fastest: index `iy * nx + ix`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentumGrid {
    pub kx: AxisRange,
    pub ky: AxisRange,
    #[serde(default)]
    pub kz: f64,
}

impl MomentumGrid {
    pub fn new(kx: AxisRange, ky: AxisRange, kz: f64) -> Result<Self> {
        let g = MomentumGrid { kx, ky, kz };
        g.validate()?;
        Ok(g)
    }

    /// `n x n` nodes over `[-half, half]^2` at `kz = 0`.
    pub fn square(half: f64, n: usize) -> Result<Self> {
        Self::new(
            AxisRange::centered(half, n)?,
            AxisRange::centered(half, n)?,
            0.0,
        )
    }

    pub fn validate(&self) -> Result<()> {
        AxisRange::new(self.kx.min, self.kx.max, self.kx.count)?;
        AxisRange::new(self.ky.min, self.ky.max, self.ky.count)?;
        if !self.kz.is_finite() {
            return Err(Error::InvalidConfig("kz must be finite".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.kx.count * self.ky.count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.kx.count + ix
    }

    pub fn node(&self, ix: usize, iy: usize) -> Vec3 {
        [self.kx.node(ix), self.ky.node(iy), self.kz]
    }

    pub fn with_kz(mut self, kz: f64) -> Self {
        self.kz = kz;
        self
    }
}

/// Particle species: charge in units of `|e|` and mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Particle {
    pub charge: f64,
    pub mass: f64,
}

impl Default for Particle {
    fn default() -> Self {
        Particle {
            charge: -1.0,
            mass: 1.0,
        }
    }
}

impl Particle {
    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::InvalidConfig("particle mass must be > 0".into()));
        }
        if !self.charge.is_finite() {
            return Err(Error::InvalidConfig(
                "particle charge must be finite".into(),
            ));
        }
        Ok(())
    }

    pub fn mode(&self, k: Vec3) -> ModeCoordinates {
        ModeCoordinates::new(k)
            .with_charge(self.charge)
            .with_mass(self.mass)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SweepOptions {
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
    /// Fail the whole sweep when any node fails.
    pub strict: bool,
    pub particle: Particle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeFailure {
    pub index: usize,
    pub k: Vec3,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMetadata {
    pub config_hash: String,
    pub settings: SolverSettings,
    pub particle: Particle,
    pub max_invariant_drift: f64,
    /// Nodes whose `F` was still changing near `t_end`.
    pub unsettled_nodes: usize,
    pub total_steps: usize,
    /// `A(t_end)`; kinetic momentum is `k - q A(t_end)`.
    pub final_potential: Vec3,
    pub failures: Vec<NodeFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub grid: MomentumGrid,
    /// `F` per node (NaN where the node failed).
    pub values: Vec<f64>,
    pub metadata: SpectrumMetadata,
}

impl Spectrum {
    /// Wraps externally produced values (e.g. read back from disk).
    pub fn from_values(grid: MomentumGrid, values: Vec<f64>) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.len() {
            return Err(Error::InvalidConfig(format!(
                "{} values for a {}x{} grid",
                values.len(),
                grid.kx.count,
                grid.ky.count
            )));
        }
        Ok(Spectrum {
            grid,
            values,
            metadata: SpectrumMetadata {
                config_hash: String::new(),
                settings: SolverSettings::production(),
                particle: Particle::default(),
                max_invariant_drift: 0.0,
                unsettled_nodes: 0,
                total_steps: 0,
                final_potential: [0.0; 3],
                failures: Vec::new(),
            },
        })
    }

    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[self.grid.index(ix, iy)]
    }

    /// Largest finite value (0 for an empty or all-failed spectrum).
    pub fn peak(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .filter(|v| v.is_finite())
            .fold(0.0, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .filter(|v| v.is_finite())
            .fold(f64::INFINITY, f64::min)
    }

    /// Position of the largest finite value.
    pub fn argmax(&self) -> Option<(usize, usize)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &v) in self.values.iter().enumerate() {
            if v.is_finite() && best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
        best.map(|(i, _)| (i % self.grid.kx.count, i / self.grid.kx.count))
    }

    /// Largest boundary value relative to the peak.
    pub fn boundary_ratio(&self) -> f64 {
        let peak = self.peak();
        if peak <= 0.0 {
            return 0.0;
        }
        let (nx, ny) = (self.grid.kx.count, self.grid.ky.count);
        let mut edge: f64 = 0.0;
        for ix in 0..nx {
            edge = edge.max(self.value(ix, 0)).max(self.value(ix, ny - 1));
        }
        for iy in 0..ny {
            edge = edge.max(self.value(0, iy)).max(self.value(nx - 1, iy));
        }
        edge / peak
    }

    /// Values along `ky` nearest to `ky_target`, ordered by `kx`.
    pub fn kx_cut(&self, ky_target: f64) -> Vec<(f64, f64)> {
        let iy = (0..self.grid.ky.count)
            .min_by(|&a, &b| {
                (self.grid.ky.node(a) - ky_target)
                    .abs()
                    .total_cmp(&(self.grid.ky.node(b) - ky_target).abs())
            })
            .unwrap_or(0);
        (0..self.grid.kx.count)
            .map(|ix| (self.grid.kx.node(ix), self.value(ix, iy)))
            .collect()
    }

    /// Bilinear interpolation at `(kx, ky)`; `None` outside the grid.
    pub fn interpolate(&self, kx: f64, ky: f64) -> Option<f64> {
        let (gx, gy) = (&self.grid.kx, &self.grid.ky);
        let fx = (kx - gx.min) / gx.spacing();
        let fy = (ky - gy.min) / gy.spacing();
        let (mx, my) = ((gx.count - 1) as f64, (gy.count - 1) as f64);
        if !(fx >= -1e-9 && fx <= mx + 1e-9 && fy >= -1e-9 && fy <= my + 1e-9) {
            return None;
        }
        let fx = fx.clamp(0.0, mx);
        let fy = fy.clamp(0.0, my);
        let ix = (fx.floor() as usize).min(gx.count - 2);
        let iy = (fy.floor() as usize).min(gy.count - 2);
        let (u, v) = (fx - ix as f64, fy - iy as f64);
        Some(
            (1.0 - u) * (1.0 - v) * self.value(ix, iy)
                + u * (1.0 - v) * self.value(ix + 1, iy)
                + (1.0 - u) * v * self.value(ix, iy + 1)
                + u * v * self.value(ix + 1, iy + 1),
        )
    }
}

fn build_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))
}

/// Solves every grid node in parallel. Output is independent of the
/// worker count: results are collected by node index.
pub fn compute_spectrum(
    field: &FieldConfig,
    grid: &MomentumGrid,
    settings: &SolverSettings,
    options: &SweepOptions,
) -> Result<Spectrum> {
    grid.validate()?;
    settings.validate()?;
    options.particle.validate()?;
    let mut node_settings = *settings;
    node_settings.record_trajectory = false;
    let nx = grid.kx.count;
    let pool = build_pool(options.threads)?;
    let results: Vec<_> = pool.install(|| {
        (0..grid.len())
            .into_par_iter()
            .map(|i| {
                let k = grid.node(i % nx, i / nx);
                solve_mode(field, &options.particle.mode(k), &node_settings)
            })
            .collect()
    });

    let mut values = Vec::with_capacity(grid.len());
    let mut failures = Vec::new();
    let mut max_drift: f64 = 0.0;
    let mut unsettled = 0;
    let mut total_steps = 0;
    let mut final_potential = None;
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(m) => {
                values.push(m.f_inf);
                max_drift = max_drift.max(m.invariant_drift);
                unsettled += usize::from(!m.settled());
                total_steps += m.n_steps;
                final_potential.get_or_insert(m.final_potential);
            }
            Err(e) => {
                values.push(f64::NAN);
                failures.push(NodeFailure {
                    index: i,
                    k: grid.node(i % nx, i / nx),
                    message: e.to_string(),
                });
            }
        }
    }
    if options.strict && !failures.is_empty() {
        return Err(Error::Aggregate {
            failed: failures.len(),
            total: grid.len(),
            first: failures[0].message.clone(),
        });
    }
    Ok(Spectrum {
        grid: *grid,
        values,
        metadata: SpectrumMetadata {
            config_hash: field.config_hash(),
            settings: node_settings,
            particle: options.particle,
            max_invariant_drift: max_drift,
            unsettled_nodes: unsettled,
            total_steps,
            final_potential: final_potential.unwrap_or([0.0; 3]),
            failures,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub density: f64,
    /// Largest boundary `F` relative to the peak.
    pub boundary_ratio: f64,
    /// Boundary values exceed `1e-6` of the peak: the grid truncates the spectrum.
    pub truncated: bool,
}

const TRUNCATION_RATIO: f64 = 1e-6;

/// `int dkx dky / (2 pi)^2 F` by the trapezoidal rule. Failed (NaN)
/// nodes make the result NaN.
pub fn slice_density(spectrum: &Spectrum) -> DensityReport {
    let g = &spectrum.grid;
    let (nx, ny) = (g.kx.count, g.ky.count);
    let weight = |i: usize, n: usize| if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
    let mut sum = 0.0;
    for iy in 0..ny {
        let mut row = 0.0;
        for ix in 0..nx {
            row += weight(ix, nx) * spectrum.value(ix, iy);
        }
        sum += weight(iy, ny) * row;
    }
    let density = sum * g.kx.spacing() * g.ky.spacing() / (4.0 * PI * PI);
    let boundary_ratio = spectrum.boundary_ratio();
    DensityReport {
        density,
        boundary_ratio,
        truncated: boundary_ratio > TRUNCATION_RATIO,
    }
}

/// Settings for `int d^3k / (2 pi)^3 F` over `kz in [-kz_max, kz_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FullDensitySpec {
    pub kz_max: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_panels: usize,
}

impl Default for FullDensitySpec {
    fn default() -> Self {
        FullDensitySpec {
            kz_max: 1.0,
            rel_tol: 1e-3,
            abs_tol: 0.0,
            max_panels: 8,
        }
    }
}

/// Full momentum-space density: adaptive quadrature over `kz >= 0` of
/// slice densities, doubled by `kz -> -kz` symmetry.
pub fn full_density(
    field: &FieldConfig,
    grid: &MomentumGrid,
    settings: &SolverSettings,
    options: &SweepOptions,
    spec: &FullDensitySpec,
) -> Result<DensityReport> {
    if !(spec.kz_max > 0.0) {
        return Err(Error::InvalidConfig("kz_max must be > 0".into()));
    }
    let mut first_err: Option<Error> = None;
    let mut boundary: f64 = 0.0;
    let mut max_slice: f64 = 0.0;
    let mut slice = |kz: f64| -> f64 {
        if first_err.is_some() {
            return 0.0;
        }
        match compute_spectrum(field, &grid.with_kz(kz), settings, options) {
            Ok(s) => {
                let r = slice_density(&s);
                boundary = boundary.max(r.boundary_ratio);
                max_slice = max_slice.max(r.density);
                if !r.density.is_finite() {
                    first_err = Some(Error::Aggregate {
                        failed: s.metadata.failures.len(),
                        total: s.grid.len(),
                        first: s
                            .metadata
                            .failures
                            .first()
                            .map(|f| f.message.clone())
                            .unwrap_or_default(),
                    });
                }
                r.density
            }
            Err(e) => {
                first_err = Some(e);
                0.0
            }
        }
    };
    let r = quadrature::integrate(
        &mut slice,
        0.0,
        spec.kz_max,
        spec.abs_tol,
        spec.rel_tol,
        spec.max_panels,
    );
    let edge = slice(spec.kz_max);
    if let Some(e) = first_err {
        return Err(e);
    }
    let r = r.map_err(|e| Error::QuadratureFailure(e.to_string()))?;
    let kz_ratio = if max_slice > 0.0 {
        edge / max_slice
    } else {
        0.0
    };
    let boundary_ratio = boundary.max(kz_ratio);
    Ok(DensityReport {
        density: 2.0 * r.value / (2.0 * PI),
        boundary_ratio,
        truncated: boundary_ratio > TRUNCATION_RATIO,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MirrorAxis {
    /// Compares `F(-kx, ky)` with `F(kx, ky)`.
    Kx,
    /// Compares `F(kx, -ky)` with `F(kx, ky)`.
    Ky,
}

/// `max |F(mirror) - F| / peak` over the grid.
pub fn symmetry_residual(spectrum: &Spectrum, axis: MirrorAxis) -> Result<f64> {
    let g = &spectrum.grid;
    let symmetric = match axis {
        MirrorAxis::Kx => g.kx.is_symmetric(),
        MirrorAxis::Ky => g.ky.is_symmetric(),
    };
    if !symmetric {
        return Err(Error::GridNotSymmetric);
    }
    let peak = spectrum.peak();
    if peak <= 0.0 {
        return Ok(0.0);
    }
    let (nx, ny) = (g.kx.count, g.ky.count);
    let mut worst: f64 = 0.0;
    for iy in 0..ny {
        for ix in 0..nx {
            let (mx, my) = match axis {
                MirrorAxis::Kx => (nx - 1 - ix, iy),
                MirrorAxis::Ky => (ix, ny - 1 - iy),
            };
            let d = (spectrum.value(mx, my) - spectrum.value(ix, iy)).abs();
            if d.is_finite() {
                worst = worst.max(d);
            }
        }
    }
    Ok(worst / peak)
}

/// Canonical momentum at which the kinetic momentum at `t_end` vanishes.
pub fn kinetic_origin(spectrum: &Spectrum) -> (f64, f64) {
    let q = spectrum.metadata.particle.charge;
    let a = spectrum.metadata.final_potential;
    (q * a[0], q * a[1])
}

/// Band around the radius of the global maximum, `+-3` grid cells wide.
pub fn ring_band(spectrum: &Spectrum) -> Option<(f64, f64)> {
    let (ix, iy) = spectrum.argmax()?;
    let (cx, cy) = kinetic_origin(spectrum);
    let k = spectrum.grid.node(ix, iy);
    let r = (k[0] - cx).hypot(k[1] - cy);
    let cell = spectrum.grid.kx.spacing().max(spectrum.grid.ky.spacing());
    Some(((r - 3.0 * cell).max(0.0), r + 3.0 * cell))
}

/// Radially averaged `F` at `samples` uniform angles around the kinetic
/// origin, over radii in `[r_min, r_max]`.
pub fn azimuthal_profile(
    spectrum: &Spectrum,
    r_band: (f64, f64),
    samples: usize,
) -> Result<Vec<f64>> {
    let (r_min, r_max) = r_band;
    let g = &spectrum.grid;
    let (cx, cy) = kinetic_origin(spectrum);
    let inside = r_min >= 0.0
        && r_max >= r_min
        && cx - r_max >= g.kx.min
        && cx + r_max <= g.kx.max
        && cy - r_max >= g.ky.min
        && cy + r_max <= g.ky.max;
    if !inside {
        return Err(Error::BandOutsideGrid { r_min, r_max });
    }
    if samples == 0 {
        return Err(Error::ProfileTooShort(0));
    }
    let cell = g.kx.spacing().min(g.ky.spacing());
    let n_r = (((r_max - r_min) / cell).ceil() as usize + 1).max(3);
    let radii: Vec<f64> = (0..n_r)
        .map(|j| r_min + (r_max - r_min) * j as f64 / (n_r - 1) as f64)
        .collect();
    let mut profile = Vec::with_capacity(samples);
    for s in 0..samples {
        let phi = 2.0 * PI * s as f64 / samples as f64;
        let (c, sn) = (phi.cos(), phi.sin());
        let mut acc = 0.0;
        for &r in &radii {
            acc += spectrum
                .interpolate(cx + r * c, cy + r * sn)
                .ok_or(Error::BandOutsideGrid { r_min, r_max })?;
        }
        profile.push(acc / n_r as f64);
    }
    Ok(profile)
}

/// Relative amplitudes `2|c_m| / c_0` of the profile's Fourier modes
/// `m = 0..=n/2` (entry 0 is 1 for a positive mean).
pub fn azimuthal_spectrum(profile: &[f64]) -> Vec<f64> {
    let n = profile.len();
    let mut buf: Vec<Complex64> = profile.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let c0 = buf[0].re.abs();
    (0..=n / 2)
        .map(|m| {
            let scale = if m == 0 || 2 * m == n { 1.0 } else { 2.0 };
            if c0 > 0.0 {
                scale * buf[m].norm() / c0
            } else {
                f64::INFINITY
            }
        })
        .collect()
}

/// Below this relative amplitude the profile counts as flat.
pub const FLAT_PROFILE_FLOOR: f64 = 1e-3;

/// Mode number of the strongest nonzero azimuthal Fourier component.
/// Modes within 1% of the strongest resolve to the lowest number.
pub fn dominant_azimuthal_mode(profile: &[f64]) -> Result<usize> {
    if profile.len() < 64 {
        return Err(Error::ProfileTooShort(profile.len()));
    }
    let amps = azimuthal_spectrum(profile);
    let max = amps[1..].iter().copied().fold(0.0, f64::max);
    if !(max >= FLAT_PROFILE_FLOOR) {
        return Err(Error::FlatProfile);
    }
    Ok((1..amps.len())
        .find(|&m| amps[m] >= 0.99 * max)
        .expect("maximum is attained"))
}

/// `m* = m sqrt(1 + E01^2 / 2)` with `m = 1`, `E01` in units of the critical field.
pub fn effective_mass(e01: f64) -> f64 {
    (1.0 + 0.5 * e01 * e01).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub value: f64,
    pub density: f64,
    pub peak_f: f64,
    pub gamma: f64,
    pub failed_nodes: usize,
    /// Set when the row could not be computed at all.
    pub error: Option<String>,
}

impl ScanRow {
    pub fn failed(&self) -> bool {
        self.error.is_some() || self.failed_nodes > 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanTable {
    pub parameter: String,
    pub base_hash: String,
    pub rows: Vec<ScanRow>,
}

/// One spectrum and slice density per parameter value; rows are sorted by
/// value. Per-row failures are recorded, not propagated.
pub fn parameter_scan(
    base: &FieldConfig,
    parameter: &str,
    values: &[f64],
    grid: &MomentumGrid,
    settings: &SolverSettings,
    options: &SweepOptions,
) -> Result<ScanTable> {
    let (index, _) = parse_parameter_path(parameter)?;
    let mut sorted = values.to_vec();
    if sorted.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig("scan values must be finite".into()));
    }
    sorted.sort_by(f64::total_cmp);
    let gamma_pulse = index.unwrap_or(0);
    let p = options.particle;
    let mut rows = Vec::with_capacity(sorted.len());
    for value in sorted {
        let row = base.with_parameter(parameter, value).and_then(|field| {
            let gamma = field
                .pulses()
                .get(gamma_pulse)
                .map(|pulse| keldysh_gamma(pulse, p.mass, p.charge).unwrap_or(f64::INFINITY))
                .unwrap_or(f64::NAN);
            let s = compute_spectrum(&field, grid, settings, options)?;
            Ok(ScanRow {
                value,
                density: slice_density(&s).density,
                peak_f: s.peak(),
                gamma,
                failed_nodes: s.metadata.failures.len(),
                error: None,
            })
        });
        rows.push(row.unwrap_or_else(|e| ScanRow {
            value,
            density: f64::NAN,
            peak_f: f64::NAN,
            gamma: f64::NAN,
            failed_nodes: 0,
            error: Some(e.to_string()),
        }));
    }
    Ok(ScanTable {
        parameter: parameter.to_string(),
        base_hash: base.config_hash(),
        rows,
    })
}
