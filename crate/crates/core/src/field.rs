//! External electric field: superposed elliptically polarized Gaussian
//! pulses, their continuation to complex time, and the vector potential in
//! temporal gauge (`E = -dA/dt`, `A(t_start) = 0`).
//!
//! Internal units: `m = 1`, `|q| = 1`, so the critical field is 1, times are
//! in `1/m` and frequencies in `m`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

pub type Vec3 = [f64; 3];
pub type CVec3 = [Complex64; 3];

/// Largest exponent we allow before `exp` overflows a double.
const MAX_EXPONENT: f64 = 700.0;

/// `E01 e^{-(t-T)^2/2tau^2} / sqrt(1+delta^2) * (cos phi, delta sin phi, 0)`
/// with `phi = omega (t - T) + phase`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EllipticPulse {
    #[serde(rename = "E01")]
    pub amplitude: f64,
    #[serde(rename = "delta")]
    pub ellipticity: f64,
    #[serde(rename = "omega")]
    pub frequency: f64,
    #[serde(rename = "tau")]
    pub duration: f64,
    #[serde(rename = "delay", default)]
    pub delay: f64,
    #[serde(rename = "phase", default)]
    pub carrier_phase: f64,
}

impl EllipticPulse {
    pub fn new(amplitude: f64, ellipticity: f64, frequency: f64, duration: f64) -> Self {
        EllipticPulse {
            amplitude,
            ellipticity,
            frequency,
            duration,
            delay: 0.0,
            carrier_phase: 0.0,
        }
    }

    pub fn with_delay(mut self, delay: f64) -> Self {
        self.delay = delay;
        self
    }

    pub fn with_phase(mut self, phase: f64) -> Self {
        self.carrier_phase = phase;
        self
    }

    /// Effective amplitude `E1 = E01 / sqrt(1 + delta^2)`.
    pub fn field_amplitude(&self) -> f64 {
        self.amplitude / (1.0 + self.ellipticity * self.ellipticity).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.amplitude,
            self.ellipticity,
            self.frequency,
            self.duration,
            self.delay,
            self.carrier_phase,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidConfig(
                "pulse parameters must be finite".into(),
            ));
        }
        if self.amplitude < 0.0 {
            return Err(Error::InvalidConfig("E01 must be >= 0".into()));
        }
        if self.duration <= 0.0 {
            return Err(Error::InvalidConfig("tau must be > 0".into()));
        }
        if self.frequency < 0.0 {
            return Err(Error::InvalidConfig("omega must be >= 0".into()));
        }
        if self.ellipticity.abs() > 1.0 {
            return Err(Error::InvalidConfig("|delta| must be <= 1".into()));
        }
        Ok(())
    }

    fn eval(&self, t: f64) -> Vec3 {
        let s = t - self.delay;
        let env = (-(s * s) / (2.0 * self.duration * self.duration)).exp();
        let phi = self.frequency * s + self.carrier_phase;
        let e1 = self.field_amplitude();
        // Same operation order as `eval_complex` so the real axis agrees bitwise.
        [
            env * phi.cos() * e1,
            env * (phi.sin() * self.ellipticity) * e1,
            0.0,
        ]
    }

    fn eval_complex(&self, t: Complex64) -> Result<CVec3> {
        let s = t - self.delay;
        let exponent = -(s * s) / (2.0 * self.duration * self.duration);
        let phi = s * self.frequency + self.carrier_phase;
        if exponent.re > MAX_EXPONENT || phi.im.abs() > MAX_EXPONENT {
            return Err(Error::Overflow { re: t.re, im: t.im });
        }
        let env = exponent.exp();
        let e1 = self.field_amplitude();
        let zero = Complex64::new(0.0, 0.0);
        Ok([
            env * phi.cos() * e1,
            env * (phi.sin() * self.ellipticity) * e1,
            zero,
        ])
    }
}

/// An ordered, non-empty list of pulses whose fields add.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    pulses: Vec<EllipticPulse>,
}

impl FieldConfig {
    pub fn new(pulses: Vec<EllipticPulse>) -> Result<Self> {
        if pulses.is_empty() {
            return Err(Error::InvalidConfig(
                "field needs at least one pulse".into(),
            ));
        }
        for p in &pulses {
            p.validate()?;
        }
        Ok(FieldConfig { pulses })
    }

    pub fn single(pulse: EllipticPulse) -> Result<Self> {
        Self::new(vec![pulse])
    }

    /// Two pulses centred at `0` and `delay`.
    pub fn two_pulse(first: EllipticPulse, second: EllipticPulse, delay: f64) -> Result<Self> {
        Self::new(vec![first.with_delay(0.0), second.with_delay(delay)])
    }

    /// Parses a `[[pulses]]` TOML document.
    pub fn from_toml_str(src: &str) -> Result<Self> {
        let raw: FieldConfig =
            toml::from_str(src).map_err(|e| Error::InvalidConfig(e.message().to_string()))?;
        Self::new(raw.pulses)
    }

    pub fn pulses(&self) -> &[EllipticPulse] {
        &self.pulses
    }

    /// Returns a copy with one numeric parameter replaced. `path` is
    /// `pulses[i].key`, or `pulses[].key` / `pulses[*].key` for every pulse.
    pub fn with_parameter(&self, path: &str, value: f64) -> Result<Self> {
        let (index, key) = parse_parameter_path(path)?;
        let mut pulses = self.pulses.clone();
        let targets: Vec<usize> = match index {
            Some(i) if i < pulses.len() => vec![i],
            Some(i) => {
                return Err(Error::InvalidConfig(format!(
                    "pulse index {i} out of range ({} pulses)",
                    pulses.len()
                )))
            }
            None => (0..pulses.len()).collect(),
        };
        for i in targets {
            let p = &mut pulses[i];
            match key {
                "E01" => p.amplitude = value,
                "delta" => p.ellipticity = value,
                "omega" => p.frequency = value,
                "tau" => p.duration = value,
                "delay" => p.delay = value,
                "phase" => p.carrier_phase = value,
                _ => unreachable!("key validated by parse_parameter_path"),
            }
        }
        Self::new(pulses)
    }

    /// True when every amplitude is zero.
    pub fn is_zero(&self) -> bool {
        self.pulses.iter().all(|p| p.amplitude == 0.0)
    }

    /// Upper bound on `|E(t)|` over all real `t`.
    pub fn peak_bound(&self) -> f64 {
        self.pulses.iter().map(|p| p.field_amplitude()).sum()
    }

    pub fn min_duration(&self) -> f64 {
        self.pulses
            .iter()
            .map(|p| p.duration)
            .fold(f64::INFINITY, f64::min)
    }

    /// Integration window: from `min(delay - cut*tau)` to `max(delay + cut*tau)`.
    pub fn default_span(&self, envelope_cut: f64) -> (f64, f64) {
        let start = self
            .pulses
            .iter()
            .map(|p| p.delay - envelope_cut * p.duration)
            .fold(f64::INFINITY, f64::min);
        let end = self
            .pulses
            .iter()
            .map(|p| p.delay + envelope_cut * p.duration)
            .fold(f64::NEG_INFINITY, f64::max);
        (start, end)
    }

    /// Stable hex digest of the pulse parameters.
    pub fn config_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        for p in &self.pulses {
            for v in [
                p.amplitude,
                p.ellipticity,
                p.frequency,
                p.duration,
                p.delay,
                p.carrier_phase,
            ] {
                hasher.update(v.to_bits().to_le_bytes());
            }
        }
        hex::encode(&hasher.finalize()[..8])
    }
}

pub(crate) fn parse_parameter_path(path: &str) -> Result<(Option<usize>, &str)> {
    let bad = || Error::InvalidConfig(format!("unsupported parameter path `{path}`"));
    let rest = path.strip_prefix("pulses[").ok_or_else(bad)?;
    let close = rest.find(']').ok_or_else(bad)?;
    let index = match &rest[..close] {
        "" | "*" => None,
        digits => Some(digits.parse::<usize>().map_err(|_| bad())?),
    };
    let key = rest[close + 1..].strip_prefix('.').ok_or_else(bad)?;
    match key {
        "E01" | "delta" | "omega" | "tau" | "delay" | "phase" => Ok((index, key)),
        _ => Err(bad()),
    }
}

/// Total field at real time `t`. The z-component is always zero.
pub fn eval_field(config: &FieldConfig, t: f64) -> Vec3 {
    let mut e = [0.0; 3];
    for p in &config.pulses {
        let ep = p.eval(t);
        e[0] += ep[0];
        e[1] += ep[1];
    }
    e
}

/// Total field continued to complex `t`. Fails when the continued envelope
/// or carrier would overflow.
pub fn eval_field_complex(config: &FieldConfig, t: Complex64) -> Result<CVec3> {
    let zero = Complex64::new(0.0, 0.0);
    let mut e = [zero; 3];
    for p in &config.pulses {
        let ep = p.eval_complex(t)?;
        e[0] += ep[0];
        e[1] += ep[1];
    }
    Ok(e)
}

/// `m omega / |q E1|`.
pub fn keldysh_gamma(pulse: &EllipticPulse, m: f64, q: f64) -> Result<f64> {
    let e1 = pulse.field_amplitude();
    if e1 == 0.0 || q == 0.0 {
        return Err(Error::DivisionByZero(
            "Keldysh parameter with zero field amplitude",
        ));
    }
    Ok(m * pulse.frequency / (q * e1).abs())
}

/// Tabulated vector potential with cubic Hermite interpolation. Node
/// derivatives are the exact `-E(t_i)`.
#[derive(Debug, Clone)]
pub struct PotentialTable {
    config: FieldConfig,
    t_start: f64,
    step: f64,
    a_values: Vec<[f64; 2]>,
    e_values: Vec<[f64; 2]>,
    accuracy: f64,
}

impl PotentialTable {
    pub fn config(&self) -> &FieldConfig {
        &self.config
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_start + self.step * (self.a_values.len() - 1) as f64
    }

    pub fn t_grid(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.a_values.len()).map(move |i| self.t_start + self.step * i as f64)
    }

    pub fn len(&self) -> usize {
        self.a_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a_values.is_empty()
    }

    /// Interpolation order of the Hermite scheme.
    pub fn order(&self) -> usize {
        4
    }

    /// Estimated max interpolation error, checked against direct quadrature.
    pub fn accuracy(&self) -> f64 {
        self.accuracy
    }

    /// `A(t)`, clamped to the table ends outside `[t_start, t_end]`.
    pub fn potential(&self, t: f64) -> Vec3 {
        let n = self.a_values.len();
        let x = ((t - self.t_start) / self.step).clamp(0.0, (n - 1) as f64);
        let i = (x.floor() as usize).min(n - 2);
        let s = x - i as f64;
        let h = self.step;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        let mut out = [0.0; 3];
        for c in 0..2 {
            let (a0, a1) = (self.a_values[i][c], self.a_values[i + 1][c]);
            let (d0, d1) = (-self.e_values[i][c], -self.e_values[i + 1][c]);
            out[c] = h00 * a0 + h10 * h * d0 + h01 * a1 + h11 * h * d1;
        }
        out
    }

    /// `A` at the end of the table, i.e. the residual asymptotic potential.
    pub fn final_potential(&self) -> Vec3 {
        let a = self.a_values[self.a_values.len() - 1];
        [a[0], a[1], 0.0]
    }
}

/// Builds `A(t) = -int_{t_start}^t E` on a uniform grid fine enough that
/// Hermite interpolation meets `tol` at every cell midpoint.
pub fn build_potential(
    config: &FieldConfig,
    t_start: f64,
    t_end: f64,
    tol: f64,
) -> Result<PotentialTable> {
    if !(t_start < t_end) {
        return Err(Error::InvalidConfig(
            "potential table needs t_start < t_end".into(),
        ));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig("potential table needs tol > 0".into()));
    }
    // Resolve the fastest scale: carrier period and envelope width.
    let scale = config
        .pulses
        .iter()
        .map(|p| {
            let carrier = if p.frequency > 0.0 {
                1.0 / p.frequency
            } else {
                f64::INFINITY
            };
            carrier.min(p.duration)
        })
        .fold(f64::INFINITY, f64::min);
    let mut cells = (((t_end - t_start) / (scale / 4.0)).ceil() as usize).max(16);
    const MAX_CELLS: usize = 1 << 22;
    let field = |t: f64| {
        let e = eval_field(config, t);
        [e[0], e[1]]
    };
    loop {
        let step = (t_end - t_start) / cells as f64;
        let mut a_values = Vec::with_capacity(cells + 1);
        let mut e_values = Vec::with_capacity(cells + 1);
        let mut acc = [0.0, 0.0];
        a_values.push(acc);
        e_values.push(field(t_start));
        let seg_tol = tol / cells as f64;
        for i in 0..cells {
            let a = t_start + step * i as f64;
            let b = t_start + step * (i + 1) as f64;
            let r = quadrature::integrate(field, a, b, seg_tol, 0.0, 64)?;
            acc[0] -= r.value[0];
            acc[1] -= r.value[1];
            a_values.push(acc);
            e_values.push(field(b));
        }
        let mut table = PotentialTable {
            config: config.clone(),
            t_start,
            step,
            a_values,
            e_values,
            accuracy: 0.0,
        };
        // Compare interpolated midpoints with direct quadrature.
        let mut worst: f64 = 0.0;
        let stride = (cells / 512).max(1);
        for i in (0..cells).step_by(stride) {
            let a = t_start + step * i as f64;
            let mid = a + 0.5 * step;
            let r = quadrature::integrate(field, a, mid, seg_tol, 0.0, 64)?;
            let base = table.a_values[i];
            let interp = table.potential(mid);
            worst = worst
                .max((interp[0] - (base[0] - r.value[0])).abs())
                .max((interp[1] - (base[1] - r.value[1])).abs());
        }
        if worst <= tol {
            table.accuracy = worst.max(tol * f64::EPSILON);
            return Ok(table);
        }
        if cells * 2 > MAX_CELLS {
            return Err(Error::ToleranceNotMet {
                what: "potential table",
                requested: tol,
                achieved: worst,
            });
        }
        cells *= 2;
    }
}

/// `A(anchor) + int_anchor^t (-E)` along the straight segment, with `A(anchor)`
/// taken from the table.
pub fn eval_potential_complex(table: &PotentialTable, t: Complex64, anchor: f64) -> Result<CVec3> {
    if !(anchor >= table.t_start() && anchor <= table.t_end()) {
        return Err(Error::InvalidConfig(format!(
            "anchor {anchor} outside table range [{}, {}]",
            table.t_start(),
            table.t_end()
        )));
    }
    let base = table.potential(anchor);
    let mut out = [
        Complex64::new(base[0], 0.0),
        Complex64::new(base[1], 0.0),
        Complex64::new(0.0, 0.0),
    ];
    let d = t - anchor;
    if d.norm() == 0.0 {
        return Ok(out);
    }
    // Surface overflow before integrating.
    eval_field_complex(&table.config, t)?;
    let mut failure = None;
    let r = quadrature::integrate(
        |s: f64| {
            let ts = Complex64::new(anchor, 0.0) + d * s;
            match eval_field_complex(&table.config, ts) {
                Ok(e) => [e[0] * d, e[1] * d],
                Err(err) => {
                    failure.get_or_insert(err);
                    [Complex64::new(0.0, 0.0); 2]
                }
            }
        },
        0.0,
        1.0,
        table.accuracy.max(1e-14),
        1e-13,
        400,
    )?;
    if let Some(err) = failure {
        return Err(err);
    }
    out[0] -= r.value[0];
    out[1] -= r.value[1];
    Ok(out)
}
