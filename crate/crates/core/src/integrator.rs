//! Adaptive integration of a single momentum mode from the vacuum at
//! `t_start` to `t_end`, in any of the three formulations.

use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{eval_field, FieldConfig, Vec3};
use crate::qve::{
    bogoliubov_rhs, chi_rhs, chi_to_fgh, fgh_rhs, omega, vacuum_chi, BogoliubovState, ChiState,
    FghState, ModeCoordinates,
};
use crate::rk::{dop853_step, OdeSystem, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formulation {
    Chi,
    Fgh,
    Bogoliubov,
}

impl Formulation {
    pub const ALL: [Formulation; 3] = [Formulation::Chi, Formulation::Fgh, Formulation::Bogoliubov];

    pub fn name(self) -> &'static str {
        match self {
            Formulation::Chi => "chi",
            Formulation::Fgh => "fgh",
            Formulation::Bogoliubov => "bogoliubov",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    /// Half-width of the integration window in units of each pulse's tau.
    pub envelope_cut: f64,
    pub formulation: Formulation,
    pub record_trajectory: bool,
    /// Explicit `(t_start, t_end)`, overriding the envelope rule.
    pub t_span: Option<(f64, f64)>,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings::production()
    }
}

impl SolverSettings {
    /// Tight tolerances used when formulations are compared against each other.
    pub fn oracle() -> Self {
        SolverSettings {
            rel_tol: 1e-10,
            abs_tol: 1e-10,
            max_steps: 5_000_000,
            envelope_cut: 7.0,
            formulation: Formulation::Fgh,
            record_trajectory: false,
            t_span: None,
        }
    }

    /// Settings for momentum sweeps. Bogoliubov keeps small `F` accurate at
    /// loose tolerances; 1e-9 holds its unitarity drift under 1e-8.
    pub fn production() -> Self {
        SolverSettings {
            rel_tol: 1e-9,
            abs_tol: 1e-9,
            formulation: Formulation::Bogoliubov,
            ..SolverSettings::oracle()
        }
    }

    pub fn with_formulation(mut self, formulation: Formulation) -> Self {
        self.formulation = formulation;
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.rel_tol = tol;
        self.abs_tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::InvalidConfig("solver tolerances must be > 0".into()));
        }
        if self.max_steps < 1 {
            return Err(Error::InvalidConfig("max_steps must be >= 1".into()));
        }
        if !(self.envelope_cut > 0.0) {
            return Err(Error::InvalidConfig("envelope_cut must be > 0".into()));
        }
        if let Some((a, b)) = self.t_span {
            if !(a < b) {
                return Err(Error::InvalidConfig(
                    "t_span must satisfy start < end".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn span(&self, field: &FieldConfig) -> (f64, f64) {
        self.t_span
            .unwrap_or_else(|| field.default_span(self.envelope_cut))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub f: f64,
    pub drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeResult {
    pub f_inf: f64,
    /// Largest violation of the formulation's conserved quantity.
    pub invariant_drift: f64,
    pub n_steps: usize,
    pub n_rejected: usize,
    pub n_rhs: usize,
    pub t_span: (f64, f64),
    /// `|F(t_end) - F(t_end - tau_min/10)|`.
    pub late_change: f64,
    /// Largest `h * max(omega(t), omega(t+h))` over accepted steps.
    pub max_step_phase: f64,
    /// `A(t_end)`, for conversion to kinetic momentum.
    pub final_potential: Vec3,
    pub trajectory: Option<Vec<TrajectorySample>>,
}

impl ModeResult {
    /// Whether `F` had stopped changing before `t_end`.
    pub fn settled(&self) -> bool {
        self.late_change < 1e-8 * (1.0 + self.f_inf.abs())
    }
}

trait ModeSystem<const N: usize>: OdeSystem<N> {
    fn vacuum(&self) -> [f64; N];
    fn potential(&self, y: &[f64; N]) -> Vec3;
    fn occupation(&self, y: &[f64; N]) -> f64;
    fn drift(&self, y: &[f64; N]) -> f64;
}

struct ChiOde<'a> {
    field: &'a FieldConfig,
    mode: ModeCoordinates,
}

struct FghOde<'a> {
    field: &'a FieldConfig,
    mode: ModeCoordinates,
}

struct BogoliubovOde<'a> {
    field: &'a FieldConfig,
    mode: ModeCoordinates,
}

// State layouts carry the potential in the trailing two slots (A_z = 0).
impl OdeSystem<5> for ChiOde<'_> {
    fn rhs(&self, t: f64, y: &[f64; 5]) -> [f64; 5] {
        let e = eval_field(self.field, t);
        let a = [y[3], y[4], 0.0];
        let s = ChiState {
            chi0: y[0],
            chi1: y[1],
            chi2: y[2],
        };
        let d = chi_rhs(&s, &self.mode, &a);
        [d.chi0, d.chi1, d.chi2, -e[0], -e[1]]
    }
}

impl ModeSystem<5> for ChiOde<'_> {
    fn vacuum(&self) -> [f64; 5] {
        let v = vacuum_chi(&self.mode, &[0.0; 3]);
        [v.chi0, v.chi1, v.chi2, 0.0, 0.0]
    }
    fn potential(&self, y: &[f64; 5]) -> Vec3 {
        [y[3], y[4], 0.0]
    }
    fn occupation(&self, y: &[f64; 5]) -> f64 {
        let s = ChiState {
            chi0: y[0],
            chi1: y[1],
            chi2: y[2],
        };
        chi_to_fgh(&s, &self.mode, &self.potential(y)).f
    }
    fn drift(&self, y: &[f64; 5]) -> f64 {
        let s = ChiState {
            chi0: y[0],
            chi1: y[1],
            chi2: y[2],
        };
        (s.invariant() - 1.0).abs()
    }
}

impl OdeSystem<5> for FghOde<'_> {
    fn rhs(&self, t: f64, y: &[f64; 5]) -> [f64; 5] {
        let e = eval_field(self.field, t);
        let a = [y[3], y[4], 0.0];
        let s = FghState {
            f: y[0],
            g: y[1],
            h: y[2],
        };
        let d = fgh_rhs(&s, &self.mode, &e, &a);
        [d.f, d.g, d.h, -e[0], -e[1]]
    }
}

impl ModeSystem<5> for FghOde<'_> {
    fn vacuum(&self) -> [f64; 5] {
        [0.0; 5]
    }
    fn potential(&self, y: &[f64; 5]) -> Vec3 {
        [y[3], y[4], 0.0]
    }
    fn occupation(&self, y: &[f64; 5]) -> f64 {
        y[0]
    }
    fn drift(&self, y: &[f64; 5]) -> f64 {
        FghState {
            f: y[0],
            g: y[1],
            h: y[2],
        }
        .constraint_residual()
        .abs()
    }
}

fn bogoliubov_state(y: &[f64; 7]) -> BogoliubovState {
    BogoliubovState {
        alpha: Complex64::new(y[0], y[1]),
        beta: Complex64::new(y[2], y[3]),
        theta: y[4],
    }
}

impl OdeSystem<7> for BogoliubovOde<'_> {
    fn rhs(&self, t: f64, y: &[f64; 7]) -> [f64; 7] {
        let e = eval_field(self.field, t);
        let a = [y[5], y[6], 0.0];
        let d = bogoliubov_rhs(&bogoliubov_state(y), &self.mode, &e, &a);
        [
            d.alpha.re, d.alpha.im, d.beta.re, d.beta.im, d.theta, -e[0], -e[1],
        ]
    }

    fn is_phase(&self, i: usize) -> bool {
        i == 4
    }
}

impl ModeSystem<7> for BogoliubovOde<'_> {
    fn vacuum(&self) -> [f64; 7] {
        [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
    }
    fn potential(&self, y: &[f64; 7]) -> Vec3 {
        [y[5], y[6], 0.0]
    }
    fn occupation(&self, y: &[f64; 7]) -> f64 {
        bogoliubov_state(y).occupation()
    }
    fn drift(&self, y: &[f64; 7]) -> f64 {
        bogoliubov_state(y).unitarity_residual().abs()
    }
}

#[derive(Debug, Default)]
struct DriveStats {
    steps: usize,
    rejected: usize,
    rhs: usize,
    max_drift: f64,
    max_step_phase: f64,
}

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 6.0;

/// Advances `y` from `t0` to `t1` (either direction).
#[allow(clippy::too_many_arguments)]
fn drive<const N: usize, S: ModeSystem<N>>(
    sys: &S,
    mode: &ModeCoordinates,
    e_bound: f64,
    y: &mut [f64; N],
    t0: f64,
    t1: f64,
    settings: &SolverSettings,
    stats: &mut DriveStats,
    mut trajectory: Option<&mut Vec<TrajectorySample>>,
) -> Result<()> {
    if t0 == t1 {
        return Ok(());
    }
    let dir = (t1 - t0).signum();
    let tol = Tolerances {
        rel: settings.rel_tol,
        abs: settings.abs_tol,
    };
    let mut t = t0;
    let mut dy = sys.rhs(t, y);
    stats.rhs += 1;
    let mut h = f64::INFINITY;
    let mut last_rejected = false;
    let omega_at = |y: &[f64; N]| omega(mode, &sys.potential(y));

    while (t1 - t) * dir > 0.0 {
        if stats.steps + stats.rejected >= settings.max_steps {
            return Err(Error::StepBudgetExceeded {
                k: mode.k,
                t,
                max_steps: settings.max_steps,
            });
        }
        // Oscillation guard: h * omega_max <= pi/4 over the step, with
        // |p| growing at most by |q| E_max h.
        let p_now = mode.kinetic_sq(&sys.potential(y)).sqrt();
        let om_now = (p_now * p_now + mode.m * mode.m).sqrt();
        let h_trial = FRAC_PI_4 / om_now;
        let p_max = p_now + mode.q.abs() * e_bound * h_trial;
        let guard = FRAC_PI_4 / (p_max * p_max + mode.m * mode.m).sqrt();
        h = h.min(guard);

        let remaining = (t1 - t).abs();
        let landing = h >= remaining;
        let step = if landing { remaining } else { h };

        let res = dop853_step(sys, t, y, &dy, dir * step, tol);
        stats.rhs += 12;
        let err = res.error;
        if err.is_finite() && err <= 1.0 {
            let t_new = if landing { t1 } else { t + dir * step };
            let om_new = omega_at(&res.y);
            stats.max_step_phase = stats.max_step_phase.max(step * om_now.max(om_new));
            *y = res.y;
            dy = res.dy;
            t = t_new;
            stats.steps += 1;
            let drift = sys.drift(y);
            stats.max_drift = stats.max_drift.max(drift);
            if let Some(tr) = trajectory.as_deref_mut() {
                tr.push(TrajectorySample {
                    t,
                    f: sys.occupation(y),
                    drift,
                });
            }
            let mut fac = (SAFETY * err.powf(-1.0 / 8.0)).clamp(FAC_MIN, FAC_MAX);
            if last_rejected {
                fac = fac.min(1.0);
            }
            h = step * fac;
            last_rejected = false;
        } else {
            stats.rejected += 1;
            let fac = if err.is_finite() {
                (SAFETY * err.powf(-1.0 / 8.0)).clamp(FAC_MIN, 1.0)
            } else {
                FAC_MIN
            };
            h = step * fac;
            last_rejected = true;
            if h <= 16.0 * f64::EPSILON * t.abs().max(1.0) {
                return Err(Error::StepSizeUnderflow { k: mode.k, t, h });
            }
        }
    }
    Ok(())
}

fn solve_system<const N: usize, S: ModeSystem<N>>(
    sys: &S,
    field: &FieldConfig,
    mode: &ModeCoordinates,
    settings: &SolverSettings,
) -> Result<ModeResult> {
    let (t_start, t_end) = settings.span(field);
    let e_bound = field.peak_bound();
    let mut y = sys.vacuum();
    let mut stats = DriveStats::default();
    let mut trajectory = settings.record_trajectory.then(Vec::new);

    let t_late = (t_end - 0.1 * field.min_duration()).max(t_start);
    drive(
        sys,
        mode,
        e_bound,
        &mut y,
        t_start,
        t_late,
        settings,
        &mut stats,
        trajectory.as_mut(),
    )?;
    let f_late = sys.occupation(&y);
    drive(
        sys,
        mode,
        e_bound,
        &mut y,
        t_late,
        t_end,
        settings,
        &mut stats,
        trajectory.as_mut(),
    )?;
    let f_inf = sys.occupation(&y);
    Ok(ModeResult {
        f_inf,
        invariant_drift: stats.max_drift,
        n_steps: stats.steps,
        n_rejected: stats.rejected,
        n_rhs: stats.rhs,
        t_span: (t_start, t_end),
        late_change: (f_inf - f_late).abs(),
        max_step_phase: stats.max_step_phase,
        final_potential: sys.potential(&y),
        trajectory,
    })
}

/// Integrates one mode from the vacuum and returns the asymptotic
/// occupation with solver diagnostics.
pub fn solve_mode(
    field: &FieldConfig,
    mode: &ModeCoordinates,
    settings: &SolverSettings,
) -> Result<ModeResult> {
    settings.validate()?;
    if !(mode.m > 0.0) {
        return Err(Error::InvalidConfig("mass must be > 0".into()));
    }
    if field.is_zero() {
        // Without a field the vacuum is stationary in every formulation.
        let t_span = settings.span(field);
        return Ok(ModeResult {
            f_inf: 0.0,
            invariant_drift: 0.0,
            n_steps: 0,
            n_rejected: 0,
            n_rhs: 0,
            t_span,
            late_change: 0.0,
            max_step_phase: 0.0,
            final_potential: [0.0; 3],
            trajectory: settings.record_trajectory.then(|| {
                vec![TrajectorySample {
                    t: t_span.1,
                    f: 0.0,
                    drift: 0.0,
                }]
            }),
        });
    }
    let mode_c = *mode;
    match settings.formulation {
        Formulation::Chi => solve_system(
            &ChiOde {
                field,
                mode: mode_c,
            },
            field,
            mode,
            settings,
        ),
        Formulation::Fgh => solve_system(
            &FghOde {
                field,
                mode: mode_c,
            },
            field,
            mode,
            settings,
        ),
        Formulation::Bogoliubov => solve_system(
            &BogoliubovOde {
                field,
                mode: mode_c,
            },
            field,
            mode,
            settings,
        ),
    }
}

/// Results of all three formulations for one mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormulationComparison {
    pub chi: ModeResult,
    pub fgh: ModeResult,
    pub bogoliubov: ModeResult,
}

impl FormulationComparison {
    pub fn result(&self, f: Formulation) -> &ModeResult {
        match f {
            Formulation::Chi => &self.chi,
            Formulation::Fgh => &self.fgh,
            Formulation::Bogoliubov => &self.bogoliubov,
        }
    }

    /// `|F_a - F_b|`.
    pub fn discrepancy(&self, a: Formulation, b: Formulation) -> f64 {
        (self.result(a).f_inf - self.result(b).f_inf).abs()
    }

    pub fn max_discrepancy(&self) -> f64 {
        use Formulation::*;
        [(Chi, Fgh), (Chi, Bogoliubov), (Fgh, Bogoliubov)]
            .iter()
            .map(|&(a, b)| self.discrepancy(a, b))
            .fold(0.0, f64::max)
    }
}

/// Runs every formulation with shared settings.
pub fn solve_mode_all(
    field: &FieldConfig,
    mode: &ModeCoordinates,
    settings: &SolverSettings,
) -> Result<FormulationComparison> {
    let run = |f: Formulation| {
        solve_mode(field, mode, &settings.with_formulation(f)).map_err(|e| Error::Formulation {
            formulation: f,
            source: Box::new(e),
        })
    };
    Ok(FormulationComparison {
        chi: run(Formulation::Chi)?,
        fgh: run(Formulation::Fgh)?,
        bogoliubov: run(Formulation::Bogoliubov)?,
    })
}

/// A mode state in one of the formulations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModeState {
    Chi(ChiState),
    Fgh(FghState),
    Bogoliubov(BogoliubovState),
}

/// Propagates an arbitrary state (with its potential `A(t0)`) from `t0` to
/// `t1`; `t1 < t0` integrates backwards. Returns the state and `A(t1)`.
pub fn propagate(
    field: &FieldConfig,
    mode: &ModeCoordinates,
    state: ModeState,
    potential: Vec3,
    t0: f64,
    t1: f64,
    settings: &SolverSettings,
) -> Result<(ModeState, Vec3)> {
    settings.validate()?;
    let e_bound = field.peak_bound();
    let mut stats = DriveStats::default();
    let (ax, ay) = (potential[0], potential[1]);
    match state {
        ModeState::Chi(s) => {
            let sys = ChiOde { field, mode: *mode };
            let mut y = [s.chi0, s.chi1, s.chi2, ax, ay];
            drive(
                &sys, mode, e_bound, &mut y, t0, t1, settings, &mut stats, None,
            )?;
            let out = ChiState {
                chi0: y[0],
                chi1: y[1],
                chi2: y[2],
            };
            Ok((ModeState::Chi(out), sys.potential(&y)))
        }
        ModeState::Fgh(s) => {
            let sys = FghOde { field, mode: *mode };
            let mut y = [s.f, s.g, s.h, ax, ay];
            drive(
                &sys, mode, e_bound, &mut y, t0, t1, settings, &mut stats, None,
            )?;
            let out = FghState {
                f: y[0],
                g: y[1],
                h: y[2],
            };
            Ok((ModeState::Fgh(out), sys.potential(&y)))
        }
        ModeState::Bogoliubov(s) => {
            let sys = BogoliubovOde { field, mode: *mode };
            let mut y = [
                s.alpha.re, s.alpha.im, s.beta.re, s.beta.im, s.theta, ax, ay,
            ];
            drive(
                &sys, mode, e_bound, &mut y, t0, t1, settings, &mut stats, None,
            )?;
            Ok((
                ModeState::Bogoliubov(bogoliubov_state(&y)),
                sys.potential(&y),
            ))
        }
    }
}
