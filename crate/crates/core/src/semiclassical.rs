//! Complex turning points of `omega(k, t)`, their phase integrals and the
//! interference estimate of the asymptotic occupation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{
    build_potential, eval_field_complex, eval_potential_complex, FieldConfig, PotentialTable,
};
use crate::quadrature;
use crate::qve::{omega, omega_sq_complex, ModeCoordinates};

/// Rectangle `[re_min, re_max] x [im_min, im_max]` in complex time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchRegion {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl SearchRegion {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        let ok = re_min < re_max && im_min >= 0.0 && im_max > im_min && im_max.is_finite();
        if !ok {
            return Err(Error::InvalidConfig(format!(
                "search region [{re_min}, {re_max}] x [{im_min}, {im_max}] is empty"
            )));
        }
        Ok(SearchRegion {
            re_min,
            re_max,
            im_min,
            im_max,
        })
    }

    /// The integration window along `Re t`, `Im t` up to three envelope widths.
    pub fn default_for(field: &FieldConfig, envelope_cut: f64) -> Self {
        let (a, b) = field.default_span(envelope_cut);
        let tau = field
            .pulses()
            .iter()
            .map(|p| p.duration)
            .fold(0.0, f64::max);
        SearchRegion {
            re_min: a,
            re_max: b,
            im_min: 0.0,
            im_max: 3.0 * tau,
        }
    }

    fn contains(&self, t: Complex64, slack: f64) -> bool {
        let w = (self.re_max - self.re_min) * slack;
        let h = (self.im_max - self.im_min) * slack;
        t.re >= self.re_min - w && t.re <= self.re_max + w && t.im.abs() <= self.im_max + h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedLattice {
    pub n_re: usize,
    pub n_im: usize,
    pub max_iterations: usize,
    /// Total Newton iterations across all seeds.
    pub budget: usize,
}

impl Default for SeedLattice {
    fn default() -> Self {
        SeedLattice {
            n_re: 20,
            n_im: 10,
            max_iterations: 60,
            budget: 20 * 10 * 60,
        }
    }
}

impl SeedLattice {
    /// At least four seeds per carrier half period along `Re t`, so that
    /// every pair of a multi-cycle pulse has a nearby seed.
    pub fn carrier_resolving(field: &FieldConfig, region: &SearchRegion) -> Self {
        let omega_max = field
            .pulses()
            .iter()
            .map(|p| p.frequency)
            .fold(0.0, f64::max);
        let base = SeedLattice::default();
        let n_re = if omega_max > 0.0 {
            let half_periods = (region.re_max - region.re_min) * omega_max / std::f64::consts::PI;
            base.n_re.max((4.0 * half_periods).ceil() as usize + 1)
        } else {
            base.n_re
        };
        SeedLattice {
            n_re,
            budget: n_re * base.n_im * base.max_iterations,
            ..base
        }
    }
}

/// Upper-half-plane root `t_p` of `omega^2`; `conj(t_p)` is its partner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurningPointPair {
    pub t_p: Complex64,
    /// `|omega^2(t_p)|`.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Statistics {
    Boson,
    Fermion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseIntegralReport {
    /// Pairs sorted by increasing `K`.
    pub pairs: Vec<TurningPointPair>,
    pub k_values: Vec<f64>,
    /// Interference phase between the two dominant pairs.
    pub alpha: Option<f64>,
    /// `exp(-2 K1)`.
    pub single_pair: f64,
    pub f_boson: f64,
    pub f_fermion: f64,
    /// An estimate came out negative.
    pub negative: bool,
}

/// `omega^2` root tolerance.
pub const ROOT_RESIDUAL: f64 = 1e-10;
const DEDUP_DISTANCE: f64 = 1e-6;

/// Field data shared by all momenta: the real-axis potential table and
/// the search region.
#[derive(Debug, Clone)]
pub struct Semiclassical {
    table: PotentialTable,
    region: SearchRegion,
    seeds: SeedLattice,
}

impl Semiclassical {
    pub fn new(field: &FieldConfig, region: SearchRegion, seeds: SeedLattice) -> Result<Self> {
        if seeds.n_re == 0 || seeds.n_im == 0 || seeds.max_iterations == 0 {
            return Err(Error::InvalidConfig(
                "seed lattice must be non-empty".into(),
            ));
        }
        let (a, b) = field.default_span(7.0);
        let table = build_potential(field, a.min(region.re_min), b.max(region.re_max), 1e-11)?;
        Ok(Semiclassical {
            table,
            region,
            seeds,
        })
    }

    pub fn with_defaults(field: &FieldConfig) -> Result<Self> {
        Self::new(
            field,
            SearchRegion::default_for(field, 7.0),
            SeedLattice::default(),
        )
    }

    pub fn table(&self) -> &PotentialTable {
        &self.table
    }

    pub fn region(&self) -> &SearchRegion {
        &self.region
    }

    fn anchor(&self, t: Complex64) -> f64 {
        t.re.clamp(self.table.t_start(), self.table.t_end())
    }

    /// `omega^2(k, t)` at complex `t`.
    pub fn omega_sq(&self, mode: &ModeCoordinates, t: Complex64) -> Result<Complex64> {
        let a = eval_potential_complex(&self.table, t, self.anchor(t))?;
        Ok(omega_sq_complex(mode, &a))
    }

    /// `omega^2` and its time derivative `2 q E.p`.
    fn omega_sq_and_slope(
        &self,
        mode: &ModeCoordinates,
        t: Complex64,
    ) -> Result<(Complex64, Complex64)> {
        let a = eval_potential_complex(&self.table, t, self.anchor(t))?;
        let e = eval_field_complex(self.table.config(), t)?;
        let mut w2 = Complex64::new(mode.m * mode.m, 0.0);
        let mut slope = Complex64::new(0.0, 0.0);
        for c in 0..3 {
            let p = Complex64::new(mode.k[c], 0.0) - a[c] * mode.q;
            w2 += p * p;
            slope += e[c] * p * (2.0 * mode.q);
        }
        Ok((w2, slope))
    }

    fn newton(
        &self,
        mode: &ModeCoordinates,
        mut t: Complex64,
        used: &mut usize,
    ) -> Option<Complex64> {
        for _ in 0..self.seeds.max_iterations {
            *used += 1;
            let (w2, slope) = self.omega_sq_and_slope(mode, t).ok()?;
            if slope.norm() == 0.0 || !slope.is_finite() {
                return None;
            }
            let dt = w2 / slope;
            // Damp long jumps, which usually leave the basin.
            let scale = (self.region.im_max - self.region.im_min).max(1.0) * 0.25;
            let dt = if dt.norm() > scale {
                dt * (scale / dt.norm())
            } else {
                dt
            };
            t -= dt;
            if !t.is_finite() || !self.region.contains(t, 0.1) {
                return None;
            }
            if dt.norm() <= 1e-12 * (1.0 + t.norm()) {
                let r = self.omega_sq(mode, t).ok()?;
                return (r.norm() <= ROOT_RESIDUAL).then_some(t);
            }
        }
        let r = self.omega_sq(mode, t).ok()?;
        (r.norm() <= ROOT_RESIDUAL).then_some(t)
    }

    /// Newton iteration on `omega^2 = 0` from the seed lattice; roots are
    /// deduplicated, mapped to the upper half plane and sorted by `Im t`.
    pub fn find_turning_points(&self, mode: &ModeCoordinates) -> Result<Vec<TurningPointPair>> {
        let r = &self.region;
        let SeedLattice {
            n_re, n_im, budget, ..
        } = self.seeds;
        let mut roots: Vec<TurningPointPair> = Vec::new();
        let mut used = 0;
        'seeds: for i in 0..n_re {
            let re = if n_re == 1 {
                0.5 * (r.re_min + r.re_max)
            } else {
                r.re_min + (r.re_max - r.re_min) * i as f64 / (n_re - 1) as f64
            };
            for j in 1..=n_im {
                if used >= budget {
                    if roots.is_empty() {
                        return Err(Error::SeedBudgetExhausted(used));
                    }
                    break 'seeds;
                }
                let im = r.im_min + (r.im_max - r.im_min) * j as f64 / n_im as f64;
                let Some(mut t) = self.newton(mode, Complex64::new(re, im), &mut used) else {
                    continue;
                };
                if t.im < 0.0 {
                    t = t.conj();
                }
                if t.im <= 0.0 || t.re < r.re_min || t.re > r.re_max || t.im > r.im_max {
                    continue;
                }
                if roots.iter().any(|p| (p.t_p - t).norm() < DEDUP_DISTANCE) {
                    continue;
                }
                let residual = self.omega_sq(mode, t)?.norm();
                roots.push(TurningPointPair { t_p: t, residual });
            }
        }
        if roots.is_empty() {
            return Err(Error::NoRootsFound);
        }
        roots.sort_by(|a, b| {
            a.t_p
                .im
                .total_cmp(&b.t_p.im)
                .then(a.t_p.re.total_cmp(&b.t_p.re))
        });
        Ok(roots)
    }

    /// `K = |int_{t_p}^{conj t_p} omega dt|` along the vertical segment.
    ///
    /// By reflection symmetry this is `2 |int_0^Y Re omega(x + iy) dy|`;
    /// `y = Y - u^2` removes the square-root endpoint, and the sign of the
    /// principal root is flipped wherever `omega^2` crosses the negative real
    /// axis, so the branch follows continuously from the real axis.
    pub fn phase_integral_k(&self, mode: &ModeCoordinates, pair: &TurningPointPair) -> Result<f64> {
        let (x, y_top) = (pair.t_p.re, pair.t_p.im);
        if !(y_top > 0.0) {
            return Err(Error::InvalidConfig(
                "turning point must lie above the real axis".into(),
            ));
        }
        let u_max = y_top.sqrt();
        let w2_at = |u: f64| self.omega_sq(mode, Complex64::new(x, y_top - u * u));

        // Locate cut crossings on a fine u lattice, walking from the real axis.
        const SAMPLES: usize = 2048;
        let mut breaks = vec![u_max];
        let mut prev = w2_at(u_max)?;
        for s in (0..SAMPLES).rev() {
            let u = u_max * s as f64 / SAMPLES as f64;
            let cur = w2_at(u)?;
            let crossed = prev.im.signum() != cur.im.signum()
                && prev.im != 0.0
                && cur.im != 0.0
                && 0.5 * (prev.re + cur.re) < 0.0;
            if crossed {
                let (mut lo, mut hi) = (u, u + u_max / SAMPLES as f64);
                let lo_sign = cur.im.signum();
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if w2_at(mid)?.im.signum() == lo_sign {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                breaks.push(0.5 * (lo + hi));
            }
            prev = cur;
        }
        breaks.push(0.0);
        // breaks runs from the real axis (u = u_max) towards the root (u = 0).
        let mut total = 0.0;
        let mut sign = 1.0;
        let mut failure = None;
        for w in breaks.windows(2) {
            let (a, b) = (w[1], w[0]);
            let r = quadrature::integrate(
                |u: f64| match w2_at(u) {
                    Ok(w2) => w2.sqrt().re * 2.0 * u,
                    Err(e) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                },
                a,
                b,
                1e-13,
                1e-10,
                2000,
            )
            .map_err(|e| Error::QuadratureFailure(e.to_string()))?;
            if let Some(e) = failure.take() {
                return Err(e);
            }
            total += sign * r.value;
            sign = -sign;
        }
        Ok(2.0 * total.abs())
    }

    /// `int omega dt` along the real axis between `Re t1` and `Re t2`.
    pub fn interference_phase(
        &self,
        mode: &ModeCoordinates,
        t1: Complex64,
        t2: Complex64,
    ) -> Result<f64> {
        let (a, b) = (self.anchor(t1), self.anchor(t2));
        let r = quadrature::integrate(
            |t: f64| omega(mode, &self.table.potential(t)),
            a.min(b),
            a.max(b),
            1e-12,
            1e-12,
            10_000,
        )?;
        Ok(r.value)
    }

    /// Turning points, `K` values and interference estimates for one momentum.
    pub fn report(&self, mode: &ModeCoordinates) -> Result<PhaseIntegralReport> {
        let found = self.find_turning_points(mode)?;
        let mut scored = Vec::with_capacity(found.len());
        for p in found {
            let k = self.phase_integral_k(mode, &p)?;
            scored.push((p, k));
        }
        scored.sort_by(|a, b| a.1.total_cmp(&b.1));
        let k1 = scored[0].1;
        let single_pair = interference_estimate(k1, None, Statistics::Boson);
        let (alpha, f_boson, f_fermion) = if scored.len() >= 2 {
            let k2 = scored[1].1;
            let alpha = self.interference_phase(mode, scored[0].0.t_p, scored[1].0.t_p)?;
            (
                Some(alpha),
                interference_estimate(k1, Some((k2, alpha)), Statistics::Boson),
                interference_estimate(k1, Some((k2, alpha)), Statistics::Fermion),
            )
        } else {
            (None, single_pair, single_pair)
        };
        Ok(PhaseIntegralReport {
            pairs: scored.iter().map(|s| s.0).collect(),
            k_values: scored.iter().map(|s| s.1).collect(),
            alpha,
            single_pair,
            f_boson,
            f_fermion,
            negative: f_boson < 0.0 || f_fermion < 0.0,
        })
    }
}

/// `exp(-2 K1)` for one pair; with a second pair `(K2, alpha)`,
/// `exp(-2 K1) + exp(-2 K2) +- 2 cos(2 alpha) exp(-K1 - K2)`,
/// `+` for bosons and `-` for fermions.
pub fn interference_estimate(k1: f64, second: Option<(f64, f64)>, statistics: Statistics) -> f64 {
    match second {
        None => (-2.0 * k1).exp(),
        Some((k2, alpha)) => {
            let sign = match statistics {
                Statistics::Boson => 1.0,
                Statistics::Fermion => -1.0,
            };
            (-2.0 * k1).exp()
                + (-2.0 * k2).exp()
                + sign * 2.0 * (2.0 * alpha).cos() * (-k1 - k2).exp()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::EllipticPulse;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

    #[test]
    fn estimate_examples() {
        let e = interference_estimate(1.0, None, Statistics::Boson);
        assert!((e - 0.135_335_283_236_612_7).abs() < 1e-15);
        let k = 0.7;
        let b = interference_estimate(k, Some((k, FRAC_PI_2)), Statistics::Boson);
        let f = interference_estimate(k, Some((k, FRAC_PI_2)), Statistics::Fermion);
        assert!(b.abs() < 1e-16);
        assert!((f - 4.0 * (-2.0 * k).exp()).abs() < 1e-15);
    }

    #[test]
    fn zero_field_has_no_roots() {
        let f = FieldConfig::single(EllipticPulse::new(0.0, 0.0, 0.5, 5.0)).unwrap();
        let sc = Semiclassical::with_defaults(&f).unwrap();
        let r = sc.find_turning_points(&ModeCoordinates::new([0.2, 0.0, 0.0]));
        assert!(matches!(r, Err(Error::NoRootsFound)));
    }

    /// `K` for a unipolar Gaussian pulse at the momentum with `p(0) = 0`,
    /// where `omega^2(iy) = 1 - (E0 I(y))^2` with `I(y) = int_0^y exp(s^2 / 2 tau^2) ds`.
    fn unipolar_k_oracle(e0: f64, tau: f64) -> f64 {
        let integral = |y: f64| {
            let n = 2000;
            let h = y / n as f64;
            let g = |s: f64| (s * s / (2.0 * tau * tau)).exp();
            let mut acc = g(0.0) + g(y);
            for i in 1..n {
                acc += g(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            acc * h / 3.0
        };
        let (mut lo, mut hi) = (0.0, 1.0 / e0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if e0 * integral(mid) < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let y_top = 0.5 * (lo + hi);
        // Midpoint rule in v with y = Y (1 - v^2) to soften the endpoint.
        let n = 4000;
        let mut acc = 0.0;
        for i in 0..n {
            let v = (i as f64 + 0.5) / n as f64;
            let y = y_top * (1.0 - v * v);
            let r = 1.0 - (e0 * integral(y)).powi(2);
            acc += r.max(0.0).sqrt() * 2.0 * y_top * v;
        }
        2.0 * acc / n as f64
    }

    #[test]
    fn unipolar_pulse_k_matches_direct_quadrature() {
        let (e0, tau) = (0.5, 4.0);
        let f = FieldConfig::single(EllipticPulse::new(e0, 0.0, 0.0, tau)).unwrap();
        let sc = Semiclassical::with_defaults(&f).unwrap();
        // A(0) = -E0 tau sqrt(pi/2) with A(t_start) = 0; choose k = q A(0).
        let kx = e0 * tau * (PI / 2.0).sqrt();
        let mode = ModeCoordinates::new([kx, 0.0, 0.0]);
        let roots = sc.find_turning_points(&mode).unwrap();
        let p = roots[0];
        assert!(p.t_p.re.abs() < 1e-6, "{:?}", p.t_p);
        assert!(p.residual <= ROOT_RESIDUAL);
        let conj = sc.omega_sq(&mode, p.t_p.conj()).unwrap();
        assert!(conj.norm() <= 1e-9);
        let k = sc.phase_integral_k(&mode, &p).unwrap();
        let oracle = unipolar_k_oracle(e0, tau);
        assert!((k - oracle).abs() < 1e-5, "K = {k}, oracle {oracle}");
        // The envelope strengthens the field off the real axis: below the
        // constant-field value pi / (2 E0).
        assert!(k < PI / (2.0 * e0));
    }

    #[test]
    fn multicycle_pairs_separated_by_half_period() {
        let f = FieldConfig::single(EllipticPulse::new(0.1 * SQRT_2, 0.0, 0.1, 100.0)).unwrap();
        let region = SearchRegion::default_for(&f, 7.0);
        let seeds = SeedLattice::carrier_resolving(&f, &region);
        let sc = Semiclassical::new(&f, region, seeds).unwrap();
        let mode = ModeCoordinates::new([0.0; 3]);
        let roots = sc.find_turning_points(&mode).unwrap();
        assert!(roots.len() >= 2);
        for w in roots.windows(2) {
            assert!((w[0].t_p - w[1].t_p).norm() >= DEDUP_DISTANCE);
        }
        let mut centre: Vec<f64> = roots
            .iter()
            .filter(|p| p.t_p.re.abs() < 60.0)
            .map(|p| p.t_p.re)
            .collect();
        centre.sort_by(f64::total_cmp);
        let gaps: Vec<f64> = centre.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(
            !gaps.is_empty() && gaps.iter().all(|g| (g - PI / 0.1).abs() < 3.0),
            "real parts {centre:?}"
        );
    }

    proptest! {
        #[test]
        fn statistics_complementarity(k1 in 0.0f64..20.0, k2 in 0.0f64..20.0, alpha in -50.0f64..50.0) {
            let b = interference_estimate(k1, Some((k2, alpha)), Statistics::Boson);
            let f = interference_estimate(k1, Some((k2, alpha)), Statistics::Fermion);
            let sum = 2.0 * ((-2.0 * k1).exp() + (-2.0 * k2).exp());
            prop_assert!((b + f - sum).abs() <= 4.0 * f64::EPSILON * sum);
        }
    }
}
