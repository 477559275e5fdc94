//! Per-mode dynamics of the scalar vacuum in a homogeneous electric field,
//! in three equivalent formulations:
//!
//! * the phase-space vector `(chi0, chi1, chi2)` driven by `p^2(t) = (k - qA)^2`,
//! * the kinetic system `(F, G, H)` driven by `W = qE.p / omega^2`,
//! * Bogoliubov coefficients `(alpha, beta)` with the dynamical phase `Theta`.
//!
//! All three start from the vacuum and give the same asymptotic
//! distribution `F = (chi~1 - 1)/2 = |beta|^2`.

use num_complex::Complex64;

use crate::field::{CVec3, Vec3};

/// Canonical momentum `k` of one mode plus the particle mass and charge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeCoordinates {
    pub k: Vec3,
    pub m: f64,
    pub q: f64,
}

impl ModeCoordinates {
    /// Unit mass, electron-like charge `q = -1`.
    pub fn new(k: Vec3) -> Self {
        ModeCoordinates { k, m: 1.0, q: -1.0 }
    }

    pub fn with_charge(mut self, q: f64) -> Self {
        self.q = q;
        self
    }

    pub fn with_mass(mut self, m: f64) -> Self {
        self.m = m;
        self
    }

    /// Kinetic momentum `p = k - qA`.
    #[inline]
    pub fn kinetic(&self, a: &Vec3) -> Vec3 {
        [
            self.k[0] - self.q * a[0],
            self.k[1] - self.q * a[1],
            self.k[2] - self.q * a[2],
        ]
    }

    #[inline]
    pub fn kinetic_sq(&self, a: &Vec3) -> f64 {
        let p = self.kinetic(a);
        p[0] * p[0] + p[1] * p[1] + p[2] * p[2]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiState {
    pub chi0: f64,
    pub chi1: f64,
    pub chi2: f64,
}

impl ChiState {
    /// Quadratic invariant `chi0^2 - chi1^2 - chi2^2`, equal to 1 from vacuum.
    pub fn invariant(&self) -> f64 {
        self.chi0 * self.chi0 - self.chi1 * self.chi1 - self.chi2 * self.chi2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FghState {
    pub f: f64,
    pub g: f64,
    pub h: f64,
}

impl FghState {
    pub const VACUUM: FghState = FghState {
        f: 0.0,
        g: 0.0,
        h: 0.0,
    };

    /// `(1 + 2F)^2 - G^2 - H^2 - 1`, zero on trajectories from vacuum.
    pub fn constraint_residual(&self) -> f64 {
        // (1+2F)^2 - 1 expanded to keep precision for small F.
        4.0 * self.f * (1.0 + self.f) - self.g * self.g - self.h * self.h
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BogoliubovState {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub theta: f64,
}

impl BogoliubovState {
    pub const VACUUM: BogoliubovState = BogoliubovState {
        alpha: Complex64::new(1.0, 0.0),
        beta: Complex64::new(0.0, 0.0),
        theta: 0.0,
    };

    /// `|alpha|^2 - |beta|^2 - 1`.
    pub fn unitarity_residual(&self) -> f64 {
        let a = self.alpha;
        // |alpha|^2 - 1 = (|alpha| - 1)(|alpha| + 1), written to avoid cancellation.
        (a.re - 1.0) * (a.re + 1.0) + a.im * a.im - self.beta.norm_sqr()
    }

    /// Occupation `f = |beta|^2`.
    pub fn occupation(&self) -> f64 {
        self.beta.norm_sqr()
    }
}

/// `omega = sqrt((k - qA)^2 + m^2)`.
#[inline]
pub fn omega(mode: &ModeCoordinates, a: &Vec3) -> f64 {
    (mode.kinetic_sq(a) + mode.m * mode.m).sqrt()
}

/// `omega^2` at complex potential.
pub fn omega_sq_complex(mode: &ModeCoordinates, a: &CVec3) -> Complex64 {
    let mut s = Complex64::new(mode.m * mode.m, 0.0);
    for c in 0..3 {
        let p = Complex64::new(mode.k[c], 0.0) - a[c] * mode.q;
        s += p * p;
    }
    s
}

/// Principal-branch `omega` at complex potential.
pub fn omega_complex(mode: &ModeCoordinates, a: &CVec3) -> Complex64 {
    omega_sq_complex(mode, a).sqrt()
}

/// `W = q E.p / omega^2`.
#[inline]
pub fn w_factor(mode: &ModeCoordinates, e: &Vec3, a: &Vec3) -> f64 {
    let p = mode.kinetic(a);
    let w2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2] + mode.m * mode.m;
    mode.q * (e[0] * p[0] + e[1] * p[1] + e[2] * p[2]) / w2
}

pub fn chi_rhs(state: &ChiState, mode: &ModeCoordinates, a: &Vec3) -> ChiState {
    let m = mode.m;
    let p2m = mode.kinetic_sq(a) / m;
    let shifted = p2m + 2.0 * m;
    ChiState {
        chi0: p2m * state.chi2,
        chi1: -shifted * state.chi2,
        chi2: p2m * state.chi0 + shifted * state.chi1,
    }
}

pub fn fgh_rhs(state: &FghState, mode: &ModeCoordinates, e: &Vec3, a: &Vec3) -> FghState {
    let w = w_factor(mode, e, a);
    let om = omega(mode, a);
    FghState {
        f: 0.5 * w * state.g,
        g: w * (1.0 + 2.0 * state.f) - 2.0 * om * state.h,
        h: 2.0 * om * state.g,
    }
}

pub fn bogoliubov_rhs(
    state: &BogoliubovState,
    mode: &ModeCoordinates,
    e: &Vec3,
    a: &Vec3,
) -> BogoliubovState {
    let half_w = 0.5 * w_factor(mode, e, a);
    let (s, c) = (2.0 * state.theta).sin_cos();
    let rot = Complex64::new(c, s);
    BogoliubovState {
        alpha: state.beta * rot * half_w,
        beta: state.alpha * rot.conj() * half_w,
        theta: omega(mode, a),
    }
}

pub fn chi_to_fgh(state: &ChiState, mode: &ModeCoordinates, a: &Vec3) -> FghState {
    let m = mode.m;
    let p2 = mode.kinetic_sq(a);
    let om = (p2 + m * m).sqrt();
    let c = p2 / (2.0 * m * om);
    let d = m / om;
    let chi1_tilde = (c + d) * state.chi0 + c * state.chi1;
    FghState {
        f: 0.5 * (chi1_tilde - 1.0),
        g: c * state.chi0 + (c + d) * state.chi1,
        h: state.chi2,
    }
}

/// Vacuum phase-space vector for kinetic momentum `k - qA_start`.
pub fn vacuum_chi(mode: &ModeCoordinates, a_start: &Vec3) -> ChiState {
    let m = mode.m;
    let om = omega(mode, a_start);
    ChiState {
        chi0: 0.5 * (m / om + om / m),
        chi1: 0.5 * (m / om - om / m),
        chi2: 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const ZERO: Vec3 = [0.0; 3];

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn omega_examples() {
        let m0 = ModeCoordinates::new(ZERO);
        assert_eq!(omega(&m0, &ZERO), 1.0);
        let m1 = ModeCoordinates::new([0.6, 0.0, 0.0]);
        assert!(close(omega(&m1, &ZERO), 1.36f64.sqrt(), 1e-15));
        // qA = (0.3, 0, 0) with q = -1 means A = (-0.3, 0, 0).
        assert!(close(omega(&m0, &[-0.3, 0.0, 0.0]), 1.09f64.sqrt(), 1e-15));
    }

    #[test]
    fn w_examples() {
        let mode = ModeCoordinates::new([0.5, 0.0, 0.0]);
        assert!(close(
            w_factor(&mode, &[0.1, 0.0, 0.0], &ZERO),
            -0.04,
            1e-16
        ));
        assert_eq!(w_factor(&mode, &[0.0, 0.3, 0.0], &ZERO), 0.0);
        assert_eq!(w_factor(&mode, &ZERO, &[0.2, 0.1, 0.0]), 0.0);
    }

    #[test]
    fn vacuum_chi_examples() {
        let v = vacuum_chi(&ModeCoordinates::new(ZERO), &ZERO);
        assert_eq!((v.chi0, v.chi1, v.chi2), (1.0, 0.0, 0.0));
        let v = vacuum_chi(&ModeCoordinates::new([0.6, 0.0, 0.0]), &ZERO);
        let om = 1.36f64.sqrt();
        assert!(close(v.chi0, 0.5 * (1.0 / om + om), 1e-15));
        assert!(close(v.chi0, 1.01185, 1e-5));
        assert!(close(v.chi1, -0.15434, 1e-5));
        assert!(close(v.invariant(), 1.0, 1e-15));
    }

    #[test]
    fn vacuum_is_stationary_at_rest() {
        let mode = ModeCoordinates::new(ZERO);
        let d = chi_rhs(&vacuum_chi(&mode, &ZERO), &mode, &ZERO);
        assert_eq!((d.chi0, d.chi1, d.chi2), (0.0, 0.0, 0.0));
    }

    #[test]
    fn chi0_frozen_when_kinetic_momentum_vanishes() {
        let mode = ModeCoordinates::new([0.2, 0.0, 0.0]);
        // q = -1: p = k + A = 0 for A = -k.
        let s = ChiState {
            chi0: 1.3,
            chi1: 0.4,
            chi2: 0.7,
        };
        let d = chi_rhs(&s, &mode, &[-0.2, 0.0, 0.0]);
        assert_eq!(d.chi0, 0.0);
    }

    #[test]
    fn fgh_examples() {
        let mode = ModeCoordinates::new([0.5, 0.0, 0.0]);
        let e = [0.1, 0.0, 0.0];
        let d = fgh_rhs(&FghState::VACUUM, &mode, &e, &ZERO);
        assert_eq!((d.f, d.h), (0.0, 0.0));
        assert!(close(d.g, -0.04, 1e-16));
        let s = FghState {
            f: 0.3,
            g: 0.0,
            h: 0.2,
        };
        let d = fgh_rhs(&s, &mode, &e, &ZERO);
        assert_eq!((d.f, d.h), (0.0, 0.0));
    }

    #[test]
    fn bogoliubov_examples() {
        let mode = ModeCoordinates::new([0.5, 0.0, 0.0]);
        let s = BogoliubovState {
            alpha: Complex64::new(0.8, 0.3),
            beta: Complex64::new(0.1, -0.2),
            theta: 1.2,
        };
        let d = bogoliubov_rhs(&s, &mode, &ZERO, &ZERO);
        assert_eq!(d.alpha, Complex64::new(0.0, 0.0));
        assert_eq!(d.beta, Complex64::new(0.0, 0.0));
        assert!(close(d.theta, 1.25f64.sqrt(), 1e-15));
        let d = bogoliubov_rhs(&BogoliubovState::VACUUM, &mode, &[0.1, 0.0, 0.0], &ZERO);
        assert!(close(d.beta.re, -0.02, 1e-16) && d.beta.im == 0.0);
    }

    #[test]
    fn chi_to_fgh_examples() {
        for k in [[0.0; 3], [0.6, 0.0, 0.0], [0.3, -0.7, 0.2]] {
            let mode = ModeCoordinates::new(k);
            let a = [0.1, -0.2, 0.0];
            let v = chi_to_fgh(&vacuum_chi(&mode, &a), &mode, &a);
            assert!(v.f.abs() < 1e-15 && v.g.abs() < 1e-15 && v.h == 0.0);
            let mut s = vacuum_chi(&mode, &a);
            s.chi2 = 0.37;
            let w = chi_to_fgh(&s, &mode, &a);
            assert_eq!(w.h, 0.37);
            assert!(close(w.f, v.f, 1e-16) && close(w.g, v.g, 1e-16));
        }
    }

    fn arb_mode() -> impl Strategy<Value = (ModeCoordinates, Vec3, Vec3)> {
        (
            prop::array::uniform3(-1.5f64..1.5),
            prop::array::uniform3(-1.0f64..1.0),
            prop::array::uniform2(-0.5f64..0.5),
            prop_oneof![Just(-1.0), Just(1.0)],
        )
            .prop_map(|(k, a, e, q)| {
                (
                    ModeCoordinates::new(k).with_charge(q),
                    [a[0], a[1], 0.0],
                    [e[0], e[1], 0.0],
                )
            })
    }

    proptest! {
        // d/dt[(1+2F)^2 - G^2 - H^2] = 0 for any state.
        #[test]
        fn fgh_constraint_derivative_vanishes(
            (mode, a, e) in arb_mode(),
            f in 0.0f64..2.0, g in -2.0f64..2.0, h in -2.0f64..2.0,
        ) {
            let s = FghState { f, g, h };
            let d = fgh_rhs(&s, &mode, &e, &a);
            let dc = 4.0 * (1.0 + 2.0 * s.f) * d.f - 2.0 * s.g * d.g - 2.0 * s.h * d.h;
            prop_assert!(dc.abs() < 1e-13);
        }

        #[test]
        fn chi_invariant_derivative_vanishes(
            (mode, a, _e) in arb_mode(),
            c in prop::array::uniform3(-2.0f64..2.0),
        ) {
            let s = ChiState { chi0: c[0], chi1: c[1], chi2: c[2] };
            let d = chi_rhs(&s, &mode, &a);
            let di = 2.0 * (s.chi0 * d.chi0 - s.chi1 * d.chi1 - s.chi2 * d.chi2);
            prop_assert!(di.abs() < 1e-12);
        }

        // The chain rule through chi_to_fgh reproduces fgh_rhs:
        // d/dt T(chi, A) = dT/dchi . chi' + dT/dA . (-E).
        #[test]
        fn chi_chain_rule_matches_fgh(
            (mode, a, e) in arb_mode(),
            c in prop::array::uniform3(-2.0f64..2.0),
        ) {
            let s = ChiState { chi0: c[0], chi1: c[1], chi2: c[2] };
            let ds = chi_rhs(&s, &mode, &a);
            let h = 1e-6;
            let at = |dt: f64| {
                let st = ChiState {
                    chi0: s.chi0 + dt * ds.chi0,
                    chi1: s.chi1 + dt * ds.chi1,
                    chi2: s.chi2 + dt * ds.chi2,
                };
                let at = [a[0] - dt * e[0], a[1] - dt * e[1], 0.0];
                chi_to_fgh(&st, &mode, &at)
            };
            let (p, m) = (at(h), at(-h));
            let numeric = [(p.f - m.f) / (2.0 * h), (p.g - m.g) / (2.0 * h), (p.h - m.h) / (2.0 * h)];
            let fgh = chi_to_fgh(&s, &mode, &a);
            let exact = fgh_rhs(&fgh, &mode, &e, &a);
            prop_assert!((numeric[0] - exact.f).abs() < 1e-6, "{numeric:?} {exact:?}");
            prop_assert!((numeric[1] - exact.g).abs() < 1e-6, "{numeric:?} {exact:?}");
            prop_assert!((numeric[2] - exact.h).abs() < 1e-6, "{numeric:?} {exact:?}");
        }

        #[test]
        fn bogoliubov_unitarity_derivative_vanishes(
            (mode, a, e) in arb_mode(),
            ab in prop::array::uniform4(-2.0f64..2.0),
            theta in -50.0f64..50.0,
        ) {
            let s = BogoliubovState {
                alpha: Complex64::new(ab[0], ab[1]),
                beta: Complex64::new(ab[2], ab[3]),
                theta,
            };
            let d = bogoliubov_rhs(&s, &mode, &e, &a);
            let du = 2.0 * (s.alpha.conj() * d.alpha).re - 2.0 * (s.beta.conj() * d.beta).re;
            prop_assert!(du.abs() < 1e-13);
        }
    }
}
