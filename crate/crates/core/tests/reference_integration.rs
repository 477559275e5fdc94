//! Adaptive solver against a fixed-step RK4 integration of the Bogoliubov
//! amplitudes written out here from scratch.

use std::f64::consts::SQRT_2;

use num_complex::Complex64;
use scalar_qve::field::{eval_field, EllipticPulse, FieldConfig};
use scalar_qve::integrator::{solve_mode, Formulation, SolverSettings};
use scalar_qve::qve::ModeCoordinates;

/// y = [alpha, beta, theta, Ax, Ay] for a particle of charge -1 and mass 1.
/// With p = k + A and w = sqrt(1 + p^2):
/// alpha' = w'/(2w) e^{2 i theta} beta, beta' = w'/(2w) e^{-2 i theta} alpha,
/// theta' = w, A' = -E.
#[derive(Clone, Copy)]
struct Y {
    alpha: Complex64,
    beta: Complex64,
    theta: f64,
    a: [f64; 2],
}

fn rhs(field: &FieldConfig, k: [f64; 3], t: f64, y: &Y) -> Y {
    let e = eval_field(field, t);
    let p = [k[0] + y.a[0], k[1] + y.a[1], k[2]];
    let w2 = 1.0 + p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
    let w = w2.sqrt();
    // w' = p . p' / w with p' = A' = -E.
    let dw = -(p[0] * e[0] + p[1] * e[1]) / w;
    let c = dw / (2.0 * w);
    let rot = Complex64::from_polar(1.0, 2.0 * y.theta);
    Y {
        alpha: c * rot * y.beta,
        beta: c * rot.conj() * y.alpha,
        theta: w,
        a: [-e[0], -e[1]],
    }
}

fn axpy(y: &Y, h: f64, d: &Y) -> Y {
    Y {
        alpha: y.alpha + d.alpha * h,
        beta: y.beta + d.beta * h,
        theta: y.theta + d.theta * h,
        a: [y.a[0] + d.a[0] * h, y.a[1] + d.a[1] * h],
    }
}

fn rk4_occupation(field: &FieldConfig, k: [f64; 3], t0: f64, t1: f64, steps: usize) -> f64 {
    let h = (t1 - t0) / steps as f64;
    let mut y = Y {
        alpha: Complex64::new(1.0, 0.0),
        beta: Complex64::new(0.0, 0.0),
        theta: 0.0,
        a: [0.0, 0.0],
    };
    for i in 0..steps {
        let t = t0 + i as f64 * h;
        let k1 = rhs(field, k, t, &y);
        let k2 = rhs(field, k, t + 0.5 * h, &axpy(&y, 0.5 * h, &k1));
        let k3 = rhs(field, k, t + 0.5 * h, &axpy(&y, 0.5 * h, &k2));
        let k4 = rhs(field, k, t + h, &axpy(&y, h, &k3));
        let sum = Y {
            alpha: k1.alpha + 2.0 * k2.alpha + 2.0 * k3.alpha + k4.alpha,
            beta: k1.beta + 2.0 * k2.beta + 2.0 * k3.beta + k4.beta,
            theta: k1.theta + 2.0 * k2.theta + 2.0 * k3.theta + k4.theta,
            a: [
                k1.a[0] + 2.0 * k2.a[0] + 2.0 * k3.a[0] + k4.a[0],
                k1.a[1] + 2.0 * k2.a[1] + 2.0 * k3.a[1] + k4.a[1],
            ],
        };
        y = axpy(&y, h / 6.0, &sum);
    }
    y.beta.norm_sqr()
}

fn check(field: &FieldConfig, k: [f64; 3], steps: usize) {
    let (t0, t1) = SolverSettings::production().span(field);
    let coarse = rk4_occupation(field, k, t0, t1, steps);
    let fine = rk4_occupation(field, k, t0, t1, 2 * steps);
    // The reference must itself be converged well past five figures.
    assert!(
        (coarse - fine).abs() <= 1e-7 * fine,
        "reference not converged: {coarse} vs {fine}"
    );
    assert!(fine > 0.0);

    let settings = [
        SolverSettings::production(),
        SolverSettings::oracle().with_tolerance(1e-12),
        SolverSettings::oracle()
            .with_tolerance(1e-12)
            .with_formulation(Formulation::Chi),
    ];
    for s in settings {
        let r = solve_mode(field, &ModeCoordinates::new(k), &s).unwrap();
        let rel = (r.f_inf - fine).abs() / fine;
        assert!(
            rel <= 5e-6,
            "{:?} at tol {:e}: F = {} vs reference {fine} (rel {rel:.2e})",
            s.formulation,
            s.rel_tol,
            r.f_inf
        );
    }
}

#[test]
fn linear_pulse_at_rest() {
    let field = FieldConfig::single(EllipticPulse::new(0.1 * SQRT_2, 0.0, 0.1, 100.0)).unwrap();
    check(&field, [0.0, 0.0, 0.0], 70_000);
}

#[test]
fn elliptic_pulse_off_axis() {
    let field =
        FieldConfig::single(EllipticPulse::new(0.3, 0.6, 0.4, 12.0).with_phase(0.7)).unwrap();
    check(&field, [0.3, -0.2, 0.1], 20_000);
}

#[test]
fn counter_rotating_pair_on_ring() {
    let e = 0.1 * SQRT_2;
    let field = FieldConfig::two_pulse(
        EllipticPulse::new(e, 1.0, 0.6, 10.0),
        EllipticPulse::new(e, -1.0, 0.6, 10.0),
        100.0,
    )
    .unwrap();
    check(&field, [0.66, 0.1, 0.0], 40_000);
}
