//! Globally adaptive Gauss-Kronrod (7, 15) quadrature over real intervals,
//! for scalar, complex and small vector-valued integrands.

use num_complex::Complex64;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd-indexed Kronrod nodes 1, 3, 5, 7.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Values that can be integrated: a vector space with a norm.
pub trait Integrand: Copy {
    fn zero() -> Self;
    fn add(self, other: Self) -> Self;
    fn scale(self, s: f64) -> Self;
    fn norm(self) -> f64;
}

impl Integrand for f64 {
    fn zero() -> Self {
        0.0
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn norm(self) -> f64 {
        self.abs()
    }
}

impl Integrand for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn norm(self) -> f64 {
        Complex64::norm(self)
    }
}

impl<T: Integrand, const N: usize> Integrand for [T; N] {
    fn zero() -> Self {
        [T::zero(); N]
    }
    fn add(mut self, other: Self) -> Self {
        for (a, b) in self.iter_mut().zip(other) {
            *a = a.add(b);
        }
        self
    }
    fn scale(mut self, s: f64) -> Self {
        for a in self.iter_mut() {
            *a = a.scale(s);
        }
        self
    }
    fn norm(self) -> f64 {
        self.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: f64,
    pub evaluations: usize,
}

/// One G7K15 panel on `[a, b]`: returns (Kronrod value, |K - G|).
pub fn gk15<T, F>(f: &mut F, a: f64, b: f64) -> (T, f64)
where
    T: Integrand,
    F: FnMut(f64) -> T,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc.scale(WGK[7]);
    let mut gauss = fc.scale(WG[3]);
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx).add(f(center + dx));
        kronrod = kronrod.add(pair.scale(WGK[j]));
        if j % 2 == 1 {
            gauss = gauss.add(pair.scale(WG[j / 2]));
        }
    }
    let kronrod = kronrod.scale(half);
    let gauss = gauss.scale(half);
    let err = kronrod.add(gauss.scale(-1.0)).norm();
    (kronrod, err)
}

struct Panel<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

/// Integrates `f` over `[a, b]` until the summed error estimate is below
/// `max(abs_tol, rel_tol * |I|)`, bisecting the worst panel each round.
pub fn integrate<T, F>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Result<QuadResult<T>>
where
    T: Integrand,
    F: FnMut(f64) -> T,
{
    if a == b {
        return Ok(QuadResult {
            value: T::zero(),
            error: 0.0,
            evaluations: 0,
        });
    }
    let (value, error) = gk15(&mut f, a, b);
    let mut panels = vec![Panel { a, b, value, error }];
    let mut evaluations = 15;
    loop {
        let (total, err) = panels
            .iter()
            .fold((T::zero(), 0.0), |(v, e), p| (v.add(p.value), e + p.error));
        if err <= abs_tol.max(rel_tol * total.norm()) {
            return Ok(QuadResult {
                value: total,
                error: err,
                evaluations,
            });
        }
        if panels.len() >= max_panels {
            return Err(Error::ToleranceNotMet {
                what: "adaptive quadrature",
                requested: abs_tol.max(rel_tol * total.norm()),
                achieved: err,
            });
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            return Err(Error::ToleranceNotMet {
                what: "adaptive quadrature (interval underflow)",
                requested: abs_tol,
                achieved: err,
            });
        }
        let (lv, le) = gk15(&mut f, p.a, mid);
        let (rv, re) = gk15(&mut f, mid, p.b);
        evaluations += 30;
        panels.push(Panel {
            a: p.a,
            b: mid,
            value: lv,
            error: le,
        });
        panels.push(Panel {
            a: mid,
            b: p.b,
            value: rv,
            error: re,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        // G7K15 integrates degree-22 polynomials exactly on one panel.
        let r = integrate(|x: f64| x.powi(10), -1.0, 2.0, 1e-14, 0.0, 10).unwrap();
        let exact = (2f64.powi(11) + 1.0) / 11.0;
        assert!((r.value - exact).abs() < 1e-11 * exact);
    }

    #[test]
    fn gaussian_cosine_integral() {
        let (tau, w) = (3.0, 1.7);
        let r = integrate(
            |t: f64| (-t * t / (2.0 * tau * tau)).exp() * (w * t).cos(),
            -40.0,
            40.0,
            1e-13,
            0.0,
            200,
        )
        .unwrap();
        let exact = (2.0 * std::f64::consts::PI).sqrt() * tau * (-(w * tau).powi(2) / 2.0).exp();
        assert!((r.value - exact).abs() < 1e-12);
    }

    #[test]
    fn complex_and_vector_values() {
        let r = integrate(
            |x: f64| [Complex64::new(0.0, x).exp(), Complex64::new(x, 0.0)],
            0.0,
            std::f64::consts::PI,
            1e-13,
            0.0,
            50,
        )
        .unwrap();
        assert!((r.value[0] - Complex64::new(0.0, 2.0)).norm() < 1e-12);
        assert!((r.value[1].re - std::f64::consts::PI.powi(2) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn budget_exhaustion_reports() {
        let err = integrate(|x: f64| x.abs().sqrt().recip(), -1.0, 1.0, 1e-14, 0.0, 4);
        assert!(matches!(err, Err(Error::ToleranceNotMet { .. })));
    }
}
