//! Dormand-Prince 8(5,3) explicit Runge-Kutta pair (Hairer's DOP853
//! coefficients) on fixed-size states.

/// An autonomous-in-form ODE `y' = f(t, y)` on `N` real components.
pub trait OdeSystem<const N: usize> {
    fn rhs(&self, t: f64, y: &[f64; N]) -> [f64; N];

    /// Components whose error is measured on an absolute scale only
    /// (accumulated phases that grow without bound).
    fn is_phase(&self, _i: usize) -> bool {
        false
    }
}

const C: [f64; 12] = [
    0.0,
    0.526_001_519_587_677_318_785_587_544_488e-1,
    0.789_002_279_381_515_978_178_381_316_732e-1,
    0.118_350_341_907_227_396_726_757_197_510,
    0.281_649_658_092_772_603_273_242_802_490,
    0.333_333_333_333_333_333_333_333_333_333,
    0.25,
    0.307_692_307_692_307_692_307_692_307_692,
    0.651_282_051_282_051_282_051_282_051_282,
    0.6,
    0.857_142_857_142_857_142_857_142_857_142,
    1.0,
];

const A: [[f64; 11]; 12] = {
    let mut a = [[0.0; 11]; 12];
    a[1][0] = 5.260_015_195_876_773e-2;

    a[2][0] = 1.972_505_698_453_79e-2;
    a[2][1] = 5.917_517_095_361_37e-2;

    a[3][0] = 2.958_758_547_680_685e-2;
    a[3][2] = 8.876_275_643_042_054e-2;

    a[4][0] = 2.413_651_341_592_667e-1;
    a[4][2] = -8.845_494_793_282_861e-1;
    a[4][3] = 9.248_340_032_617_92e-1;

    a[5][0] = 3.703_703_703_703_703_5e-2;
    a[5][3] = 1.708_286_087_294_738_6e-1;
    a[5][4] = 1.254_676_875_668_224_2e-1;

    a[6][0] = 3.710_937_5e-2;
    a[6][3] = 1.702_522_110_195_440_5e-1;
    a[6][4] = 6.021_653_898_045_596e-2;
    a[6][5] = -1.757_812_5e-2;

    a[7][0] = 3.709_200_011_850_479e-2;
    a[7][3] = 1.703_839_257_122_399_8e-1;
    a[7][4] = 1.072_620_304_463_732_8e-1;
    a[7][5] = -1.531_943_774_862_440_2e-2;
    a[7][6] = 8.273_789_163_814_023e-3;

    a[8][0] = 6.241_109_587_160_757e-1;
    a[8][3] = -3.360_892_629_446_941_4;
    a[8][4] = -8.682_193_468_417_26e-1;
    a[8][5] = 2.759_209_969_944_671e1;
    a[8][6] = 2.015_406_755_047_789_4e1;
    a[8][7] = -4.348_988_418_106_996e1;

    a[9][0] = 4.776_625_364_382_643_4e-1;
    a[9][3] = -2.488_114_619_971_667_7;
    a[9][4] = -5.902_908_268_368_43e-1;
    a[9][5] = 2.123_005_144_818_119_3e1;
    a[9][6] = 1.527_923_363_288_242_3e1;
    a[9][7] = -3.328_821_096_898_486e1;
    a[9][8] = -2.033_120_170_850_862_7e-2;

    a[10][0] = -9.371_424_300_859_873e-1;
    a[10][3] = 5.186_372_428_844_064;
    a[10][4] = 1.091_437_348_996_729_5;
    a[10][5] = -8.149_787_010_746_927;
    a[10][6] = -1.852_006_565_999_696e1;
    a[10][7] = 2.273_948_709_935_050_5e1;
    a[10][8] = 2.493_605_552_679_652_3;
    a[10][9] = -3.046_764_471_898_219_6;

    a[11][0] = 2.273_310_147_516_538;
    a[11][3] = -1.053_449_546_673_725e1;
    a[11][4] = -2.000_872_058_224_862_5;
    a[11][5] = -1.795_893_186_311_88e1;
    a[11][6] = 2.794_888_452_941_996e1;
    a[11][7] = -2.858_998_277_135_023_5;
    a[11][8] = -8.872_856_933_530_63;
    a[11][9] = 1.236_056_717_579_430_3e1;
    a[11][10] = 6.433_927_460_157_636e-1;
    a
};

const B: [f64; 12] = [
    5.429_373_411_656_876_5e-2,
    0.0,
    0.0,
    0.0,
    0.0,
    4.450_312_892_752_409,
    1.891_517_899_314_500_3,
    -5.801_203_960_010_585,
    3.111_643_669_578_199e-1,
    -1.521_609_496_625_161e-1,
    2.013_654_008_040_303_4e-1,
    4.471_061_572_777_259e-2,
];

// Fifth-order error weights (b - b5).
const ER: [f64; 12] = [
    0.131_200_449_941_948_807_325_010_299_6e-1,
    0.0,
    0.0,
    0.0,
    0.0,
    -0.122_515_644_637_620_444_072_056_975_3e1,
    -0.495_758_949_657_250_191_521_407_995_2,
    0.166_437_718_245_498_653_696_153_041_5e1,
    -0.350_328_848_749_973_681_688_648_729_0,
    0.334_179_118_713_017_479_029_731_884_1,
    0.819_232_064_851_157_124_657_074_261_3e-1,
    -0.223_553_078_638_862_952_588_442_784_5e-1,
];

// Third-order embedded weights on stages 1, 9 and 12.
const BHH: [f64; 3] = [
    0.244_094_488_188_976_377_952_755_905_512,
    0.733_846_688_281_611_857_341_361_741_547,
    0.220_588_235_294_117_647_058_823_529_412e-1,
];

#[derive(Debug, Clone, Copy)]
pub struct StepResult<const N: usize> {
    pub y: [f64; N],
    /// Derivative at the new point (first stage of the next step).
    pub dy: [f64; N],
    /// Scaled error norm; the step is acceptable when `<= 1`.
    pub error: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
}

/// Attempts one step of size `h` from `(t, y)` with `dy = f(t, y)` given.
pub fn dop853_step<const N: usize, S: OdeSystem<N>>(
    sys: &S,
    t: f64,
    y: &[f64; N],
    dy: &[f64; N],
    h: f64,
    tol: Tolerances,
) -> StepResult<N> {
    let mut k = [[0.0; N]; 12];
    k[0] = *dy;
    for s in 1..12 {
        let mut ys = *y;
        for (j, kj) in k.iter().enumerate().take(s) {
            let a = A[s][j];
            if a != 0.0 {
                for i in 0..N {
                    ys[i] += h * a * kj[i];
                }
            }
        }
        k[s] = sys.rhs(t + C[s] * h, &ys);
    }

    let mut incr = [0.0; N];
    for (s, ks) in k.iter().enumerate() {
        if B[s] != 0.0 {
            for i in 0..N {
                incr[i] += B[s] * ks[i];
            }
        }
    }
    let mut y_new = *y;
    for i in 0..N {
        y_new[i] += h * incr[i];
    }

    let mut err5 = 0.0;
    let mut err3 = 0.0;
    for i in 0..N {
        let mag = if sys.is_phase(i) {
            1.0
        } else {
            y[i].abs().max(y_new[i].abs())
        };
        let sk = tol.abs + tol.rel * mag;
        let e3 = incr[i] - BHH[0] * k[0][i] - BHH[1] * k[8][i] - BHH[2] * k[11][i];
        let mut e5 = 0.0;
        for s in 0..12 {
            e5 += ER[s] * k[s][i];
        }
        err3 += (e3 / sk) * (e3 / sk);
        err5 += (e5 / sk) * (e5 / sk);
    }
    let mut deno = err5 + 0.01 * err3;
    if deno <= 0.0 {
        deno = 1.0;
    }
    let error = h.abs() * err5 * (1.0 / (N as f64 * deno)).sqrt();

    let dy_new = sys.rhs(t + h, &y_new);
    StepResult {
        y: y_new,
        dy: dy_new,
        error,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Oscillator(f64);

    impl OdeSystem<2> for Oscillator {
        fn rhs(&self, _t: f64, y: &[f64; 2]) -> [f64; 2] {
            [y[1], -self.0 * self.0 * y[0]]
        }
    }

    #[test]
    fn row_sums_match_nodes() {
        for s in 0..12 {
            let sum: f64 = A[s].iter().sum();
            assert!((sum - C[s]).abs() < 1e-13, "stage {s}: {sum} vs {}", C[s]);
        }
        assert!((B.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!(ER.iter().sum::<f64>().abs() < 1e-12);
        assert!((BHH.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    fn fixed_step_error(n: usize) -> f64 {
        let sys = Oscillator(2.0);
        let t_end = 3.0;
        let h = t_end / n as f64;
        let mut y = [1.0, 0.0];
        let mut t = 0.0;
        let tol = Tolerances { rel: 1.0, abs: 1.0 };
        for _ in 0..n {
            let dy = sys.rhs(t, &y);
            y = dop853_step(&sys, t, &y, &dy, h, tol).y;
            t += h;
        }
        ((y[0] - (2.0 * t_end).cos()).powi(2) + (y[1] + 2.0 * (2.0 * t_end).sin()).powi(2)).sqrt()
    }

    #[test]
    fn eighth_order_convergence() {
        let e1 = fixed_step_error(20);
        let e2 = fixed_step_error(40);
        let order = (e1 / e2).log2();
        assert!(
            order > 7.5 && order < 9.0,
            "observed order {order} ({e1:e}, {e2:e})"
        );
    }

    #[test]
    fn error_estimate_shrinks_with_step() {
        let sys = Oscillator(1.0);
        let y = [1.0, 0.0];
        let dy = sys.rhs(0.0, &y);
        let tol = Tolerances {
            rel: 1e-10,
            abs: 1e-10,
        };
        let big = dop853_step(&sys, 0.0, &y, &dy, 0.8, tol).error;
        let small = dop853_step(&sys, 0.0, &y, &dy, 0.4, tol).error;
        assert!(big > 1.0 && small < big / 50.0, "{big} {small}");
    }
}
