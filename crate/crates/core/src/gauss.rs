//! Standard normal distribution functions in one and two dimensions.
//!
//! Everything downstream multiplies tail probabilities by `n` (up to `1e8`)
//! and then by powers of `b_n²`, so the tails are evaluated without
//! forming `1 - Φ(x)` by subtraction:
//!
//! - `Φ` and `Φ̄` use W. J. Cody's rational approximations up to `|x| = 8`
//!   and a Mills-ratio continued fraction beyond.
//! - The Gaussian kernel `exp(-x²/2)` is split as `exp(-xs²/2) exp(-(x-xs)(x+xs)/2)`
//!   with `xs` rounded to 1/16, so that large arguments keep full relative accuracy.
//! - The bivariate upper orthant probability follows Genz's Gauss-Legendre
//!   integration of the correlation representation, with the Drezner-Wesolowsky
//!   style expansion for `|ρ| ≥ 0.925`.

#![allow(clippy::excessive_precision)]

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// `1 / sqrt(2π)`
pub const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_677_939_946_059_934;

const SQRT_32: f64 = 5.656_854_249_492_380_195_206_754_896_838;

/// Beyond this point the tail is evaluated by the continued fraction.
const CF_THRESHOLD: f64 = 8.0;
const CF_TERMS: u32 = 80;

/// Correlation coefficient of a standard bivariate normal vector.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Correlation(f64);

impl Correlation {
    pub const ZERO: Correlation = Correlation(0.0);
    pub const ONE: Correlation = Correlation(1.0);
    pub const MINUS_ONE: Correlation = Correlation(-1.0);

    pub fn new(rho: f64) -> Result<Self> {
        if rho.is_nan() || rho.abs() > 1.0 {
            return Err(Error::domain(format!("correlation {rho} outside [-1, 1]")));
        }
        Ok(Correlation(rho))
    }

    /// Clamps into `[-1, 1]`, reporting whether clamping was necessary.
    pub fn clamped(rho: f64) -> Result<(Self, bool)> {
        if rho.is_nan() {
            return Err(Error::domain("correlation is NaN"));
        }
        let c = rho.clamp(-1.0, 1.0);
        Ok((Correlation(c), c != rho))
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Correlation {
    type Error = Error;

    fn try_from(rho: f64) -> Result<Self> {
        Correlation::new(rho)
    }
}

/// `exp(-x²/2)` without losing relative accuracy for large `|x|`.
#[inline]
fn gauss_kernel(x: f64) -> f64 {
    let y = x.abs();
    let ys = (y * 16.0).trunc() / 16.0;
    let del = (y - ys) * (y + ys);
    (-0.5 * ys * ys).exp() * (-0.5 * del).exp()
}

/// Standard normal density `φ(x)`.
pub fn std_normal_pdf(x: f64) -> f64 {
    if x.is_infinite() {
        return 0.0;
    }
    FRAC_1_SQRT_2PI * gauss_kernel(x)
}

/// Standard normal distribution function `Φ(x)`.
pub fn std_normal_cdf(x: f64) -> f64 {
    let (lower, _) = cdf_pair(x);
    lower
}

/// Upper tail `Φ̄(x) = Φ(-x)`, evaluated directly rather than as `1 - Φ(x)`.
pub fn std_normal_survival(x: f64) -> f64 {
    let (_, upper) = cdf_pair(x);
    upper
}

/// Returns `(Φ(x), Φ̄(x))`, each with full relative accuracy.
fn cdf_pair(x: f64) -> (f64, f64) {
    if x.is_nan() {
        return (f64::NAN, f64::NAN);
    }
    let y = x.abs();
    if y <= 0.674_489_75 {
        let t = cody_central(x);
        return (0.5 + t, 0.5 - t);
    }
    // Probability of the tail beyond |x|.
    let tail = if y <= CF_THRESHOLD {
        cody_tail(y)
    } else {
        std_normal_pdf(y) * mills_ratio_cf(y)
    };
    if x > 0.0 {
        (1.0 - tail, tail)
    } else {
        (tail, 1.0 - tail)
    }
}

/// `Φ(x) - 1/2` for `|x| ≤ 0.674...`.
fn cody_central(x: f64) -> f64 {
    const A: [f64; 5] = [
        2.235_252_035_460_683_928_7,
        161.028_231_068_555_878_81,
        1_067.689_485_460_370_958_2,
        18_154.981_253_343_561_249,
        0.065_682_337_918_207_449_113,
    ];
    const B: [f64; 4] = [
        47.202_581_904_688_241_87,
        976.098_551_737_776_693_22,
        10_260.932_208_618_978_205,
        45_507.789_335_026_729_956,
    ];
    let xsq = x * x;
    let mut num = A[4] * xsq;
    let mut den = xsq;
    for i in 0..3 {
        num = (num + A[i]) * xsq;
        den = (den + B[i]) * xsq;
    }
    x * (num + A[3]) / (den + B[3])
}

/// `Φ̄(y)` for `0.674... < y ≤ 8`.
fn cody_tail(y: f64) -> f64 {
    let ratio = if y <= SQRT_32 {
        const C: [f64; 9] = [
            0.398_941_512_088_134_667_64,
            8.883_149_794_388_375_941_2,
            93.506_656_132_177_855_979,
            597.270_276_394_800_262_26,
            2_494.537_585_290_372_671_1,
            6_848.190_450_536_282_332_6,
            11_602.651_437_647_350_124,
            9_842.714_838_383_978_021_8,
            1.076_557_677_372_019_231_7e-8,
        ];
        const D: [f64; 8] = [
            22.266_688_044_328_115_691,
            235.387_901_782_624_998_61,
            1_519.377_599_407_554_805,
            6_485.558_298_266_760_755,
            18_615.571_640_885_098_091,
            34_900.952_721_145_977_266,
            38_912.003_286_093_271_411,
            19_685.429_676_859_990_727,
        ];
        let mut num = C[8] * y;
        let mut den = y;
        for i in 0..7 {
            num = (num + C[i]) * y;
            den = (den + D[i]) * y;
        }
        (num + C[7]) / (den + D[7])
    } else {
        const P: [f64; 6] = [
            0.215_898_534_057_956_99,
            0.127_401_161_160_247_363_9,
            0.022_235_277_870_649_807,
            0.001_421_619_193_227_893_466,
            2.911_287_495_116_879_2e-5,
            0.023_073_441_764_940_173_03,
        ];
        const Q: [f64; 5] = [
            1.284_260_096_144_911_21,
            0.468_238_212_480_865_118,
            0.065_988_137_868_928_551_5,
            0.003_782_396_332_027_582_44,
            7.297_515_550_839_662_05e-5,
        ];
        let xsq = 1.0 / (y * y);
        let mut num = P[5] * xsq;
        let mut den = xsq;
        for i in 0..4 {
            num = (num + P[i]) * xsq;
            den = (den + Q[i]) * xsq;
        }
        let r = xsq * (num + P[4]) / (den + Q[4]);
        (FRAC_1_SQRT_2PI - r) / y
    };
    gauss_kernel(y) * ratio
}

/// Mills ratio `Φ̄(y)/φ(y)` by backward evaluation of
/// `1/(y + 1/(y + 2/(y + 3/(y + ...))))`.
fn mills_ratio_cf(y: f64) -> f64 {
    if y.is_infinite() {
        return 0.0;
    }
    let mut f = y;
    for k in (1..=CF_TERMS).rev() {
        f = y + f64::from(k) / f;
    }
    1.0 / f
}

/// Inverse of [`std_normal_cdf`].
///
/// Wichura's AS 241 starting value followed by Newton steps against the
/// complement-free tail, so the round trip holds to a few ulps.
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!(
            "quantile needs p in (0, 1), got {p}"
        )));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    let mut x = as241(p);
    for _ in 0..3 {
        // Residual measured on whichever side is not close to 1.
        let resid = if p < 0.5 {
            std_normal_cdf(x) - p
        } else {
            (1.0 - p) - std_normal_survival(x)
        };
        let dens = std_normal_pdf(x);
        if dens == 0.0 {
            break;
        }
        let step = resid / dens;
        // Halley correction
        let step = step / (1.0 + 0.5 * x * step);
        x -= step;
        if step.abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
            break;
        }
    }
    Ok(x)
}

fn as241(p: f64) -> f64 {
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        let num = ((((((r * 2_509.080_928_730_122_672_7 + 33_430.575_583_588_128_105) * r
            + 67_265.770_927_008_700_853)
            * r
            + 45_921.953_931_549_871_457)
            * r
            + 13_731.693_765_509_461_125)
            * r
            + 1_971.590_950_306_551_442_7)
            * r
            + 133.141_667_891_784_377_45)
            * r
            + 3.387_132_872_796_366_608;
        let den = ((((((r * 5_226.495_278_852_545_925 + 28_729.085_735_721_942_674) * r
            + 39_307.895_800_092_710_61)
            * r
            + 21_213.794_301_586_595_867)
            * r
            + 5_394.196_021_424_751_107_7)
            * r
            + 687.187_007_492_057_908_3)
            * r
            + 42.313_330_701_600_911_252)
            * r
            + 1.0;
        return q * num / den;
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-tail.ln()).sqrt();
    let val = if r <= 5.0 {
        r -= 1.6;
        let num = ((((((r * 7.745_450_142_783_414_076_4e-4 + 0.022_723_844_989_269_184_583_3)
            * r
            + 0.241_780_725_177_450_611_77)
            * r
            + 1.270_458_252_452_368_382_58)
            * r
            + 3.647_848_324_763_204_605_04)
            * r
            + 5.769_497_221_460_691_405_5)
            * r
            + 4.630_337_846_156_545_295_9)
            * r
            + 1.423_437_110_749_683_577_34;
        let den = ((((((r * 1.050_750_071_644_416_843_24e-9 + 5.475_938_084_995_344_946e-4)
            * r
            + 0.015_198_666_563_616_457_196_6)
            * r
            + 0.148_103_976_427_480_074_59)
            * r
            + 0.689_767_334_985_100_004_55)
            * r
            + 1.676_384_830_183_803_849_4)
            * r
            + 2.053_191_626_637_758_821_87)
            * r
            + 1.0;
        num / den
    } else {
        r -= 5.0;
        let num = ((((((r * 2.010_334_399_292_288_132_65e-7 + 2.711_555_568_743_487_578_15e-5)
            * r
            + 0.001_242_660_947_388_078_438_6)
            * r
            + 0.026_532_189_526_576_123_093)
            * r
            + 0.296_560_571_828_504_891_23)
            * r
            + 1.784_826_539_917_291_335_8)
            * r
            + 5.463_784_911_164_114_369_9)
            * r
            + 6.657_904_643_501_103_777_2;
        let den = ((((((r * 2.044_263_103_389_939_785_64e-15 + 1.421_511_758_316_445_888_7e-7)
            * r
            + 1.846_318_317_510_054_681_8e-5)
            * r
            + 7.868_691_311_456_132_591e-4)
            * r
            + 0.014_875_361_290_850_614_852_5)
            * r
            + 0.136_929_880_922_735_805_31)
            * r
            + 0.599_832_206_555_887_937_69)
            * r
            + 1.0;
        num / den
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

/// `P(X ≤ h, Y ≤ k)` for a standard bivariate normal vector with correlation `rho`.
pub fn bivariate_normal_cdf(h: f64, k: f64, rho: Correlation) -> f64 {
    upper_orthant(-h, -k, rho.get())
}

/// `P(X > h, Y > k)` for a standard bivariate normal vector with correlation `rho`.
///
/// Evaluated directly in the upper orthant, so the result keeps its accuracy
/// relative to `Φ̄(min(h, k))` even when both thresholds are large.
pub fn bivariate_normal_survival(h: f64, k: f64, rho: Correlation) -> f64 {
    upper_orthant(h, k, rho.get())
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, positive half only
/// (nodes descending from the largest), for an even number of points.
struct HalfRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

fn gauss_legendre_half(points: usize) -> HalfRule {
    debug_assert!(points.is_multiple_of(2));
    let m = points / 2;
    let mut nodes = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    let nf = points as f64;
    for i in 0..m {
        // Tricomi's initial guess, then Newton on P_n.
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..points {
                let jf = j as f64;
                let p2 = p1;
                p1 = p0;
                p0 = ((2.0 * jf + 1.0) * z * p1 - jf * p2) / (jf + 1.0);
            }
            dp = nf * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() <= 1e-16 {
                break;
            }
        }
        nodes.push(z);
        weights.push(2.0 / ((1.0 - z * z) * dp * dp));
    }
    HalfRule { nodes, weights }
}

fn genz_rule(abs_rho: f64) -> &'static HalfRule {
    static RULES: OnceLock<[HalfRule; 3]> = OnceLock::new();
    let rules = RULES.get_or_init(|| {
        [
            gauss_legendre_half(6),
            gauss_legendre_half(12),
            gauss_legendre_half(20),
        ]
    });
    if abs_rho < 0.3 {
        &rules[0]
    } else if abs_rho < 0.75 {
        &rules[1]
    } else {
        &rules[2]
    }
}

/// Genz's `bvnu`: upper orthant probability `P(X > h, Y > k)`.
fn upper_orthant(h: f64, k: f64, r: f64) -> f64 {
    if h.is_nan() || k.is_nan() {
        return f64::NAN;
    }
    if h == f64::INFINITY || k == f64::INFINITY {
        return 0.0;
    }
    if h == f64::NEG_INFINITY {
        return std_normal_survival(k);
    }
    if k == f64::NEG_INFINITY {
        return std_normal_survival(h);
    }
    if r == 0.0 {
        return std_normal_survival(h) * std_normal_survival(k);
    }
    if r == 1.0 {
        return std_normal_survival(h.max(k));
    }
    if r == -1.0 {
        // P(h < X < -k)
        if h + k >= 0.0 {
            return 0.0;
        }
        let v = if h >= 0.0 {
            std_normal_survival(h) - std_normal_survival(-k)
        } else {
            std_normal_survival(k) - std_normal_cdf(h)
        };
        return v.max(0.0);
    }

    let two_pi = 2.0 * PI;
    let rule = genz_rule(r.abs());
    let mut hk = h * k;
    let mut bvn = 0.0;

    if r.abs() < 0.925 {
        let hs = (h * h + k * k) / 2.0;
        let asr = r.asin() / 2.0;
        for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
            for t in [1.0 - x, 1.0 + x] {
                let sn = (asr * t).sin();
                bvn += w * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
            }
        }
        bvn = bvn * asr / two_pi + std_normal_survival(h) * std_normal_survival(k);
    } else {
        let mut k = k;
        if r < 0.0 {
            k = -k;
            hk = -hk;
        }
        let as_ = (1.0 - r) * (1.0 + r);
        let mut a = as_.sqrt();
        let bs = (h - k) * (h - k);
        let c = (4.0 - hk) / 8.0;
        let d = (12.0 - hk) / 80.0;
        let asr = -(bs / as_ + hk) / 2.0;
        if asr > -100.0 {
            bvn = a * asr.exp() * (1.0 - c * (bs - as_) * (1.0 - d * bs) / 3.0 + c * d * as_ * as_);
        }
        if hk > -100.0 {
            let b = bs.sqrt();
            let sp = two_pi.sqrt() * std_normal_survival(b / a);
            bvn -= (-hk / 2.0).exp() * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0);
        }
        a /= 2.0;
        for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
            for t in [1.0 - x, 1.0 + x] {
                let xs = (a * t) * (a * t);
                let asr = -(bs / xs + hk) / 2.0;
                if asr > -100.0 {
                    let rs = (1.0 - xs).sqrt();
                    let sp = 1.0 + c * xs * (1.0 + 5.0 * d * xs);
                    let ep = (-hk * xs / (2.0 * (1.0 + rs) * (1.0 + rs))).exp() / rs;
                    bvn -= a * w * asr.exp() * (sp - ep);
                }
            }
        }
        bvn = -bvn / two_pi;
        if r > 0.0 {
            bvn += std_normal_survival(h.max(k));
        } else if h >= k {
            bvn = -bvn;
        } else {
            let l = if h < 0.0 {
                std_normal_cdf(k) - std_normal_cdf(h)
            } else {
                std_normal_survival(h) - std_normal_survival(k)
            };
            bvn = l - bvn;
        }
    }
    bvn.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn corr(r: f64) -> Correlation {
        Correlation::new(r).unwrap()
    }

    #[test]
    fn pdf_values() {
        assert_eq!(std_normal_pdf(0.0), 0.398_942_280_401_432_7);
        assert_relative_eq!(
            std_normal_pdf(1.0),
            0.241_970_724_519_143_37,
            max_relative = 1e-15
        );
        for x in [0.3, 1.7, 5.0, 12.5] {
            assert_eq!(std_normal_pdf(x), std_normal_pdf(-x));
        }
    }

    #[test]
    fn cdf_limits_and_symmetry() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        assert_eq!(std_normal_cdf(f64::INFINITY), 1.0);
        assert_eq!(std_normal_cdf(f64::NEG_INFINITY), 0.0);
        assert_eq!(std_normal_survival(f64::NEG_INFINITY), 1.0);
        assert_eq!(std_normal_survival(0.0), 0.5);
        assert_relative_eq!(
            std_normal_cdf(2.326_347_874_040_841),
            0.99,
            max_relative = 1e-15
        );
    }

    #[test]
    fn far_tail_continued_fraction() {
        assert_relative_eq!(
            std_normal_survival(10.0),
            7.619_853_024_160_527e-24,
            max_relative = 1e-14
        );
    }

    #[test]
    fn quantile_domain() {
        assert!(std_normal_quantile(0.0).is_err());
        assert!(std_normal_quantile(1.0).is_err());
        assert!(std_normal_quantile(f64::NAN).is_err());
        assert_eq!(std_normal_quantile(0.5).unwrap(), 0.0);
    }

    #[test]
    fn quantile_values() {
        assert_relative_eq!(
            std_normal_quantile(0.99).unwrap(),
            2.326_347_874_040_841,
            max_relative = 1e-15
        );
        let p = std_normal_cdf(1.7);
        assert!((std_normal_quantile(p).unwrap() - 1.7).abs() < 1e-12);
    }

    #[test]
    fn correlation_domain() {
        assert!(Correlation::new(1.0 + 1e-12).is_err());
        assert!(Correlation::new(f64::NAN).is_err());
        assert!(Correlation::try_from(-1.0).is_ok());
        let (c, clipped) = Correlation::clamped(-1.3).unwrap();
        assert_eq!(c.get(), -1.0);
        assert!(clipped);
    }

    #[test]
    fn gauss_legendre_rules_are_exact_for_polynomials() {
        for pts in [6, 12, 20] {
            let rule = gauss_legendre_half(pts);
            let total: f64 = 2.0 * rule.weights.iter().sum::<f64>();
            assert_relative_eq!(total, 2.0, max_relative = 1e-15);
            // ∫ x^(2pts-2) over [-1,1]
            let deg = 2 * pts as i32 - 2;
            let q: f64 = 2.0
                * rule
                    .nodes
                    .iter()
                    .zip(&rule.weights)
                    .map(|(x, w)| w * x.powi(deg))
                    .sum::<f64>();
            assert_relative_eq!(q, 2.0 / (deg as f64 + 1.0), max_relative = 1e-13);
        }
    }

    #[test]
    fn bivariate_exact_reductions() {
        let (h, k) = (0.4, -1.1);
        assert_eq!(
            bivariate_normal_cdf(h, k, Correlation::ZERO),
            std_normal_cdf(h) * std_normal_cdf(k)
        );
        assert_eq!(
            bivariate_normal_cdf(h, k, Correlation::ONE),
            std_normal_cdf(k)
        );
        let anti = (std_normal_cdf(h) + std_normal_cdf(k) - 1.0).max(0.0);
        assert!((bivariate_normal_cdf(h, k, Correlation::MINUS_ONE) - anti).abs() < 1e-16);
        assert!(
            (bivariate_normal_cdf(1.5, 0.8, Correlation::MINUS_ONE)
                - (std_normal_cdf(1.5) + std_normal_cdf(0.8) - 1.0))
                .abs()
                < 1e-16
        );
        assert_eq!(bivariate_normal_survival(0.0, 0.0, Correlation::ZERO), 0.25);
        assert_eq!(
            bivariate_normal_survival(2.0, 3.0, Correlation::MINUS_ONE),
            0.0
        );
    }

    #[test]
    fn bivariate_origin_is_arcsine_law() {
        for r in [-0.99_f64, -0.5, -0.2, 0.1, 0.5, 0.8, 0.93, 0.999] {
            let expect = 0.25 + r.asin() / (2.0 * PI);
            assert!(
                (bivariate_normal_cdf(0.0, 0.0, corr(r)) - expect).abs() < 5e-16,
                "rho {r}"
            );
        }
    }

    #[test]
    fn bivariate_infinite_arguments() {
        let r = corr(0.6);
        assert_eq!(
            bivariate_normal_cdf(f64::INFINITY, 0.7, r),
            std_normal_cdf(0.7)
        );
        assert_eq!(bivariate_normal_cdf(0.7, f64::NEG_INFINITY, r), 0.0);
        assert_eq!(bivariate_normal_cdf(f64::INFINITY, f64::INFINITY, r), 1.0);
        assert_eq!(
            bivariate_normal_survival(f64::NEG_INFINITY, f64::NEG_INFINITY, r),
            1.0
        );
    }

    // Reference values computed with 40-digit arithmetic (mpmath).
    const SURVIVAL_REF: [(f64, f64); 24] = [
        (-6.0, 0.999_999_999_013_412_35),
        (-3.0, 0.998_650_101_968_369_91),
        (-1.5, 0.933_192_798_731_141_93),
        (-0.5, 0.691_462_461_274_013_1),
        (0.3, 0.382_088_577_811_047_37),
        (0.6, 0.274_253_117_750_073_59),
        (0.7, 0.241_963_652_223_073_03),
        (1.0, 0.158_655_253_931_457_05),
        (1.5, 0.066_807_201_268_858_066),
        (2.0, 0.022_750_131_948_179_207),
        (3.0, 0.001_349_898_031_630_094_5),
        (4.0, 3.167_124_183_311_992_1e-5),
        (5.0, 2.866_515_718_791_939_1e-7),
        (5.6, 1.071_759_025_831_092_9e-8),
        (5.7, 5.990_371_401_063_528_2e-9),
        (6.0, 9.865_876_450_376_981_4e-10),
        (7.0, 1.279_812_543_885_835e-12),
        (7.9, 1.394_517_146_659_264_3e-15),
        (8.1, 2.747_959_392_398_228_5e-16),
        (9.0, 1.128_588_405_953_840_6e-19),
        (12.0, 1.776_482_112_077_679e-33),
        (20.0, 2.753_624_118_606_233_7e-89),
        (30.0, 4.906_713_927_148_187_1e-198),
        (37.5, 4.605_353_009_581_954_8e-308),
    ];

    #[test]
    fn survival_matches_extended_precision() {
        for (x, want) in SURVIVAL_REF {
            let got = std_normal_survival(x);
            let tol = if x <= 8.0 { 2e-15 } else { 1e-13 };
            assert_relative_eq!(got, want, max_relative = tol);
            // and the mirrored lower tail
            assert_relative_eq!(std_normal_cdf(-x), want, max_relative = tol);
        }
    }

    #[test]
    fn complement_identity() {
        let mut x = -9.0;
        while x <= 9.0 {
            let sum = std_normal_cdf(x) + std_normal_survival(x);
            assert!((sum - 1.0).abs() <= 1e-15, "x = {x}");
            x += 0.0625;
        }
    }

    #[test]
    fn bivariate_cdf_matches_extended_precision() {
        let cases = [
            (-2.0, 1.0, 0.5, 0.022_603_272_182_164_95),
            (1.0, 1.0, 0.9, 0.798_179_829_565_444_2),
            (0.5, -0.5, -0.7, 0.110_935_822_003_919_54),
            (2.0, 2.0, 0.95, 0.970_524_219_807_908_11),
            (-1.0, -1.0, 0.99, 0.145_003_534_847_994_35),
            (0.3, 1.7, -0.3, 0.580_725_321_812_023_18),
            (3.0, -3.0, 0.2, 0.001_349_767_281_187_007_6),
            (-0.5, -2.5, 0.8, 0.006_193_274_145_050_649),
            (1.2, 0.4, 0.96, 0.655_364_903_122_872_55),
            (-1.5, 2.5, -0.95, 0.060_601_051_121_857_741),
        ];
        for (h, k, r, want) in cases {
            let got = bivariate_normal_cdf(h, k, corr(r));
            assert!(
                (got - want).abs() <= 5e-16,
                "({h}, {k}, {r}): {got} vs {want}"
            );
        }
    }

    #[test]
    fn bivariate_tail_survival_relative_accuracy() {
        let cases = [
            (5.2, 5.2, 0.926, 2.908_569_043_958_833_4e-8),
            (5.5, 5.7, 0.937, 2.931_620_278_941_620_5e-9),
            (4.0, 4.4, 0.5, 1.404_708_601_188_511_4e-7),
            (5.0, 5.0, 0.0, 8.216_912_366_081_267_4e-14),
            (5.2, 5.3, -0.4, 2.448_779_628_766_307_6e-23),
            (4.8, 4.8, 0.9985, 7.070_079_168_156_369_2e-7),
            (6.0, 5.5, 0.999, 9.865_876_450_376_981_4e-10),
            (3.0, 3.0, 0.3, 2.385_151_574_515_580_6e-5),
            (5.5, 5.5, 0.75, 6.150_124_112_366_620_5e-10),
        ];
        for (h, k, r, want) in cases {
            let got = bivariate_normal_survival(h, k, corr(r));
            // Relative to the marginal tail, which is the scale n·(1 - F) lives on.
            let scale = std_normal_survival(h.min(k));
            assert!(
                (got - want).abs() <= 1e-14 * scale,
                "({h}, {k}, {r}): {got:e} vs {want:e}"
            );
        }
    }
}
