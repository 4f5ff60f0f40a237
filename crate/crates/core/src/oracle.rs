//! Independent checks: adaptive Gauss-Kronrod quadrature of the defining
//! integrals and a seeded Monte Carlo sampler for triangular-array maxima.
//!
//! Nothing on the expansion code paths calls into this module.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gauss::{std_normal_cdf, std_normal_pdf, std_normal_survival, Correlation};
use crate::norming::{solve_bn, NormingConstant};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Subinterval budget of the adaptive integrator.
const MAX_INTERVALS: usize = 4000;

/// Stop once the error estimate is below `max(abs, rel·|value|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub const fn new(abs: f64, rel: f64) -> Self {
        Tolerance { abs, rel }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::new(1e-14, 1e-12)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

/// 21-point Kronrod rule with the QUADPACK error heuristic.
fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_g = 0.0;
    let mut res_k = fc * WGK[10];
    let mut res_abs = (res_k).abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut error = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    Segment { a, b, value, error }
}

/// Adaptive bisection of the segment with the largest error estimate.
pub fn quad<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<QuadratureResult> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::domain(
            "quad needs finite limits; use quad_semi_infinite",
        ));
    }
    let first = gk21(&f, a, b);
    let mut segments = vec![first];
    let mut evaluations = 21;
    loop {
        let value: f64 = segments.iter().map(|s| s.value).sum();
        let error: f64 = segments.iter().map(|s| s.error).sum();
        if !value.is_finite() {
            if segments.len() == 1 {
                return Err(Error::domain(format!(
                    "integrand is not finite on [{a}, {b}]"
                )));
            }
            return Err(Error::Convergence {
                value,
                abs_error_estimate: error,
                evaluations,
            });
        }
        if error <= tol.target(value) {
            return Ok(QuadratureResult {
                value,
                abs_error_estimate: error,
                evaluations,
            });
        }
        if segments.len() >= MAX_INTERVALS {
            return Err(Error::Convergence {
                value,
                abs_error_estimate: error,
                evaluations,
            });
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("segments are never empty");
        let s = segments.swap_remove(worst);
        let mid = 0.5 * (s.a + s.b);
        if mid <= s.a || mid >= s.b {
            // Cannot split further at double precision.
            return Err(Error::Convergence {
                value,
                abs_error_estimate: error,
                evaluations,
            });
        }
        segments.push(gk21(&f, s.a, mid));
        segments.push(gk21(&f, mid, s.b));
        evaluations += 42;
    }
}

/// `∫_lower^∞ f(z) dz` through `z = lower - 2 ln(1 - u)`, `u ∈ [0, 1)`.
///
/// When `f` carries an `e^{-z}` factor the mapped integrand keeps a `(1 - u)`
/// factor, so polynomial prefactors only add a vanishing log singularity at
/// `u = 1`. With the unit rate that singularity does not vanish and the
/// Kronrod error estimate turns optimistic.
pub fn quad_semi_infinite<F: Fn(f64) -> f64>(
    f: F,
    lower: f64,
    tol: Tolerance,
) -> Result<QuadratureResult> {
    if !lower.is_finite() {
        return Err(Error::domain("lower limit must be finite"));
    }
    let g = |u: f64| {
        let w = 1.0 - u;
        if w <= 0.0 {
            return 0.0;
        }
        let v = 2.0 * f(lower - 2.0 * w.ln()) / w;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    quad(g, 0.0, 1.0, tol)
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::domain(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    Ok(())
}

/// `∫_y^∞ φ(λ + (x-z)/2λ) e^{-z} z^k dz` by quadrature.
pub fn i_k_quadrature(k: u32, lambda: f64, x: f64, y: f64) -> Result<f64> {
    check_lambda(lambda)?;
    if k > 3 {
        return Err(Error::domain(format!(
            "I_k is defined for k in 0..=3, got {k}"
        )));
    }
    let f =
        |z: f64| std_normal_pdf(lambda + (x - z) / (2.0 * lambda)) * (-z).exp() * z.powi(k as i32);
    Ok(quad_semi_infinite(f, y, Tolerance::new(1e-300, 1e-11))?.value)
}

/// `∫_y^∞ Φ(λ + (x-z)/2λ) e^{-z} (z⁴/8 - z²/2 - 2) dz` by quadrature.
pub fn tau3_quadrature(lambda: f64, x: f64, y: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let f = |z: f64| {
        let z2 = z * z;
        std_normal_cdf(lambda + (x - z) / (2.0 * lambda))
            * (-z).exp()
            * (z2 * z2 / 8.0 - z2 / 2.0 - 2.0)
    };
    Ok(quad_semi_infinite(f, y, Tolerance::new(1e-300, 1e-11))?.value)
}

/// `ζ(z) = (u_n(x) - ρ u_n(z)) / √(1-ρ²)`, the conditional standardisation
/// appearing in the tail integrals.
pub(crate) fn conditional_arg(bn: &NormingConstant, rho: f64, x: f64, z: f64) -> f64 {
    let s = ((1.0 - rho) * (1.0 + rho)).sqrt();
    (bn.threshold(x) - rho * bn.threshold(z)) / s
}

/// `b_n² ∫_y^∞ (Φ(λ + (x-z)/2λ) - Φ(ζ_n(z))) e^{-z} dz`, whose limit is `κ₁`.
pub fn kappa1_defining_integral(
    bn: &NormingConstant,
    rho: Correlation,
    lambda: f64,
    x: f64,
    y: f64,
) -> Result<f64> {
    check_lambda(lambda)?;
    bn.require_thresholds()?;
    let r = rho.get();
    if r.abs() >= 1.0 {
        return Err(Error::domain("the defining integral needs |rho| < 1"));
    }
    let f = |z: f64| {
        (std_normal_cdf(lambda + (x - z) / (2.0 * lambda))
            - std_normal_cdf(conditional_arg(bn, r, x, z)))
            * (-z).exp()
    };
    Ok(bn.b2() * quad_semi_infinite(f, y, Tolerance::new(1e-16, 1e-12))?.value)
}

/// `P(X > h, Y > k)` as `∫_h^∞ φ(z) Φ̄((k - ρz)/√(1-ρ²)) dz`.
pub fn bvn_survival_quadrature(h: f64, k: f64, rho: Correlation) -> Result<f64> {
    let r = rho.get();
    if r.abs() >= 1.0 {
        return Err(Error::domain("quadrature oracle needs |rho| < 1"));
    }
    let s = ((1.0 - r) * (1.0 + r)).sqrt();
    let f = |z: f64| std_normal_pdf(z) * std_normal_survival((k - r * z) / s);
    Ok(quad_semi_infinite(f, h, Tolerance::new(1e-17, 1e-13))?.value)
}

/// `P(X ≤ h, Y ≤ k)` as `∫_0^∞ φ(h - t) Φ((k - ρ(h - t))/√(1-ρ²)) dt`.
pub fn bvn_cdf_quadrature(h: f64, k: f64, rho: Correlation) -> Result<f64> {
    let r = rho.get();
    if r.abs() >= 1.0 {
        return Err(Error::domain("quadrature oracle needs |rho| < 1"));
    }
    let s = ((1.0 - r) * (1.0 + r)).sqrt();
    let f = |t: f64| {
        let z = h - t;
        std_normal_pdf(z) * std_normal_cdf((k - r * z) / s)
    };
    Ok(quad_semi_infinite(f, 0.0, Tolerance::new(1e-17, 1e-13))?.value)
}

/// Monte Carlo estimate with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub trials: u64,
}

const CHUNK: u64 = 1 << 14;

/// Fraction of `trials` rows of `n` pairs whose componentwise maxima stay
/// below `(ux, uy)`.
///
/// Trials are split into fixed chunks, each with its own ChaCha stream, so the
/// result depends on `seed` only and not on the worker count.
pub fn mc_joint_maxima(
    n: u64,
    rho: Correlation,
    ux: f64,
    uy: f64,
    trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    if n == 0 || trials == 0 {
        return Err(Error::domain("n and trials must be positive"));
    }
    let r = rho.get();
    let s = ((1.0 - r) * (1.0 + r)).max(0.0).sqrt();
    let chunks = trials.div_ceil(CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let count = CHUNK.min(trials - c * CHUNK);
            let mut hits = 0u64;
            for _ in 0..count {
                let mut below = true;
                for _ in 0..n {
                    let z1: f64 = StandardNormal.sample(&mut rng);
                    let z2: f64 = StandardNormal.sample(&mut rng);
                    if z1 > ux || r * z1 + s * z2 > uy {
                        below = false;
                        break;
                    }
                }
                hits += below as u64;
            }
            hits
        })
        .sum();
    let p = hits as f64 / trials as f64;
    Ok(McEstimate {
        estimate: p,
        std_error: (p * (1.0 - p) / trials as f64).sqrt(),
        trials,
    })
}

/// [`mc_joint_maxima`] at the thresholds `(u_n(x), u_n(y))`.
pub fn mc_triangular_maxima(
    n: u64,
    rho: Correlation,
    x: f64,
    y: f64,
    trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    let bn = solve_bn(n)?;
    bn.require_thresholds()?;
    mc_joint_maxima(n, rho, bn.threshold(x), bn.threshold(y), trials, seed)
}
