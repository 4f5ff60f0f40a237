//! Identity and oracle checks run by `hrx verify`.

use crate::error::Result;
use crate::gauss::{bivariate_normal_cdf, Correlation};
use crate::hr::{hr_cdf, i_closed, kappa, tau, tau3, Lambda};
use crate::norming::solve_bn;
use crate::oracle::{bvn_cdf_quadrature, i_k_quadrature, mc_triangular_maxima, tau3_quadrature};
use crate::triangular::exact_joint_max_cdf;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn bound(name: &'static str, observed: f64, limit: f64) -> Self {
        CheckOutcome {
            name,
            passed: observed <= limit,
            detail: format!("max deviation {observed:.3e} (limit {limit:.0e})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    pub mc_trials: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: 20_240_601,
            mc_trials: 200_000,
        }
    }
}

pub const IDENTITY_LAMBDAS: [f64; 3] = [0.5, 1.0, 2.0];
pub const IDENTITY_POINTS: [f64; 3] = [-2.0, 0.0, 2.0];

/// Largest relative gap between the closed forms `I_0..I_3` and quadrature.
pub fn identity_deviation() -> Result<f64> {
    let mut worst = 0.0_f64;
    for k in 0..=3 {
        for &l in &IDENTITY_LAMBDAS {
            for &x in &IDENTITY_POINTS {
                for &y in &IDENTITY_POINTS {
                    let c = i_closed(k, l, x, y)?;
                    let q = i_k_quadrature(k, l, x, y)?;
                    worst = worst.max(relative_gap(c, q));
                }
            }
        }
    }
    Ok(worst)
}

/// Largest relative gap between closed-form `τ₃` and its defining integral.
pub fn tau3_deviation() -> Result<f64> {
    let mut worst = 0.0_f64;
    for &l in &IDENTITY_LAMBDAS {
        for &x in &IDENTITY_POINTS {
            for &y in &IDENTITY_POINTS {
                worst = worst.max(relative_gap(tau3(l, x, y)?, tau3_quadrature(l, x, y)?));
            }
        }
    }
    Ok(worst)
}

fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Largest `|H(x + ln m, y + ln m)^m - H(x, y)|` over the standard grid.
pub fn max_stability_deviation() -> f64 {
    let lambdas = [
        Lambda::Zero,
        Lambda::Finite(0.5),
        Lambda::Finite(1.0),
        Lambda::Finite(2.0),
        Lambda::Infinity,
    ];
    let pts = [-1.0, 0.0, 1.0, 3.0];
    let mut worst = 0.0_f64;
    for &l in &lambdas {
        for m in [2.0_f64, 10.0, 100.0] {
            for &x in &pts {
                for &y in &pts {
                    let h = hr_cdf(l, x, y);
                    let s = hr_cdf(l, x + m.ln(), y + m.ln()).powf(m);
                    worst = worst.max((s - h).abs());
                }
            }
        }
    }
    worst
}

fn symmetry_deviation() -> Result<f64> {
    let pts = [-1.5, -0.5, 0.0, 0.7, 2.0];
    let mut worst = 0.0_f64;
    for l in [0.3, 1.0, 2.5] {
        for &x in &pts {
            for &y in &pts {
                let k = (kappa(2.0, l, x, y)? - kappa(2.0, l, y, x)?).abs();
                let t = relative_gap(tau(2.0, 5.0, l, x, y)?, tau(2.0, 5.0, l, y, x)?);
                worst = worst.max(k).max(t);
            }
        }
    }
    Ok(worst)
}

fn bivariate_deviation() -> Result<f64> {
    let mut worst = 0.0_f64;
    for h in -3..=3 {
        for k in -3..=3 {
            for r in [-0.95, -0.5, 0.0, 0.5, 0.95] {
                let rho = Correlation::new(r)?;
                let (h, k) = (h as f64, k as f64);
                let d = (bivariate_normal_cdf(h, k, rho) - bvn_cdf_quadrature(h, k, rho)?).abs();
                worst = worst.max(d);
            }
        }
    }
    Ok(worst)
}

fn norming_residual() -> Result<f64> {
    let mut worst = 0.0_f64;
    for e in 0..=8 {
        let n = if e == 0 { 2 } else { 10u64.pow(e) };
        worst = worst.max(solve_bn(n)?.defining_residual().abs());
    }
    Ok(worst)
}

/// Worst MC deviation in standard errors at `n = 50`.
fn monte_carlo_z(opts: &VerifyOptions) -> Result<f64> {
    let mut worst = 0.0_f64;
    for (i, r) in [0.0, 0.5].into_iter().enumerate() {
        let rho = Correlation::new(r)?;
        for (j, (x, y)) in [(0.0, 0.0), (1.0, 0.5)].into_iter().enumerate() {
            let seed = opts.seed.wrapping_add((2 * i + j) as u64);
            let mc = mc_triangular_maxima(50, rho, x, y, opts.mc_trials, seed)?;
            let exact = exact_joint_max_cdf(50, rho, x, y)?;
            worst = worst.max((mc.estimate - exact).abs() / mc.std_error.max(f64::MIN_POSITIVE));
        }
    }
    Ok(worst)
}

/// Runs every check; numerical failures inside a check surface as errors.
pub fn run_verification(opts: &VerifyOptions) -> Result<Vec<CheckOutcome>> {
    Ok(vec![
        CheckOutcome::bound("norming residual", norming_residual()?, 1e-13),
        CheckOutcome::bound(
            "I_k closed forms vs quadrature",
            identity_deviation()?,
            1e-9,
        ),
        CheckOutcome::bound("tau3 closed form vs quadrature", tau3_deviation()?, 1e-9),
        CheckOutcome::bound("max-stability", max_stability_deviation(), 1e-12),
        CheckOutcome::bound("kappa/tau symmetry", symmetry_deviation()?, 1e-10),
        CheckOutcome::bound("bivariate cdf vs quadrature", bivariate_deviation()?, 1e-12),
        CheckOutcome::bound("Monte Carlo maxima (std errors)", monte_carlo_z(opts)?, 3.0),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        let opts = VerifyOptions {
            mc_trials: 50_000,
            ..VerifyOptions::default()
        };
        for c in run_verification(&opts).unwrap() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
