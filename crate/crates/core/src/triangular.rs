//! Rows of the Gaussian triangular array: correlation sequences `ρ_n`, exact
//! distributions of the normalised row maxima, and the diagnostic sequences of
//! the expansion proofs.

use crate::error::{Error, Result};
use crate::gauss::{
    bivariate_normal_cdf, bivariate_normal_survival, std_normal_cdf, std_normal_survival,
    Correlation,
};
use crate::hr::{hr_cdf, HrParams, Lambda};
use crate::norming::{solve_bn, NormingConstant};
use crate::oracle::{conditional_arg, quad_semi_infinite, Tolerance};

/// Rule producing the correlation of row `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RhoSequenceSpec {
    Constant(Correlation),
    /// `λ_n = λ - α/b_n² - β/b_n⁴`, `ρ_n = 1 - 2λ_n²/b_n²`.
    ThirdOrderHr {
        lambda: f64,
        alpha: f64,
        beta: f64,
    },
    /// `((1 - ρ_n) ln n - (2 + ρ_n) ln ln n) / 2 = γ`.
    CorollaryInfinity {
        gamma: f64,
    },
    /// `(1 - ρ_n)(ln n)³ = τ²`.
    CorollaryZero {
        tau_rate: f64,
    },
}

impl RhoSequenceSpec {
    pub fn constant(rho: f64) -> Result<Self> {
        Ok(RhoSequenceSpec::Constant(Correlation::new(rho)?))
    }

    pub fn third_order_hr(lambda: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::domain(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        if !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::domain("alpha and beta must be finite"));
        }
        Ok(RhoSequenceSpec::ThirdOrderHr {
            lambda,
            alpha,
            beta,
        })
    }

    pub fn corollary_infinity(gamma: f64) -> Result<Self> {
        if !gamma.is_finite() {
            return Err(Error::domain("gamma must be finite"));
        }
        Ok(RhoSequenceSpec::CorollaryInfinity { gamma })
    }

    pub fn corollary_zero(tau_rate: f64) -> Result<Self> {
        if !(tau_rate >= 0.0 && tau_rate.is_finite()) {
            return Err(Error::domain(format!(
                "tau_rate must be >= 0, got {tau_rate}"
            )));
        }
        Ok(RhoSequenceSpec::CorollaryZero { tau_rate })
    }

    /// The limit regime this sequence converges to.
    pub fn limit_params(&self) -> HrParams {
        match *self {
            RhoSequenceSpec::Constant(r) if r.get() == 1.0 => HrParams::zero(),
            RhoSequenceSpec::Constant(_) => HrParams::infinity(),
            RhoSequenceSpec::ThirdOrderHr {
                lambda,
                alpha,
                beta,
            } => HrParams {
                lambda: Lambda::Finite(lambda),
                alpha,
                beta,
            },
            RhoSequenceSpec::CorollaryInfinity { .. } => HrParams::infinity(),
            RhoSequenceSpec::CorollaryZero { .. } => HrParams::zero(),
        }
    }
}

/// Row `n` of the array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayRow {
    pub norming: NormingConstant,
    pub rho: Correlation,
    /// `(b_n²(1 - ρ_n)/2)^{1/2}`
    pub lambda_n: f64,
    /// `b_n²(λ - λ_n) - α` for third-order rows.
    pub delta_n: Option<f64>,
    /// The generated `ρ_n` fell outside `[-1, 1]` and was clipped.
    pub clipped: bool,
}

impl ArrayRow {
    pub fn n(&self) -> u64 {
        self.norming.n()
    }

    /// Row with a given correlation and no construction constants.
    pub fn with_rho(norming: NormingConstant, rho: Correlation) -> Result<Self> {
        norming.require_thresholds()?;
        Ok(ArrayRow {
            norming,
            rho,
            lambda_n: lambda_from_rho(&norming, rho.get()),
            delta_n: None,
            clipped: false,
        })
    }
}

fn lambda_from_rho(bn: &NormingConstant, rho: f64) -> f64 {
    (bn.b2() * (1.0 - rho) / 2.0).max(0.0).sqrt()
}

pub fn make_row(spec: &RhoSequenceSpec, n: u64) -> Result<ArrayRow> {
    let bn = solve_bn(n)?;
    make_row_at(spec, &bn)
}

pub fn make_row_at(spec: &RhoSequenceSpec, bn: &NormingConstant) -> Result<ArrayRow> {
    bn.require_thresholds()?;
    let b2 = bn.b2();
    let ln_n = (bn.n() as f64).ln();
    let (raw, exact_lambda, delta) = match *spec {
        RhoSequenceSpec::Constant(r) => (r.get(), None, None),
        RhoSequenceSpec::ThirdOrderHr {
            lambda,
            alpha,
            beta,
        } => {
            let ln = lambda - alpha / b2 - beta / (b2 * b2);
            let rho = 1.0 - 2.0 * ln * ln / b2;
            (rho, Some(ln), Some(b2 * (lambda - ln) - alpha))
        }
        RhoSequenceSpec::CorollaryInfinity { gamma } => {
            let lnln = ln_n.ln();
            if lnln <= 0.0 {
                return Err(Error::domain(format!(
                    "the corollary sequence needs ln ln n > 0, got n = {}",
                    bn.n()
                )));
            }
            (
                (ln_n - 2.0 * lnln - 2.0 * gamma) / (ln_n + lnln),
                None,
                None,
            )
        }
        RhoSequenceSpec::CorollaryZero { tau_rate } => {
            (1.0 - tau_rate * tau_rate / (ln_n * ln_n * ln_n), None, None)
        }
    };
    let (rho, clipped) = Correlation::clamped(raw)?;
    let lambda_n = match exact_lambda {
        Some(l) if !clipped && l >= 0.0 => l,
        _ => lambda_from_rho(bn, rho.get()),
    };
    Ok(ArrayRow {
        norming: *bn,
        rho,
        lambda_n,
        delta_n: delta,
        clipped,
    })
}

/// `n ln F_ρ(u_n(x), u_n(y))`.
///
/// Computed as `n ln(1 - c)` from the union probability
/// `c = Φ̄(u_x) + Φ̄(u_y) - P(X > u_x, Y > u_y)`, which has no cancellation
/// because `c ≥ max(Φ̄(u_x), Φ̄(u_y))`.
pub fn log_joint_max_cdf(bn: &NormingConstant, rho: Correlation, x: f64, y: f64) -> Result<f64> {
    bn.require_thresholds()?;
    let (ux, uy) = (bn.threshold(x), bn.threshold(y));
    let n = bn.n() as f64;
    let r = rho.get();
    let c = if r == 1.0 {
        std_normal_survival(ux.min(uy))
    } else if r == 0.0 {
        let (sx, sy) = (std_normal_survival(ux), std_normal_survival(uy));
        sx + sy - sx * sy
    } else {
        std_normal_survival(ux) + std_normal_survival(uy) - bivariate_normal_survival(ux, uy, rho)
    };
    if c < 0.5 {
        Ok(n * (-c).ln_1p())
    } else {
        Ok(n * bivariate_normal_cdf(ux, uy, rho).ln())
    }
}

/// `F_ρⁿ(u_n(x), u_n(y))`.
pub fn exact_joint_max_cdf(n: u64, rho: Correlation, x: f64, y: f64) -> Result<f64> {
    let bn = solve_bn(n)?;
    exact_joint_max_cdf_at(&bn, rho, x, y)
}

pub fn exact_joint_max_cdf_at(
    bn: &NormingConstant,
    rho: Correlation,
    x: f64,
    y: f64,
) -> Result<f64> {
    Ok(log_joint_max_cdf(bn, rho, x, y)?.exp())
}

/// `Δ = F_{ρ_n}ⁿ(u_n(x), u_n(y)) - H_λ(x, y)` along `spec`.
pub fn delta_error(
    n: u64,
    spec: &RhoSequenceSpec,
    params: &HrParams,
    x: f64,
    y: f64,
) -> Result<f64> {
    let row = make_row(spec, n)?;
    delta_error_at(&row, params, x, y)
}

pub fn delta_error_at(row: &ArrayRow, params: &HrParams, x: f64, y: f64) -> Result<f64> {
    Ok(exact_joint_max_cdf_at(&row.norming, row.rho, x, y)? - hr_cdf(params.lambda, x, y))
}

/// `(A₁ₙ, A₂ₙ, A₃ₙ)` with `f = (1 - λ_n²/b_n²)^{-1/2}`:
/// `A₁ = b²(λ - λ_n f)`, `A₂ = b²(1/λ - f/λ_n)/2`, `A₃ = λ_n f`.
pub fn a_coefficients(row: &ArrayRow, lambda: f64) -> Result<(f64, f64, f64)> {
    if !(lambda > 0.0) {
        return Err(Error::domain(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    let b2 = row.norming.b2();
    let ln = row.lambda_n;
    if !(ln > 0.0) {
        return Err(Error::domain("A coefficients need lambda_n > 0"));
    }
    let inner = 1.0 - ln * ln / b2;
    if !(inner > 0.0) {
        return Err(Error::domain(format!(
            "lambda_n^2 = {} is not below b_n^2 = {b2}",
            ln * ln
        )));
    }
    let f = inner.sqrt().recip();
    Ok((
        b2 * (lambda - ln * f),
        0.5 * b2 * (1.0 / lambda - f / ln),
        ln * f,
    ))
}

/// `h_n = n ln F + Φ(λ + (x-y)/2λ)e^{-y} + Φ(λ + (y-x)/2λ)e^{-x}`, so that
/// `F^n = e^{h_n} H_λ`.
pub fn h_n_diagnostic(
    bn: &NormingConstant,
    rho: Correlation,
    lambda: f64,
    x: f64,
    y: f64,
) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::domain(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    let d = (y - x) / (2.0 * lambda);
    let log_h =
        -(std_normal_cdf(lambda - d) * (-y).exp() + std_normal_cdf(lambda + d) * (-x).exp());
    Ok(log_joint_max_cdf(bn, rho, x, y)? - log_h)
}

/// Depth of the weight in the tail representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailOrder {
    /// `1 + (1 - z²/2)/b²`, remainder `O(b⁻⁴)`.
    Second,
    /// Adds `(z⁴/8 - z²/2 - 2)/b⁴`, remainder `O(b⁻⁶)`.
    Third,
}

/// `n Φ̄(u_n(y)) - ∫_y^∞ Φ(ζ_n(z)) e^{-z} w(z) dz`, approximating
/// `n P(X > u_n(x), Y > u_n(y))`.
pub fn joint_tail_approx(
    bn: &NormingConstant,
    rho: Correlation,
    x: f64,
    y: f64,
    order: TailOrder,
) -> Result<f64> {
    bn.require_thresholds()?;
    let r = rho.get();
    if r.abs() >= 1.0 {
        return Err(Error::domain("the tail representation needs |rho| < 1"));
    }
    let b2 = bn.b2();
    let weight = move |z: f64| {
        let z2 = z * z;
        let second = 1.0 + (1.0 - z2 / 2.0) / b2;
        match order {
            TailOrder::Second => second,
            TailOrder::Third => second + (z2 * z2 / 8.0 - z2 / 2.0 - 2.0) / (b2 * b2),
        }
    };
    let f = |z: f64| std_normal_cdf(conditional_arg(bn, r, x, z)) * (-z).exp() * weight(z);
    let integral = quad_semi_infinite(f, y, Tolerance::new(1e-17, 1e-13))?.value;
    Ok(bn.n() as f64 * std_normal_survival(bn.threshold(y)) - integral)
}

/// `n P(X > u_n(x), Y > u_n(y))`.
pub fn scaled_joint_tail(bn: &NormingConstant, rho: Correlation, x: f64, y: f64) -> Result<f64> {
    bn.require_thresholds()?;
    Ok(bn.n() as f64 * bivariate_normal_survival(bn.threshold(x), bn.threshold(y), rho))
}
