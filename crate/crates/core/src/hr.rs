//! The Hüsler-Reiss distribution `H_λ` and the coefficients of its
//! higher-order expansions.
//!
//! With `q = λ + (y - x)/(2λ)`, every finite-`λ` coefficient below has the
//! shape `P(x, y) e^{-x} Φ̄(q) + Q(x, y) e^{-x} φ(q)` (plus marginal terms), so
//! the evaluation shares one [`Kernel`] per point.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::gauss::{std_normal_cdf, std_normal_pdf, std_normal_survival};
use crate::norming::{solve_bn, NormingConstant};

/// Finite `λ` below this is evaluated with the `λ = 0` forms.
pub const LAMBDA_ZERO_SWITCH: f64 = 1e-12;
/// Finite `λ` above this is evaluated with the `λ = ∞` forms.
pub const LAMBDA_INFINITY_SWITCH: f64 = 1e6;

/// Dependence parameter of the limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lambda {
    /// Complete dependence, `H_0(x, y) = Λ(min(x, y))`.
    Zero,
    Finite(f64),
    /// Independence, `H_∞(x, y) = Λ(x)Λ(y)`.
    Infinity,
}

impl Lambda {
    pub fn finite(lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(Lambda::Finite(lambda))
    }

    /// Maps extreme finite values onto the limit regime used to evaluate them.
    pub fn effective(self) -> Lambda {
        match self {
            Lambda::Finite(l) if l > LAMBDA_INFINITY_SWITCH => Lambda::Infinity,
            Lambda::Finite(l) if l < LAMBDA_ZERO_SWITCH => Lambda::Zero,
            other => other,
        }
    }
}

impl fmt::Display for Lambda {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lambda::Zero => write!(f, "0"),
            Lambda::Finite(l) => write!(f, "{l}"),
            Lambda::Infinity => write!(f, "inf"),
        }
    }
}

/// Limit regime plus the second- and third-order constants `α`, `β`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HrParams {
    pub lambda: Lambda,
    pub alpha: f64,
    pub beta: f64,
}

impl HrParams {
    pub fn new(lambda: Lambda, alpha: f64, beta: f64) -> Result<Self> {
        if let Lambda::Finite(l) = lambda {
            check_lambda(l)?;
        }
        if !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::domain("alpha and beta must be finite"));
        }
        Ok(HrParams {
            lambda,
            alpha,
            beta,
        })
    }

    pub fn zero() -> Self {
        HrParams {
            lambda: Lambda::Zero,
            alpha: 0.0,
            beta: 0.0,
        }
    }

    pub fn infinity() -> Self {
        HrParams {
            lambda: Lambda::Infinity,
            alpha: 0.0,
            beta: 0.0,
        }
    }

    /// Names of constants that were set but play no role for this `λ`.
    pub fn ignored_constants(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !matches!(self.lambda.effective(), Lambda::Finite(_)) {
            if self.alpha != 0.0 {
                out.push("alpha");
            }
            if self.beta != 0.0 {
                out.push("beta");
            }
        }
        out
    }
}

/// Depth of the expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ApproxOrder {
    /// The limit itself.
    First,
    /// Limit plus the `b_n⁻²` term.
    Second,
    /// Limit plus the `b_n⁻²` and `b_n⁻⁴` terms.
    Third,
}

impl ApproxOrder {
    pub const ALL: [ApproxOrder; 3] = [ApproxOrder::First, ApproxOrder::Second, ApproxOrder::Third];

    /// 1, 2 or 3.
    pub fn rank(self) -> usize {
        match self {
            ApproxOrder::First => 1,
            ApproxOrder::Second => 2,
            ApproxOrder::Third => 3,
        }
    }

    pub fn from_rank(k: usize) -> Option<Self> {
        match k {
            1 => Some(ApproxOrder::First),
            2 => Some(ApproxOrder::Second),
            3 => Some(ApproxOrder::Third),
            _ => None,
        }
    }
}

impl FromStr for ApproxOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" | "first" => Ok(ApproxOrder::First),
            "2" | "second" => Ok(ApproxOrder::Second),
            "3" | "third" => Ok(ApproxOrder::Third),
            other => Err(Error::Config(format!("unknown order '{other}'"))),
        }
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::domain(format!(
            "lambda must be finite and positive, got {lambda}"
        )));
    }
    Ok(())
}

/// Gumbel distribution function `Λ(x) = exp(-e^{-x})`.
pub fn gumbel_cdf(x: f64) -> f64 {
    (-(-x).exp()).exp()
}

/// `s(x) = (x² + 2x) e^{-x} / 2`
pub fn s_term(x: f64) -> f64 {
    0.5 * x * (x + 2.0) * (-x).exp()
}

/// `t(x) = -(x⁴ + 4x³ + 8x² + 16x) e^{-x} / 8`
pub fn t_term(x: f64) -> f64 {
    -x * (((x + 4.0) * x + 8.0) * x + 16.0) * (-x).exp() / 8.0
}

/// `H_λ(x, y)`.
pub fn hr_cdf(lambda: Lambda, x: f64, y: f64) -> f64 {
    match lambda.effective() {
        Lambda::Zero => gumbel_cdf(x.min(y)),
        Lambda::Infinity => gumbel_cdf(x) * gumbel_cdf(y),
        Lambda::Finite(l) => {
            let d = (y - x) / (2.0 * l);
            let e = std_normal_cdf(l + d) * (-x).exp() + std_normal_cdf(l - d) * (-y).exp();
            (-e).exp()
        }
    }
}

/// Shared pieces at one `(λ, x, y)`.
struct Kernel {
    l: f64,
    x: f64,
    y: f64,
    /// `e^{-x} Φ̄(λ + (y-x)/2λ)`
    tail: f64,
    /// `e^{-x} φ(λ + (y-x)/2λ)`
    dens: f64,
}

impl Kernel {
    fn new(l: f64, x: f64, y: f64) -> Result<Self> {
        check_lambda(l)?;
        let q = l + (y - x) / (2.0 * l);
        let ex = (-x).exp();
        Ok(Kernel {
            l,
            x,
            y,
            tail: ex * std_normal_survival(q),
            dens: ex * std_normal_pdf(q),
        })
    }

    fn combine(&self, c_tail: f64, c_dens: f64) -> f64 {
        let t = if c_tail == 0.0 {
            0.0
        } else {
            c_tail * self.tail
        };
        let d = if c_dens == 0.0 {
            0.0
        } else {
            c_dens * self.dens
        };
        t + d
    }

    /// `Φ(λ + (y-x)/2λ)` and `Φ(λ + (x-y)/2λ)`.
    fn marginal_weights(&self) -> (f64, f64) {
        let d = (self.y - self.x) / (2.0 * self.l);
        (std_normal_cdf(self.l + d), std_normal_cdf(self.l - d))
    }
}

/// Second-order coefficient `κ(α, λ, x, y)`:
/// `b_n² Δ → κ H_λ` under `b_n²(λ - λ_n) → α`.
pub fn kappa(alpha: f64, lambda: f64, x: f64, y: f64) -> Result<f64> {
    let k = Kernel::new(lambda, x, y)?;
    let (wx, wy) = k.marginal_weights();
    let l = lambda;
    Ok(s_term(x) * wx + s_term(y) * wy + k.combine(0.0, 2.0 * alpha - l * (l * l + x + y + 2.0)))
}

/// `κ₁`, the limit of `b_n² ∫_y^∞ (Φ(λ + (x-z)/2λ) - Φ(ζ_n(z))) e^{-z} dz`.
pub fn kappa1(alpha: f64, lambda: f64, x: f64, y: f64) -> Result<f64> {
    let k = Kernel::new(lambda, x, y)?;
    let l2 = lambda * lambda;
    Ok(k.combine(
        2.0 * l2 * l2 - 2.0 * l2 * x,
        2.0 * alpha - 3.0 * l2 * lambda,
    ))
}

/// `τ₁`, the next term after `κ₁` in the same integral.
pub fn tau1(alpha: f64, beta: f64, lambda: f64, x: f64, y: f64) -> Result<f64> {
    let k = Kernel::new(lambda, x, y)?;
    let (a, l) = (alpha, lambda);
    let l2 = l * l;
    let l3 = l2 * l;
    let l4 = l2 * l2;
    let l5 = l4 * l;
    let l6 = l4 * l2;
    let l7 = l6 * l;
    let l8 = l4 * l4;
    let a2l3 = a * a / l3;

    let c_tail =
        2.0 * l8 + 8.0 * l6 - 4.0 * l6 * x + 2.0 * l4 * x * x - 4.0 * l4 * x - 8.0 * a * l3
            + 4.0 * a * l * x;
    let c_dens = 2.0 * beta + 9.0 * a * l2 - 23.0 / 4.0 * l5 - 3.0 / 8.0 * l3 * x * y - a * l2 * x
        + 3.0 / 4.0 * a * y * y
        - 0.25 * a2l3 * y * y
        - 0.25 * a2l3 * x * x
        - a * l2 * y
        - 0.25 * a * x * x
        - 7.0 / 4.0 * l7
        + 7.0 / 2.0 * l5 * x
        - l3 * x * x / 16.0
        - a * l4
        + a * a * l
        + 1.5 * l5 * y
        - 9.0 / 16.0 * l3 * y * y
        - 0.5 * a * x * y
        + 0.5 * a2l3 * x * y;
    Ok(k.combine(c_tail, c_dens))
}

/// `τ₂`, the limit of the same integral with weight `1 - z²/2`.
pub fn tau2(alpha: f64, lambda: f64, x: f64, y: f64) -> Result<f64> {
    let k = Kernel::new(lambda, x, y)?;
    let (a, l) = (alpha, lambda);
    let l2 = l * l;
    let l3 = l2 * l;
    let l4 = l2 * l2;
    let l5 = l4 * l;
    let l6 = l4 * l2;
    let l7 = l6 * l;
    let l8 = l4 * l4;

    let c_tail = 2.0 * l4 - 4.0 * a * l * x - 2.0 * l2 * x + 8.0 * l6 * x - 5.0 * l4 * x * x
        + 10.0 * l4 * x
        + l2 * x * x * x
        + 8.0 * a * l3
        - 4.0 * l8
        - 16.0 * l6;
    let c_dens = 2.0 * a + 4.0 * l7 + 12.0 * l5 - 3.0 * l3 - 6.0 * l5 * x + 2.0 * l3 * x * x
        - a * y * y
        + 2.0 * l3 * x * y
        - 2.0 * l5 * y
        + 1.5 * l3 * y * y
        - 8.0 * a * l2;
    Ok(k.combine(c_tail, c_dens))
}

/// `τ₃ = ∫_y^∞ Φ(λ + (x-z)/2λ) e^{-z} (z⁴/8 - z²/2 - 2) dz` in closed form.
pub fn tau3(lambda: f64, x: f64, y: f64) -> Result<f64> {
    let k = Kernel::new(lambda, x, y)?;
    let l = lambda;
    let l2 = l * l;
    let l3 = l2 * l;
    let l4 = l2 * l2;
    let l5 = l4 * l;
    let l6 = l4 * l2;
    let l7 = l6 * l;
    let l8 = l4 * l4;
    let (_, wy) = k.marginal_weights();

    let boundary = y * (((y + 4.0) * y + 8.0) * y + 16.0) * (-y).exp() * wy / 8.0;
    let c_tail = 4.0 * l6 * x - 3.0 * l4 * x * x + l2 * x * x * x
        - 2.0 * l8
        - 8.0 * l6
        - x.powi(4) / 8.0
        - 2.0 * l2 * x
        - 0.5 * x * x * x
        + 2.0 * l4
        + 6.0 * l4 * x
        - x * x
        - 2.0 * x;
    let c_dens = 2.0 * l7 - 0.25 * l * x * x * x - l5 * y + 0.5 * l3 * y * y + l3 * x * y
        - 3.0 * l5 * x
        + 1.5 * l3 * x * x
        - 0.25 * l * y * y * y
        - 0.25 * l * y * y * x
        - 0.25 * l * y * x * x
        - l3 * y
        - l * y * y
        - l * x * y
        - l3 * x
        - l * x * x
        - 4.0 * l3
        + 6.0 * l5
        - 2.0 * l * x
        - 2.0 * l * y
        - 4.0 * l;
    Ok(boundary + k.combine(c_tail, c_dens))
}

/// Third-order coefficient `τ = t(x) + τ₁ + τ₂ - τ₃`, so that
/// `b_n²(b_n² Δ - κ H_λ) → (τ + κ²/2) H_λ`.
pub fn tau(alpha: f64, beta: f64, lambda: f64, x: f64, y: f64) -> Result<f64> {
    Ok(
        t_term(x) + tau1(alpha, beta, lambda, x, y)? + tau2(alpha, lambda, x, y)?
            - tau3(lambda, x, y)?,
    )
}

/// Closed form of `I_k = ∫_y^∞ φ(λ + (x-z)/2λ) e^{-z} z^k dz` for `k ≤ 3`.
pub fn i_closed(k: u32, lambda: f64, x: f64, y: f64) -> Result<f64> {
    let ker = Kernel::new(lambda, x, y)?;
    let l = lambda;
    let l2 = l * l;
    let l3 = l2 * l;
    let l4 = l2 * l2;
    let l5 = l4 * l;
    let l6 = l4 * l2;
    let l7 = l6 * l;
    let v = match k {
        0 => ker.combine(2.0 * l, 0.0),
        1 => ker.combine(2.0 * l * x - 4.0 * l3, 4.0 * l2),
        2 => ker.combine(
            8.0 * l5 - 8.0 * l3 * x + 8.0 * l3 + 2.0 * l * x * x,
            -8.0 * l4 + 4.0 * l2 * x + 4.0 * l2 * y,
        ),
        3 => ker.combine(
            24.0 * l5 * x - 12.0 * l3 * x * x + 24.0 * l3 * x + 2.0 * l * x * x * x
                - 16.0 * l7
                - 48.0 * l5,
            16.0 * l6 - 16.0 * l4 * x - 8.0 * l4 * y
                + 32.0 * l4
                + 4.0 * l2 * x * x
                + 4.0 * l2 * x * y
                + 4.0 * l2 * y * y,
        ),
        _ => {
            return Err(Error::domain(format!(
                "I_k is defined for k in 0..=3, got {k}"
            )))
        }
    };
    Ok(v)
}

/// Limit value and the coefficients of `b_n⁻²` and `b_n⁻⁴` (relative to the
/// limit) at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionTerms {
    pub limit: f64,
    pub second: f64,
    pub third: f64,
}

impl ExpansionTerms {
    /// `limit · (1 + second/b² + third/b⁴)`, truncated at `order` and clamped to `[0, 1]`.
    pub fn approx(&self, b2: f64, order: ApproxOrder) -> f64 {
        let factor = match order {
            ApproxOrder::First => 1.0,
            ApproxOrder::Second => 1.0 + self.second / b2,
            ApproxOrder::Third => 1.0 + self.second / b2 + self.third / (b2 * b2),
        };
        (self.limit * factor).clamp(0.0, 1.0)
    }
}

/// Univariate terms: `Λ(x)`, `s(x)` and `t(x) + s(x)²/2`.
pub fn gumbel_terms(x: f64) -> ExpansionTerms {
    let s = s_term(x);
    ExpansionTerms {
        limit: gumbel_cdf(x),
        second: s,
        third: t_term(x) + 0.5 * s * s,
    }
}

/// Terms of the bivariate expansion for every `λ` regime.
pub fn expansion_terms(params: &HrParams, x: f64, y: f64) -> Result<ExpansionTerms> {
    match params.lambda.effective() {
        Lambda::Zero => {
            let m = x.min(y);
            Ok(ExpansionTerms {
                limit: hr_cdf(Lambda::Zero, x, y),
                ..gumbel_terms(m)
            })
        }
        Lambda::Infinity => {
            let s = s_term(x) + s_term(y);
            Ok(ExpansionTerms {
                limit: hr_cdf(Lambda::Infinity, x, y),
                second: s,
                third: t_term(x) + t_term(y) + 0.5 * s * s,
            })
        }
        Lambda::Finite(l) => {
            let k = kappa(params.alpha, l, x, y)?;
            let t = tau(params.alpha, params.beta, l, x, y)?;
            Ok(ExpansionTerms {
                limit: hr_cdf(Lambda::Finite(l), x, y),
                second: k,
                third: t + 0.5 * k * k,
            })
        }
    }
}

/// `Φⁿ(u_n(x))` approximated to the given order around `Λ(x)`.
pub fn univariate_gumbel_approx(n: u64, x: f64, order: ApproxOrder) -> Result<f64> {
    let bn = solve_bn(n)?;
    gumbel_approx_at(&bn, x, order)
}

pub fn gumbel_approx_at(bn: &NormingConstant, x: f64, order: ApproxOrder) -> Result<f64> {
    bn.require_thresholds()?;
    Ok(gumbel_terms(x).approx(bn.b2(), order))
}

/// `F^n_{ρ_n}(u_n(x), u_n(y))` approximated to the given order around `H_λ`.
pub fn hr_approx(n: u64, params: &HrParams, x: f64, y: f64, order: ApproxOrder) -> Result<f64> {
    let bn = solve_bn(n)?;
    hr_approx_at(&bn, params, x, y, order)
}

pub fn hr_approx_at(
    bn: &NormingConstant,
    params: &HrParams,
    x: f64,
    y: f64,
    order: ApproxOrder,
) -> Result<f64> {
    bn.require_thresholds()?;
    Ok(expansion_terms(params, x, y)?.approx(bn.b2(), order))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const GRID: [f64; 5] = [-2.0, -0.5, 0.0, 1.0, 2.5];

    #[test]
    fn limit_cases() {
        for &x in &GRID {
            for &y in &GRID {
                assert_eq!(
                    hr_cdf(Lambda::Infinity, x, y),
                    gumbel_cdf(x) * gumbel_cdf(y)
                );
                assert_eq!(hr_cdf(Lambda::Zero, x, y), (-(-x.min(y)).exp()).exp());
            }
        }
        for l in [0.3, 1.0, 2.0] {
            let h = hr_cdf(Lambda::Finite(l), 0.0, 0.0);
            assert_relative_eq!(h, (-2.0 * std_normal_cdf(l)).exp(), max_relative = 1e-15);
        }
    }

    #[test]
    fn extreme_finite_lambda_uses_limit_forms() {
        assert_eq!(Lambda::Finite(2e6).effective(), Lambda::Infinity);
        assert_eq!(Lambda::Finite(1e-13).effective(), Lambda::Zero);
        assert_eq!(Lambda::Finite(0.5).effective(), Lambda::Finite(0.5));
        // Switching error is below 1e-12 at both thresholds.
        for &(x, y) in &[(0.0, 0.0), (1.0, -1.0), (0.3, 0.3)] {
            let below = hr_cdf(Lambda::Finite(LAMBDA_ZERO_SWITCH * 1.0001), x, y);
            assert!((below - hr_cdf(Lambda::Zero, x, y)).abs() < 1e-12);
            let above = hr_cdf(Lambda::Finite(LAMBDA_INFINITY_SWITCH * 0.9999), x, y);
            assert!((above - hr_cdf(Lambda::Infinity, x, y)).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_limit_continuity_off_diagonal() {
        // On the diagonal H_λ(x, x) = exp(-2Φ(λ)e^{-x}) moves linearly in λ,
        // so the λ → 0 check is made where |x - y| saturates Φ.
        for &(x, y) in &[(0.0, 1.0), (-1.0, 0.5), (2.0, 0.0), (-0.5, -2.0)] {
            let near0 = hr_cdf(Lambda::Finite(1e-4), x, y);
            assert!((near0 - hr_cdf(Lambda::Zero, x, y)).abs() < 1e-8);
        }
        for &x in &GRID {
            for &y in &GRID {
                let big = hr_cdf(Lambda::Finite(30.0), x, y);
                assert!((big - hr_cdf(Lambda::Infinity, x, y)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn gumbel_margins() {
        for l in [
            Lambda::Zero,
            Lambda::Finite(0.5),
            Lambda::Finite(2.0),
            Lambda::Infinity,
        ] {
            for &x in &GRID {
                assert!((hr_cdf(l, x, 40.0) - gumbel_cdf(x)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn s_and_t_values() {
        assert_eq!(s_term(0.0), 0.0);
        assert_eq!(t_term(0.0), 0.0);
        assert_eq!(s_term(-2.0), 0.0);
        assert_relative_eq!(s_term(1.0), 1.5 * (-1.0_f64).exp(), max_relative = 1e-15);
        // t(1) = -29/8 e^{-1}
        assert_relative_eq!(
            t_term(1.0),
            -29.0 / 8.0 * (-1.0_f64).exp(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn third_order_coefficients_reference() {
        // Independent high-precision evaluation at λ = 1, α = 2, β = 5, x = y.
        let table = [
            (-1.0, -0.313_778_26, 20.808_893),
            (0.0, 0.241_970_72, 5.715_586_9),
            (1.0, 0.839_524_25, 0.778_909_73),
            (2.0, 0.812_667_51, -1.302_476_5),
        ];
        for (x, k_ref, third_ref) in table {
            let k = kappa(2.0, 1.0, x, x).unwrap();
            let third = tau(2.0, 5.0, 1.0, x, x).unwrap() + 0.5 * k * k;
            assert!((k - k_ref).abs() < 1e-8, "kappa at {x}: {k}");
            assert!(
                (third - third_ref).abs() < 1e-6 * third_ref.abs(),
                "tau at {x}: {third}"
            );
        }
    }

    #[test]
    fn kappa_special_values() {
        for l in [0.4, 1.0, 2.3] {
            let a = 0.7;
            let want = (2.0 * a - l * (l * l + 2.0)) * std_normal_pdf(l);
            assert_relative_eq!(kappa(a, l, 0.0, 0.0).unwrap(), want, max_relative = 1e-14);
            let annihilating = l * (l * l + 2.0) / 2.0;
            assert!(kappa(annihilating, l, 0.0, 0.0).unwrap().abs() < 1e-15);
        }
        assert!(kappa(1.0, 0.0, 0.0, 0.0).is_err());
        assert!(kappa(1.0, -1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn kappa1_special_values() {
        for l in [0.5, 1.0, 1.7_f64] {
            for y in [-1.0, 0.0, 2.0] {
                let got = kappa1(1.5 * l.powi(3), l, 0.0, y).unwrap();
                let want = 2.0 * l.powi(4) * std_normal_survival(l + y / (2.0 * l));
                assert_relative_eq!(got, want, max_relative = 1e-13);
            }
            assert!(kappa1(0.3, l, 0.5, 60.0).unwrap().abs() < 1e-15);
        }
        assert!(kappa1(0.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn tau1_at_zero_constants() {
        // α = β = 0, λ = 1, x = y = 0: c_tail = 2 + 8 = 10, c_dens = -23/4 - 7/4 = -15/2.
        let got = tau1(0.0, 0.0, 1.0, 0.0, 0.0).unwrap();
        let want = 10.0 * std_normal_survival(1.0) - 7.5 * std_normal_pdf(1.0);
        assert_relative_eq!(got, want, max_relative = 1e-14);
    }

    #[test]
    fn tau2_vanishes_far_out() {
        for l in [0.5, 1.0, 2.0] {
            assert!(tau2(1.0, l, 0.0, 80.0).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn tau_large_lambda_matches_independence() {
        // For large λ the kernel terms die out and τ(0,0,λ,x,y) → t(x) + t(y).
        let t = tau(0.0, 0.0, 12.0, 0.0, 0.0).unwrap();
        assert!(t.abs() < 1e-12);
        for (x, y) in [(0.5, 1.0), (-1.0, 2.0)] {
            let t = tau(0.0, 0.0, 12.0, x, y).unwrap();
            assert!((t - (t_term(x) + t_term(y))).abs() < 1e-9, "{x},{y}");
        }
    }

    #[test]
    fn kappa_lambda_limits() {
        for (x, y) in [(0.0, 1.0), (-1.0, 0.5), (2.0, 0.0), (1.0, 1.5)] {
            let big = kappa(0.0, 30.0, x, y).unwrap();
            assert!((big - (s_term(x) + s_term(y))).abs() < 1e-6);
            // Off the diagonal only: κ(0, λ, x, x) carries a λ-linear term.
            let small = kappa(0.0, 1e-3, x, y).unwrap();
            assert!((small - s_term(x.min(y))).abs() < 1e-6);
        }
    }

    #[test]
    fn i_closed_domain_and_tail() {
        assert!(i_closed(4, 1.0, 0.0, 0.0).is_err());
        assert!(i_closed(0, 0.0, 0.0, 0.0).is_err());
        assert_relative_eq!(
            i_closed(0, 1.0, 0.0, 0.0).unwrap(),
            2.0 * std_normal_survival(1.0),
            max_relative = 1e-15
        );
        assert!(i_closed(1, 1.3, 0.2, 90.0).unwrap().abs() < 1e-20);
    }

    #[test]
    fn approximants() {
        let n = 1000;
        let bn = solve_bn(n).unwrap();
        let b2 = bn.b2();
        let (x, y) = (0.4, 1.1);
        let second = hr_approx(n, &HrParams::infinity(), x, y, ApproxOrder::Second).unwrap();
        let want = gumbel_cdf(x) * gumbel_cdf(y) * (1.0 + (s_term(x) + s_term(y)) / b2);
        assert_relative_eq!(second, want, max_relative = 1e-15);

        // λ = 0 reduces to the univariate expansion at min(x, y).
        let zero = hr_approx(n, &HrParams::zero(), x, y, ApproxOrder::Third).unwrap();
        let uni = univariate_gumbel_approx(n, x, ApproxOrder::Third).unwrap();
        assert_eq!(zero, uni);

        let p = HrParams::new(Lambda::Finite(1.3), 2.0, 5.0).unwrap();
        let first = hr_approx(n, &p, 0.0, 0.0, ApproxOrder::First).unwrap();
        assert_relative_eq!(
            first,
            (-2.0 * std_normal_cdf(1.3)).exp(),
            max_relative = 1e-15
        );

        assert_eq!(
            univariate_gumbel_approx(n, 0.3, ApproxOrder::First).unwrap(),
            gumbel_cdf(0.3)
        );
        assert!(hr_approx(2, &p, 0.0, 0.0, ApproxOrder::First).is_err());
        assert!(univariate_gumbel_approx(2, 0.0, ApproxOrder::Second).is_err());
    }

    #[test]
    fn approximants_are_clamped() {
        // Far left tail where the correction overwhelms the limit.
        let v = univariate_gumbel_approx(3, -3.0, ApproxOrder::Third).unwrap();
        assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn params_flag_unused_constants() {
        let p = HrParams::new(Lambda::Infinity, 1.0, 0.0).unwrap();
        assert_eq!(p.ignored_constants(), vec!["alpha"]);
        let p = HrParams::new(Lambda::Finite(1.0), 1.0, 2.0).unwrap();
        assert!(p.ignored_constants().is_empty());
        assert!(HrParams::new(Lambda::Finite(-1.0), 0.0, 0.0).is_err());
        assert!(Lambda::finite(0.0).is_err());
    }

    #[test]
    fn order_parsing() {
        assert_eq!("2".parse::<ApproxOrder>().unwrap(), ApproxOrder::Second);
        assert_eq!("Third".parse::<ApproxOrder>().unwrap(), ApproxOrder::Third);
        assert!("4".parse::<ApproxOrder>().is_err());
        for o in ApproxOrder::ALL {
            assert_eq!(ApproxOrder::from_rank(o.rank()), Some(o));
        }
    }

    fn lambda_strategy() -> impl Strategy<Value = Lambda> {
        prop_oneof![
            Just(Lambda::Zero),
            Just(Lambda::Infinity),
            (0.05f64..5.0).prop_map(Lambda::Finite),
        ]
    }

    proptest! {
        #[test]
        fn symmetric_in_arguments(l in 0.1f64..4.0, a in -3.0f64..3.0, b in -4.0f64..4.0,
                                  x in -2.0f64..4.0, y in -2.0f64..4.0) {
            let h1 = hr_cdf(Lambda::Finite(l), x, y);
            let h2 = hr_cdf(Lambda::Finite(l), y, x);
            prop_assert!((h1 - h2).abs() <= 1e-15);
            let k1 = kappa(a, l, x, y).unwrap();
            let k2 = kappa(a, l, y, x).unwrap();
            prop_assert!((k1 - k2).abs() <= 1e-12 * (1.0 + k1.abs()));
            let t1 = tau(a, b, l, x, y).unwrap();
            let t2 = tau(a, b, l, y, x).unwrap();
            prop_assert!((t1 - t2).abs() <= 1e-10 * (1.0 + t1.abs()), "{} vs {}", t1, t2);
        }

        #[test]
        fn max_stable(l in lambda_strategy(), x in -1.0f64..3.0, y in -1.0f64..3.0,
                      m in prop::sample::select(vec![2.0f64, 10.0, 100.0])) {
            let h = hr_cdf(l, x, y);
            let shifted = hr_cdf(l, x + m.ln(), y + m.ln()).powf(m);
            prop_assert!((shifted - h).abs() <= 1e-12);
        }

        #[test]
        fn is_a_distribution_function(l in lambda_strategy(), x in -3.0f64..5.0,
                                      y in -3.0f64..5.0, dx in 0.0f64..2.0) {
            let h = hr_cdf(l, x, y);
            prop_assert!((0.0..=1.0).contains(&h));
            prop_assert!(hr_cdf(l, x + dx, y) >= h);
            // Fréchet bounds against the Gumbel margins
            let (gx, gy) = (gumbel_cdf(x), gumbel_cdf(y));
            prop_assert!(h <= gx.min(gy) + 1e-15);
            prop_assert!(h >= gx * gy - 1e-15);
        }
    }
}
