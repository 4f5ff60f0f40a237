//! Norming constants `b_n` solving `n(1 - Φ(b_n)) = 1`, and thresholds
//! `u_n(x) = b_n + x / b_n`.
//!
//! `b_2 = 0`, so thresholds are only meaningful for `n ≥ 3`; every consumer of
//! [`NormingConstant::threshold`] in this crate checks that through
//! [`NormingConstant::require_thresholds`].

use crate::error::{Error, Result};
use crate::gauss::{std_normal_pdf, std_normal_survival};

/// Upper end of the bracket; `n Φ̄(38) < 1` for every `u64`.
const B_MAX: f64 = 38.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormingConstant {
    n: u64,
    b: f64,
}

impl NormingConstant {
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// `b_n²`, the expansion variable.
    pub fn b2(&self) -> f64 {
        self.b * self.b
    }

    /// `u_n(x) = b_n + x / b_n`.
    pub fn threshold(&self, x: f64) -> f64 {
        threshold(self, x)
    }

    /// Fails unless `n ≥ 3`, where `b_n > 0`.
    pub fn require_thresholds(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::domain(format!(
                "thresholds need n >= 3 (b_n = {} at n = {})",
                self.b, self.n
            )));
        }
        Ok(())
    }

    /// `n·Φ̄(b_n) - 1`.
    pub fn defining_residual(&self) -> f64 {
        self.n as f64 * std_normal_survival(self.b) - 1.0
    }
}

/// `u_n(x) = b + x / b`. At `b = 0` only `x = 0` is defined.
pub fn threshold(b: &NormingConstant, x: f64) -> f64 {
    if x == 0.0 {
        return b.b;
    }
    b.b + x / b.b
}

/// Solves `n·Φ̄(b) = 1` for `b ≥ 0`.
///
/// Newton on `ln(n Φ̄(b))`, kept inside a shrinking bracket and falling back to
/// bisection whenever a step leaves it.
pub fn solve_bn(n: u64) -> Result<NormingConstant> {
    if n < 2 {
        return Err(Error::domain(format!(
            "norming constant needs n >= 2, got {n}"
        )));
    }
    let nf = n as f64;
    let ln_n = nf.ln();
    let guess = (2.0 * ln_n - (4.0 * std::f64::consts::PI * ln_n).ln())
        .max(0.0)
        .sqrt();

    // g(b) = ln(n Φ̄(b)) is strictly decreasing with g(0) = ln(n/2) >= 0.
    let g = |b: f64| (nf * std_normal_survival(b)).ln();
    let (mut lo, mut hi) = (0.0_f64, B_MAX);
    let mut b = guess.clamp(lo, hi);

    for _ in 0..200 {
        let gb = g(b);
        if gb == 0.0 {
            break;
        }
        if gb > 0.0 {
            lo = b;
        } else {
            hi = b;
        }
        // g'(b) = -φ(b)/Φ̄(b)
        let slope = -std_normal_pdf(b) / std_normal_survival(b);
        let mut next = b - gb / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let step = (next - b).abs();
        b = next;
        if step <= 2.0 * f64::EPSILON * b.max(1e-300) || hi - lo <= 2.0 * f64::EPSILON * hi {
            break;
        }
    }
    // The last Newton iterate may sit a few ulps off; keep the best neighbour.
    let mut best = b;
    let mut best_r = g(b).abs();
    let mut probe = b;
    for _ in 0..4 {
        probe = next_up(probe);
        let r = g(probe).abs();
        if r < best_r {
            best = probe;
            best_r = r;
        }
    }
    probe = b;
    for _ in 0..4 {
        if probe <= 0.0 {
            break;
        }
        probe = next_down(probe);
        let r = g(probe).abs();
        if r < best_r {
            best = probe;
            best_r = r;
        }
    }
    Ok(NormingConstant { n, b: best })
}

fn next_up(x: f64) -> f64 {
    if x == 0.0 {
        return f64::from_bits(1);
    }
    f64::from_bits(x.to_bits() + 1)
}

fn next_down(x: f64) -> f64 {
    f64::from_bits(x.to_bits() - 1)
}

/// Scaled remainder of `1/n = b⁻¹φ(b)(1 - b⁻² + 3b⁻⁴ + O(b⁻⁶))`:
///
/// `b⁶ |1/n - b⁻¹φ(b)(1 - b⁻² + 3b⁻⁴)| / (b⁻¹φ(b))`.
///
/// Written as `|b⁷/(nφ(b)) - b⁶ + b⁴ - 3b²|`, which is finite at `b = 0`.
/// The limit is 15, the next coefficient of the Mills ratio series.
pub fn bn_expansion_residual(n: u64) -> Result<f64> {
    let bn = solve_bn(n)?;
    let b = bn.b;
    let b2 = b * b;
    let lead = b2 * b2 * b2 * b / (n as f64 * std_normal_pdf(b));
    Ok((lead - b2 * b2 * b2 + b2 * b2 - 3.0 * b2).abs())
}
