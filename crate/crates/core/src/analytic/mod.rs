//! Closed-form and quadrature oracles: the step-factor law `ξ = J(T₁)`, the
//! tail exponent, the exit-time law of the strip and the exact law of the
//! Bessel-3 minimum.

pub mod quadrature;
pub mod strip_exit;

use std::f64::consts::{FRAC_2_PI, PI};

use serde::{Deserialize, Serialize};

pub use quadrature::{integrate, integrate_tail, Quadrature, QuadratureSpec};

use crate::error::{invalid, Error, Result};

/// `ln √2`, the deterministic part of each log-skeleton step.
pub const LN_SQRT2: f64 = std::f64::consts::LN_2 / 2.0;

/// Asymptotic drift of the log-modulus on the strip clock, `(4/π)² ln √2`.
pub const KAPPA: f64 = 16.0 / (PI * PI) * LN_SQRT2;

/// Density of the step factor; `(2/π)[1/((1−y)²+1) − 1/((1+y)²+1)]`, which
/// simplifies to `8y / (π (y⁴ + 4))`.
pub fn xi_density(y: f64) -> f64 {
    if y > 0.0 {
        8.0 * y / (PI * (y * y * y * y + 4.0))
    } else {
        0.0
    }
}

/// CDF of the step factor. The antiderivative
/// `(2/π)[arctan(y−1) − arctan(y+1) + π/2]` equals `(2/π) arctan(y²/2)`,
/// evaluated in the second form.
pub fn xi_cdf(y: f64) -> f64 {
    if y > 0.0 {
        FRAC_2_PI * (0.5 * y * y).atan()
    } else {
        0.0
    }
}

/// `1 − xi_cdf(y)` without cancellation: `(2/π) arctan(2/y²)`.
pub fn xi_sf(y: f64) -> f64 {
    if y > 0.0 {
        FRAC_2_PI * (2.0 / (y * y)).atan()
    } else {
        1.0
    }
}

const QUANTILE_TOL: f64 = 1e-12;

/// Inverse of [`xi_cdf`] by log-scale bisection on `(0, 10⁶]` (widened when
/// `p` lies beyond it) followed by bracketed Newton steps.
pub fn xi_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid(format!("quantile level {p} outside (0, 1)")));
    }
    Ok(xi_quantile_unchecked(p))
}

pub(crate) fn xi_quantile_unchecked(p: f64) -> f64 {
    // Residual in whichever tail keeps precision.
    let upper = p > 0.5;
    let target = if upper { 1.0 - p } else { p };
    let residual = |y: f64| {
        if upper {
            target - xi_sf(y)
        } else {
            xi_cdf(y) - target
        }
    };

    let mut lo = -370.0f64; // ln y; xi_cdf(e^-370) underflows to 0
    let mut hi = 1e6f64.ln();
    while residual(hi.exp()) < 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..12 {
        let mid = 0.5 * (lo + hi);
        if residual(mid.exp()) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (mut a, mut b) = (lo.exp(), hi.exp());
    let mut y = (0.5 * (lo + hi)).exp();
    for _ in 0..100 {
        let r = residual(y);
        if r.abs() < QUANTILE_TOL * target.min(1.0) {
            break;
        }
        if r < 0.0 {
            a = y;
        } else {
            b = y;
        }
        let step = r / xi_density(y);
        let mut next = y - step;
        if !(next > a && next < b) {
            next = 0.5 * (a + b);
        }
        if (next - y).abs() <= 4.0 * f64::EPSILON * y {
            y = next;
            break;
        }
        y = next;
    }
    y
}

/// `E[ξ^{−γ}] = ∫₀^∞ y^{−γ} f(y) dy`, finite for `−2 < γ < 2`.
///
/// On `(0, 1)` the substitution `y = s^m`, `m = max(1, 1/(2−γ))`, removes the
/// `y^{1−γ}` endpoint singularity; on `(1, ∞)` the substitution `y = 1/u`
/// turns the `y^{−γ−3}` tail into `u^{γ+1}`.
pub fn xi_neg_moment(gamma: f64, spec: &QuadratureSpec) -> Result<f64> {
    if !gamma.is_finite() {
        return Err(invalid("gamma must be finite"));
    }
    if gamma >= 2.0 {
        return Err(Error::DivergentIntegral(format!(
            "E[xi^-gamma] diverges at 0 for gamma = {gamma} >= 2"
        )));
    }
    if gamma <= -2.0 {
        return Err(Error::DivergentIntegral(format!(
            "E[xi^-gamma] diverges at infinity for gamma = {gamma} <= -2"
        )));
    }
    let m = (1.0 / (2.0 - gamma)).max(1.0);
    let power = m * (2.0 - gamma) - 1.0;
    let head = integrate(
        |s| {
            let y = s.powf(m);
            m * 8.0 * s.powf(power) / (PI * (y * y * y * y + 4.0))
        },
        0.0,
        1.0,
        spec,
    )?;
    let tail = integrate(
        |u| 8.0 * u.powf(gamma + 1.0) / (PI * (1.0 + 4.0 * u * u * u * u)),
        0.0,
        1.0,
        spec,
    )?;
    Ok(head.value + tail.value)
}

/// `E[ln ξ]`.
pub fn xi_log_mean(spec: &QuadratureSpec) -> Result<f64> {
    let head = integrate(|y| y.ln() * xi_density(y), 0.0, 1.0, spec)?;
    let tail = integrate(
        |u| -u.ln() * 8.0 * u / (PI * (1.0 + 4.0 * u * u * u * u)),
        0.0,
        1.0,
        spec,
    )?;
    Ok(head.value + tail.value)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RootReport {
    pub root: f64,
    pub residual: f64,
    pub iterations: u32,
}

/// Positive root of `γ ↦ E[ξ^{−γ}] − 1`.
///
/// `E[ξ^{−γ}]` is a moment generating function of `−ln ξ`, hence convex in
/// `γ`, equal to 1 at `γ = 0` and with negative slope there; the positive
/// root is bracketed by `[0.5, 1.5]`. Bisection narrows the bracket, then
/// Illinois-modified regula falsi converges superlinearly inside it.
pub fn solve_tail_exponent(spec: &QuadratureSpec) -> Result<RootReport> {
    let g = |x: f64| xi_neg_moment(x, spec).map(|m| m - 1.0);
    let (mut a, mut b) = (0.5, 1.5);
    let (mut ga, mut gb) = (g(a)?, g(b)?);
    if !(ga < 0.0 && gb > 0.0) {
        return Err(Error::QuadratureFailure(format!(
            "tail exponent bracket lost: g(0.5) = {ga}, g(1.5) = {gb}"
        )));
    }
    let mut iterations = 0;
    while b - a > 1e-3 {
        let mid = 0.5 * (a + b);
        let gm = g(mid)?;
        iterations += 1;
        if gm < 0.0 {
            a = mid;
            ga = gm;
        } else {
            b = mid;
            gb = gm;
        }
    }
    let mut side = 0i8;
    let (mut root, mut residual) = if -ga < gb { (a, ga) } else { (b, gb) };
    while iterations < 200 && residual.abs() > 1e-13 && b - a > 1e-13 {
        let x = (a * gb - b * ga) / (gb - ga);
        let gx = g(x)?;
        iterations += 1;
        root = x;
        residual = gx;
        if gx < 0.0 {
            a = x;
            ga = gx;
            if side == -1 {
                gb /= 2.0;
            }
            side = -1;
        } else {
            b = x;
            gb = gx;
            if side == 1 {
                ga /= 2.0;
            }
            side = 1;
        }
    }
    Ok(RootReport {
        root,
        residual,
        iterations,
    })
}

/// `P(inf_{t≥0} X_t ≤ a | X_0 = x0)` for the 3-dimensional Bessel process.
pub fn bessel_min_cdf(a: f64, x0: f64) -> Result<f64> {
    if !(x0 > 0.0) || !x0.is_finite() {
        return Err(invalid(format!("Bessel start {x0} must be positive")));
    }
    if a.is_nan() {
        return Err(invalid("level is NaN"));
    }
    Ok((a / x0).clamp(0.0, 1.0))
}
