//! Law of the exit time of standard Brownian motion from `[0, π/2]` started at
//! the midpoint `π/4`.
//!
//! Two representations are used: the spectral series
//! `S(t) = (4/π) Σ_k (-1)^k/(2k+1) exp(-2(2k+1)² t)` converges fast for
//! moderate and large `t`, and the method-of-images series
//! `F(t) = 4 Σ_j (-1)^j Q((2j+1)·(π/4)/√t)` converges fast for small `t`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use crate::analytic::quadrature::{integrate, QuadratureSpec};
use crate::error::Result;
use crate::kernels::rng::normal_sf;

/// Width of the strip.
pub const STRIP_WIDTH: f64 = FRAC_PI_2;

/// Mean exit time `(π/4)²`.
pub const EXIT_MEAN: f64 = FRAC_PI_4 * FRAC_PI_4;

/// Crossover between the image and spectral representations.
const SERIES_SWITCH: f64 = 0.3;

fn image_terms(t: f64) -> (f64, f64) {
    let c = FRAC_PI_4 / t.sqrt();
    let mut cdf = 0.0;
    let mut density = 0.0;
    let mut sign = 1.0;
    for j in 0..64 {
        let m = (2 * j + 1) as f64;
        let q = normal_sf(m * c);
        let phi = (-0.5 * (m * c) * (m * c)).exp() / (2.0 * PI).sqrt();
        cdf += sign * q;
        density += sign * phi * m * c / (2.0 * t);
        if q < 1e-20 * cdf.abs().max(1e-300) {
            break;
        }
        sign = -sign;
    }
    (4.0 * cdf, 4.0 * density)
}

fn spectral_terms(t: f64) -> (f64, f64) {
    let mut survival = 0.0;
    let mut density = 0.0;
    let mut sign = 1.0;
    for k in 0..1000 {
        let m = (2 * k + 1) as f64;
        let e = (-2.0 * m * m * t).exp();
        survival += sign * e / m;
        density += sign * m * e;
        if e < 1e-20 * survival.abs() {
            break;
        }
        sign = -sign;
    }
    (4.0 / PI * survival, 8.0 / PI * density)
}

pub fn exit_cdf(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t < SERIES_SWITCH {
        image_terms(t).0
    } else {
        1.0 - spectral_terms(t).0
    }
}

pub fn exit_survival(t: f64) -> f64 {
    if t <= 0.0 {
        1.0
    } else if t < SERIES_SWITCH {
        1.0 - image_terms(t).0
    } else {
        spectral_terms(t).0
    }
}

pub fn exit_density(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t < SERIES_SWITCH {
        image_terms(t).1
    } else {
        spectral_terms(t).1
    }
}

/// Quantile of the exit time in the one-term tail regime, where
/// `S(t) = (4/π) e^{-2t}` holds to double precision.
pub fn exit_tail_quantile(p: f64) -> f64 {
    -(PI * (1.0 - p) / 4.0).ln() / 2.0
}

/// Expected occupation-weighted excess `∫ (w(Z₂) − 1) du` over one
/// excursion, where `w = 1/sin²` on excursions that leave through the top
/// wall and `w = 1/cos²` on those that leave through the bottom wall.
///
/// Computed from the Green function `G(y) = 2 min(x,y)(L − max(x,y))/L` of
/// the killed motion and the exit-side harmonic function `y/L`.
pub fn excess_clock_mean(spec: &QuadratureSpec) -> Result<f64> {
    let l = STRIP_WIDTH;
    let x = FRAC_PI_4;
    let integrand = |y: f64| {
        let green = 2.0 * x.min(y) * (l - x.max(y)) / l;
        let top = y / l;
        let (s, c) = y.sin_cos();
        green * (top * (c * c) / (s * s) + (1.0 - top) * (s * s) / (c * c))
    };
    let lower = integrate(integrand, 0.0, x, spec)?;
    let upper = integrate(integrand, x, l, spec)?;
    Ok(lower.value + upper.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn representations_agree_near_switch() {
        for &t in &[0.1, 0.2, 0.3, 0.45, 0.6] {
            let img = image_terms(t).0;
            let spec = 1.0 - spectral_terms(t).0;
            assert!((img - spec).abs() < 1e-13, "t={t}: {img} vs {spec}");
            let di = image_terms(t).1;
            let ds = spectral_terms(t).1;
            assert!((di - ds).abs() < 1e-11, "t={t}: {di} vs {ds}");
        }
    }

    #[test]
    fn density_is_derivative_of_cdf() {
        for &t in &[0.05, 0.2, 0.29, 0.31, 0.8, 2.0] {
            let h = 1e-6;
            let fd = (exit_cdf(t + h) - exit_cdf(t - h)) / (2.0 * h);
            assert!((fd - exit_density(t)).abs() < 1e-7, "t={t}");
        }
    }

    #[test]
    fn mean_matches_closed_form() {
        let spec = QuadratureSpec::default();
        let head = integrate(exit_survival, 0.0, 4.0, &spec).unwrap().value;
        // Beyond t = 4 the one-term tail is exact to double precision.
        let tail = 4.0 / PI * (-8.0f64).exp() / 2.0;
        assert!((head + tail - EXIT_MEAN).abs() < 1e-10);
    }

    #[test]
    fn cdf_limits() {
        assert_eq!(exit_cdf(0.0), 0.0);
        assert!(exit_cdf(0.01) < 1e-13);
        assert!((exit_cdf(40.0) - 1.0).abs() < 1e-15);
        let p = 0.999;
        let t = exit_tail_quantile(p);
        assert!((exit_cdf(t) - p).abs() < 1e-13);
    }

    #[test]
    fn excess_clock_mean_value() {
        // Independent check of the Green-function integral by the midpoint rule.
        let n = 2_000_000;
        let l = STRIP_WIDTH;
        let h = l / n as f64;
        let mut sum = 0.0;
        for i in 0..n {
            let y = (i as f64 + 0.5) * h;
            let green = 2.0 * FRAC_PI_4.min(y) * (l - FRAC_PI_4.max(y)) / l;
            sum += green * ((y / l) / y.tan().powi(2) + (1.0 - y / l) * y.tan().powi(2));
        }
        let quad = excess_clock_mean(&QuadratureSpec::default()).unwrap();
        assert!((quad - sum * h).abs() < 1e-8, "{quad} vs {}", sum * h);
        assert!((quad - 1.022_489_776_6).abs() < 1e-8);
    }
}
