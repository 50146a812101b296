//! Inverse-CDF table for the strip exit time.
//!
//! Knots are uniform in `ln t` on `[0.01, 2.5]`. Between knots `ln t` is a
//! monotone cubic Hermite function of the CDF value, using the exact
//! derivative `1/(t f(t))`; one Newton step on the exact CDF polishes the
//! result. Above `t = 2.5` the one-term tail `(4/π) e^{−2t}` is exact to
//! double precision and is inverted in closed form. Below `t = 0.01`
//! (probability ~1e-14) the exact CDF is bisected.

use std::sync::OnceLock;

use crate::analytic::strip_exit::{exit_cdf, exit_density, exit_tail_quantile};

const KNOTS: usize = 4096;
const T_MIN: f64 = 0.01;
const T_MAX: f64 = 2.5;

pub(super) struct ExitTable {
    cdf: Vec<f64>,
    log_t: Vec<f64>,
    slope: Vec<f64>,
}

pub(super) fn table() -> &'static ExitTable {
    static TABLE: OnceLock<ExitTable> = OnceLock::new();
    TABLE.get_or_init(ExitTable::build)
}

impl ExitTable {
    fn build() -> Self {
        let (lo, hi) = (T_MIN.ln(), T_MAX.ln());
        let mut cdf = Vec::with_capacity(KNOTS);
        let mut log_t = Vec::with_capacity(KNOTS);
        let mut slope = Vec::with_capacity(KNOTS);
        for i in 0..KNOTS {
            let x = lo + (hi - lo) * i as f64 / (KNOTS - 1) as f64;
            let t = x.exp();
            cdf.push(exit_cdf(t));
            log_t.push(x);
            slope.push(1.0 / (t * exit_density(t)));
        }
        // Fritsch–Carlson limiter keeps each cubic piece monotone.
        for i in 0..KNOTS - 1 {
            let secant = (log_t[i + 1] - log_t[i]) / (cdf[i + 1] - cdf[i]);
            let a = slope[i] / secant;
            let b = slope[i + 1] / secant;
            let r = a * a + b * b;
            if r > 9.0 {
                let tau = 3.0 / r.sqrt();
                slope[i] = tau * a * secant;
                slope[i + 1] = tau * b * secant;
            }
        }
        Self { cdf, log_t, slope }
    }

    pub(super) fn sample(&self, u: f64) -> f64 {
        let last = KNOTS - 1;
        if u >= self.cdf[last] {
            return exit_tail_quantile(u);
        }
        if u <= self.cdf[0] {
            return bisect_cdf(u, 0.0, T_MIN);
        }
        let i = self.cdf.partition_point(|&c| c <= u) - 1;
        let h = self.cdf[i + 1] - self.cdf[i];
        let s = (u - self.cdf[i]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let x = (2.0 * s3 - 3.0 * s2 + 1.0) * self.log_t[i]
            + (s3 - 2.0 * s2 + s) * h * self.slope[i]
            + (-2.0 * s3 + 3.0 * s2) * self.log_t[i + 1]
            + (s3 - s2) * h * self.slope[i + 1];
        let t = x.exp();
        let polished = t - (exit_cdf(t) - u) / exit_density(t);
        if polished > 0.0 {
            polished
        } else {
            t
        }
    }
}

fn bisect_cdf(u: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if exit_cdf(mid) < u {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}
