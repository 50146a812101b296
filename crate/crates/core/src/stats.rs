//! Estimators and tests shared by all experiments.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedManifest {
    pub seed: u64,
    /// First stream id used (inclusive).
    pub stream_start: u64,
    /// One past the last stream id used.
    pub stream_end: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub estimate: f64,
    pub stderr: f64,
    pub n: u64,
    pub method: String,
    pub seed_manifest: Option<SeedManifest>,
    pub extras: BTreeMap<String, f64>,
}

impl EstimateReport {
    pub fn new(estimate: f64, stderr: f64, n: u64, method: impl Into<String>) -> Self {
        Self {
            estimate,
            stderr,
            n,
            method: method.into(),
            seed_manifest: None,
            extras: BTreeMap::new(),
        }
    }

    pub fn with_seeds(mut self, seed: u64, stream_start: u64, stream_end: u64) -> Self {
        self.seed_manifest = Some(SeedManifest {
            seed,
            stream_start,
            stream_end,
        });
        self
    }

    pub fn with_extra(mut self, key: &str, value: f64) -> Self {
        self.extras.insert(key.to_string(), value);
        self
    }

    pub fn extra(&self, key: &str) -> Option<f64> {
        self.extras.get(key).copied()
    }
}

fn check_finite(samples: &[f64]) -> Result<()> {
    if samples.iter().any(|x| x.is_nan()) {
        return Err(invalid("sample contains NaN"));
    }
    Ok(())
}

/// Sample mean with standard error `sd/√n`.
pub fn mean_ci(samples: &[f64]) -> Result<EstimateReport> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!("mean of {n} samples")));
    }
    check_finite(samples)?;
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    Ok(EstimateReport::new(
        mean,
        (var / n as f64).sqrt(),
        n as u64,
        "sample mean",
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    /// Effective sample size used for the p-value.
    pub n_eff: f64,
}

fn sorted(samples: &[f64]) -> Result<Vec<f64>> {
    check_finite(samples)?;
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    Ok(xs)
}

/// Survival function of the Kolmogorov distribution, `P(K > λ)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Jacobi-transformed series converges fast for small λ.
        let mut sum = 0.0;
        for k in 1..=20 {
            let j = (2 * k - 1) as f64;
            sum += (-j * j * std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda)).exp();
        }
        1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * sum
    } else {
        let mut sum = 0.0;
        let mut sign = 1.0;
        for k in 1..=100 {
            let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
            sum += sign * term;
            if term < 1e-18 {
                break;
            }
            sign = -sign;
        }
        (2.0 * sum).clamp(0.0, 1.0)
    }
}

/// Exact `P(D_n < d)` for the one-sample statistic (Marsaglia, Tsang & Wang).
fn ks_exact_cdf(n: usize, d: f64) -> f64 {
    if d <= 0.5 / n as f64 {
        return 0.0;
    }
    if d >= 1.0 {
        return 1.0;
    }
    let nd = n as f64 * d;
    let k = nd.floor() as usize + 1;
    let m = 2 * k - 1;
    let h = k as f64 - nd;
    let mut hm = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            if i + 1 >= j {
                hm[i * m + j] = 1.0;
            }
        }
    }
    for i in 0..m {
        hm[i * m] -= h.powi(i as i32 + 1);
        hm[(m - 1) * m + i] -= h.powi((m - i) as i32);
    }
    if 2.0 * h - 1.0 > 0.0 {
        hm[(m - 1) * m] += (2.0 * h - 1.0).powi(m as i32);
    }
    for i in 0..m {
        for j in 0..m {
            if i + 1 > j {
                for g in 1..=(i + 1 - j) {
                    hm[i * m + j] /= g as f64;
                }
            }
        }
    }
    let (q, mut exp10) = matrix_power(&hm, m, n);
    let mut s = q[(k - 1) * m + k - 1];
    for i in 1..=n {
        s = s * i as f64 / n as f64;
        if s < 1e-140 {
            s *= 1e140;
            exp10 -= 140;
        }
    }
    s * 10f64.powi(exp10)
}

fn matrix_multiply(a: &[f64], b: &[f64], m: usize) -> Vec<f64> {
    let mut c = vec![0.0; m * m];
    for i in 0..m {
        for l in 0..m {
            let ail = a[i * m + l];
            if ail == 0.0 {
                continue;
            }
            for j in 0..m {
                c[i * m + j] += ail * b[l * m + j];
            }
        }
    }
    c
}

fn matrix_power(a: &[f64], m: usize, n: usize) -> (Vec<f64>, i32) {
    if n == 1 {
        return (a.to_vec(), 0);
    }
    let (half, e_half) = matrix_power(a, m, n / 2);
    let mut v = matrix_multiply(&half, &half, m);
    let mut e = 2 * e_half;
    if n % 2 == 1 {
        v = matrix_multiply(a, &v, m);
    }
    let centre = (m / 2) * m + m / 2;
    if v[centre] > 1e140 {
        for x in v.iter_mut() {
            *x *= 1e-140;
        }
        e += 140;
    }
    (v, e)
}

/// Kolmogorov p-value: exact for `n < 100`, asymptotic otherwise with
/// Stephens' effective-size correction.
fn ks_p_value(d: f64, n_eff: f64, exact_n: Option<usize>) -> f64 {
    match exact_n {
        Some(n) if n < 100 => (1.0 - ks_exact_cdf(n, d)).clamp(0.0, 1.0),
        _ => {
            let s = n_eff.sqrt();
            kolmogorov_sf((s + 0.12 + 0.11 / s) * d)
        }
    }
}

/// One-sample Kolmogorov–Smirnov test against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<KsResult> {
    let sided = ks_one_sample_sided(samples, cdf)?;
    Ok(sided.two_sided)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SidedKs {
    pub two_sided: KsResult,
    /// `sup (F_n − F)`: sample stochastically smaller than the model.
    pub d_plus: f64,
    /// `sup (F − F_n)`: sample stochastically larger than the model.
    pub d_minus: f64,
    pub p_plus: f64,
    pub p_minus: f64,
}

/// One-sample KS with both one-sided statistics; one-sided p-values use the
/// Smirnov asymptotic `exp(−2 n d²)`.
pub fn ks_one_sample_sided<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<SidedKs> {
    let n = samples.len();
    if n < 10 {
        return Err(Error::InsufficientData(format!("KS test with {n} samples")));
    }
    let xs = sorted(samples)?;
    let nf = n as f64;
    let (mut d_plus, mut d_minus) = (0.0f64, 0.0f64);
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d_plus = d_plus.max((i + 1) as f64 / nf - f);
        d_minus = d_minus.max(f - i as f64 / nf);
    }
    let d = d_plus.max(d_minus);
    Ok(SidedKs {
        two_sided: KsResult {
            statistic: d,
            p_value: ks_p_value(d, nf, Some(n)),
            n_eff: nf,
        },
        d_plus,
        d_minus,
        p_plus: (-2.0 * nf * d_plus * d_plus).exp(),
        p_minus: (-2.0 * nf * d_minus * d_minus).exp(),
    })
}

/// Two-sample Kolmogorov–Smirnov test (asymptotic p-value).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.len() < 10 || b.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "two-sample KS with {} and {} samples",
            a.len(),
            b.len()
        )));
    }
    let xs = sorted(a)?;
    let ys = sorted(b)?;
    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < xs.len() && j < ys.len() {
        let v = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= v {
            i += 1;
        }
        while j < ys.len() && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let n_eff = na * nb / (na + nb);
    Ok(KsResult {
        statistic: d,
        p_value: ks_p_value(d, n_eff, None),
        n_eff,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailCell {
    pub t: f64,
    pub survival: f64,
    pub stderr: f64,
    pub hits: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub slope: f64,
    pub slope_se: f64,
    pub intercept: f64,
    pub intercept_se: f64,
    pub cells_used: usize,
}

/// Minimum hit count for a cell to enter the log-space fit.
pub const MIN_TAIL_HITS: u64 = 20;

/// Weighted least squares of `ln S(t) = intercept + slope·t` with
/// delta-method weights `(S/se)²`. Cells with fewer than
/// [`MIN_TAIL_HITS`] hits or no variance estimate are discarded.
pub fn exp_tail_fit(cells: &[TailCell]) -> Result<TailFit> {
    let used: Vec<&TailCell> = cells
        .iter()
        .filter(|c| c.hits >= MIN_TAIL_HITS && c.survival > 0.0 && c.stderr > 0.0 && c.t.is_finite())
        .collect();
    if used.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "tail fit needs 3 usable cells, got {}",
            used.len()
        )));
    }
    let (mut sw, mut swt, mut swtt, mut swy, mut swty) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for c in &used {
        let rel = c.stderr / c.survival;
        let w = 1.0 / (rel * rel);
        let y = c.survival.ln();
        sw += w;
        swt += w * c.t;
        swtt += w * c.t * c.t;
        swy += w * y;
        swty += w * c.t * y;
    }
    let det = sw * swtt - swt * swt;
    if !(det > 0.0) {
        return Err(Error::InsufficientData("tail fit cells share one t".into()));
    }
    let slope = (sw * swty - swt * swy) / det;
    let intercept = (swtt * swy - swt * swty) / det;
    Ok(TailFit {
        slope,
        slope_se: (sw / det).sqrt(),
        intercept,
        intercept_se: (swtt / det).sqrt(),
        cells_used: used.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LilSeries {
    /// `Y_n / sqrt(2 T_n ln ln T_n)`, `None` where `T_n ≤ e`.
    pub values: Vec<Option<f64>>,
    /// Running maximum over the defined cells so far.
    pub running_max: Vec<Option<f64>>,
    pub skipped: usize,
}

impl LilSeries {
    pub fn final_max(&self) -> Option<f64> {
        self.running_max.last().copied().flatten()
    }
}

/// Smallest branch time for which `ln ln T ≥ 1`.
pub const LIL_BURN_IN: f64 = 15.154_262_241_479_262;

pub fn lil_statistic(times: &[f64], values: &[f64]) -> Result<LilSeries> {
    lil_statistic_after(times, values, std::f64::consts::E)
}

/// [`lil_statistic`] with cells at `T_n ≤ min_time` left undefined.
pub fn lil_statistic_after(times: &[f64], values: &[f64], min_time: f64) -> Result<LilSeries> {
    if !(min_time >= std::f64::consts::E) {
        return Err(invalid(format!("LIL cutoff {min_time} must be at least e")));
    }
    if times.len() != values.len() {
        return Err(invalid(format!(
            "{} branch times but {} branch values",
            times.len(),
            values.len()
        )));
    }
    let mut out = Vec::with_capacity(times.len());
    let mut running = Vec::with_capacity(times.len());
    let mut best: Option<f64> = None;
    let mut skipped = 0;
    for (&t, &y) in times.iter().zip(values) {
        let v = if t > min_time {
            Some(y / (2.0 * t * t.ln().ln()).sqrt())
        } else {
            skipped += 1;
            None
        };
        if let Some(v) = v {
            best = Some(best.map_or(v, |b: f64| b.max(v)));
        }
        out.push(v);
        running.push(best);
    }
    Ok(LilSeries {
        values: out,
        running_max: running,
        skipped,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZTest {
    pub z: f64,
    pub p_value: f64,
    pub mean: f64,
    pub stderr: f64,
}

/// Two-sided one-sample z-test of the mean against `null_value`.
pub fn drift_test(samples: &[f64], null_value: f64) -> Result<ZTest> {
    if samples.len() < 30 {
        return Err(Error::InsufficientData(format!(
            "drift test with {} samples",
            samples.len()
        )));
    }
    let m = mean_ci(samples)?;
    let diff = m.estimate - null_value;
    let z = if diff == 0.0 {
        0.0
    } else if m.stderr == 0.0 {
        diff.signum() * f64::INFINITY
    } else {
        diff / m.stderr
    };
    Ok(ZTest {
        z,
        p_value: libm::erfc(z.abs() / std::f64::consts::SQRT_2),
        mean: m.estimate,
        stderr: m.stderr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::RandomSource;
    use proptest::prelude::*;

    #[test]
    fn mean_basic() {
        let r = mean_ci(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(r.estimate, 1.0);
        assert_eq!(r.stderr, 0.0);
        assert!(mean_ci(&[]).is_err());
        assert!(mean_ci(&[1.0]).is_err());
        assert!(mean_ci(&[1.0, f64::NAN]).is_err());
    }

    #[test]
    fn mean_of_exponentials() {
        let mut rs = RandomSource::new(1, 0);
        let xs: Vec<f64> = (0..1_000_000).map(|_| -rs.uniform().ln()).collect();
        let r = mean_ci(&xs).unwrap();
        assert!((r.estimate - 1.0).abs() < 0.003);
    }

    #[test]
    fn kolmogorov_branches_meet() {
        let a = kolmogorov_sf(1.18 - 1e-12);
        let b = kolmogorov_sf(1.18 + 1e-12);
        assert!((a - b).abs() < 1e-10, "{a} {b}");
        // Tabulated critical values.
        assert!((kolmogorov_sf(1.6276) - 0.01).abs() < 1e-4);
        assert!((kolmogorov_sf(1.3581) - 0.05).abs() < 1e-4);
    }

    #[test]
    fn exact_small_n_matches_known_values() {
        // n = 1: D = max(U, 1 − U), P(D < d) = 2d − 1 on [1/2, 1].
        assert!((ks_exact_cdf(1, 0.75) - 0.5).abs() < 1e-12);
        // Marsaglia–Tsang–Wang reference: P(D_10 < 0.274) ≈ 0.6284796154565043.
        assert!((ks_exact_cdf(10, 0.274) - 0.628_479_615_456_504_3).abs() < 1e-10);
        // Close to the asymptotic form for moderate n.
        let exact = 1.0 - ks_exact_cdf(99, 0.15);
        let asym = kolmogorov_sf((99f64.sqrt() + 0.12 + 0.11 / 99f64.sqrt()) * 0.15);
        assert!((exact - asym).abs() < 2e-3, "{exact} vs {asym}");
    }

    #[test]
    fn ks_uniform_null_calibration() {
        let mut passes = 0;
        for seed in 0..100 {
            let mut rs = RandomSource::new(seed, 0);
            let xs: Vec<f64> = (0..100_000).map(|_| rs.uniform()).collect();
            if ks_one_sample(&xs, |x| x.clamp(0.0, 1.0)).unwrap().p_value > 0.01 {
                passes += 1;
            }
        }
        assert!(passes >= 98, "{passes}");
    }

    #[test]
    fn ks_detects_gross_misfit() {
        let mut rs = RandomSource::new(5, 0);
        let xs: Vec<f64> = (0..100_000).map(|_| rs.uniform()).collect();
        let r = ks_one_sample(&xs, |x| 1.0 - (-x).exp()).unwrap();
        assert!(r.p_value < 1e-6);
    }

    #[test]
    fn ks_rejects_nan_and_small() {
        assert!(ks_one_sample(&[0.1; 5], |x| x).is_err());
        let mut xs = vec![0.5; 20];
        xs[3] = f64::NAN;
        assert!(ks_one_sample(&xs, |x| x).is_err());
    }

    #[test]
    fn ks_null_rejection_rate() {
        // 10⁴ null runs at n = 200 (asymptotic branch) and n = 50 (exact
        // branch): rejection at the 1% level within 1% ± 0.5%.
        for &n in &[200usize, 50] {
            let mut rejections = 0;
            let runs = 10_000;
            for seed in 0..runs {
                let mut rs = RandomSource::new(1000 + seed, n as u64);
                let xs: Vec<f64> = (0..n).map(|_| rs.uniform()).collect();
                if ks_one_sample(&xs, |x| x).unwrap().p_value < 0.01 {
                    rejections += 1;
                }
            }
            let rate = rejections as f64 / runs as f64;
            assert!((rate - 0.01).abs() <= 0.005, "n={n}: {rate}");
        }
    }

    #[test]
    fn two_sample_same_law() {
        let mut rs = RandomSource::new(9, 0);
        let a: Vec<f64> = (0..20_000).map(|_| rs.standard_normal()).collect();
        let b: Vec<f64> = (0..30_000).map(|_| rs.standard_normal()).collect();
        assert!(ks_two_sample(&a, &b).unwrap().p_value > 0.01);
        let c: Vec<f64> = b.iter().map(|x| x + 0.1).collect();
        assert!(ks_two_sample(&a, &c).unwrap().p_value < 1e-6);
    }

    #[test]
    fn two_sample_ties() {
        let a = vec![1.0; 20];
        let b = vec![1.0; 30];
        assert_eq!(ks_two_sample(&a, &b).unwrap().statistic, 0.0);
    }

    fn synthetic_cells(rs: &mut RandomSource, n: u64) -> Vec<TailCell> {
        // Binomial counts drawn through the normal approximation, which is
        // accurate at these cell sizes.
        (0..7)
            .map(|i| {
                let t = 1.0 + 0.5 * i as f64;
                let p = (-t).exp();
                let mean = n as f64 * p;
                let hits = (mean + (mean * (1.0 - p)).sqrt() * rs.standard_normal())
                    .round()
                    .max(0.0);
                let s = hits / n as f64;
                TailCell {
                    t,
                    survival: s,
                    stderr: (s * (1.0 - s) / n as f64).sqrt(),
                    hits: hits as u64,
                }
            })
            .collect()
    }

    #[test]
    fn tail_fit_recovers_exponential() {
        let mut rs = RandomSource::new(21, 0);
        let fit = exp_tail_fit(&synthetic_cells(&mut rs, 1_000_000)).unwrap();
        assert!((fit.slope + 1.0).abs() < 0.02);
        assert!(fit.intercept.abs() < 0.02);
    }

    #[test]
    fn tail_fit_calibration() {
        let mut within = 0;
        for seed in 0..100 {
            let mut rs = RandomSource::new(seed, 77);
            let fit = exp_tail_fit(&synthetic_cells(&mut rs, 100_000)).unwrap();
            if (fit.slope + 1.0).abs() < 2.0 * fit.slope_se {
                within += 1;
            }
        }
        // Nominal coverage of ±2 SE is 95.4%.
        assert!(within >= 88, "{within}");
    }

    #[test]
    fn tail_fit_discards_sparse_cells() {
        let cells = vec![
            TailCell {
                t: 1.0,
                survival: 0.3,
                stderr: 0.01,
                hits: 300,
            },
            TailCell {
                t: 2.0,
                survival: 0.1,
                stderr: 0.01,
                hits: 100,
            },
            TailCell {
                t: 3.0,
                survival: 0.01,
                stderr: 0.003,
                hits: 10,
            },
            TailCell {
                t: 4.0,
                survival: 0.0,
                stderr: 0.0,
                hits: 0,
            },
        ];
        assert!(matches!(exp_tail_fit(&cells), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn lil_domain_and_scaling() {
        let times = [1.0, 2.0, 3.0, 1e4, 1e6];
        let values = [1.0, 1.5, 2.0, 80.0, 900.0];
        let s = lil_statistic(&times, &values).unwrap();
        assert_eq!(s.skipped, 2);
        assert!(s.values[0].is_none() && s.values[1].is_none());
        assert!(s.running_max[1].is_none());
        assert!(s.values[2].is_some());
        let m = s.running_max.iter().flatten().copied().collect::<Vec<_>>();
        assert!(m.windows(2).all(|w| w[1] >= w[0]));
        assert!(lil_statistic(&times, &values[..3]).is_err());

        // (T, Y) → (c²T, cY) changes the statistic only through ln ln.
        let c = 4.0;
        let scaled_t: Vec<f64> = times.iter().map(|t| c * c * t).collect();
        let scaled_y: Vec<f64> = values.iter().map(|y| c * y).collect();
        let s2 = lil_statistic(&scaled_t, &scaled_y).unwrap();
        let (a, b) = (s.values[4].unwrap(), s2.values[4].unwrap());
        assert!(((a - b) / a).abs() < 0.2);
        let big_t = 1e200f64;
        let r1 = lil_statistic(&[big_t], &[1e100]).unwrap().values[0].unwrap();
        let r2 = lil_statistic(&[c * c * big_t], &[c * 1e100]).unwrap().values[0].unwrap();
        assert!(((r1 - r2) / r1).abs() < 0.02);

        let late = lil_statistic_after(&times, &values, LIL_BURN_IN).unwrap();
        assert_eq!(late.skipped, 3);
        assert_eq!(late.values[3], s.values[3]);
        assert!((LIL_BURN_IN.ln().ln() - 1.0).abs() < 1e-12);
        assert!(lil_statistic_after(&times, &values, 1.0).is_err());
    }

    #[test]
    fn drift_test_basics() {
        let z = drift_test(&[0.5; 40], 0.5).unwrap();
        assert_eq!(z.z, 0.0);
        assert_eq!(z.p_value, 1.0);
        assert!(drift_test(&[0.5; 10], 0.5).is_err());
        let mut rs = RandomSource::new(3, 3);
        let xs: Vec<f64> = (0..100).map(|_| 0.2 + 0.01 * rs.standard_normal()).collect();
        assert!(drift_test(&xs, 0.5).unwrap().p_value < 1e-3);
    }

    proptest! {
        #[test]
        fn estimators_permutation_invariant(mut xs in proptest::collection::vec(-1e3f64..1e3, 30..80), seed in 0u64..1000) {
            let m1 = mean_ci(&xs).unwrap();
            let k1 = ks_one_sample(&xs, |x| (x / 2e3 + 0.5).clamp(0.0, 1.0)).unwrap();
            let z1 = drift_test(&xs, 1.0).unwrap();
            let mut rs = RandomSource::new(seed, 0);
            for i in (1..xs.len()).rev() {
                let j = (rs.next_u64() % (i as u64 + 1)) as usize;
                xs.swap(i, j);
            }
            let m2 = mean_ci(&xs).unwrap();
            let k2 = ks_one_sample(&xs, |x| (x / 2e3 + 0.5).clamp(0.0, 1.0)).unwrap();
            let z2 = drift_test(&xs, 1.0).unwrap();
            prop_assert!((m1.estimate - m2.estimate).abs() < 1e-9);
            prop_assert!((m1.stderr - m2.stderr).abs() < 1e-9);
            prop_assert_eq!(k1.statistic, k2.statistic);
            prop_assert!((z1.z - z2.z).abs() < 1e-6);
        }
    }
}
