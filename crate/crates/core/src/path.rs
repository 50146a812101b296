//! Sampled paths and additive clocks `A_U(t) = ∫₀ᵗ U(s)⁻² ds`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A sampled real-valued path. Times are nondecreasing; two consecutive
/// nodes with equal time encode a jump (left limit, then right limit).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PathGrid {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl PathGrid {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(invalid(format!(
                "path has {} times and {} values",
                times.len(),
                values.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] >= w[0])) {
            return Err(invalid("path times must be nondecreasing"));
        }
        Ok(Self { times, values })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    /// `(time, value)` pairs.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.values.iter().copied())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClockTable {
    pub times: Vec<f64>,
    pub clock: Vec<f64>,
}

/// Trapezoid accumulation of `U(s)⁻²` on the path's own grid.
pub fn additive_clock(path: &PathGrid) -> Result<ClockTable> {
    let mut clock = Vec::with_capacity(path.len());
    let mut acc = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for (t, u) in path.points() {
        if !(u > 0.0 && u.is_finite()) {
            return Err(Error::SingularClock { time: t, value: u });
        }
        let w = 1.0 / (u * u);
        if let Some((t0, w0)) = prev {
            acc += 0.5 * (w0 + w) * (t - t0);
        }
        clock.push(acc);
        prev = Some((t, w));
    }
    Ok(ClockTable {
        times: path.times.clone(),
        clock,
    })
}

impl ClockTable {
    pub fn max_clock(&self) -> f64 {
        self.clock.last().copied().unwrap_or(0.0)
    }

    /// Clock value at time `t` by linear interpolation.
    pub fn at(&self, t: f64) -> Result<f64> {
        let horizon = self.times.last().copied().unwrap_or(0.0);
        if t < 0.0 || t > horizon || self.times.is_empty() {
            return Err(Error::OutOfHorizon { level: t, horizon });
        }
        let i = self.times.partition_point(|&s| s < t);
        if i == 0 {
            return Ok(self.clock[0]);
        }
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let (c0, c1) = (self.clock[i - 1], self.clock[i]);
        Ok(if t1 > t0 {
            c0 + (c1 - c0) * (t - t0) / (t1 - t0)
        } else {
            c1
        })
    }

    /// The time `t` with `clock(t) = u`, by bisection over the monotone table
    /// and linear interpolation inside the cell.
    pub fn inverse(&self, u: f64) -> Result<f64> {
        if !(u >= 0.0) {
            return Err(invalid(format!("clock level {u} must be nonnegative")));
        }
        let max = self.max_clock();
        if u > max || self.clock.is_empty() {
            return Err(Error::OutOfHorizon { level: u, horizon: max });
        }
        let i = self.clock.partition_point(|&c| c < u);
        Ok(self.interpolate(i, u))
    }

    fn interpolate(&self, i: usize, u: f64) -> f64 {
        if i == 0 {
            return self.times[0];
        }
        let (c0, c1) = (self.clock[i - 1], self.clock[i]);
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        if c1 > c0 {
            t0 + (t1 - t0) * (u - c0) / (c1 - c0)
        } else {
            t1
        }
    }

    /// [`inverse`](Self::inverse) on an increasing list of levels with a
    /// single forward sweep.
    pub fn inverse_many(&self, levels: &[f64]) -> Result<Vec<f64>> {
        let max = self.max_clock();
        let mut out = Vec::with_capacity(levels.len());
        let mut i = 0;
        let mut last = f64::NEG_INFINITY;
        for &u in levels {
            if !(u >= 0.0) || u < last {
                return Err(invalid("clock levels must be nonnegative and increasing"));
            }
            if u > max {
                return Err(Error::OutOfHorizon { level: u, horizon: max });
            }
            while i < self.clock.len() && self.clock[i] < u {
                i += 1;
            }
            out.push(self.interpolate(i, u));
            last = u;
        }
        Ok(out)
    }
}

/// Solves `clock(t) = u` for the time argument; see [`ClockTable::inverse`].
pub fn clock_inverse(table: &ClockTable, u: f64) -> Result<f64> {
    table.inverse(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn uniform_path(n: usize, horizon: f64, f: impl Fn(f64) -> f64) -> PathGrid {
        let times: Vec<f64> = (0..=n).map(|i| horizon * i as f64 / n as f64).collect();
        let values = times.iter().map(|&t| f(t)).collect();
        PathGrid::new(times, values).unwrap()
    }

    #[test]
    fn constant_path() {
        let ct = additive_clock(&uniform_path(100, 1.0, |_| 2.0)).unwrap();
        assert!((ct.max_clock() - 0.25).abs() < 1e-15);
        assert_eq!(ct.clock[0], 0.0);
        assert!((ct.inverse(0.25).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(ct.inverse(0.0).unwrap(), 0.0);
    }

    #[test]
    fn second_order_convergence() {
        // Exact: ∫₀¹ (1+s)⁻² ds = 1 − 1/2.
        let exact = 0.5;
        let e1 = (additive_clock(&uniform_path(100, 1.0, |s| 1.0 + s))
            .unwrap()
            .max_clock()
            - exact)
            .abs();
        let e2 = (additive_clock(&uniform_path(200, 1.0, |s| 1.0 + s))
            .unwrap()
            .max_clock()
            - exact)
            .abs();
        let ratio = e1 / e2;
        assert!((ratio - 4.0).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn singular_and_out_of_range() {
        let p = PathGrid::new(vec![0.0, 1.0], vec![1.0, 0.0]).unwrap();
        assert!(matches!(additive_clock(&p), Err(Error::SingularClock { .. })));
        let ct = additive_clock(&uniform_path(10, 1.0, |_| 1.0)).unwrap();
        assert!(matches!(ct.inverse(1.5), Err(Error::OutOfHorizon { .. })));
        assert!(ct.inverse(-0.1).is_err());
        assert!(PathGrid::new(vec![0.0, 1.0, 0.5], vec![1.0; 3]).is_err());
    }

    #[test]
    fn jump_nodes_contribute_nothing() {
        let p = PathGrid::new(vec![0.0, 1.0, 1.0, 2.0], vec![1.0, 1.0, 2.0, 2.0]).unwrap();
        let ct = additive_clock(&p).unwrap();
        assert!((ct.max_clock() - 1.25).abs() < 1e-15);
        assert!((ct.inverse(1.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sweep_matches_bisection() {
        let ct = additive_clock(&uniform_path(500, 3.0, |s| 1.0 + s * s)).unwrap();
        let levels: Vec<f64> = (0..50).map(|i| ct.max_clock() * i as f64 / 49.0).collect();
        let swept = ct.inverse_many(&levels).unwrap();
        for (u, t) in levels.iter().zip(swept) {
            assert_eq!(ct.inverse(*u).unwrap(), t);
        }
    }

    proptest! {
        #[test]
        fn clock_monotone_and_invertible(vals in proptest::collection::vec(0.05f64..20.0, 2..200)) {
            let n = vals.len();
            let times: Vec<f64> = (0..n).map(|i| i as f64 * 0.01).collect();
            let p = PathGrid::new(times.clone(), vals).unwrap();
            let ct = additive_clock(&p).unwrap();
            prop_assert!(ct.clock.windows(2).all(|w| w[1] > w[0]));
            for (i, &t) in times.iter().enumerate() {
                let back = ct.inverse(ct.clock[i]).unwrap();
                prop_assert!((back - t).abs() <= 0.01 + 1e-12);
                prop_assert!((ct.at(t).unwrap() - ct.clock[i]).abs() < 1e-12);
            }
        }
    }
}
