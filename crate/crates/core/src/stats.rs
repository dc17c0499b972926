//! Small summary-statistics helpers shared by the experiment drivers.

use serde::{Deserialize, Serialize};

/// Mean with its standard error over replicas.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub replicas: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl Estimate {
    /// Sample mean and `sd / sqrt(n)`, summing in the given order.
    pub fn from_values(values: &[f64], keep: bool) -> Estimate {
        let mut acc = Accumulator::default();
        values.iter().for_each(|&v| acc.push(v));
        Estimate { values: keep.then(|| values.to_vec()), ..acc.finish() }
    }

    /// Standard error of the paired difference `self - other`.
    pub fn paired_stderr(&self, other: &Estimate) -> Option<f64> {
        let (a, b) = (self.values.as_ref()?, other.values.as_ref()?);
        if a.len() != b.len() {
            return None;
        }
        let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        Some(Estimate::from_values(&diffs, false).stderr)
    }
}

/// Welford running mean and second moment.
#[derive(Clone, Copy, Debug, Default)]
pub struct Accumulator {
    count: usize,
    mean: f64,
    m2: f64,
}

impl Accumulator {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Chan et al. pairwise merge.
    pub fn merge(&mut self, other: &Accumulator) {
        if other.count == 0 {
            return;
        }
        let n = self.count + other.count;
        let delta = other.mean - self.mean;
        self.m2 += other.m2 + delta * delta * (self.count as f64 * other.count as f64) / n as f64;
        self.mean += delta * other.count as f64 / n as f64;
        self.count = n;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn finish(&self) -> Estimate {
        let stderr = if self.count > 1 {
            (self.m2.max(0.0) / (self.count - 1) as f64 / self.count as f64).sqrt()
        } else {
            0.0
        };
        let mean = if self.count == 0 { f64::NAN } else { self.mean };
        Estimate { mean, stderr, replicas: self.count, values: None }
    }
}

/// Empirical frequency with binomial standard error and a Wilson 95% interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frequency {
    pub hits: usize,
    pub trials: usize,
    pub freq: f64,
    pub sigma: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Frequency {
    pub fn new(hits: usize, trials: usize) -> Frequency {
        if trials == 0 {
            return Frequency { hits, trials, freq: f64::NAN, sigma: f64::NAN, ci_low: 0.0, ci_high: 1.0 };
        }
        let n = trials as f64;
        let f = hits as f64 / n;
        let z = 1.959_963_984_540_054;
        let denom = 1.0 + z * z / n;
        let center = (f + z * z / (2.0 * n)) / denom;
        let half = z * (f * (1.0 - f) / n + z * z / (4.0 * n * n)).sqrt() / denom;
        Frequency {
            hits,
            trials,
            freq: f,
            sigma: (f * (1.0 - f) / n).sqrt(),
            ci_low: (center - half).max(0.0).min(f),
            ci_high: (center + half).min(1.0).max(f),
        }
    }
}

/// Least-squares slope of `y` against `x`; `None` with fewer than two
/// distinct abscissae.
pub fn fit_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let mx = x[..n].iter().sum::<f64>() / n as f64;
    let my = y[..n].iter().sum::<f64>() / n as f64;
    let sxx: f64 = x[..n].iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x[..n].iter().zip(&y[..n]).map(|(a, b)| (a - mx) * (b - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimate_basics() {
        let e = Estimate::from_values(&[1.0, 2.0, 3.0, 4.0], true);
        assert!((e.mean - 2.5).abs() < 1e-15);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((e.stderr - sd / 2.0).abs() < 1e-14);
        assert_eq!(e.values.as_ref().unwrap().len(), e.replicas);
    }

    #[test]
    fn merge_matches_sequential() {
        let xs: Vec<f64> = (0..37).map(|i| ((i * 7919) % 101) as f64 / 3.0).collect();
        let mut a = Accumulator::default();
        let mut b = Accumulator::default();
        xs[..20].iter().for_each(|&x| a.push(x));
        xs[20..].iter().for_each(|&x| b.push(x));
        a.merge(&b);
        let all = Estimate::from_values(&xs, false);
        assert!((a.finish().mean - all.mean).abs() < 1e-12);
        assert!((a.finish().stderr - all.stderr).abs() < 1e-12);
    }

    #[test]
    fn frequency_interval_is_well_formed() {
        for (h, t) in [(0, 10), (10, 10), (3, 17)] {
            let f = Frequency::new(h, t);
            assert!(0.0 <= f.ci_low && f.ci_low <= f.freq && f.freq <= f.ci_high && f.ci_high <= 1.0);
        }
    }

    #[test]
    fn slope() {
        assert_eq!(fit_slope(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]), Some(2.0));
        assert_eq!(fit_slope(&[1.0, 1.0], &[0.0, 1.0]), None);
    }
}
