//! Trial fan-out and summary statistics shared by the Monte Carlo modules.

use serde::{Deserialize, Serialize};

/// Evaluates `f(i)` for `i in 0..n`, in parallel when the `parallel` feature
/// is enabled. The output is always ordered by index.
pub fn map_indexed<T, F>(n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Mean, spread and normal-approximation 95% interval of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n−1 denominator; 0 for a single value).
    pub stdev: f64,
    /// Standard error of the mean.
    pub stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl SampleStats {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                n,
                mean: f64::NAN,
                stdev: f64::NAN,
                stderr: f64::NAN,
                ci_low: f64::NAN,
                ci_high: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let stdev = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        let stderr = stdev / (n as f64).sqrt();
        Self {
            n,
            mean,
            stdev,
            stderr,
            ci_low: mean - 1.96 * stderr,
            ci_high: mean + 1.96 * stderr,
        }
    }

    pub fn from_counts(counts: &[usize]) -> Self {
        let v: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
        Self::from_values(&v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats_of_known_sample() {
        let s = SampleStats::from_values(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.stdev - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(SampleStats::from_values(&[3.0]).stdev, 0.0);
    }

    #[test]
    fn map_indexed_preserves_order() {
        let v = map_indexed(100, |i| i * 2);
        assert!(v.iter().enumerate().all(|(i, &x)| x == 2 * i as u64));
    }
}
