use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::pairwise_sum;

/// Sample mean with its standard error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
    pub seed: u64,
    pub label: String,
}

impl McEstimate {
    /// `(mean - target) / se`; zero when both the difference and the SE vanish.
    pub fn z_score(&self, target: f64) -> f64 {
        let d = self.mean - target;
        if d == 0.0 {
            0.0
        } else {
            d / self.std_error
        }
    }

    pub fn within(&self, target: f64, n_se: f64) -> bool {
        self.z_score(target).abs() <= n_se
    }
}

/// Mean and standard error `stdev / sqrt(n)` with fixed-order summation.
pub fn estimate(values: &[f64], label: &str, seed: u64) -> Result<McEstimate> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    let n = values.len();
    let mean = pairwise_sum(values) / n as f64;
    let std_error = if n > 1 {
        let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
        (pairwise_sum(&sq) / (n - 1) as f64 / n as f64).sqrt()
    } else {
        0.0
    };
    Ok(McEstimate { mean, std_error, n, seed, label: label.to_string() })
}

/// Estimate from antithetic pairs: each pair is averaged into one observation.
pub fn estimate_antithetic(pairs: &[(f64, f64)], label: &str, seed: u64) -> Result<McEstimate> {
    let averaged: Vec<f64> = pairs.iter().map(|(a, b)| 0.5 * (a + b)).collect();
    let mut est = estimate(&averaged, label, seed)?;
    est.n = 2 * pairs.len();
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::{par_map_paths, RngPlan};
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn constant_sample() {
        let e = estimate(&[2.5; 10], "c", 0).unwrap();
        assert_eq!(e.mean, 2.5);
        assert_eq!(e.std_error, 0.0);
        assert!(e.within(2.5, 3.0));
    }

    #[test]
    fn empty_sample_rejected() {
        assert_eq!(estimate(&[], "e", 0).unwrap_err(), Error::EmptySample);
    }

    #[test]
    fn standard_normal_mean() {
        let draws = par_map_paths(RngPlan::new(11), 1_000_000, |_, r| r.sample::<f64, _>(StandardNormal));
        let e = estimate(&draws, "n", 11).unwrap();
        assert!(e.mean.abs() < 9.0 / 1000.0);
        assert!((e.std_error - 1e-3).abs() < 1e-5);
    }

    #[test]
    fn antithetic_helps_on_affine_functional() {
        let draws = par_map_paths(RngPlan::new(5), 10_000, |_, r| r.sample::<f64, _>(StandardNormal));
        // f(z) = 0.3 + z + 0.2 z^2: antithetic averaging cancels the odd part
        let f = |z: f64| 0.3 + z + 0.2 * z * z;
        let plain = estimate(&draws.iter().map(|&z| f(z)).collect::<Vec<_>>(), "p", 5).unwrap();
        let half = &draws[..5_000];
        let pairs: Vec<(f64, f64)> = half.iter().map(|&z| (f(z), f(-z))).collect();
        let anti = estimate_antithetic(&pairs, "a", 5).unwrap();
        assert_eq!(anti.n, 10_000);
        assert!(anti.std_error < 0.5 * plain.std_error);
    }
}
