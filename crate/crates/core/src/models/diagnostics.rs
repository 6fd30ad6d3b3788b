use serde::Serialize;

use super::DensitySample;
use crate::error::{Error, Result};
use crate::numeric::norm_cdf;

const MERGE_TOL: f64 = 1e-12;
const KS_POINTS: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    NoAtomDetected,
    AtomAt { value: f64, mass: f64 },
}

/// Largest empirical CDF jump after merging near-equal values, plus the KS
/// distance to a Gaussian-kernel smoothing of the same sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomDiagnostic {
    pub max_cdf_jump: f64,
    pub ks_to_smoothed: f64,
    pub n: usize,
    pub threshold: f64,
    pub verdict: Verdict,
}

/// Sup distance between the empirical CDF of `sorted` and `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic one-sample Kolmogorov critical value `sqrt(-ln(alpha/2)/2) / sqrt(n)`
/// at confidence `level = 1 - alpha`.
pub fn ks_critical_value(n: usize, level: f64) -> f64 {
    let alpha = 1.0 - level;
    (-0.5 * (0.5 * alpha).ln()).sqrt() / (n as f64).sqrt()
}

/// `0.9 min(sd, IQR / 1.34) n^(-1/5)` on a sorted sample.
pub fn silverman_bandwidth(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n < 2 {
        return 0.0;
    }
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let sd = (sorted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    let q = |p: f64| sorted[((p * (n - 1) as f64).round() as usize).min(n - 1)];
    let iqr = q(0.75) - q(0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    0.9 * spread * (n as f64).powf(-0.2)
}

fn smoothed_cdf(sorted: &[f64], h: f64, x: f64) -> f64 {
    let lo = sorted.partition_point(|&v| v < x - 8.0 * h);
    let hi = sorted.partition_point(|&v| v <= x + 8.0 * h);
    let inner: f64 = sorted[lo..hi].iter().map(|&v| norm_cdf((x - v) / h)).sum();
    (lo as f64 + inner) / sorted.len() as f64
}

pub fn atom_diagnostic(ds: &DensitySample) -> Result<AtomDiagnostic> {
    if ds.is_empty() {
        return Err(Error::EmptySample);
    }
    let n = ds.len();
    if n < 1000 {
        log::warn!("atom diagnostic on only {n} samples; thresholds assume at least 1000");
    }
    let mut sorted = ds.z_values.clone();
    sorted.sort_by(f64::total_cmp);

    let (mut best_value, mut best_count) = (sorted[0], 0usize);
    let mut start = 0;
    while start < n {
        let anchor = sorted[start];
        let mut end = start + 1;
        while end < n && (sorted[end] - anchor).abs() <= MERGE_TOL * anchor.abs() {
            end += 1;
        }
        if end - start > best_count {
            best_count = end - start;
            best_value = anchor;
        }
        start = end;
    }
    let max_cdf_jump = best_count as f64 / n as f64;
    let threshold = (10.0 / n as f64).max(0.01);

    let h = silverman_bandwidth(&sorted);
    let ks_to_smoothed = if h > 0.0 {
        (0..KS_POINTS)
            .map(|j| {
                let idx = ((j as f64 + 0.5) / KS_POINTS as f64 * n as f64) as usize;
                let x = sorted[idx.min(n - 1)];
                let upper = sorted.partition_point(|&v| v <= x) as f64 / n as f64;
                let lower = sorted.partition_point(|&v| v < x) as f64 / n as f64;
                let s = smoothed_cdf(&sorted, h, x);
                (upper - s).abs().max((s - lower).abs())
            })
            .fold(0.0, f64::max)
    } else {
        0.0
    };

    let verdict = if max_cdf_jump > threshold {
        Verdict::AtomAt { value: best_value, mass: max_cdf_jump }
    } else {
        Verdict::NoAtomDetected
    };
    Ok(AtomDiagnostic { max_cdf_jump, ks_to_smoothed, n, threshold, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::{par_map_paths, RngPlan};
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn sample(z: Vec<f64>) -> DensitySample {
        DensitySample {
            z_values: z,
            seed: 0,
            n_steps: 0,
            tag: "test".into(),
            vol_terminal: vec![],
            truncated_fraction: None,
        }
    }

    fn lognormal(n: usize, seed: u64) -> Vec<f64> {
        par_map_paths(RngPlan::new(seed), n, |_, rng| (0.3 * rng.sample::<f64, _>(StandardNormal)).exp())
    }

    #[test]
    fn degenerate_sample_is_one_atom() {
        let d = atom_diagnostic(&sample(vec![1.0; 5000])).unwrap();
        assert_eq!(d.verdict, Verdict::AtomAt { value: 1.0, mass: 1.0 });
        assert_eq!(d.ks_to_smoothed, 0.0);
    }

    #[test]
    fn half_degenerate_control() {
        let costs = lognormal(20_000, 4);
        let z: Vec<f64> =
            par_map_paths(RngPlan::new(5), 20_000, |i, rng| if rng.gen::<bool>() { 1.0 } else { costs[i as usize] });
        let d = atom_diagnostic(&sample(z)).unwrap();
        match d.verdict {
            Verdict::AtomAt { value, mass } => {
                assert_eq!(value, 1.0);
                assert!((mass - 0.5).abs() < 0.02, "{mass}");
            }
            v => panic!("{v:?}"),
        }
        assert!(d.ks_to_smoothed > 0.1);
    }

    #[test]
    fn continuous_controls_pass() {
        for seed in 0..5 {
            let d = atom_diagnostic(&sample(lognormal(20_000, seed))).unwrap();
            assert_eq!(d.verdict, Verdict::NoAtomDetected);
            assert_eq!(d.max_cdf_jump, 1.0 / 20_000.0);
            assert!(d.ks_to_smoothed < 0.02, "{}", d.ks_to_smoothed);
        }
    }

    #[test]
    fn merging_is_relative() {
        let z = vec![1.0, 1.0 + 1e-13, 1.0 + 1e-9, 2.0];
        let d = atom_diagnostic(&sample(z)).unwrap();
        assert_eq!(d.max_cdf_jump, 0.5);
    }

    #[test]
    fn ks_critical_values() {
        assert!((ks_critical_value(1, 0.95) - 1.3581).abs() < 1e-4);
        assert!((ks_critical_value(1, 0.99) - 1.6276).abs() < 1e-4);
        let u: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        assert!((ks_statistic(&u, |x| x) - 0.005).abs() < 1e-12);
    }
}
