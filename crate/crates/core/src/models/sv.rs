use rand::Rng;
use rand_distr::StandardNormal;

use super::{sample_mixture_density, DensitySample, ModelKind, ModelSpec};
use crate::error::{Error, Result};
use crate::mc::{par_map_paths, RngPlan};

/// `Z_T = E(-int f(W^1) dW^1)_T` by Euler steps in `log Z`, with the
/// volatility state simulated alongside (correlation `rho` with `W^1`).
pub fn sample_sv_density(spec: &ModelSpec, n_paths: usize, n_steps: usize, seed: u64) -> Result<DensitySample> {
    spec.validate()?;
    if n_steps == 0 {
        return Err(Error::InvalidModel("n_steps must be at least 1".into()));
    }
    let horizon = spec.horizon;
    if (n_steps as f64) < 64.0 * horizon {
        log::warn!("StepTooCoarse: {n_steps} steps over horizon {horizon} (fewer than 64 per unit time)");
    }
    let f = *spec
        .model
        .excess_rate()
        .ok_or_else(|| Error::InvalidModel("mixture models are sampled with sample_mixture_density".into()))?;
    let dt = horizon / n_steps as f64;
    let sq = dt.sqrt();
    let model = spec.model.clone();

    let rows: Vec<(f64, f64, usize)> = par_map_paths(RngPlan::new(seed), n_paths, |_, rng| {
        let mut w1 = 0.0;
        let mut log_z = 0.0;
        let mut truncated = 0usize;
        let mut y = match model {
            ModelKind::HullWhite { y0, .. } | ModelKind::Scott { y0, .. } | ModelKind::Heston { y0, .. } => y0,
            ModelKind::Mixture { .. } => unreachable!(),
        };
        for _ in 0..n_steps {
            let dw1 = sq * rng.sample::<f64, _>(StandardNormal);
            let dw2 = sq * rng.sample::<f64, _>(StandardNormal);
            let th = f.eval(w1);
            log_z += -th * dw1 - 0.5 * th * th * dt;
            match model {
                ModelKind::HullWhite { b, a, rho, .. } => {
                    let db = rho * dw1 + (1.0 - rho * rho).sqrt() * dw2;
                    y *= ((b - 0.5 * a * a) * dt + a * db).exp();
                }
                ModelKind::Scott { kappa, theta_bar, xi, rho, .. } => {
                    let db = rho * dw1 + (1.0 - rho * rho).sqrt() * dw2;
                    y += kappa * (theta_bar - y) * dt + xi * db;
                }
                ModelKind::Heston { kappa, theta_bar, xi, rho, .. } => {
                    if y < 0.0 {
                        truncated += 1;
                    }
                    let v = y.max(0.0);
                    let db = rho * dw1 + (1.0 - rho * rho).sqrt() * dw2;
                    y += kappa * (theta_bar - v) * dt + xi * v.sqrt() * db;
                }
                ModelKind::Mixture { .. } => unreachable!(),
            }
            w1 += dw1;
        }
        let vol = match model {
            ModelKind::HullWhite { .. } => y,
            ModelKind::Scott { .. } => y.exp(),
            _ => y.max(0.0).sqrt(),
        };
        (log_z.exp(), vol, truncated)
    });

    let truncated_fraction = matches!(spec.model, ModelKind::Heston { .. }).then(|| {
        let total: usize = rows.iter().map(|r| r.2).sum();
        total as f64 / (n_paths * n_steps).max(1) as f64
    });
    Ok(DensitySample {
        z_values: rows.iter().map(|r| r.0).collect(),
        vol_terminal: rows.iter().map(|r| r.1).collect(),
        seed,
        n_steps,
        tag: spec.model.tag().into(),
        truncated_fraction,
    })
}

/// Any model: mixtures at `q = p` (the minimal reweighting), SV models at
/// `spec.n_steps`.
pub fn sample_density(spec: &ModelSpec, n_paths: usize, seed: u64) -> Result<DensitySample> {
    match &spec.model {
        ModelKind::Mixture { p, .. } => sample_mixture_density(spec, &p.clone(), n_paths, seed),
        _ => sample_sv_density(spec, n_paths, spec.n_steps, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::estimate;
    use crate::models::{ks_critical_value, ks_statistic, ExcessRate};
    use crate::numeric::norm_cdf;

    #[test]
    fn constant_rate_matches_lognormal_law() {
        let theta = 0.5;
        let spec = ModelSpec::hull_white_example(ExcessRate::Constant { theta }, 1.0, 256);
        let ds = sample_sv_density(&spec, 20_000, 256, 9).unwrap();
        let mut z = ds.z_values.clone();
        z.sort_by(f64::total_cmp);
        let cdf = |v: f64| norm_cdf((v.ln() + 0.5 * theta * theta) / theta);
        assert!(ks_statistic(&z, cdf) < ks_critical_value(z.len(), 0.95));
    }

    #[test]
    fn tanh_rate_is_normalized_in_every_model() {
        let f = ExcessRate::Tanh { m: 0.3, s: 1.0 };
        for spec in [
            ModelSpec::hull_white_example(f, 1.0, 128),
            ModelSpec::scott_example(f, 1.0, 128),
            ModelSpec::heston_example(f, 1.0, 128),
        ] {
            let ds = sample_density(&spec, 40_000, 21).unwrap();
            let e = estimate(&ds.z_values, "E[Z]", 21).unwrap();
            assert!(e.within(1.0, 3.0), "{}: {e:?}", ds.tag);
            assert!(ds.min() > 0.0);
            assert!(ds.vol_terminal.iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn zero_rate_gives_unit_density() {
        let ds = sample_sv_density(&ModelSpec::scott_example(ExcessRate::Zero, 1.0, 64), 500, 64, 1).unwrap();
        assert!(ds.z_values.iter().all(|&z| z == 1.0));
    }

    #[test]
    fn heston_truncation_is_reported() {
        // near the Feller boundary the Euler variance dips below zero more often
        let spec = ModelSpec::new(
            ModelKind::Heston { kappa: 1.0, theta_bar: 0.04, xi: 0.28, rho: -0.7, y0: 0.01, f: ExcessRate::Zero },
            1.0,
            16,
        )
        .unwrap();
        let ds = sample_sv_density(&spec, 5000, 16, 2).unwrap();
        let frac = ds.truncated_fraction.unwrap();
        assert!(frac > 0.0 && frac < 0.5, "{frac}");
        let calm = sample_sv_density(&ModelSpec::heston_example(ExcessRate::Zero, 1.0, 256), 500, 256, 2).unwrap();
        assert!(calm.truncated_fraction.unwrap() < frac);
        let hw = sample_sv_density(&ModelSpec::hull_white_example(ExcessRate::Zero, 1.0, 16), 10, 16, 2).unwrap();
        assert_eq!(hw.truncated_fraction, None);
    }

    #[test]
    fn mixture_spec_is_rejected_by_sv_sampler() {
        assert!(sample_sv_density(&ModelSpec::mixture_example(1.0), 10, 10, 1).is_err());
    }
}
