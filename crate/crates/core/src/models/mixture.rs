use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{DensitySample, ModelKind, ModelSpec, StepFunction};
use crate::error::{Error, Result};
use crate::mc::{par_map_paths, RngPlan};

const DET_FLOOR: f64 = 1e-10;

/// `G_ij = int_0^T theta_i theta_j dt`.
pub fn gramian(theta: &[StepFunction], horizon: f64) -> DMatrix<f64> {
    let n = theta.len();
    DMatrix::from_fn(n, n, |i, j| theta[i].inner_product(&theta[j], horizon))
}

/// Component labels and stochastic exponentials `E(-int theta_X dW)_T` per
/// path; `Z^q` follows by reweighting with `q_X / p_X`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureDraws {
    pub p: Vec<f64>,
    pub component: Vec<usize>,
    pub exponential: Vec<f64>,
    pub seed: u64,
}

impl MixtureDraws {
    pub fn z(&self, q: &[f64]) -> Vec<f64> {
        let w: Vec<f64> = q.iter().zip(&self.p).map(|(q, p)| q / p).collect();
        self.component.iter().zip(&self.exponential).map(|(&i, &e)| w[i] * e).collect()
    }

    pub fn len(&self) -> usize {
        self.component.len()
    }

    pub fn is_empty(&self) -> bool {
        self.component.is_empty()
    }
}

fn mixture_parts(spec: &ModelSpec) -> Result<(&[f64], &[StepFunction])> {
    spec.validate()?;
    match &spec.model {
        ModelKind::Mixture { p, theta } => Ok((p, theta)),
        other => Err(Error::InvalidModel(format!("expected a mixture model, got {}", other.tag()))),
    }
}

fn pick_component<R: Rng>(p: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, pi) in p.iter().enumerate() {
        acc += pi;
        if u < acc {
            return i;
        }
    }
    p.len() - 1
}

/// Exact draws through the Cholesky factor of the Gramian.
pub fn mixture_draws(spec: &ModelSpec, n_paths: usize, seed: u64) -> Result<MixtureDraws> {
    let (p, theta) = mixture_parts(spec)?;
    let g = gramian(theta, spec.horizon);
    let n = p.len();
    let all_zero = theta.iter().all(StepFunction::is_zero);
    let chol = if all_zero {
        DMatrix::zeros(n, n)
    } else {
        let det = g.determinant();
        if !(det > DET_FLOOR) {
            return Err(Error::GramianSingular { det });
        }
        g.clone().cholesky().ok_or(Error::GramianSingular { det })?.l()
    };
    let rows: Vec<(usize, f64)> = par_map_paths(RngPlan::new(seed), n_paths, |_, rng| {
        let i = pick_component(p, rng);
        let xi: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let integral: f64 = (0..=i).map(|j| chol[(i, j)] * xi[j]).sum();
        (i, (-integral - 0.5 * g[(i, i)]).exp())
    });
    let (component, exponential) = rows.into_iter().unzip();
    Ok(MixtureDraws { p: p.to_vec(), component, exponential, seed })
}

fn check_simplex(q: &[f64], n: usize) -> Result<()> {
    if q.len() != n || q.iter().any(|&v| !(v > 0.0)) || (q.iter().sum::<f64>() - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidModel(format!("q must be a point of the open simplex of dimension {n}, got {q:?}")));
    }
    Ok(())
}

/// Exact samples of `Z_T^q = (q_X / p_X) E(-int theta_X dW)_T`.
pub fn sample_mixture_density(spec: &ModelSpec, q: &[f64], n_paths: usize, seed: u64) -> Result<DensitySample> {
    let (p, _) = mixture_parts(spec)?;
    check_simplex(q, p.len())?;
    let draws = mixture_draws(spec, n_paths, seed)?;
    Ok(DensitySample {
        z_values: draws.z(q),
        seed,
        n_steps: 0,
        tag: "mixture".into(),
        vol_terminal: Vec::new(),
        truncated_fraction: None,
    })
}

/// Same law as [`sample_mixture_density`] but with the stochastic integrals
/// discretized on `n_steps` uniform steps (left-point risk prices).
pub fn sample_mixture_euler(
    spec: &ModelSpec,
    q: &[f64],
    n_paths: usize,
    n_steps: usize,
    seed: u64,
) -> Result<DensitySample> {
    let (p, theta) = mixture_parts(spec)?;
    check_simplex(q, p.len())?;
    let dt = spec.horizon / n_steps as f64;
    let sq = dt.sqrt();
    let z_values = par_map_paths(RngPlan::new(seed), n_paths, |_, rng| {
        let i = pick_component(p, rng);
        let mut log_e = 0.0;
        for k in 0..n_steps {
            let th = theta[i].eval(k as f64 * dt);
            let dw = sq * rng.sample::<f64, _>(StandardNormal);
            log_e += -th * dw - 0.5 * th * th * dt;
        }
        q[i] / p[i] * log_e.exp()
    });
    Ok(DensitySample {
        z_values,
        seed,
        n_steps,
        tag: "mixture_euler".into(),
        vol_terminal: Vec::new(),
        truncated_fraction: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::estimate;
    use crate::models::ks_statistic;

    fn single(theta: f64) -> ModelSpec {
        ModelSpec::new(ModelKind::Mixture { p: vec![1.0], theta: vec![StepFunction::constant(theta)] }, 2.0, 1).unwrap()
    }

    #[test]
    fn single_component_is_lognormal() {
        let (theta, t) = (0.4, 2.0);
        let ds = sample_mixture_density(&single(theta), &[1.0], 100_000, 5).unwrap();
        let logs: Vec<f64> = ds.z_values.iter().map(|z| z.ln()).collect();
        let m = estimate(&logs, "log z", 5).unwrap();
        assert!(m.within(-0.5 * theta * theta * t, 3.0), "{m:?}");
        let var = theta * theta * t;
        let sq: Vec<f64> = logs.iter().map(|l| (l - m.mean).powi(2)).collect();
        let v = estimate(&sq, "log var", 5).unwrap();
        assert!(v.within(var, 3.0), "{v:?} vs {var}");
    }

    #[test]
    fn zero_prices_of_risk_give_reweighting_only() {
        let spec = ModelSpec::new(
            ModelKind::Mixture {
                p: vec![0.5, 0.5],
                theta: vec![StepFunction::constant(0.0), StepFunction::constant(0.0)],
            },
            1.0,
            1,
        )
        .unwrap();
        let ds = sample_mixture_density(&spec, &[0.5, 0.5], 1000, 1).unwrap();
        assert!(ds.z_values.iter().all(|&z| z == 1.0));
        let ds = sample_mixture_density(&spec, &[0.25, 0.75], 1000, 1).unwrap();
        assert!(ds.z_values.iter().all(|&z| z == 0.5 || z == 1.5));
    }

    #[test]
    fn dependent_prices_of_risk_are_rejected() {
        let spec = ModelSpec::new(
            ModelKind::Mixture {
                p: vec![0.5, 0.5],
                theta: vec![StepFunction::constant(0.2), StepFunction::constant(0.4)],
            },
            1.0,
            1,
        )
        .unwrap();
        assert!(matches!(mixture_draws(&spec, 10, 1), Err(Error::GramianSingular { .. })));
    }

    #[test]
    fn three_component_normalization() {
        let spec = ModelSpec::mixture_example(1.0);
        assert!(
            gramian(
                match &spec.model {
                    ModelKind::Mixture { theta, .. } => theta,
                    _ => unreachable!(),
                },
                1.0
            )
            .determinant()
                > DET_FLOOR
        );
        for q in [[1.0 / 3.0; 3], [0.2, 0.5, 0.3]] {
            let ds = sample_mixture_density(&spec, &q, 100_000, 11).unwrap();
            let e = estimate(&ds.z_values, "E[Z]", 11).unwrap();
            assert!(e.within(1.0, 3.0), "{e:?}");
            assert!(ds.min() > 0.0);
        }
    }

    #[test]
    fn euler_approaches_exact_sampler() {
        let th = |v: [f64; 2]| StepFunction::new(vec![1.0 / 3.0], v.to_vec()).unwrap();
        let spec = ModelSpec::new(
            ModelKind::Mixture { p: vec![0.5, 0.5], theta: vec![th([0.2, 1.5]), th([1.2, 0.1])] },
            1.0,
            1,
        )
        .unwrap();
        let q = [0.5, 0.5];
        let mut exact = sample_mixture_density(&spec, &q, 40_000, 3).unwrap().z_values;
        exact.sort_by(f64::total_cmp);
        let ecdf = |z: f64| exact.partition_point(|&v| v <= z) as f64 / exact.len() as f64;
        let ks: Vec<f64> = [1usize, 4, 64]
            .iter()
            .map(|&n| {
                let ds = sample_mixture_euler(&spec, &q, 40_000, n, 3).unwrap();
                let mut z = ds.z_values;
                z.sort_by(f64::total_cmp);
                ks_statistic(&z, ecdf)
            })
            .collect();
        assert!(ks[0] > ks[1] && ks[1] > ks[2], "{ks:?}");
    }
}
