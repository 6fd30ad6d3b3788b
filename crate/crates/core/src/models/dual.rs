use rayon::prelude::*;
use serde::Serialize;

use super::{mixture_draws, sample_sv_density, ModelKind, ModelSpec};
use crate::error::{Error, Result};
use crate::mc::{estimate, McEstimate};
use crate::numeric::{golden_min, pairwise_sum};
use crate::utility::DualUtility;

const Q_FLOOR: f64 = 1e-9;
const MAX_COMPONENTS: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualMcReport {
    pub y: f64,
    pub estimate: McEstimate,
    /// Minimizing mixture weights; absent for SV models.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_star: Option<Vec<f64>>,
    /// `min_i q_star[i]`: how close the minimizer sits to the simplex boundary.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary_distance: Option<f64>,
}

/// Per-component sums `g_i(q_i) = (1/n) sum_{X = i} U*(y q_i E / p_i)`; the
/// mixture objective is their sum, so each move only touches two terms.
struct Separable<'a> {
    du: &'a DualUtility,
    y: f64,
    n: f64,
    p: &'a [f64],
    groups: Vec<Vec<f64>>,
}

impl Separable<'_> {
    fn term(&self, i: usize, qi: f64) -> f64 {
        let scale = self.y * qi / self.p[i];
        let v: Vec<f64> = self.groups[i].par_iter().map(|&e| self.du.value(scale * e)).collect();
        pairwise_sum(&v) / self.n
    }

    fn total(&self, q: &[f64]) -> f64 {
        (0..q.len()).map(|i| self.term(i, q[i])).sum()
    }

    /// Golden-section moves of mass along each simplex edge `e_i - e_j`,
    /// swept until a full pass improves by less than `1e-14`.
    fn minimize(&self) -> Vec<f64> {
        let n = self.p.len();
        let mut q = self.p.to_vec();
        if n == 1 {
            return q;
        }
        let mut current = self.total(&q);
        for _ in 0..200 {
            let before = current;
            for i in 0..n {
                for j in i + 1..n {
                    let (qi, qj) = (q[i], q[j]);
                    let lo = -(qi - Q_FLOOR);
                    let hi = qj - Q_FLOOR;
                    if hi <= lo {
                        continue;
                    }
                    let (t, _) = golden_min(|t| self.term(i, qi + t) + self.term(j, qj - t), lo, hi, 1e-12);
                    let old = self.term(i, qi) + self.term(j, qj);
                    let new = self.term(i, qi + t) + self.term(j, qj - t);
                    if new < old {
                        q[i] = qi + t;
                        q[j] = qj - t;
                    }
                }
            }
            current = self.total(&q);
            if before - current < 1e-14 {
                break;
            }
        }
        q
    }
}

/// Monte Carlo `E[U*(y Z_T)]` at each `y`, reusing one density sample. For
/// mixtures the weights `q` are optimized separately for every `y`.
pub fn dual_curve_mc(
    spec: &ModelSpec,
    du: &DualUtility,
    ys: &[f64],
    n_paths: usize,
    seed: u64,
) -> Result<Vec<DualMcReport>> {
    if let Some(&bad) = ys.iter().find(|&&y| !(y > 0.0)) {
        return Err(Error::Domain(format!("dual variable must be positive, got {bad}")));
    }
    match &spec.model {
        ModelKind::Mixture { p, .. } => {
            if p.len() > MAX_COMPONENTS {
                return Err(Error::InvalidModel(format!(
                    "q minimization supports at most {MAX_COMPONENTS} components, got {}",
                    p.len()
                )));
            }
            let draws = mixture_draws(spec, n_paths, seed)?;
            let mut groups = vec![Vec::new(); p.len()];
            for (&i, &e) in draws.component.iter().zip(&draws.exponential) {
                groups[i].push(e);
            }
            ys.iter()
                .map(|&y| {
                    let sep = Separable { du, y, n: n_paths as f64, p, groups: groups.clone() };
                    let q = sep.minimize();
                    let values: Vec<f64> = draws.z(&q).iter().map(|&z| du.value(y * z)).collect();
                    Ok(DualMcReport {
                        y,
                        estimate: estimate(&values, "dual value", seed)?,
                        boundary_distance: Some(q.iter().copied().fold(f64::INFINITY, f64::min)),
                        q_star: Some(q),
                    })
                })
                .collect()
        }
        _ => {
            let ds = sample_sv_density(spec, n_paths, spec.n_steps, seed)?;
            ys.iter()
                .map(|&y| {
                    let values: Vec<f64> = ds.z_values.iter().map(|&z| du.value(y * z)).collect();
                    Ok(DualMcReport {
                        y,
                        estimate: estimate(&values, "dual value", seed)?,
                        q_star: None,
                        boundary_distance: None,
                    })
                })
                .collect()
        }
    }
}

pub fn dual_value_mc(spec: &ModelSpec, du: &DualUtility, y: f64, n_paths: usize, seed: u64) -> Result<DualMcReport> {
    Ok(dual_curve_mc(spec, du, &[y], n_paths, seed)?.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bs::{BsMarket, BsProblem};
    use crate::models::{ExcessRate, StepFunction};
    use crate::numeric::linspace;
    use crate::utility::{concavify_closed_form, conjugate};

    fn example_dual() -> DualUtility {
        conjugate(&concavify_closed_form(0.5, 0.25, 3.0).unwrap())
    }

    #[test]
    fn constant_rate_reproduces_black_scholes() {
        let du = example_dual();
        let bs = BsProblem::new(BsMarket::new(0.1, 0.2, 1.0).unwrap(), 0.5, 0.25, 3.0).unwrap();
        let spec = ModelSpec::heston_example(ExcessRate::Constant { theta: 0.5 }, 1.0, 64);
        let ys = [0.1, 0.2];
        for r in dual_curve_mc(&spec, &du, &ys, 50_000, 17).unwrap() {
            let exact = bs.dual_value(r.y).unwrap();
            assert!(r.estimate.within(exact, 3.0), "{r:?} vs {exact}");
        }
    }

    #[test]
    fn curve_is_convex() {
        let du = example_dual();
        let spec = ModelSpec::hull_white_example(ExcessRate::Tanh { m: 0.3, s: 1.0 }, 1.0, 64);
        let ys = linspace(0.05, 0.5, 10);
        let curve = dual_curve_mc(&spec, &du, &ys, 20_000, 3).unwrap();
        for w in curve.windows(3) {
            let slack = 1e-12 * (1.0 + w[1].estimate.mean.abs());
            assert!(w[1].estimate.mean <= 0.5 * (w[0].estimate.mean + w[2].estimate.mean) + slack);
        }
    }

    #[test]
    fn mixture_beyond_flat_threshold_is_nearly_zero() {
        let du = example_dual();
        let y_star = 3f64.sqrt() / 6.0;
        let spec = ModelSpec::new(
            ModelKind::Mixture {
                p: vec![0.5, 0.5],
                theta: vec![
                    StepFunction::new(vec![0.5], vec![0.05, 0.1]).unwrap(),
                    StepFunction::new(vec![0.5], vec![0.1, 0.02]).unwrap(),
                ],
            },
            1.0,
            1,
        )
        .unwrap();
        let r = dual_value_mc(&spec, &du, 2.0 * y_star, 20_000, 8).unwrap();
        assert!(r.estimate.mean < 1e-6, "{r:?}");
        let q = r.q_star.unwrap();
        assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mixture_minimum_beats_the_prior_weights() {
        let du = example_dual();
        let spec = ModelSpec::mixture_example(1.0);
        let r = dual_value_mc(&spec, &du, 0.15, 20_000, 4).unwrap();
        let q = r.q_star.clone().unwrap();
        let draws = mixture_draws(&spec, 20_000, 4).unwrap();
        let at_p: Vec<f64> = draws.z(&[0.5, 0.3, 0.2]).iter().map(|&z| du.value(0.15 * z)).collect();
        let at_p = pairwise_sum(&at_p) / at_p.len() as f64;
        assert!(r.estimate.mean <= at_p + 1e-12);
        // perturbing along an edge cannot improve further
        for (i, j) in [(0, 1), (1, 2), (0, 2)] {
            let mut qq = q.clone();
            qq[i] += 1e-3;
            qq[j] -= 1e-3;
            let v: Vec<f64> = draws.z(&qq).iter().map(|&z| du.value(0.15 * z)).collect();
            assert!(pairwise_sum(&v) / v.len() as f64 >= r.estimate.mean - 1e-12);
        }
        assert!(r.boundary_distance.unwrap() > 0.0);
    }
}
