use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mc::{estimate, par_map_paths, McEstimate, RngPlan};
use crate::utility::PiecewiseUtility;

/// Zero-drift strategy that runs the wealth as a Brownian motion in the clock
/// `s = log(T / (T - t))` until it exits `[0, x*]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftlessPlan {
    pub x: f64,
    pub x_star: f64,
    pub sigma: f64,
    pub horizon: f64,
}

impl DriftlessPlan {
    pub fn new(x: f64, x_star: f64, sigma: f64, horizon: f64) -> Result<Self> {
        if !(x > 0.0 && x < x_star) {
            return Err(Error::InvalidRange { x, upper: x_star });
        }
        if !(sigma > 0.0) || !(horizon > 0.0) {
            return Err(Error::InvalidMarket("sigma and horizon must be positive".into()));
        }
        Ok(DriftlessPlan { x, x_star, sigma, horizon })
    }

    pub fn hit_probability(&self) -> f64 {
        self.x / self.x_star
    }

    /// Shares held before absorption, `1 / (sigma S_t sqrt(T - t))`.
    pub fn shares(&self, t: f64, s_t: f64) -> f64 {
        1.0 / (self.sigma * s_t * (self.horizon - t).sqrt())
    }

    /// Real time reached at log-clock time `s`.
    pub fn real_time(&self, s: f64) -> f64 {
        self.horizon * (-(-s).exp_m1())
    }
}

/// Log-clock horizon after which at most `1e-7` of the paths started anywhere
/// in `(0, x*)` are still inside, using the leading eigenmode of the killed
/// heat kernel; never below 40.
pub fn default_s_max(x_star: f64) -> f64 {
    let pi = std::f64::consts::PI;
    let s = 2.0 * x_star * x_star / (pi * pi) * (4.0 / pi * 1e7).ln();
    s.max(40.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftlessReport {
    pub hit_prob: McEstimate,
    pub mean_terminal: McEstimate,
    pub utility_composed: McEstimate,
    pub utility_envelope: McEstimate,
    pub unabsorbed_fraction: f64,
    pub s_max: f64,
    pub n_steps: usize,
}

/// Simulates the stopped strategy on a uniform log-clock grid. Between grid
/// points, exits through either barrier are detected with the Brownian-bridge
/// crossing probabilities `exp(-2 a b / ds)`.
pub fn driftless_simulate(
    plan: &DriftlessPlan,
    pu: &PiecewiseUtility,
    n_paths: usize,
    n_steps: usize,
    seed: u64,
    s_max: Option<f64>,
) -> Result<DriftlessReport> {
    let s_max = s_max.unwrap_or_else(|| default_s_max(plan.x_star));
    if n_steps == 0 || !(s_max > 0.0) {
        return Err(Error::Domain("driftless grid needs n_steps > 0 and s_max > 0".into()));
    }
    let ds = s_max / n_steps as f64;
    let sq = ds.sqrt();
    let top = plan.x_star;
    let finals: Vec<(f64, bool)> = par_map_paths(RngPlan::new(seed), n_paths, |_, rng| {
        let mut x = plan.x;
        for _ in 0..n_steps {
            let z: f64 = rng.sample(StandardNormal);
            let next = x + sq * z;
            if next <= 0.0 {
                return (0.0, true);
            }
            if next >= top {
                return (top, true);
            }
            let p_low = (-2.0 * x * next / ds).exp();
            let p_up = (-2.0 * (top - x) * (top - next) / ds).exp();
            let u: f64 = rng.gen();
            if u < p_low {
                return (0.0, true);
            }
            if u < p_low + p_up {
                return (top, true);
            }
            x = next;
        }
        (x, false)
    });
    let hits: Vec<f64> = finals.iter().map(|&(v, _)| (v >= top) as u8 as f64).collect();
    let terminal: Vec<f64> = finals.iter().map(|&(v, _)| v).collect();
    let u_bar: Vec<f64> = terminal.iter().map(|&v| pu.value(v)).collect();
    let u_env: Vec<f64> = terminal.iter().map(|&v| pu.envelope(v)).collect();
    let unabsorbed = finals.iter().filter(|f| !f.1).count() as f64 / n_paths.max(1) as f64;
    Ok(DriftlessReport {
        hit_prob: estimate(&hits, "hit probability", seed)?,
        mean_terminal: estimate(&terminal, "E[X_T]", seed)?,
        utility_composed: estimate(&u_bar, "E[Ubar(X_T)]", seed)?,
        utility_envelope: estimate(&u_env, "E[Ubar**(X_T)]", seed)?,
        unabsorbed_fraction: unabsorbed,
        s_max,
        n_steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::utility::concavify_closed_form;

    #[test]
    fn range_guard() {
        assert!(matches!(DriftlessPlan::new(6.0, 6.0, 0.2, 1.0), Err(Error::InvalidRange { .. })));
        assert!(matches!(DriftlessPlan::new(0.0, 6.0, 0.2, 1.0), Err(Error::InvalidRange { .. })));
    }

    #[test]
    fn log_clock_maps_onto_horizon() {
        let plan = DriftlessPlan::new(1.0, 6.0, 0.2, 2.0).unwrap();
        assert_eq!(plan.real_time(0.0), 0.0);
        assert!((plan.real_time(40.0) - 2.0).abs() < 1e-12);
        assert!((plan.shares(0.0, 1.0) - 1.0 / (0.2 * 2f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn hit_probability_and_utility() {
        let pu = concavify_closed_form(0.5, 0.25, 3.0).unwrap();
        let plan = DriftlessPlan::new(1.0, 6.0, 0.2, 1.0).unwrap();
        let rep = driftless_simulate(&plan, &pu, 100_000, 256, 5, None).unwrap();
        assert!(rep.hit_prob.within(1.0 / 6.0, 3.0), "{:?}", rep.hit_prob);
        assert!(rep.utility_composed.within(3f64.sqrt() / 6.0, 3.0));
        assert!(rep.mean_terminal.within(1.0, 3.0));
        assert!(rep.unabsorbed_fraction < 1e-4);
        assert!(rep.s_max > 40.0);
    }

    #[test]
    fn survival_decays_with_horizon() {
        let pu = concavify_closed_form(0.5, 0.25, 3.0).unwrap();
        let plan = DriftlessPlan::new(3.0, 6.0, 0.2, 1.0).unwrap();
        let f: Vec<f64> = [5.0, 10.0, 20.0]
            .iter()
            .map(|&s| {
                let n = (s / 0.05) as usize;
                driftless_simulate(&plan, &pu, 20_000, n, 9, Some(s)).unwrap().unabsorbed_fraction
            })
            .collect();
        assert!(f[0] > f[1] && f[1] > f[2]);
    }
}
