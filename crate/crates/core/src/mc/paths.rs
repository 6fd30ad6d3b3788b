use rand::Rng;
use rand_distr::StandardNormal;

use super::{par_map_paths, RngPlan};
use crate::numeric::linspace;

/// What happens when discrete wealth drops to zero or below.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReplayMode {
    /// Set wealth to zero and stop trading.
    Absorbing,
    /// Keep trading with whatever (possibly negative) wealth results; used to
    /// measure pure replication error.
    Unconstrained,
}

/// Grid `t_i = T (1 - (1 - i/n)^{1/beta})`; `beta = 1` is uniform, smaller
/// `beta` concentrates points near maturity.
pub fn graded_time_grid(horizon: f64, n_steps: usize, beta: f64) -> Vec<f64> {
    assert!(beta > 0.0 && beta <= 1.0, "grading exponent must lie in (0, 1]");
    let grid: Vec<f64> =
        linspace(0.0, 1.0, n_steps + 1).into_iter().map(|u| horizon * (1.0 - (1.0 - u).powf(1.0 / beta))).collect();
    assert!(grid.windows(2).all(|w| w[1] > w[0]), "grading too strong for {n_steps} steps in double precision");
    grid
}

/// Stored GBM paths on a uniform grid, `S_t = exp(sigma W_t + (mu - sigma^2/2) t)`.
#[derive(Debug, Clone)]
pub struct PathBundle {
    pub times: Vec<f64>,
    /// Brownian path per simulated path, `w[i][0] = 0`.
    pub w: Vec<Vec<f64>>,
    pub s: Vec<Vec<f64>>,
    pub seed: u64,
}

impl PathBundle {
    pub fn n_paths(&self) -> usize {
        self.w.len()
    }

    /// Increments `W_{t_{j+1}} - W_{t_j}` of path `i`.
    pub fn increments(&self, i: usize) -> Vec<f64> {
        self.w[i].windows(2).map(|p| p[1] - p[0]).collect()
    }
}

fn gbm_price(mu: f64, sigma: f64, t: f64, w: f64) -> f64 {
    (sigma * w + (mu - 0.5 * sigma * sigma) * t).exp()
}

/// Exact log-space simulation of discounted GBM started at 1. `sigma = 0`
/// gives the deterministic path `exp(mu t)`.
pub fn simulate_gbm(mu: f64, sigma: f64, horizon: f64, n_paths: usize, n_steps: usize, seed: u64) -> PathBundle {
    let times = linspace(0.0, horizon, n_steps + 1);
    let plan = RngPlan::new(seed);
    let paths = par_map_paths(plan, n_paths, |_, rng| {
        let mut w = Vec::with_capacity(times.len());
        let mut s = Vec::with_capacity(times.len());
        let mut cur = 0.0;
        w.push(0.0);
        s.push(1.0);
        for j in 1..times.len() {
            let z: f64 = rng.sample(StandardNormal);
            cur += z * (times[j] - times[j - 1]).sqrt();
            w.push(cur);
            s.push(gbm_price(mu, sigma, times[j], cur));
        }
        (w, s)
    });
    let (w, s) = paths.into_iter().unzip();
    PathBundle { times, w, s, seed }
}

/// Replays a cash-in-stock strategy `H(t, W_t, S_t, X_t)` along stored paths:
/// `X_{j+1} = X_j + H_j (S_{j+1} - S_j) / S_j`. A path that reaches zero stays
/// at zero.
pub fn replay_strategy<H>(bundle: &PathBundle, x0: f64, hedge: H) -> Vec<f64>
where
    H: Fn(f64, f64, f64, f64) -> f64 + Sync,
{
    use rayon::prelude::*;
    (0..bundle.n_paths())
        .into_par_iter()
        .map(|i| {
            let (w, s) = (&bundle.w[i], &bundle.s[i]);
            let mut x = x0;
            for j in 0..bundle.times.len() - 1 {
                if x <= 0.0 {
                    return 0.0;
                }
                let h = hedge(bundle.times[j], w[j], s[j], x);
                x += h * (s[j + 1] - s[j]) / s[j];
            }
            x.max(0.0)
        })
        .collect()
}

/// Terminal state of a streamed replay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplayOutcome {
    pub w_terminal: f64,
    pub s_terminal: f64,
    pub x_terminal: f64,
}

/// Same recursion as [`replay_strategy`] on an arbitrary time grid, generating
/// each path on the fly so memory stays `O(n_paths)`. For a uniform grid and
/// the same seed the Brownian draws coincide with [`simulate_gbm`].
pub fn replay_gbm_streaming<H>(
    mu: f64,
    sigma: f64,
    times: &[f64],
    x0: f64,
    n_paths: usize,
    seed: u64,
    mode: ReplayMode,
    hedge: H,
) -> Vec<ReplayOutcome>
where
    H: Fn(f64, f64, f64, f64) -> f64 + Sync,
{
    par_map_paths(RngPlan::new(seed), n_paths, |_, rng| {
        let (mut w, mut s, mut x) = (0.0, 1.0, x0);
        for j in 0..times.len() - 1 {
            let z: f64 = rng.sample(StandardNormal);
            let w_next = w + z * (times[j + 1] - times[j]).sqrt();
            let s_next = gbm_price(mu, sigma, times[j + 1], w_next);
            if x > 0.0 || mode == ReplayMode::Unconstrained {
                let h = hedge(times[j], w, s, x);
                x += h * (s_next - s) / s;
                if x <= 0.0 && mode == ReplayMode::Absorbing {
                    x = 0.0;
                }
            }
            w = w_next;
            s = s_next;
        }
        ReplayOutcome { w_terminal: w, s_terminal: s, x_terminal: x }
    })
}

/// Replays one strategy on several nested sub-grids of `times` along the same
/// Brownian paths. Sub-grid `m` keeps every `strides[m]`-th point of `times`;
/// each stride must divide `times.len() - 1`. Returns, per path, one outcome
/// per stride.
pub fn replay_gbm_nested<H>(
    mu: f64,
    sigma: f64,
    times: &[f64],
    strides: &[usize],
    x0: f64,
    n_paths: usize,
    seed: u64,
    mode: ReplayMode,
    hedge: H,
) -> Vec<Vec<ReplayOutcome>>
where
    H: Fn(f64, f64, f64, f64) -> f64 + Sync,
{
    let n = times.len() - 1;
    assert!(strides.iter().all(|&k| k > 0 && n.is_multiple_of(k)), "strides must divide the grid");
    par_map_paths(RngPlan::new(seed), n_paths, |_, rng| {
        let mut w_path = Vec::with_capacity(n + 1);
        w_path.push(0.0);
        for j in 0..n {
            let z: f64 = rng.sample(StandardNormal);
            w_path.push(w_path[j] + z * (times[j + 1] - times[j]).sqrt());
        }
        strides
            .iter()
            .map(|&k| {
                let mut x = x0;
                let mut j = 0;
                while j < n {
                    let (t0, t1) = (times[j], times[j + k]);
                    let (s0, s1) = (gbm_price(mu, sigma, t0, w_path[j]), gbm_price(mu, sigma, t1, w_path[j + k]));
                    if x > 0.0 || mode == ReplayMode::Unconstrained {
                        x += hedge(t0, w_path[j], s0, x) * (s1 - s0) / s0;
                        if x <= 0.0 && mode == ReplayMode::Absorbing {
                            x = 0.0;
                        }
                    }
                    j += k;
                }
                ReplayOutcome {
                    w_terminal: w_path[n],
                    s_terminal: gbm_price(mu, sigma, times[n], w_path[n]),
                    x_terminal: x,
                }
            })
            .collect()
    })
}
