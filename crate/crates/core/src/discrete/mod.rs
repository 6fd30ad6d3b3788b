//! One-period finite-state market with a single risky asset: the polytope of
//! martingale measures, exact primal and dual values, dual atoms and the
//! uniqueness test against the kinks of the conjugate.

mod solve;

pub use solve::{
    atom_report, biduality_gap, dual_value_exact, marginal_value, primal_value_exact, subdifferential_selection,
    ArgMax, AtomReport, DualOutcome, GapReport, PrimalOutcome, Selection,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::norm_quantile;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub p: f64,
    /// Gross return of the risky asset (initial price 1).
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteMarket {
    states: Vec<State>,
}

impl FiniteMarket {
    pub fn new(states: Vec<State>) -> Result<Self> {
        if states.len() < 2 {
            return Err(Error::InvalidMarket("need at least two states".into()));
        }
        if states.iter().any(|s| !(s.p > 0.0) || !(s.r > 0.0) || !s.r.is_finite()) {
            return Err(Error::InvalidMarket("probabilities and gross returns must be positive".into()));
        }
        let total: f64 = states.iter().map(|s| s.p).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMarket(format!("probabilities sum to {total}, not 1")));
        }
        if !states.iter().any(|s| s.r > 1.0) || !states.iter().any(|s| s.r < 1.0) {
            return Err(Error::InvalidMarket(
                "returns must straddle 1 (no arbitrage with interior martingale measures)".into(),
            ));
        }
        Ok(FiniteMarket { states })
    }

    /// States `(1/2, 2)` and `(1/2, 1/2)`.
    pub fn counterexample() -> Self {
        FiniteMarket::new(vec![State { p: 0.5, r: 2.0 }, State { p: 0.5, r: 0.5 }]).expect("valid preset")
    }

    /// `n` equally likely states at normal quantile midpoints of a lognormal
    /// one-period return `exp(sigma xi + mu - sigma^2/2)`.
    pub fn lognormal(mu: f64, sigma: f64, n: usize) -> Result<Self> {
        let states = (0..n)
            .map(|i| {
                let xi = norm_quantile((i as f64 + 0.5) / n as f64);
                State { p: 1.0 / n as f64, r: (sigma * xi + mu - 0.5 * sigma * sigma).exp() }
            })
            .collect();
        FiniteMarket::new(states)
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Positions `h` keeping `x + h (r_i - 1) >= 0` in every state.
    pub fn h_bounds(&self, x: f64) -> (f64, f64) {
        let r_max = self.states.iter().map(|s| s.r).fold(f64::MIN, f64::max);
        let r_min = self.states.iter().map(|s| s.r).fold(f64::MAX, f64::min);
        (-x / (r_max - 1.0), x / (1.0 - r_min))
    }

    pub fn payoff(&self, x: f64, h: f64) -> Vec<f64> {
        self.states.iter().map(|s| (x + h * (s.r - 1.0)).max(0.0)).collect()
    }

    /// Vertices of `{q >= 0 : sum q = 1, sum q r = 1}`: pairs straddling 1 and
    /// point masses on states with `r = 1`.
    pub fn emm_vertices(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        let mut out = Vec::new();
        for (i, si) in self.states.iter().enumerate() {
            if si.r == 1.0 {
                let mut q = vec![0.0; n];
                q[i] = 1.0;
                out.push(q);
                continue;
            }
            if si.r < 1.0 {
                continue;
            }
            for (j, sj) in self.states.iter().enumerate() {
                if sj.r < 1.0 {
                    let mut q = vec![0.0; n];
                    q[i] = (1.0 - sj.r) / (si.r - sj.r);
                    q[j] = (si.r - 1.0) / (si.r - sj.r);
                    out.push(q);
                }
            }
        }
        out
    }

    /// Radon-Nikodym values `q_i / p_i`.
    pub fn density(&self, q: &[f64]) -> Vec<f64> {
        q.iter().zip(&self.states).map(|(q, s)| q / s.p).collect()
    }

    /// Whether `q` is a martingale measure to `tol`.
    pub fn is_emm(&self, q: &[f64], tol: f64) -> bool {
        let mass: f64 = q.iter().sum();
        let mean: f64 = q.iter().zip(&self.states).map(|(q, s)| q * s.r).sum();
        q.iter().all(|&v| v >= 0.0) && (mass - 1.0).abs() <= tol && (mean - 1.0).abs() <= tol
    }
}
