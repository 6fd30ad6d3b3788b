use super::BsProblem;
use crate::error::{Error, Result};
use crate::numeric::{norm_cdf, norm_pdf};

/// Optimal terminal wealth for initial capital `x` as a function of `W_T`,
/// together with the value process and hedge that replicate it.
///
/// Internally everything is written for `theta > 0`; a negative market price
/// of risk is handled by the reflection `W -> -W`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WealthPayoff {
    pub problem: BsProblem,
    pub x: f64,
    /// `y = w'(x)`.
    pub y: f64,
    theta: f64,
    orientation: f64,
    /// Threshold on the reflected Brownian motion at maturity.
    threshold: f64,
}

impl BsProblem {
    pub fn optimal_wealth(&self, x: f64) -> Result<WealthPayoff> {
        let theta = self.abs_theta()?;
        let y = self.primal_value(x)?.y;
        let t = self.market.horizon;
        Ok(WealthPayoff {
            problem: *self,
            x,
            y,
            theta,
            orientation: self.market.theta().signum(),
            threshold: (y.ln() - self.y_star().ln()) / theta - 0.5 * theta * t,
        })
    }

    /// `X_T` for initial capital `x` given the terminal Brownian value.
    pub fn optimal_terminal_wealth(&self, x: f64, w_terminal: f64) -> Result<f64> {
        Ok(self.optimal_wealth(x)?.value(w_terminal))
    }

    pub fn hedge(&self, x: f64, t: f64, w_t: f64) -> Result<f64> {
        self.optimal_wealth(x)?.hedge(t, w_t)
    }

    /// `P[X_T = 0]`.
    pub fn ruin_probability(&self, x: f64) -> Result<f64> {
        Ok(self.optimal_wealth(x)?.ruin_probability())
    }
}

impl WealthPayoff {
    /// Threshold `c` such that `X_T > 0` iff `W_T >= c` (for `theta > 0`; the
    /// event is `W_T <= -c` when `theta < 0`).
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    fn power_branch(&self, w_eff: f64) -> f64 {
        let BsProblem { p, lambda, k, market, .. } = self.problem;
        let th = self.theta;
        let log_ratio = p * lambda.ln() + th * w_eff + 0.5 * th * th * market.horizon - self.y.ln();
        (log_ratio / (1.0 - p)).exp() + k
    }

    /// `X_T(W_T)`; the threshold event belongs to the upper branch.
    pub fn value(&self, w_terminal: f64) -> f64 {
        let w_eff = self.orientation * w_terminal;
        if w_eff >= self.threshold {
            self.power_branch(w_eff)
        } else {
            0.0
        }
    }

    /// Value just above the threshold, `x*` in exact arithmetic.
    pub fn value_at_threshold(&self) -> f64 {
        self.power_branch(self.threshold)
    }

    pub fn ruin_probability(&self) -> f64 {
        norm_cdf(self.threshold / self.problem.market.horizon.sqrt())
    }

    fn check_time(&self, t: f64) -> Result<()> {
        let horizon = self.problem.market.horizon;
        if !(t >= 0.0 && t < horizon) {
            return Err(Error::TimeOutOfRange { t, horizon });
        }
        Ok(())
    }

    /// Returns `(term1, arg1, arg2, s)` of `f(t, z) = term1 Phi(arg1) + k Phi(arg2)`.
    fn heat_parts(&self, t: f64, z: f64) -> (f64, f64, f64, f64) {
        let BsProblem { p, lambda, market, .. } = self.problem;
        let th = self.theta;
        let horizon = market.horizon;
        let s = (horizon - t).sqrt();
        let c_q = self.threshold + th * horizon;
        let log_term1 = (p * lambda.ln() - self.y.ln()) / (1.0 - p)
            + th * z / (1.0 - p)
            + th * th / (2.0 * (1.0 - p)) * (-horizon + (horizon - t) / (1.0 - p));
        let arg2 = (z - c_q) / s;
        (log_term1.exp(), arg2 + th * s / (1.0 - p), arg2, s)
    }

    /// `f(t, z) = E^Q[X_T | W_t + theta t = z]` in the reflected coordinates.
    pub fn value_function(&self, t: f64, z: f64) -> Result<f64> {
        self.check_time(t)?;
        let (term1, a1, a2, _) = self.heat_parts(t, z);
        Ok(term1 * norm_cdf(a1) + self.problem.k * norm_cdf(a2))
    }

    /// `df/dz`.
    pub fn value_function_dz(&self, t: f64, z: f64) -> Result<f64> {
        self.check_time(t)?;
        let (term1, a1, a2, s) = self.heat_parts(t, z);
        let th = self.theta;
        let p = self.problem.p;
        Ok(term1 * (th / (1.0 - p) * norm_cdf(a1) + norm_pdf(a1) / s) + self.problem.k * norm_pdf(a2) / s)
    }

    /// Wealth `X_t` of the optimal strategy given `W_t`.
    pub fn wealth_at(&self, t: f64, w_t: f64) -> Result<f64> {
        self.value_function(t, self.orientation * w_t + self.theta * t)
    }

    /// Cash held in the stock at time `t` given `W_t`.
    pub fn hedge(&self, t: f64, w_t: f64) -> Result<f64> {
        let z = self.orientation * w_t + self.theta * t;
        Ok(self.orientation * self.value_function_dz(t, z)? / self.problem.market.sigma)
    }
}

#[cfg(test)]
mod tests {
    use super::super::{example_problem, BsMarket};
    use super::*;
    use crate::mc::{estimate, par_map_paths, RngPlan};
    use crate::numeric::linspace;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn continuity_onto_tangency_point() {
        let bs = example_problem();
        for x in [0.5, 1.0, 5.0, 10.0] {
            let pay = bs.optimal_wealth(x).unwrap();
            assert!((pay.value_at_threshold() - 6.0).abs() < 1e-10);
            assert_eq!(pay.value(pay.threshold() - 1e-9), 0.0);
            assert!(pay.value(pay.threshold()) >= 6.0 - 1e-10);
            assert_eq!(pay.value(-1e3), 0.0);
        }
    }

    #[test]
    fn initial_value_function_equals_capital() {
        let bs = example_problem();
        for x in [1.0, 5.0, 10.0] {
            let pay = bs.optimal_wealth(x).unwrap();
            assert!((pay.value_function(0.0, 0.0).unwrap() - x).abs() < 1e-8);
        }
    }

    #[test]
    fn hedge_matches_quadrature_of_value_function() {
        let pay = example_problem().optimal_wealth(2.0).unwrap();
        let th = pay.theta;
        let horizon = 1.0;
        let quad = |t: f64, z: f64| {
            // E[X_T] with Z_T = z + sqrt(T - t) xi, Simpson on [xi0, 12]
            let s = (horizon - t).sqrt();
            let xi0 = (pay.threshold + th * horizon - z) / s;
            let n = 20_000;
            let (a, b) = (xi0.max(-12.0), 12.0);
            let h = (b - a) / n as f64;
            let mut acc = 0.0;
            for i in 0..=n {
                let xi = a + h * i as f64;
                let w = if i % 2 == 1 {
                    4.0
                } else if i == 0 || i == n {
                    1.0
                } else {
                    2.0
                };
                let wt = z + s * xi - th * horizon;
                acc += w * pay.power_branch(wt) * norm_pdf(xi);
            }
            acc * h / 3.0
        };
        for (t, z) in [(0.0, 0.0), (0.3, 0.4), (0.8, -0.2), (0.5, 1.5)] {
            let f = pay.value_function(t, z).unwrap();
            assert!((quad(t, z) - f).abs() < 1e-8, "f({t},{z})");
            let hz = 1e-4;
            let fd = (quad(t, z + hz) - quad(t, z - hz)) / (2.0 * hz);
            assert!((fd - pay.value_function_dz(t, z).unwrap()).abs() < 1e-5, "fz({t},{z})");
        }
    }

    #[test]
    fn hedge_vanishes_deep_below_near_maturity() {
        let pay = example_problem().optimal_wealth(1.0).unwrap();
        let h = pay.hedge(1.0 - 1e-6, pay.threshold() - 1.0).unwrap();
        assert!(h.abs() < 1e-12);
        assert!(matches!(pay.hedge(1.0, 0.0), Err(Error::TimeOutOfRange { .. })));
    }

    #[test]
    fn ruin_probability_monotone() {
        let bs = example_problem();
        let r: Vec<f64> = [1e2, 1e3, 1e4].iter().map(|&x| bs.ruin_probability(x).unwrap()).collect();
        assert!(r[0] > r[1] && r[1] > r[2]);
        let by_k: Vec<f64> = [1.0, 2.0, 4.0]
            .iter()
            .map(|&k| bs.with_incentive(0.25, k).unwrap().ruin_probability(1.0).unwrap())
            .collect();
        assert!(by_k[0] < by_k[1] && by_k[1] < by_k[2]);
    }

    #[test]
    fn budget_and_ruin_by_monte_carlo() {
        let bs = example_problem();
        let pay = bs.optimal_wealth(5.0).unwrap();
        let th = bs.market.theta();
        // W under Q is a Brownian motion with drift -theta
        let xs = par_map_paths(RngPlan::new(21), 200_000, |_, r| {
            let xi: f64 = r.sample(StandardNormal);
            pay.value(xi - th)
        });
        assert!(xs.iter().all(|&v| v == 0.0 || v >= 6.0 - 1e-9));
        assert!(estimate(&xs, "EQ[X]", 21).unwrap().within(5.0, 3.0));
        let ruin = par_map_paths(RngPlan::new(22), 200_000, |_, r| {
            let xi: f64 = r.sample(StandardNormal);
            (pay.value(xi) == 0.0) as u8 as f64
        });
        assert!(estimate(&ruin, "ruin", 22).unwrap().within(pay.ruin_probability(), 3.0));
    }

    #[test]
    fn reflection_for_negative_drift() {
        let up = example_problem();
        let down = BsProblem { market: BsMarket::new(-0.1, 0.2, 1.0).unwrap(), ..up };
        let (pu, pd) = (up.optimal_wealth(2.0).unwrap(), down.optimal_wealth(2.0).unwrap());
        for w in linspace(-2.0, 2.0, 9) {
            assert_eq!(pu.value(w), pd.value(-w));
            assert!((pu.hedge(0.4, w).unwrap() + pd.hedge(0.4, -w).unwrap()).abs() < 1e-14);
        }
    }
}
