//! Black-Scholes market with power utility and a call incentive: closed-form
//! dual and primal values, optimal terminal wealth, hedge, relative risk
//! aversion, the scaling family and the zero-drift construction.

mod driftless;
mod dual;
mod scaling;
mod wealth;

pub use driftless::{default_s_max, driftless_simulate, DriftlessPlan, DriftlessReport};
pub use dual::{DualDerivatives, PrimalValue};
pub use scaling::{optimal_scaling, scale_family, unit_elasticity_root, ScalingOutcome};
pub use wealth::WealthPayoff;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::utility::{tangency_point, tangent_slope};

/// Discounted stock `S_t = exp(sigma W_t + (mu - sigma^2/2) t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BsMarket {
    pub mu: f64,
    pub sigma: f64,
    pub horizon: f64,
}

impl BsMarket {
    pub fn new(mu: f64, sigma: f64, horizon: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidMarket(format!("sigma must be positive, got {sigma}")));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidMarket(format!("horizon must be positive, got {horizon}")));
        }
        if !mu.is_finite() {
            return Err(Error::InvalidMarket("drift must be finite".into()));
        }
        Ok(BsMarket { mu, sigma, horizon })
    }

    /// Market price of risk `mu / sigma`.
    pub fn theta(&self) -> f64 {
        self.mu / self.sigma
    }
}

/// Power utility `x^p / p` with incentive `lambda (x - k)^+` in a Black-Scholes market.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BsProblem {
    pub market: BsMarket,
    pub p: f64,
    pub lambda: f64,
    pub k: f64,
}

impl BsProblem {
    pub fn new(market: BsMarket, p: f64, lambda: f64, k: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidUtility(format!("power exponent must lie in (0, 1), got {p}")));
        }
        if !(lambda > 0.0) {
            return Err(Error::InvalidIncentive(format!("lambda must be positive, got {lambda}")));
        }
        if lambda > 1.0 + 1e-12 {
            return Err(Error::SlopeViolation { slope: lambda });
        }
        if !(k > 0.0) {
            return Err(Error::InvalidIncentive(format!("strike must be positive, got {k}")));
        }
        Ok(BsProblem { market, p, lambda, k })
    }

    pub fn x_star(&self) -> f64 {
        tangency_point(self.p, self.k)
    }

    pub fn y_star(&self) -> f64 {
        tangent_slope(self.p, self.lambda, self.k)
    }

    /// `|theta|`, failing on a driftless market.
    pub(crate) fn abs_theta(&self) -> Result<f64> {
        let th = self.market.theta();
        if th == 0.0 {
            Err(Error::DegenerateMarket)
        } else {
            Ok(th.abs())
        }
    }

    /// Same utility and market with a different incentive.
    pub fn with_incentive(&self, lambda: f64, k: f64) -> Result<Self> {
        BsProblem::new(self.market, self.p, lambda, k)
    }
}

#[cfg(test)]
pub(crate) fn example_problem() -> BsProblem {
    BsProblem::new(BsMarket::new(0.1, 0.2, 1.0).unwrap(), 0.5, 0.25, 3.0).unwrap()
}
