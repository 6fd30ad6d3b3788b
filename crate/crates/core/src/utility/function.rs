use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numeric::logspace;

/// Callbacks for a user-supplied utility function on the positive reals.
pub trait CustomUtility: Send + Sync {
    fn value(&self, x: f64) -> f64;
    fn marginal(&self, x: f64) -> f64;
    /// `(U')^{-1}(y)`.
    fn inverse_marginal(&self, y: f64) -> f64;
    /// `U*(y) = sup_x (U(x) - x y)`.
    fn conjugate(&self, y: f64) -> f64;
    /// `U(0)`, possibly `-inf`.
    fn value_at_zero(&self) -> f64;
}

/// The manager's own utility `U`.
#[derive(Clone)]
pub enum UtilityFunction {
    /// `U(x) = x^p / p`, normalized so that `U(0) = 0`.
    Power {
        p: f64,
    },
    /// `U(x) = log x`, `U(0) = -inf`.
    Log,
    Custom(Arc<dyn CustomUtility>),
}

impl fmt::Debug for UtilityFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UtilityFunction::Power { p } => write!(f, "Power {{ p: {p} }}"),
            UtilityFunction::Log => write!(f, "Log"),
            UtilityFunction::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl UtilityFunction {
    pub fn power(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidUtility(format!("power exponent must lie in (0, 1), got {p}")));
        }
        Ok(UtilityFunction::Power { p })
    }

    pub fn log() -> Self {
        UtilityFunction::Log
    }

    /// Wraps custom callbacks after spot-checking monotonicity, strict
    /// concavity and the Inada limits on a log grid.
    pub fn custom(callbacks: Arc<dyn CustomUtility>) -> Result<Self> {
        let u = UtilityFunction::Custom(callbacks);
        u.check_invariants()?;
        Ok(u)
    }

    pub fn value(&self, x: f64) -> f64 {
        if x < 0.0 {
            return f64::NEG_INFINITY;
        }
        if x == 0.0 {
            return self.value_at_zero();
        }
        match self {
            UtilityFunction::Power { p } => x.powf(*p) / p,
            UtilityFunction::Log => x.ln(),
            UtilityFunction::Custom(c) => c.value(x),
        }
    }

    pub fn marginal(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return f64::INFINITY;
        }
        match self {
            UtilityFunction::Power { p } => x.powf(p - 1.0),
            UtilityFunction::Log => 1.0 / x,
            UtilityFunction::Custom(c) => c.marginal(x),
        }
    }

    pub fn inverse_marginal(&self, y: f64) -> f64 {
        match self {
            UtilityFunction::Power { p } => y.powf(1.0 / (p - 1.0)),
            UtilityFunction::Log => 1.0 / y,
            UtilityFunction::Custom(c) => c.inverse_marginal(y),
        }
    }

    pub fn conjugate(&self, y: f64) -> f64 {
        match self {
            UtilityFunction::Power { p } => (1.0 - p) / p * y.powf(p / (p - 1.0)),
            UtilityFunction::Log => -y.ln() - 1.0,
            UtilityFunction::Custom(c) => c.conjugate(y),
        }
    }

    pub fn value_at_zero(&self) -> f64 {
        match self {
            UtilityFunction::Power { .. } => 0.0,
            UtilityFunction::Log => f64::NEG_INFINITY,
            UtilityFunction::Custom(c) => c.value_at_zero(),
        }
    }

    pub fn power_exponent(&self) -> Option<f64> {
        match self {
            UtilityFunction::Power { p } => Some(*p),
            _ => None,
        }
    }

    /// Grid spot-check of `U' > 0`, `U'` strictly decreasing, and the Inada limits.
    pub fn check_invariants(&self) -> Result<()> {
        let grid = logspace(1e-8, 1e8, 161);
        let mut prev = f64::INFINITY;
        for &x in &grid {
            let m = self.marginal(x);
            if !(m > 0.0) {
                return Err(Error::InvalidUtility(format!("U'({x}) = {m} is not positive")));
            }
            if !(m < prev) {
                return Err(Error::InvalidUtility(format!("U' is not strictly decreasing near x = {x}")));
            }
            prev = m;
        }
        let (lo, hi) = (self.marginal(grid[0]), self.marginal(grid[grid.len() - 1]));
        if lo < 1e2 || hi > 1e-2 {
            return Err(Error::InvalidUtility(format!(
                "Inada conditions fail on the grid: U'(1e-8) = {lo}, U'(1e8) = {hi}"
            )));
        }
        if self.value_at_zero().is_nan() || self.value_at_zero() == f64::INFINITY {
            return Err(Error::InvalidUtility("U(0) must lie in [-inf, inf)".into()));
        }
        Ok(())
    }
}
