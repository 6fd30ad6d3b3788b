use serde::Serialize;

use super::BsProblem;
use crate::error::{Error, Result};
use crate::numeric::{bisect, norm_cdf, norm_pdf};

/// `v(y)` with its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualDerivatives {
    pub v: f64,
    pub dv: f64,
    pub d2v: f64,
}

/// Primal value `w(x)` and the marginal `y = w'(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrimalValue {
    pub x: f64,
    pub w: f64,
    pub y: f64,
}

struct Parts {
    d_plus: f64,
    d_minus: f64,
    /// `lambda^{p/(1-p)} y^{-1/(1-p)} exp(p theta^2 T / (2 (1-p)^2))`
    a: f64,
    vol: f64,
}

impl BsProblem {
    fn parts(&self, y: f64) -> Result<Parts> {
        let th = self.abs_theta()?;
        if !(y > 0.0) {
            return Err(Error::Domain(format!("dual argument must be positive, got {y}")));
        }
        let p = self.p;
        let t = self.market.horizon;
        let vol = th * t.sqrt();
        let l = self.y_star().ln() - y.ln();
        let growth = (p * th * th * t / (2.0 * (1.0 - p) * (1.0 - p))).exp();
        Ok(Parts {
            d_plus: l / vol + (0.5 + p / (1.0 - p)) * vol,
            d_minus: l / vol - 0.5 * vol,
            a: self.lambda.powf(p / (1.0 - p)) * y.powf(-1.0 / (1.0 - p)) * growth,
            vol,
        })
    }

    /// `(d_+(y), d_-(y))`.
    pub fn d_plus_minus(&self, y: f64) -> Result<(f64, f64)> {
        let q = self.parts(y)?;
        Ok((q.d_plus, q.d_minus))
    }

    /// `v(y) = E[Ubar*(y Z_T)]` with `Z_T = exp(-theta W_T - theta^2 T / 2)`.
    pub fn dual_value(&self, y: f64) -> Result<f64> {
        let q = self.parts(y)?;
        let p = self.p;
        Ok((1.0 - p) / p * y * q.a * norm_cdf(q.d_plus) - self.k * y * norm_cdf(q.d_minus))
    }

    pub fn dual_derivatives(&self, y: f64) -> Result<DualDerivatives> {
        let q = self.parts(y)?;
        let (p, k) = (self.p, self.k);
        let (cp, cm) = (norm_cdf(q.d_plus), norm_cdf(q.d_minus));
        let (fp, fm) = (norm_pdf(q.d_plus), norm_pdf(q.d_minus));
        Ok(DualDerivatives {
            v: (1.0 - p) / p * y * q.a * cp - k * y * cm,
            dv: -q.a * cp - k * cm,
            d2v: q.a / y * (cp / (1.0 - p) + fp / q.vol) + k * fm / (y * q.vol),
        })
    }

    /// `x = -v'(y)`, the inverse of the marginal map.
    pub fn wealth_for_marginal(&self, y: f64) -> Result<f64> {
        Ok(-self.dual_derivatives(y)?.dv)
    }

    /// Relative risk aversion `-y v''(y) / v'(y)` of the dual value function.
    pub fn rra_dual(&self, y: f64) -> Result<f64> {
        let q = self.parts(y)?;
        let (cp, cm) = (norm_cdf(q.d_plus), norm_cdf(q.d_minus));
        let num = q.a * (cp / (1.0 - self.p) + norm_pdf(q.d_plus) / q.vol) + self.k * norm_pdf(q.d_minus) / q.vol;
        Ok(num / (q.a * cp + self.k * cm))
    }

    /// Solves `-v'(y) = x` by bisection in `log y` and returns `w(x) = v(y) + x y`.
    pub fn primal_value(&self, x: f64) -> Result<PrimalValue> {
        if !(x > 0.0) {
            return Err(Error::Domain(format!("initial wealth must be positive, got {x}")));
        }
        let gap = |t: f64| self.wealth_for_marginal(t.exp()).map_or(f64::NAN, |w| w - x);
        let mut lo = 1e-10f64;
        while gap(lo.ln()) <= 0.0 {
            lo *= 1e-3;
            if lo < 1e-300 {
                return Err(Error::Convergence { method: "marginal bracket", iterations: 100 });
            }
        }
        let mut hi = 1.0f64;
        let mut doublings = 0;
        while gap(hi.ln()) >= 0.0 {
            hi *= 2.0;
            doublings += 1;
            if doublings > 2000 {
                return Err(Error::Convergence { method: "marginal bracket", iterations: doublings });
            }
        }
        let t = bisect(gap, lo.ln(), hi.ln(), 1e-15, 200)?;
        let y = t.exp();
        Ok(PrimalValue { x, w: self.dual_value(y)? + x * y, y })
    }
}
