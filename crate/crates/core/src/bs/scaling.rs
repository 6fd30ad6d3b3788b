use serde::Serialize;

use super::{BsMarket, BsProblem};
use crate::error::{Error, Result};
use crate::numeric::{bisect, logspace};

/// `(k(alpha), lambda(alpha)) = (alpha kappa, alpha^{(1-p)/p} l)`.
pub fn scale_family(p: f64, kappa: f64, l: f64, alpha: f64) -> Result<(f64, f64)> {
    if !(alpha > 0.0) || !(kappa > 0.0) || !(l > 0.0) {
        return Err(Error::Domain(format!("scaling needs positive alpha, kappa and l, got ({alpha}, {kappa}, {l})")));
    }
    let lambda = alpha.powf((1.0 - p) / p) * l;
    if lambda > 1.0 + 1e-12 {
        return Err(Error::SlopeViolation { slope: lambda });
    }
    Ok((alpha * kappa, lambda))
}

/// Result of the search for an optimal scaling parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingOutcome {
    pub alpha: Option<f64>,
    /// Root of `c w'(c) / w(c) = 1` for the base problem.
    pub c_star: Option<f64>,
    /// Largest elasticity seen on the scan.
    pub max_elasticity: f64,
    pub scan_range: (f64, f64),
    pub reason: Option<String>,
}

/// Bracket scan of `c w'(c) / w(c) - 1` over `cs`, refined by bisection.
/// `value_and_slope(c)` returns `(w(c), w'(c))`. Returns the first root and
/// the largest elasticity seen.
pub fn unit_elasticity_root<F>(value_and_slope: F, cs: &[f64]) -> Result<(Option<f64>, f64)>
where
    F: Fn(f64) -> Result<(f64, f64)>,
{
    let elasticity = |c: f64| value_and_slope(c).map(|(w, dw)| c * dw / w);
    let mut max_e = f64::NEG_INFINITY;
    let mut prev: Option<(f64, f64)> = None;
    for &c in cs {
        let e = elasticity(c)?;
        max_e = max_e.max(e);
        if let Some((c0, e0)) = prev {
            if (e0 - 1.0).signum() != (e - 1.0).signum() {
                let g = |t: f64| elasticity(t.exp()).map_or(f64::NAN, |e| e - 1.0);
                let t = bisect(g, c0.ln(), c.ln(), 1e-14, 200)?;
                return Ok((Some(t.exp()), max_e));
            }
        }
        prev = Some((c, e));
    }
    Ok((None, max_e))
}

/// Optimal `alpha` for initial capital `x` over the family `scale_family(p,
/// kappa, l, .)`, or `None` with the reason when the elasticity of the base
/// value function never reaches 1 on the admissible range.
pub fn optimal_scaling(market: BsMarket, p: f64, kappa: f64, l: f64, x: f64) -> Result<ScalingOutcome> {
    let base = BsProblem::new(market, p, l, kappa)?;
    base.abs_theta()?;
    // lambda(alpha) <= 1 bounds alpha from above, hence c = x / alpha from below
    let c_min = x * l.powf(p / (1.0 - p));
    let c_max = 1e4 * x.max(kappa);
    let cs = logspace(c_min.max(1e-6 * kappa), c_max, 400);
    let (root, max_e) = unit_elasticity_root(|c| base.primal_value(c).map(|pv| (pv.w, pv.y)), &cs)?;
    let range = (cs[0], cs[cs.len() - 1]);
    Ok(match root {
        Some(c) => ScalingOutcome {
            alpha: Some(x / c),
            c_star: Some(c),
            max_elasticity: max_e,
            scan_range: range,
            reason: None,
        },
        None => ScalingOutcome {
            alpha: None,
            c_star: None,
            max_elasticity: max_e,
            scan_range: range,
            reason: Some(format!(
                "E(w) < 1 on [{:.3e}, {:.3e}] (max {:.6}): alpha -> alpha w(x / alpha) is increasing, no optimal alpha",
                range.0, range.1, max_e
            )),
        },
    })
}
