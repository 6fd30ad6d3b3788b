use crate::error::Result;

use super::{IncentiveScheme, UtilityFunction};

/// The composed utility `Ubar = U o g`, generally non-concave.
#[derive(Debug, Clone)]
pub struct ComposedUtility {
    utility: UtilityFunction,
    incentive: IncentiveScheme,
    beta: f64,
}

/// Builds `Ubar = U o g` and the left edge `beta` of its effective domain.
pub fn compose(utility: UtilityFunction, incentive: IncentiveScheme) -> Result<ComposedUtility> {
    let beta = if utility.value_at_zero() == f64::NEG_INFINITY { incentive.zero_set_end().unwrap_or(0.0) } else { 0.0 };
    Ok(ComposedUtility { utility, incentive, beta })
}

impl ComposedUtility {
    pub fn utility(&self) -> &UtilityFunction {
        &self.utility
    }

    pub fn incentive(&self) -> &IncentiveScheme {
        &self.incentive
    }

    /// `inf {x > 0 : Ubar(x) > -inf}`.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `Ubar(x)`; `-inf` for negative wealth.
    pub fn value(&self, x: f64) -> f64 {
        if x < 0.0 {
            return f64::NEG_INFINITY;
        }
        let gx = self.incentive.value(x);
        if gx > 0.0 {
            self.utility.value(gx)
        } else {
            self.utility.value_at_zero()
        }
    }

    /// Right derivative `U'(g(x)) g'(x)`.
    pub fn derivative(&self, x: f64) -> f64 {
        let s = self.incentive.slope(x);
        if s == 0.0 {
            return 0.0;
        }
        self.utility.marginal(self.incentive.value(x)) * s
    }

    /// Maximizes `Ubar(x) - y x` over `[lo, hi]` (clipped to `[0, inf)`), piece
    /// by piece: on each affine piece of `g` the objective is `U(affine) - y x`,
    /// which is concave, so its clamped stationary point is the piece maximum.
    /// Returns `(argmax, max)`; the leftmost maximizer wins ties.
    pub fn sup_minus_linear(&self, y: f64, lo: f64, hi: f64) -> (f64, f64) {
        let lo = lo.max(0.0);
        let pieces = self.incentive.pieces();
        let mut best = (lo, f64::NEG_INFINITY);
        for (i, piece) in pieces.iter().enumerate() {
            let right = pieces.get(i + 1).map_or(f64::INFINITY, |n| n.start);
            let (a, b) = (piece.start.max(lo), right.min(hi));
            if a > b {
                continue;
            }
            let x = if piece.slope == 0.0 {
                a
            } else {
                let target = self.utility.inverse_marginal(y / piece.slope);
                let stationary = piece.start + (target - piece.value) / piece.slope;
                stationary.clamp(a, b)
            };
            let v = self.value(x) - y * x;
            if v > best.1 {
                best = (x, v);
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper_example() -> ComposedUtility {
        compose(UtilityFunction::power(0.5).unwrap(), IncentiveScheme::call(0.25, 3.0).unwrap()).unwrap()
    }

    #[test]
    fn composed_value_matches_sqrt_form() {
        let ubar = paper_example();
        // 2 sqrt((7 - 3) / 4) = sqrt(7 - 3) = 2
        assert!((ubar.value(7.0) - 2.0).abs() < 1e-15);
        assert_eq!(ubar.value(2.0), 0.0);
        assert_eq!(ubar.beta(), 0.0);
    }

    #[test]
    fn identity_incentive_recovers_utility() {
        let u = UtilityFunction::power(0.5).unwrap();
        let ubar = compose(u.clone(), IncentiveScheme::identity()).unwrap();
        assert_eq!(ubar.beta(), 0.0);
        for x in [0.1, 1.0, 9.0] {
            assert_eq!(ubar.value(x), u.value(x));
        }
    }

    #[test]
    fn log_with_call_has_beta_at_strike() {
        let ubar = compose(UtilityFunction::log(), IncentiveScheme::call(1.0, 1.0).unwrap()).unwrap();
        assert_eq!(ubar.beta(), 1.0);
        for x in [0.2, 0.5, 1.0] {
            assert_eq!(ubar.value(x), f64::NEG_INFINITY);
        }
        assert!(ubar.value(1.5).is_finite());
    }

    #[test]
    fn sup_minus_linear_matches_brute_force() {
        let ubar = paper_example();
        for y in [0.05, 0.2, 0.5] {
            let (_, v) = ubar.sup_minus_linear(y, 0.0, f64::INFINITY);
            let brute =
                (0..200_000).map(|i| i as f64 * 1e-3).map(|x| ubar.value(x) - y * x).fold(f64::NEG_INFINITY, f64::max);
            assert!(v >= brute - 1e-12 && v - brute < 1e-6, "y={y}: {v} vs {brute}");
        }
    }
}
