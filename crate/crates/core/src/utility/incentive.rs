use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SLOPE_TOL: f64 = 1e-12;

/// Affine piece `g(x) = value + slope * (x - start)` on `[start, next start)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffinePiece {
    pub start: f64,
    pub slope: f64,
    pub value: f64,
}

impl AffinePiece {
    pub fn at(&self, x: f64) -> f64 {
        self.value + self.slope * (x - self.start)
    }
}

/// Convex, nondecreasing, piecewise-affine incentive scheme `g` on `[0, inf)`
/// with maximal slope 1.
#[derive(Debug, Clone, PartialEq)]
pub struct IncentiveScheme {
    pieces: Vec<AffinePiece>,
    call: Option<(f64, f64)>,
}

impl IncentiveScheme {
    /// `g(x) = lambda (x - k)^+`.
    pub fn call(lambda: f64, k: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidIncentive(format!("call weight must be positive, got {lambda}")));
        }
        if !(k >= 0.0) {
            return Err(Error::InvalidIncentive(format!("strike must be nonnegative, got {k}")));
        }
        let mut scheme = Self::sum_of_calls(&[(lambda, k)])?;
        scheme.call = Some((lambda, k));
        Ok(scheme)
    }

    /// `g(x) = x`.
    pub fn identity() -> Self {
        Self::call(1.0, 0.0).expect("identity is a valid scheme")
    }

    /// `g(x) = sum_i lambda_i (x - k_i)^+`.
    pub fn sum_of_calls(calls: &[(f64, f64)]) -> Result<Self> {
        if calls.is_empty() {
            return Err(Error::InvalidIncentive("no call legs given".into()));
        }
        let mut legs: Vec<(f64, f64)> = calls.to_vec();
        if legs.iter().any(|&(l, k)| !(l > 0.0) || !(k >= 0.0)) {
            return Err(Error::InvalidIncentive("call legs need positive weights and nonnegative strikes".into()));
        }
        legs.sort_by(|a, b| a.1.total_cmp(&b.1));
        let mut pieces = Vec::new();
        if legs[0].1 > 0.0 {
            pieces.push(AffinePiece { start: 0.0, slope: 0.0, value: 0.0 });
        }
        let mut slope = 0.0;
        for (i, &(l, k)) in legs.iter().enumerate() {
            slope += l;
            if i + 1 < legs.len() && legs[i + 1].1 == k {
                continue;
            }
            let value = legs.iter().take(i + 1).map(|&(l, kk)| l * (k - kk)).sum();
            pieces.push(AffinePiece { start: k, slope, value });
        }
        Self::from_pieces(pieces)
    }

    pub fn from_pieces(pieces: Vec<AffinePiece>) -> Result<Self> {
        let scheme = IncentiveScheme { pieces, call: None };
        scheme.validate()?;
        Ok(scheme)
    }

    fn validate(&self) -> Result<()> {
        let pieces = &self.pieces;
        let first = pieces.first().ok_or_else(|| Error::InvalidIncentive("empty piece list".into()))?;
        if first.start != 0.0 {
            return Err(Error::InvalidIncentive(format!("first piece must start at 0, starts at {}", first.start)));
        }
        if !(first.value >= 0.0) {
            return Err(Error::InvalidIncentive("g(0) must be nonnegative".into()));
        }
        for piece in pieces {
            if !(piece.slope >= 0.0) {
                return Err(Error::Nonconvex(format!("negative slope {} makes g decreasing", piece.slope)));
            }
            if piece.slope > 1.0 + SLOPE_TOL {
                return Err(Error::SlopeViolation { slope: piece.slope });
            }
        }
        for w in pieces.windows(2) {
            let (a, b) = (w[0], w[1]);
            if !(b.start > a.start) {
                return Err(Error::InvalidIncentive("breakpoints must be strictly increasing".into()));
            }
            if b.slope < a.slope - SLOPE_TOL {
                return Err(Error::Nonconvex(format!(
                    "slope decreases from {} to {} at x = {}",
                    a.slope, b.slope, b.start
                )));
            }
            let left = a.at(b.start);
            if (left - b.value).abs() > SLOPE_TOL * (1.0 + left.abs()) {
                return Err(Error::InvalidIncentive(format!(
                    "g is discontinuous at x = {}: {} vs {}",
                    b.start, left, b.value
                )));
            }
        }
        if pieces.iter().all(|p| p.slope == 0.0) {
            return Err(Error::InvalidIncentive("g must be nonconstant".into()));
        }
        Ok(())
    }

    pub fn pieces(&self) -> &[AffinePiece] {
        &self.pieces
    }

    /// `(lambda, k)` when the scheme was built as a single call.
    pub fn as_call(&self) -> Option<(f64, f64)> {
        self.call
    }

    fn piece_index(&self, x: f64) -> usize {
        self.pieces.partition_point(|p| p.start <= x).saturating_sub(1)
    }

    pub fn value(&self, x: f64) -> f64 {
        let p = &self.pieces[self.piece_index(x.max(0.0))];
        p.at(x.max(0.0)).max(0.0)
    }

    /// Right derivative.
    pub fn slope(&self, x: f64) -> f64 {
        self.pieces[self.piece_index(x.max(0.0))].slope
    }

    /// Right edge of the zero set `{x : g(x) = 0}`; `None` if `g(0) > 0`.
    pub fn zero_set_end(&self) -> Option<f64> {
        if self.pieces[0].value > 0.0 {
            return None;
        }
        // g is nondecreasing, so every piece before the first rising one is flat at 0
        self.pieces.iter().find(|p| p.slope > 0.0).map(|p| p.start)
    }

    /// Breakpoints where the slope changes (kinks of `g`).
    pub fn kinks(&self) -> Vec<f64> {
        self.pieces.iter().skip(1).map(|p| p.start).collect()
    }
}
