//! Concave envelope `Ubar**` of the composed utility.
//!
//! The envelope is stored as an ordered list of affine segments over the
//! composed utility; outside the open segments the envelope coincides with
//! `Ubar` and is evaluated from it directly.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{bisect, linspace};

use super::{compose, ComposedUtility, IncentiveScheme, UtilityFunction};

/// `Ubar**(x) = gamma x + alpha` on `[a_minus, a_plus]`, strictly above `Ubar`
/// on the open interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnvelopeSegment {
    pub a_minus: f64,
    pub a_plus: f64,
    pub gamma: f64,
    pub alpha: f64,
}

impl EnvelopeSegment {
    pub fn at(&self, x: f64) -> f64 {
        self.gamma * x + self.alpha
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum EnvelopeSource {
    /// Power utility with a single call incentive, parameters `(p, lambda, k)`.
    PowerCall {
        p: f64,
        lambda: f64,
        k: f64,
    },
    Numeric,
}

/// Sampling grid for numeric concavification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
    /// Fraction of the points placed log-spaced in the first decade above the
    /// lower edge. Zero gives a purely linear grid.
    pub log_fraction: f64,
}

impl Grid {
    pub fn linear(x_min: f64, x_max: f64, n_points: usize) -> Self {
        Grid { x_min, x_max, n_points, log_fraction: 0.0 }
    }

    /// Default grid: 2048 points, a quarter of them log-spaced near the lower edge.
    pub fn default_for(x_min: f64, x_max: f64) -> Self {
        Grid { x_min, x_max, n_points: 2048, log_fraction: 0.25 }
    }

    /// Grid points on `[max(x_min, lower), x_max]`. When the composed utility
    /// is `-inf` at `lower`, the first point is shifted inside by a tiny offset.
    pub fn points(&self, lower: f64, lower_is_finite: bool) -> Vec<f64> {
        let start = self.x_min.max(lower);
        let span = self.x_max - start;
        let eps = if lower_is_finite || start > lower { 0.0 } else { 1e-9 * span.max(1.0) };
        let a = start + eps;
        let n_log = ((self.n_points as f64) * self.log_fraction) as usize;
        if n_log < 2 || span <= 0.0 {
            return linspace(a, self.x_max, self.n_points);
        }
        let knee = a + 0.1 * (self.x_max - a);
        let first = (1e-6 * (knee - a)).max(f64::MIN_POSITIVE);
        let mut pts = vec![a];
        pts.extend(crate::numeric::logspace(first, knee - a, n_log - 1).into_iter().map(|d| a + d));
        let rest = linspace(knee, self.x_max, self.n_points - n_log + 1);
        pts.extend(rest.into_iter().skip(1));
        pts
    }
}

/// Composed utility together with its concave envelope.
#[derive(Debug, Clone)]
pub struct PiecewiseUtility {
    composed: ComposedUtility,
    segments: Vec<EnvelopeSegment>,
    pub(crate) source: EnvelopeSource,
}

impl PiecewiseUtility {
    pub fn composed(&self) -> &ComposedUtility {
        &self.composed
    }

    pub fn segments(&self) -> &[EnvelopeSegment] {
        &self.segments
    }

    pub fn beta(&self) -> f64 {
        self.composed.beta()
    }

    /// Slopes `gamma_n` of the envelope segments, strictly decreasing.
    pub fn gamma_set(&self) -> Vec<f64> {
        self.segments.iter().map(|s| s.gamma).collect()
    }

    pub fn is_closed_form(&self) -> bool {
        matches!(self.source, EnvelopeSource::PowerCall { .. })
    }

    /// `Ubar(x)`.
    pub fn value(&self, x: f64) -> f64 {
        self.composed.value(x)
    }

    pub fn segment_containing(&self, x: f64) -> Option<&EnvelopeSegment> {
        let i = self.segments.partition_point(|s| s.a_plus < x);
        self.segments.get(i).filter(|s| s.a_minus <= x && x <= s.a_plus)
    }

    /// `Ubar**(x)`.
    pub fn envelope(&self, x: f64) -> f64 {
        match self.segment_containing(x) {
            Some(s) => s.at(x),
            None => self.composed.value(x),
        }
    }

    /// Right derivative of `Ubar**`.
    pub fn envelope_slope(&self, x: f64) -> f64 {
        let i = self.segments.partition_point(|s| s.a_plus <= x);
        match self.segments.get(i) {
            Some(s) if s.a_minus <= x => s.gamma,
            _ => self.composed.derivative(x),
        }
    }

    /// `(Ubar**)'(beta+)`, `None` when infinite.
    pub fn slope_at_beta(&self) -> Option<f64> {
        let s = self.envelope_slope(self.beta());
        s.is_finite().then_some(s)
    }

    /// Checks `(Ubar**)'(x) <= U'(g(x))` on the grid points beyond the first
    /// segment (the whole grid if there are no segments).
    pub fn slope_bound_check(&self, grid: &[f64]) -> SlopeBound {
        let start = self.segments.first().map_or(self.beta(), |s| s.a_plus);
        let u = self.composed.utility();
        let g = self.composed.incentive();
        let mut report = SlopeBound { holds: true, violation: None, max_excess: f64::NEG_INFINITY };
        for &x in grid.iter().filter(|&&x| x > start) {
            let lhs = self.envelope_slope(x);
            let rhs = u.marginal(g.value(x));
            let excess = lhs - rhs;
            if excess > report.max_excess {
                report.max_excess = excess;
            }
            if excess > 1e-12 * rhs.abs().max(1.0) && report.holds {
                report.holds = false;
                report.violation = Some(x);
            }
        }
        report
    }
}

/// Outcome of [`PiecewiseUtility::slope_bound_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeBound {
    pub holds: bool,
    /// First grid point where the bound fails.
    pub violation: Option<f64>,
    /// Largest `(Ubar**)' - U'(g)` seen; `-inf` for an empty grid.
    pub max_excess: f64,
}

/// Tangency point `x* = k / (1 - p)`.
pub fn tangency_point(p: f64, k: f64) -> f64 {
    k / (1.0 - p)
}

/// Tangent slope `y* = lambda^p (p k / (1 - p))^(p - 1)`.
pub fn tangent_slope(p: f64, lambda: f64, k: f64) -> f64 {
    lambda.powf(p) * (p * k / (1.0 - p)).powf(p - 1.0)
}

/// Closed-form envelope for power utility `x^p / p` and `g = lambda (x - k)^+`:
/// one segment `[0, x*]` through the origin with slope `y*`.
pub fn concavify_closed_form(p: f64, lambda: f64, k: f64) -> Result<PiecewiseUtility> {
    if !(k > 0.0) {
        return Err(Error::InvalidIncentive(format!("closed form needs a positive strike, got {k}")));
    }
    if lambda > 1.0 + 1e-12 {
        return Err(Error::SlopeViolation { slope: lambda });
    }
    let composed = compose(UtilityFunction::power(p)?, IncentiveScheme::call(lambda, k)?)?;
    let segment =
        EnvelopeSegment { a_minus: 0.0, a_plus: tangency_point(p, k), gamma: tangent_slope(p, lambda, k), alpha: 0.0 };
    Ok(PiecewiseUtility { composed, segments: vec![segment], source: EnvelopeSource::PowerCall { p, lambda, k } })
}

/// Wraps an already-concave composed utility (no segments). The caller
/// asserts concavity; used for identity incentives.
pub fn without_envelope(composed: ComposedUtility) -> PiecewiseUtility {
    PiecewiseUtility { composed, segments: Vec::new(), source: EnvelopeSource::Numeric }
}

/// Numeric concave envelope: upper hull of grid samples, then each hull gap is
/// refined by bisection on the slope until the left and right tangent
/// intercepts agree.
pub fn concavify_numeric(composed: &ComposedUtility, grid: &Grid) -> Result<PiecewiseUtility> {
    let beta = composed.beta();
    let finite_at_beta = composed.value(beta).is_finite();
    let xs: Vec<f64> =
        grid.points(beta, finite_at_beta).into_iter().filter(|&x| composed.value(x).is_finite()).collect();
    if xs.len() < 2 {
        return Err(Error::Domain("composed utility is -inf on the whole grid".into()));
    }
    let fs: Vec<f64> = xs.iter().map(|&x| composed.value(x)).collect();
    let hull = upper_hull(&xs, &fs);
    let spacing = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;

    let mut segments: Vec<EnvelopeSegment> = Vec::new();
    for w in hull.windows(2) {
        let (i, j) = (w[0], w[1]);
        if j <= i + 1 {
            continue;
        }
        let chord = (fs[j] - fs[i]) / (xs[j] - xs[i]);
        let strictly_below = (i + 1..j).any(|m| {
            let line = fs[i] + chord * (xs[m] - xs[i]);
            line - fs[m] > 1e-10 * (1.0 + fs[m].abs())
        });
        if !strictly_below {
            continue;
        }
        let left_lo = xs[i.saturating_sub(2)];
        let split = xs[i + 1].max(xs[(i + j) / 2]).min(xs[j - 1]);
        let right_hi = if j + 1 >= xs.len() { f64::INFINITY } else { xs[(j + 2).min(xs.len() - 1)] };
        let seg = refine_segment(composed, left_lo, split, right_hi, chord)?;
        if seg.a_plus - seg.a_minus < spacing {
            continue;
        }
        match segments.last_mut() {
            Some(prev) if seg.a_minus <= prev.a_plus + 1e-9 * (1.0 + prev.a_plus.abs()) => {
                if (seg.gamma - prev.gamma).abs() <= 1e-9 * prev.gamma.abs() {
                    prev.a_plus = prev.a_plus.max(seg.a_plus);
                } else if seg.a_plus - seg.a_minus > prev.a_plus - prev.a_minus {
                    *prev = seg;
                }
            }
            _ => segments.push(seg),
        }
    }
    Ok(PiecewiseUtility { composed: composed.clone(), segments, source: EnvelopeSource::Numeric })
}

/// Monotone-chain upper hull over points sorted by x; returns vertex indices.
fn upper_hull(xs: &[f64], fs: &[f64]) -> Vec<usize> {
    let mut hull: Vec<usize> = Vec::with_capacity(xs.len());
    for k in 0..xs.len() {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (xs[b] - xs[a]) * (fs[k] - fs[a]) - (fs[b] - fs[a]) * (xs[k] - xs[a]);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(k);
    }
    hull
}

/// Solves for the slope at which the best intercept on `[left_lo, split]`
/// equals the best intercept on `[split, right_hi]`. The difference is
/// increasing in the slope, so bisection applies.
fn refine_segment(
    composed: &ComposedUtility,
    left_lo: f64,
    split: f64,
    right_hi: f64,
    chord: f64,
) -> Result<EnvelopeSegment> {
    let gap = |gamma: f64| {
        let (_, l) = composed.sup_minus_linear(gamma, left_lo, split);
        let (_, r) = composed.sup_minus_linear(gamma, split, right_hi);
        l - r
    };
    let (mut lo, mut hi) = (chord, chord);
    let mut expansions = 0;
    while gap(lo) >= 0.0 {
        lo *= 0.5;
        expansions += 1;
        if expansions > 200 {
            return Err(Error::Convergence { method: "tangency bracket", iterations: 200 });
        }
    }
    while gap(hi) <= 0.0 {
        hi *= 2.0;
        expansions += 1;
        if expansions > 400 {
            return Err(Error::Convergence { method: "tangency bracket", iterations: 200 });
        }
    }
    let gamma = bisect(gap, lo, hi, 1e-10 * f64::EPSILON * hi, 200)?;
    let (a_minus, alpha) = composed.sup_minus_linear(gamma, left_lo, split);
    let (a_plus, _) = composed.sup_minus_linear(gamma, split, right_hi);
    Ok(EnvelopeSegment { a_minus, a_plus, gamma, alpha })
}
