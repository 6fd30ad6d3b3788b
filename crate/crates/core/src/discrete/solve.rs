use serde::Serialize;

use super::FiniteMarket;
use crate::error::Result;
use crate::numeric::{golden_max, golden_min};
use crate::utility::{conjugate, DualUtility, PiecewiseUtility};

const FLAT_TOL: f64 = 1e-12;
const ATOM_MERGE: f64 = 1e-12;
const KINK_MATCH: f64 = 1e-10;

/// Maximizing positions; `lo == hi` when the maximizer is unique.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArgMax {
    pub lo: f64,
    pub hi: f64,
}

impl ArgMax {
    pub fn is_unique(&self) -> bool {
        self.lo == self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrimalOutcome {
    pub value: f64,
    pub h_star: ArgMax,
    /// Terminal wealth per state at `h_star.hi`.
    pub payoff: Vec<f64>,
}

/// `sup_h sum_i p_i f(x + h (r_i - 1))` with `f = Ubar` or `f = Ubar**`.
///
/// The objective is concave between consecutive breakpoints, i.e. positions
/// where some state's wealth crosses a kink of `g`, an envelope endpoint or
/// the edge of the domain. Each sub-interval is searched by golden section.
pub fn primal_value_exact(mkt: &FiniteMarket, pu: &PiecewiseUtility, x: f64, use_envelope: bool) -> PrimalOutcome {
    let f = |w: f64| if use_envelope { pu.envelope(w) } else { pu.value(w) };
    let objective = |h: f64| -> f64 { mkt.states().iter().map(|s| s.p * f(x + h * (s.r - 1.0))).sum() };
    let (h_min, h_max) = mkt.h_bounds(x);
    let mut critical: Vec<f64> = vec![0.0, pu.beta()];
    critical.extend(pu.composed().incentive().kinks());
    for seg in pu.segments() {
        critical.push(seg.a_minus);
        critical.push(seg.a_plus);
    }
    let mut hs = vec![h_min, h_max];
    for s in mkt.states() {
        for &c in &critical {
            let h = (c - x) / (s.r - 1.0);
            if h > h_min && h < h_max {
                hs.push(h);
            }
        }
    }
    hs.sort_by(f64::total_cmp);
    hs.dedup();

    let mut candidates: Vec<(f64, f64)> = hs.iter().map(|&h| (h, objective(h))).collect();
    for w in hs.windows(2) {
        candidates.push(golden_max(objective, w[0], w[1], 1e-13 * (1.0 + w[1].abs())));
    }
    let best = candidates.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    let tol = FLAT_TOL * (1.0 + best.abs());
    let near: Vec<f64> = candidates.iter().filter(|c| c.1 >= best - tol).map(|c| c.0).collect();
    let lo = near.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = near.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // a lone golden-section maximizer sits within its tolerance of the
    // breakpoints it was bracketed by; collapse such near-duplicates
    let h_star = if hi - lo <= 1e-9 * (1.0 + hi.abs()) { ArgMax { lo: hi, hi } } else { ArgMax { lo, hi } };
    PrimalOutcome { value: best, payoff: mkt.payoff(x, h_star.hi), h_star }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualOutcome {
    pub y: f64,
    pub value: f64,
    pub q_star: Vec<f64>,
    /// Some `q_i` of the minimizer is (numerically) zero.
    pub at_boundary: bool,
}

/// `inf_q sum_i p_i Ubar*(y q_i / p_i)` over the martingale measures.
///
/// Binomial markets have a single measure. Otherwise the measure is written
/// as a convex combination of the polytope vertices and the weights are
/// improved by pairwise golden-section moves until no move helps.
pub fn dual_value_exact(mkt: &FiniteMarket, du: &DualUtility, y: f64) -> DualOutcome {
    let vertices = mkt.emm_vertices();
    let value_at = |q: &[f64]| -> f64 { q.iter().zip(mkt.states()).map(|(&qi, s)| s.p * du.value(y * qi / s.p)).sum() };
    let mix = |w: &[f64]| -> Vec<f64> {
        let mut q = vec![0.0; mkt.len()];
        for (wv, v) in w.iter().zip(&vertices) {
            for (qi, vi) in q.iter_mut().zip(v) {
                *qi += wv * vi;
            }
        }
        q
    };
    let m = vertices.len();
    let mut weights = vec![1.0 / m as f64; m];
    let mut current = value_at(&mix(&weights));
    if m > 1 {
        for _sweep in 0..200 {
            let before = current;
            for a in 0..m {
                for b in (a + 1)..m {
                    let pool = weights[a] + weights[b];
                    if pool <= 0.0 {
                        continue;
                    }
                    let trial = |t: f64| {
                        let mut w = weights.clone();
                        w[a] = t;
                        w[b] = pool - t;
                        value_at(&mix(&w))
                    };
                    let (t, v) = golden_min(trial, 0.0, pool, 1e-15 * pool.max(1e-300));
                    if v < current {
                        weights[a] = t;
                        weights[b] = pool - t;
                        current = v;
                    }
                }
            }
            if before - current <= 1e-15 * (1.0 + current.abs()) {
                break;
            }
        }
    }
    let q_star = mix(&weights);
    let at_boundary = q_star.iter().any(|&q| q < 1e-9);
    DualOutcome { y, value: current, q_star, at_boundary }
}

/// `y = w'(x)` as the minimizer of `v(y) + x y`, together with the dual
/// solution there. Candidates that put an atom exactly on a kink are checked
/// explicitly, since the minimizer often sits on one.
pub fn marginal_value(mkt: &FiniteMarket, du: &DualUtility, x: f64) -> DualOutcome {
    let obj = |y: f64| dual_value_exact(mkt, du, y).value + x * y;
    let (t, mut best) = golden_min(|t| obj(t.exp()), (1e-8f64).ln(), (1e4f64).ln(), 1e-13);
    let mut y_best = t.exp();
    let q0 = dual_value_exact(mkt, du, y_best).q_star;
    for gamma in du.kinks() {
        for (qi, s) in q0.iter().zip(mkt.states()) {
            if *qi <= 0.0 {
                continue;
            }
            let y = gamma * s.p / qi;
            let v = obj(y);
            if v <= best + 1e-13 * (1.0 + best.abs()) && (y / y_best - 1.0).abs() < 1e-6 {
                best = v;
                y_best = y;
            }
        }
    }
    dual_value_exact(mkt, du, y_best)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomReport {
    pub y: f64,
    /// Atoms of the dual optimizer `y q_i / p_i` with their `P`-masses.
    pub delta: Vec<(f64, f64)>,
    pub gamma: Vec<f64>,
    pub intersection: Vec<f64>,
    pub condition_holds: bool,
    pub verdict: String,
}

/// Atoms of the dual optimizer at `y` and their intersection with the kinks.
pub fn atom_report(mkt: &FiniteMarket, du: &DualUtility, y: f64) -> AtomReport {
    let sol = dual_value_exact(mkt, du, y);
    let mut atoms: Vec<(f64, f64)> = sol.q_star.iter().zip(mkt.states()).map(|(q, s)| (y * q / s.p, s.p)).collect();
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut delta: Vec<(f64, f64)> = Vec::new();
    for (v, m) in atoms {
        match delta.last_mut() {
            Some(last) if (v - last.0).abs() <= ATOM_MERGE * v.abs().max(last.0.abs()) => last.1 += m,
            _ => delta.push((v, m)),
        }
    }
    let gamma = du.kinks();
    let intersection: Vec<f64> =
        delta.iter().map(|a| a.0).filter(|&d| gamma.iter().any(|&g| (d - g).abs() <= KINK_MATCH * g)).collect();
    let condition_holds = intersection.is_empty();
    AtomReport {
        y,
        delta,
        gamma,
        intersection,
        condition_holds,
        verdict: if condition_holds { "uniqueness certified".into() } else { "uniqueness not certified".into() },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapReport {
    pub u: f64,
    pub w: f64,
    pub gap: f64,
}

/// `w(x) - u(x)` from the exact primal solutions with and without the envelope.
pub fn biduality_gap(mkt: &FiniteMarket, pu: &PiecewiseUtility, x: f64) -> GapReport {
    let u = primal_value_exact(mkt, pu, x, false).value;
    let w = primal_value_exact(mkt, pu, x, true).value;
    GapReport { u, w, gap: w - u }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Selection {
    Unique { payoff: Vec<f64> },
    NonUnique { intervals: Vec<(f64, f64)>, budget_range: (f64, f64) },
    Infeasible { intervals: Vec<(f64, f64)>, budget_range: (f64, f64) },
}

/// Terminal wealth per state with `w_i in -dUbar*(y z_i)` and budget
/// `sum_i q_i w_i = x`, where `y = w'(x)`.
pub fn subdifferential_selection(mkt: &FiniteMarket, pu: &PiecewiseUtility, x: f64) -> Result<Selection> {
    let du = conjugate(pu);
    let sol = marginal_value(mkt, &du, x);
    let z = mkt.density(&sol.q_star);
    let intervals: Vec<(f64, f64)> = z.iter().map(|&zi| du.subdifferential(sol.y * zi)).collect();
    let lo: f64 = intervals.iter().zip(&sol.q_star).map(|(iv, q)| q * iv.0).sum();
    let hi: f64 = intervals.iter().zip(&sol.q_star).map(|(iv, q)| q * iv.1).sum();
    let tol = 1e-9 * (1.0 + x.abs());
    if x < lo - tol || x > hi + tol {
        return Ok(Selection::Infeasible { intervals, budget_range: (lo, hi) });
    }
    let free: Vec<usize> =
        (0..intervals.len()).filter(|&i| intervals[i].1 > intervals[i].0 && sol.q_star[i] > 0.0).collect();
    let at_edge = (x - lo).abs() <= tol || (x - hi).abs() <= tol;
    if free.len() <= 1 || at_edge {
        let mut payoff: Vec<f64> = intervals.iter().map(|iv| iv.0).collect();
        if (x - hi).abs() <= tol {
            payoff = intervals.iter().map(|iv| iv.1).collect();
        } else if let Some(&i) = free.first() {
            let rest: f64 = (0..payoff.len()).filter(|&j| j != i).map(|j| sol.q_star[j] * payoff[j]).sum();
            payoff[i] = (x - rest) / sol.q_star[i];
        }
        return Ok(Selection::Unique { payoff });
    }
    Ok(Selection::NonUnique { intervals, budget_range: (lo, hi) })
}
