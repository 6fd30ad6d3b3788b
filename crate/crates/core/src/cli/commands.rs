use rand::Rng;
use rand_distr::StandardNormal;
use serde_json::{json, Value};

use super::config::{Resolved, RunConfig, UtilitySpec};
use super::{Command, GlobalArgs, Output};
use crate::bs::{driftless_simulate, optimal_scaling, scale_family, BsProblem, DriftlessPlan};
use crate::discrete::{atom_report, biduality_gap, marginal_value, primal_value_exact, subdifferential_selection};
use crate::error::{Error, Result};
use crate::mc::{estimate, graded_time_grid, par_map_paths, replay_gbm_streaming, McEstimate, ReplayMode, RngPlan};
use crate::models::{atom_diagnostic, dual_curve_mc, sample_density, Verdict};
use crate::numeric::{linspace, logspace};
use crate::utility::{
    compose, concavify_closed_form, concavify_numeric, conjugate, conjugate_roundtrip_check, tangency_point,
    without_envelope, write_table, ComposedUtility, Grid, PiecewiseUtility,
};

const N_SE: f64 = 3.0;
const HEDGE_GRADING: f64 = 0.3;

pub(super) fn dispatch(cmd: &Command, g: &GlobalArgs, cfg: &RunConfig) -> Result<Output> {
    let r = Resolved { g, cfg };
    match cmd {
        Command::Concavify => concavify(&r),
        Command::SolveBs { driftless, alpha_scan } => solve_bs(&r, *driftless, *alpha_scan),
        Command::HedgeSim { absorbing, uniform } => hedge_sim(&r, *absorbing, *uniform),
        Command::DriftlessSim { s_max } => driftless_sim(&r, *s_max),
        Command::Scaling => scaling(&r),
        Command::Discrete => discrete(&r),
        Command::ModelsDiag { y } => models_diag(&r, y.as_deref()),
    }
}

fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

fn check(value: f64, tol: f64) -> Value {
    json!({ "value": value, "tol": tol, "pass": value <= tol })
}

fn mc_check(est: &McEstimate, target: f64) -> Value {
    json!({
        "mean": est.mean,
        "se": est.std_error,
        "n": est.n,
        "target": target,
        "z": est.z_score(target),
        "tol_se": N_SE,
        "pass": est.within(target, N_SE),
    })
}

fn table_names(tables: &[(String, Vec<u8>)]) -> Vec<&str> {
    tables.iter().map(|(n, _)| n.as_str()).collect()
}

/// Closed-form envelope for power utility with one call, the utility itself
/// when the incentive is affine, the numeric hull otherwise.
fn envelope_for(r: &Resolved, composed: &ComposedUtility, x_max: f64) -> Result<PiecewiseUtility> {
    if composed.incentive().kinks().is_empty() {
        return Ok(without_envelope(composed.clone()));
    }
    if let (UtilitySpec::Power { p }, Some((lambda, k))) = (r.utility_spec(), composed.incentive().as_call()) {
        return concavify_closed_form(p, lambda, k);
    }
    let grid =
        Grid { n_points: r.cfg.numeric.grid_points.unwrap_or(2048), ..Grid::default_for(composed.beta(), x_max) };
    concavify_numeric(composed, &grid)
}

fn default_x_max(r: &Resolved, composed: &ComposedUtility) -> f64 {
    let kinks = composed.incentive().kinks().iter().copied().fold(0.0, f64::max);
    let tangency = match (r.utility_spec(), composed.incentive().as_call()) {
        (UtilitySpec::Power { p }, Some((_, k))) => tangency_point(p, k),
        _ => 0.0,
    };
    r.cfg.numeric.x_max.unwrap_or((4.0 * kinks.max(tangency)).max(20.0))
}

fn segments_json(pu: &PiecewiseUtility) -> Value {
    pu.segments()
        .iter()
        .map(|s| json!({ "a_minus": s.a_minus, "a_plus": s.a_plus, "gamma": s.gamma, "alpha": s.alpha }))
        .collect()
}

fn concavify(r: &Resolved) -> Result<Output> {
    r.check_preset(&["paper-example", "concave"])?;
    let composed = compose(r.utility()?, r.incentive()?)?;
    let x_max = default_x_max(r, &composed);
    let pu = envelope_for(r, &composed, x_max)?;

    let mut summary = json!({
        "command": "concavify",
        "utility": r.utility_spec(),
        "incentive": r.incentive_spec(),
        "beta": pu.beta(),
        "closed_form": pu.is_closed_form(),
        "segments": segments_json(&pu),
        "gamma_set": pu.gamma_set(),
        "x_max": x_max,
    });

    if pu.is_closed_form() {
        let grid =
            Grid { n_points: r.cfg.numeric.grid_points.unwrap_or(2048), ..Grid::default_for(composed.beta(), x_max) };
        let numeric = concavify_numeric(&composed, &grid)?;
        let diff = match (numeric.segments().first(), pu.segments().first()) {
            (Some(a), Some(b)) => {
                (a.a_minus - b.a_minus).abs().max((a.a_plus - b.a_plus).abs()).max((a.gamma - b.gamma).abs())
            }
            _ => f64::INFINITY,
        };
        summary["numeric_agreement"] = check(diff, 1e-8);
    }

    let lo = pu.beta().max(0.0) + x_max * 1e-4;
    let dominance = linspace(lo, x_max, 4001)
        .into_iter()
        .map(|x| pu.value(x) - pu.envelope(x))
        .filter(|d| d.is_finite())
        .fold(0.0, f64::max);
    summary["dominance"] = check(dominance, 1e-12);
    let roundtrip = conjugate_roundtrip_check(&pu, &linspace(x_max / 200.0, x_max, 200));
    summary["roundtrip"] = check(roundtrip, if pu.is_closed_form() { 1e-8 } else { 1e-4 });

    let du = conjugate(&pu);
    let y_ref = du.y_flat().unwrap_or(1.0);
    let xs = linspace(x_max / 400.0, x_max, 400);
    let ys = logspace(1e-3 * y_ref, 10.0 * y_ref, 400);
    let mut buf = Vec::new();
    write_table(&pu, &du, &xs, &ys, &mut buf)?;
    let tables = vec![("envelope.csv".to_string(), buf)];
    summary["tables"] = json!(table_names(&tables));
    Ok(Output { summary, tables })
}

fn problem(r: &Resolved) -> Result<(BsProblem, f64)> {
    let (p, lambda, k) = r.power_call()?;
    let market = r.market()?;
    if market.theta() == 0.0 {
        return Err(Error::DegenerateMarket);
    }
    Ok((BsProblem::new(market, p, lambda, k)?, r.x(1.0)))
}

fn problem_json(b: &BsProblem) -> Value {
    json!({
        "p": b.p, "lambda": b.lambda, "k": b.k,
        "mu": b.market.mu, "sigma": b.market.sigma, "horizon": b.market.horizon,
        "theta": b.market.theta(),
    })
}

fn rra_panel<F>(labels: &[f64], ys: &[f64], make: F) -> Result<Vec<u8>>
where
    F: Fn(f64) -> Result<BsProblem>,
{
    let problems: Vec<BsProblem> = labels.iter().map(|&v| make(v)).collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(ys.len());
    for &y in ys {
        let mut row = vec![y];
        for b in &problems {
            row.push(b.rra_dual(y)?);
        }
        rows.push(row);
    }
    let header: Vec<String> =
        std::iter::once("y".to_string()).chain(labels.iter().map(|v| format!("rra_{v}"))).collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    csv_table(&header, rows)
}

/// `E^Q[X_T]` with `W_T = sqrt(T) xi - theta T` under the pricing measure.
fn budget_estimate(b: &BsProblem, x: f64, n: usize, seed: u64) -> Result<McEstimate> {
    let pay = b.optimal_wealth(x)?;
    let (t, th) = (b.market.horizon, b.market.theta());
    let xs = par_map_paths(RngPlan::new(seed), n, |_, rng| {
        let xi: f64 = rng.sample(StandardNormal);
        pay.value(t.sqrt() * xi - th * t)
    });
    estimate(&xs, "E^Q[X_T]", seed)
}

fn solve_bs(r: &Resolved, driftless: bool, alpha_scan: bool) -> Result<Output> {
    r.check_preset(&["paper-example"])?;
    if driftless && r.market()?.theta() == 0.0 {
        let mut out = driftless_sim(r, None)?;
        out.summary["command"] = json!("solve-bs");
        return Ok(out);
    }
    let (b, x) = problem(r)?;
    let pv = b.primal_value(x)?;
    let pay = b.optimal_wealth(x)?;

    let ys = logspace(1e-3, 1.0, 200);
    let mut v_rows = Vec::with_capacity(ys.len());
    for &y in &ys {
        let d = b.dual_derivatives(y)?;
        v_rows.push(vec![y, d.v, d.dv, d.d2v, b.rra_dual(y)?]);
    }
    let x_star = b.x_star();
    let mut w_rows = Vec::new();
    for xx in linspace(0.05 * x_star, 5.0 * x_star, 200) {
        let q = b.primal_value(xx)?;
        w_rows.push(vec![xx, q.w, q.y]);
    }
    let fig_ys = logspace(0.01, 1.0, 100);
    let tables = vec![
        ("v_curve.csv".to_string(), csv_table(&["y", "v", "v_prime", "v_second", "rra_v"], v_rows)?),
        ("w_curve.csv".to_string(), csv_table(&["x", "w", "w_prime"], w_rows)?),
        (
            "figure2_rra_p.csv".to_string(),
            rra_panel(&[0.125, 0.25, 0.5, 0.75], &fig_ys, |p| BsProblem::new(b.market, p, b.lambda, b.k))?,
        ),
        (
            "figure2_rra_k.csv".to_string(),
            rra_panel(&[0.25, 0.5, 1.0, 2.0], &fig_ys, |k| b.with_incentive(b.lambda, k))?,
        ),
    ];

    let mut summary = json!({
        "command": "solve-bs",
        "problem": problem_json(&b),
        "x": x,
        "x_star": x_star,
        "y_star": b.y_star(),
        "w": pv.w,
        "w_prime": pv.y,
        "threshold": pay.threshold(),
        "ruin_probability": pay.ruin_probability(),
    });
    let n = r.paths(100_000);
    if n > 0 {
        let seed = r.seed();
        summary["martingale_check"] = mc_check(&budget_estimate(&b, x, n, seed)?, x);
        summary["seed"] = json!(seed);
    }
    if alpha_scan {
        let out = optimal_scaling(b.market, b.p, b.k, b.lambda, x)?;
        summary["alpha_scan"] = json!({
            "alpha": out.alpha.map_or(json!("none"), |a| json!(a)),
            "c_star": out.c_star,
            "max_elasticity": out.max_elasticity,
            "scan_range": out.scan_range,
            "reason": out.reason,
        });
    }
    summary["tables"] = json!(table_names(&tables));
    Ok(Output { summary, tables })
}

fn hedge_sim(r: &Resolved, absorbing: bool, uniform: bool) -> Result<Output> {
    r.check_preset(&["paper-example"])?;
    let (b, x) = problem(r)?;
    let pay = b.optimal_wealth(x)?;
    let (n_paths, n_steps, seed) = (r.paths(10_000), r.steps(1024), r.seed());
    let m = b.market;
    let times = if uniform {
        linspace(0.0, m.horizon, n_steps + 1)
    } else {
        graded_time_grid(m.horizon, n_steps, HEDGE_GRADING)
    };
    let mode = if absorbing { ReplayMode::Absorbing } else { ReplayMode::Unconstrained };
    let hedge = |t: f64, w: f64, _s: f64, _x: f64| pay.hedge(t, w).unwrap_or(f64::NAN);
    let outcomes = replay_gbm_streaming(m.mu, m.sigma, &times, x, n_paths, seed, mode, hedge);

    let errors: Vec<f64> = outcomes.iter().map(|o| o.x_terminal - pay.value(o.w_terminal)).collect();
    let sq: Vec<f64> = errors.iter().map(|e| e * e).collect();
    let mse = estimate(&sq, "squared replication error", seed)?;
    let max_abs = errors.iter().map(|e| e.abs()).fold(0.0, f64::max);
    let th = m.theta();
    let weighted: Vec<f64> =
        outcomes.iter().map(|o| o.x_terminal * (-th * o.w_terminal - 0.5 * th * th * m.horizon).exp()).collect();
    let budget = estimate(&weighted, "E[Z_T X_T]", seed)?;
    let min_wealth = outcomes.iter().map(|o| o.x_terminal).fold(f64::INFINITY, f64::min);

    let mut tables = Vec::new();
    if r.g.dump {
        tables.push(("hedge_paths.csv".to_string(), dump_paths(&b, x, &times, seed, n_paths.min(20), mode)?));
    }
    let summary = json!({
        "command": "hedge-sim",
        "problem": problem_json(&b),
        "x": x,
        "n_paths": n_paths,
        "n_steps": n_steps,
        "seed": seed,
        "grid": if uniform { json!("uniform") } else { json!({ "graded": HEDGE_GRADING }) },
        "mode": if absorbing { "absorbing" } else { "unconstrained" },
        "rms_error": mse.mean.sqrt(),
        "rms_error_se": 0.5 * mse.std_error / mse.mean.sqrt().max(f64::MIN_POSITIVE),
        "max_abs_error": max_abs,
        "min_terminal_wealth": min_wealth,
        "budget_check": mc_check(&budget, x),
        "tables": table_names(&tables),
    });
    Ok(Output { summary, tables })
}

/// `(path, t, W_t, H_t, X_t)` rows for the first paths, drawn from the same
/// per-path streams as the replay.
fn dump_paths(b: &BsProblem, x0: f64, times: &[f64], seed: u64, n: usize, mode: ReplayMode) -> Result<Vec<u8>> {
    let pay = b.optimal_wealth(x0)?;
    let (mu, sigma) = (b.market.mu, b.market.sigma);
    let price = |t: f64, w: f64| (sigma * w + (mu - 0.5 * sigma * sigma) * t).exp();
    let plan = RngPlan::new(seed);
    let mut rows = Vec::new();
    for i in 0..n {
        let mut rng = plan.path_rng(i as u64);
        let (mut w, mut x) = (0.0, x0);
        for j in 0..times.len() - 1 {
            let h = pay.hedge(times[j], w)?;
            rows.push(vec![i as f64, times[j], w, h, x]);
            let z: f64 = rng.sample(StandardNormal);
            let w_next = w + z * (times[j + 1] - times[j]).sqrt();
            if x > 0.0 || mode == ReplayMode::Unconstrained {
                let (s0, s1) = (price(times[j], w), price(times[j + 1], w_next));
                x += h * (s1 - s0) / s0;
                if x <= 0.0 && mode == ReplayMode::Absorbing {
                    x = 0.0;
                }
            }
            w = w_next;
        }
        rows.push(vec![i as f64, times[times.len() - 1], w, 0.0, x]);
    }
    csv_table(&["path", "t", "W_t", "H_t", "X_t"], rows)
}

fn driftless_sim(r: &Resolved, s_max: Option<f64>) -> Result<Output> {
    r.check_preset(&["paper-example"])?;
    let (p, lambda, k) = r.power_call()?;
    let market = r.market()?;
    let pu = concavify_closed_form(p, lambda, k)?;
    let x_star = tangency_point(p, k);
    let x = r.x(1.0);
    let plan = DriftlessPlan::new(x, x_star, market.sigma, market.horizon)?;
    let (n_paths, n_steps, seed) = (r.paths(100_000), r.steps(4096), r.seed());
    let rep = driftless_simulate(&plan, &pu, n_paths, n_steps, seed, s_max)?;
    let summary = json!({
        "command": "driftless-sim",
        "x": x,
        "x_star": x_star,
        "sigma": market.sigma,
        "horizon": market.horizon,
        "seed": seed,
        "s_max": rep.s_max,
        "n_steps": rep.n_steps,
        "unabsorbed_fraction": rep.unabsorbed_fraction,
        "hit_probability": mc_check(&rep.hit_prob, plan.hit_probability()),
        "expected_utility": mc_check(&rep.utility_composed, pu.envelope(x)),
        "expected_terminal_wealth": mc_check(&rep.mean_terminal, x),
        "buy_and_hold_utility": pu.value(x),
        "beats_buy_and_hold": rep.utility_composed.mean > pu.value(x),
        "tables": [],
    });
    Ok(Output { summary, tables: Vec::new() })
}

fn scaling(r: &Resolved) -> Result<Output> {
    r.check_preset(&["paper-example"])?;
    let (base, x) = problem(r)?;
    let (p, kappa, l) = (base.p, base.k, base.lambda);
    let ys = logspace(0.01, 1.0, 20);
    let xs = linspace(0.5, 20.0, 20);
    let mut checks = Vec::new();
    for alpha in [0.5, 1.0, 2.0] {
        let (k_a, l_a) = match scale_family(p, kappa, l, alpha) {
            Ok(v) => v,
            Err(Error::SlopeViolation { slope }) => {
                checks.push(json!({ "alpha": alpha, "skipped": format!("lambda(alpha) = {slope} > 1") }));
                continue;
            }
            Err(e) => return Err(e),
        };
        let scaled = base.with_incentive(l_a, k_a)?;
        let (mut dv, mut dw, mut drra) = (0.0f64, 0.0f64, 0.0f64);
        for &y in &ys {
            dv = dv.max((scaled.dual_value(y)? - alpha * base.dual_value(y)?).abs());
            drra = drra.max((scaled.rra_dual(y)? - base.rra_dual(y)?).abs());
        }
        for &xx in &xs {
            dw = dw.max((scaled.primal_value(xx)?.w - alpha * base.primal_value(xx / alpha)?.w).abs());
        }
        checks.push(json!({
            "alpha": alpha, "k": k_a, "lambda": l_a,
            "dual_identity": check(dv, 1e-8),
            "primal_identity": check(dw, 1e-6),
            "rra_invariance": check(drra, 1e-8),
        }));
    }
    let out = optimal_scaling(base.market, p, kappa, l, x)?;
    let summary = json!({
        "command": "scaling",
        "problem": problem_json(&base),
        "x": x,
        "identities": checks,
        "optimal_alpha": out.alpha.map_or(json!("none"), |a| json!(a)),
        "c_star": out.c_star,
        "max_elasticity": out.max_elasticity,
        "scan_range": out.scan_range,
        "reason": out.reason,
        "tables": [],
    });
    Ok(Output { summary, tables: Vec::new() })
}

fn discrete(r: &Resolved) -> Result<Output> {
    r.check_preset(&["counterexample", "concave", "paper-example"])?;
    let mkt = r.finite_market()?;
    let x = r.x(1.0);
    let composed = compose(r.utility()?, r.incentive()?)?;
    let (h_lo, h_hi) = mkt.h_bounds(x);
    let richest = [h_lo, h_hi].iter().flat_map(|&h| mkt.payoff(x, h)).filter(|v| v.is_finite()).fold(0.0, f64::max);
    let x_max = r.cfg.numeric.x_max.unwrap_or((1.5 * richest).max(default_x_max(r, &composed)));
    let pu = envelope_for(r, &composed, x_max)?;
    let du = conjugate(&pu);

    let gap = biduality_gap(&mkt, &pu, x);
    let dual = marginal_value(&mkt, &du, x);
    let atoms = atom_report(&mkt, &du, dual.y);
    let selection = subdifferential_selection(&mkt, &pu, x)?;
    let primal = primal_value_exact(&mkt, &pu, x, false);
    let envelope = primal_value_exact(&mkt, &pu, x, true);
    let summary = json!({
        "command": "discrete",
        "states": mkt.states(),
        "x": x,
        "utility": r.utility_spec(),
        "incentive": r.incentive_spec(),
        "u": gap.u,
        "w": gap.w,
        "gap": gap.gap,
        "tolerance": 1e-10,
        "h_star": primal.h_star,
        "envelope_h_star": envelope.h_star,
        "envelope_payoff": envelope.payoff,
        "y": dual.y,
        "dual_value": dual.value,
        "q_star": dual.q_star,
        "q_at_boundary": dual.at_boundary,
        "atoms": atoms.delta,
        "gamma": atoms.gamma,
        "intersection": atoms.intersection,
        "condition_holds": atoms.condition_holds,
        "verdict": atoms.verdict,
        "selection": selection,
        "tables": [],
    });
    Ok(Output { summary, tables: Vec::new() })
}

fn models_diag(r: &Resolved, y_flag: Option<&[f64]>) -> Result<Output> {
    let spec = r.model()?;
    let (n, seed) = (r.paths(100_000), r.seed());
    let ds = sample_density(&spec, n, seed)?;
    let atom = atom_diagnostic(&ds)?;
    let norm = estimate(&ds.z_values, "E[Z_T]", seed)?;

    let composed = compose(r.utility()?, r.incentive()?)?;
    let pu = envelope_for(r, &composed, default_x_max(r, &composed))?;
    let du = conjugate(&pu);
    let default_ys = [0.05, 0.1, 0.2, 0.25];
    let ys: Vec<f64> =
        y_flag.map(<[f64]>::to_vec).or_else(|| r.cfg.numeric.y_grid.clone()).unwrap_or_else(|| default_ys.to_vec());
    let dual: Vec<Value> = dual_curve_mc(&spec, &du, &ys, n, seed)?
        .into_iter()
        .map(|d| {
            let mut v = json!({ "y": d.y, "v_hat": d.estimate.mean, "se": d.estimate.std_error });
            if let Some(q) = d.q_star {
                v["q_star"] = json!(q);
                v["boundary_distance"] = json!(d.boundary_distance);
            }
            v
        })
        .collect();

    let mut tables = Vec::new();
    if r.g.dump {
        let mut buf = Vec::new();
        ds.write_csv(&mut buf)?;
        tables.push(("samples.csv".to_string(), buf));
    }
    let verdict = match atom.verdict {
        Verdict::NoAtomDetected => json!("no_atom_detected"),
        Verdict::AtomAt { value, mass } => json!({ "atom_at": { "value": value, "mass": mass } }),
    };
    let summary = json!({
        "command": "models-diag",
        "model": spec,
        "n": n,
        "seed": seed,
        "diagnostic": {
            "max_cdf_jump": atom.max_cdf_jump,
            "ks": atom.ks_to_smoothed,
            "threshold": atom.threshold,
            "verdict": verdict,
        },
        "normalization": mc_check(&norm, 1.0),
        "min_z": ds.min(),
        "truncated_fraction": ds.truncated_fraction,
        "dual": dual,
        "tables": table_names(&tables),
    });
    Ok(Output { summary, tables })
}
