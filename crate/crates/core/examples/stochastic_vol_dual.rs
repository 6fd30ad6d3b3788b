//! Dual value `E[Ubar*(y Z_T)]` under the minimal martingale density in
//! correlated stochastic-volatility models, from one shared sample per model.
//! The density only sees `W^1`, which every model draws first from the same
//! per-path stream, so the three rows coincide.

use incentive_duality::models::{dual_curve_mc, ExcessRate, ModelSpec};
use incentive_duality::utility::{concavify_closed_form, conjugate};

fn main() -> incentive_duality::Result<()> {
    let du = conjugate(&concavify_closed_form(0.5, 0.25, 3.0)?);
    let f = ExcessRate::Tanh { m: 0.3, s: 1.0 };
    let ys = [0.05, 0.1, 0.2];
    for spec in [
        ModelSpec::hull_white_example(f, 1.0, 256),
        ModelSpec::scott_example(f, 1.0, 256),
        ModelSpec::heston_example(f, 1.0, 256),
    ] {
        let curve = dual_curve_mc(&spec, &du, &ys, 20_000, 11)?;
        let cells: Vec<String> = curve
            .iter()
            .map(|r| format!("v({}) = {:.4} +- {:.4}", r.y, r.estimate.mean, r.estimate.std_error))
            .collect();
        println!("{:<10} {}", spec.model.tag(), cells.join(", "));
    }
    Ok(())
}
