//! Closed-form dual value in a Black-Scholes market against a plain Monte
//! Carlo average of `Ubar*(y Z_T)`.

use incentive_duality::bs::{BsMarket, BsProblem};
use incentive_duality::mc::{estimate, par_map_paths, RngPlan};
use incentive_duality::utility::{concavify_closed_form, conjugate};
use rand::Rng;
use rand_distr::StandardNormal;

fn main() -> incentive_duality::Result<()> {
    let market = BsMarket::new(0.1, 0.2, 1.0)?;
    let problem = BsProblem::new(market, 0.5, 0.25, 3.0)?;
    let du = conjugate(&concavify_closed_form(0.5, 0.25, 3.0)?);
    let th = market.theta();
    let z = par_map_paths(RngPlan::new(1), 200_000, |_, rng| {
        let w: f64 = rng.sample(StandardNormal);
        (-th * w - 0.5 * th * th).exp()
    });
    println!("{:>6} {:>12} {:>12} {:>10} {:>8}", "y", "v(y)", "MC", "SE", "RRA_v");
    for y in [0.05, 0.1, 0.2, 0.25] {
        let values: Vec<f64> = z.iter().map(|&z| du.value(y * z)).collect();
        let mc = estimate(&values, "dual", 1)?;
        println!(
            "{y:>6} {:>12.8} {:>12.8} {:>10.2e} {:>8.4}",
            problem.dual_value(y)?,
            mc.mean,
            mc.std_error,
            problem.rra_dual(y)?
        );
    }
    let pv = problem.primal_value(1.0)?;
    println!("w(1) = {:.10}, w'(1) = {:.10}", pv.w, pv.y);
    Ok(())
}
