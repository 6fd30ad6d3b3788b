//! Optimal terminal wealth, ruin probability and a replay of the explicit
//! hedge on a graded time grid.

use incentive_duality::bs::{BsMarket, BsProblem};
use incentive_duality::mc::{graded_time_grid, replay_gbm_streaming, ReplayMode};

fn main() -> incentive_duality::Result<()> {
    let market = BsMarket::new(0.1, 0.2, 1.0)?;
    let problem = BsProblem::new(market, 0.5, 0.25, 3.0)?;
    let x = 1.0;
    let pay = problem.optimal_wealth(x)?;
    println!("threshold on W_T: {:.6}", pay.threshold());
    println!("ruin probability: {:.6}", pay.ruin_probability());
    println!("wealth just above the threshold: {:.6} (= x*)", pay.value_at_threshold());
    println!("cash in stock at t=0: {:.6}", pay.hedge(0.0, 0.0)?);

    for n in [256, 1024, 4096] {
        let times = graded_time_grid(1.0, n, 0.3);
        let out = replay_gbm_streaming(0.1, 0.2, &times, x, 4000, 7, ReplayMode::Unconstrained, |t, w, _, _| {
            pay.hedge(t, w).unwrap_or(f64::NAN)
        });
        let mse = out.iter().map(|o| (o.x_terminal - pay.value(o.w_terminal)).powi(2)).sum::<f64>() / out.len() as f64;
        println!("{n:>5} steps: RMS replication error {:.4}", mse.sqrt());
    }
    Ok(())
}
