//! The family `(k, lambda) = (alpha kappa, alpha^((1-p)/p) l)` leaves relative
//! risk aversion unchanged and scales the dual value by alpha.

use incentive_duality::bs::{optimal_scaling, scale_family, BsMarket, BsProblem};

fn main() -> incentive_duality::Result<()> {
    let market = BsMarket::new(0.1, 0.2, 1.0)?;
    let (p, kappa, l) = (0.5, 3.0, 0.25);
    let base = BsProblem::new(market, p, l, kappa)?;
    for alpha in [0.5, 1.0, 2.0] {
        let (k, lambda) = scale_family(p, kappa, l, alpha)?;
        let scaled = base.with_incentive(lambda, k)?;
        let y = 0.1;
        println!(
            "alpha {alpha}: k {k}, lambda {lambda:.4}, v/alpha {:.10}, RRA {:.10}",
            scaled.dual_value(y)? / alpha,
            scaled.rra_dual(y)?
        );
    }
    let out = optimal_scaling(market, p, kappa, l, 1.0)?;
    match out.alpha {
        Some(a) => println!("optimal alpha {a}"),
        None => println!("no optimal alpha: {}", out.reason.unwrap_or_default()),
    }
    Ok(())
}
