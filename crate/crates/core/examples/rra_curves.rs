//! Relative risk aversion of the dual value function for several utility
//! exponents, as CSV on stdout.

use incentive_duality::bs::{BsMarket, BsProblem};
use incentive_duality::numeric::logspace;

fn main() -> incentive_duality::Result<()> {
    let market = BsMarket::new(0.1, 0.2, 1.0)?;
    let ps = [0.125, 0.25, 0.5, 0.75];
    let problems: Vec<BsProblem> =
        ps.iter().map(|&p| BsProblem::new(market, p, 0.25, 3.0)).collect::<Result<_, _>>()?;
    println!("y,{}", ps.map(|p| format!("rra_p{p}")).join(","));
    for y in logspace(0.01, 1.0, 25) {
        let row: Vec<String> =
            problems.iter().map(|b| b.rra_dual(y).map(|r| format!("{r:.6}"))).collect::<Result<_, _>>()?;
        println!("{y:.6},{}", row.join(","));
    }
    Ok(())
}
