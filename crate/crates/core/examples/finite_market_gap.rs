//! Two-state market where the dual optimizer charges a kink of `Ubar*` and
//! the original problem falls strictly below its concavified value.

use incentive_duality::discrete::{
    atom_report, biduality_gap, marginal_value, subdifferential_selection, FiniteMarket,
};
use incentive_duality::utility::{concavify_closed_form, conjugate};

fn main() -> incentive_duality::Result<()> {
    let mkt = FiniteMarket::counterexample();
    let pu = concavify_closed_form(0.5, 0.25, 3.0)?;
    let du = conjugate(&pu);
    let gap = biduality_gap(&mkt, &pu, 1.0);
    println!("u(1) = {}, w(1) = {:.12}, gap = {:.12}", gap.u, gap.w, gap.gap);
    let y = marginal_value(&mkt, &du, 1.0).y;
    let atoms = atom_report(&mkt, &du, y);
    println!("y = w'(1) = {y:.12}");
    println!("dual atoms {:?}", atoms.delta);
    println!("kinks {:?}, shared {:?}: {}", atoms.gamma, atoms.intersection, atoms.verdict);
    println!("selection {:?}", subdifferential_selection(&mkt, &pu, 1.0)?);

    for n in [4, 16, 64] {
        let fine = FiniteMarket::lognormal(0.1, 0.2, n)?;
        println!("lognormal market with {n:>2} states: gap at x=20 is {:.2e}", biduality_gap(&fine, &pu, 20.0).gap);
    }
    Ok(())
}
