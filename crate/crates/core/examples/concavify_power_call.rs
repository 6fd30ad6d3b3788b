//! Envelope of `U(g(x))` for `U(x) = 2 sqrt(x)` and `g(x) = (x - 3)^+ / 4`:
//! closed form against the numeric hull, then the conjugate table as CSV.

use incentive_duality::numeric::{linspace, logspace};
use incentive_duality::utility::{
    compose, concavify_closed_form, concavify_numeric, conjugate, write_table, Grid, IncentiveScheme, UtilityFunction,
};

fn main() -> incentive_duality::Result<()> {
    let exact = concavify_closed_form(0.5, 0.25, 3.0)?;
    let seg = exact.segments()[0];
    println!("closed form: affine on [{}, {}] with slope {:.15}", seg.a_minus, seg.a_plus, seg.gamma);

    let composed = compose(UtilityFunction::power(0.5)?, IncentiveScheme::call(0.25, 3.0)?)?;
    let numeric = concavify_numeric(&composed, &Grid::default_for(0.0, 20.0))?;
    let n = numeric.segments()[0];
    println!(
        "numeric hull: [{:.12}, {:.12}] slope {:.15} (|diff| {:.1e})",
        n.a_minus,
        n.a_plus,
        n.gamma,
        (n.a_plus - seg.a_plus).abs().max((n.gamma - seg.gamma).abs())
    );

    let du = conjugate(&exact);
    let xs = linspace(0.5, 12.0, 12);
    let ys = logspace(0.05, 1.0, 12);
    write_table(&exact, &du, &xs, &ys, std::io::stdout())?;
    Ok(())
}
