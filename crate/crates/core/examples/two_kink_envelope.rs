//! Numeric concavification of a two-strike incentive `0.3 (x-1)^+ + 0.4 (x-5)^+`
//! and the conjugate roundtrip error.

use incentive_duality::numeric::linspace;
use incentive_duality::utility::{
    compose, concavify_numeric, conjugate_roundtrip_check, Grid, IncentiveScheme, UtilityFunction,
};

fn main() -> incentive_duality::Result<()> {
    let g = IncentiveScheme::sum_of_calls(&[(0.3, 1.0), (0.4, 5.0)])?;
    let composed = compose(UtilityFunction::power(0.5)?, g)?;
    let pu = concavify_numeric(&composed, &Grid::default_for(0.0, 30.0))?;
    for s in pu.segments() {
        println!("segment [{:.6}, {:.6}] slope {:.8}", s.a_minus, s.a_plus, s.gamma);
    }
    let grid = linspace(0.1, 30.0, 300);
    let gap = grid.iter().map(|&x| pu.value(x) - pu.envelope(x)).fold(f64::NEG_INFINITY, f64::max);
    println!("max (Ubar - Ubar**) on grid: {gap:.3e}");
    println!("roundtrip error: {:.3e}", conjugate_roundtrip_check(&pu, &grid));
    Ok(())
}
