//! With zero drift the manager can still reach the envelope value by running
//! wealth as a stopped Brownian motion that exits at 0 or x*.

use incentive_duality::bs::{driftless_simulate, DriftlessPlan};
use incentive_duality::utility::concavify_closed_form;

fn main() -> incentive_duality::Result<()> {
    let pu = concavify_closed_form(0.5, 0.25, 3.0)?;
    let plan = DriftlessPlan::new(1.0, 6.0, 0.2, 1.0)?;
    let rep = driftless_simulate(&plan, &pu, 100_000, 4096, 3, None)?;
    println!(
        "P(hit x*) = {:.5} +- {:.5} (exact {:.5})",
        rep.hit_prob.mean,
        rep.hit_prob.std_error,
        plan.hit_probability()
    );
    println!(
        "E[Ubar(X_T)] = {:.5} +- {:.5}, envelope {:.5}, buy and hold {:.5}",
        rep.utility_composed.mean,
        rep.utility_composed.std_error,
        pu.envelope(1.0),
        pu.value(1.0)
    );
    println!("paths still running at the log-clock horizon {:.1}: {}", rep.s_max, rep.unabsorbed_fraction);
    Ok(())
}
