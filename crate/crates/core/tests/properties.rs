use incentive_duality::bs::{scale_family, BsMarket, BsProblem};
use incentive_duality::discrete::{biduality_gap, dual_value_exact, FiniteMarket};
use incentive_duality::mc::{graded_time_grid, par_map_paths, RngPlan};
use incentive_duality::models::{atom_diagnostic, gramian, DensitySample, StepFunction};
use incentive_duality::numeric::{linspace, logspace};
use incentive_duality::utility::{
    compose, concavify_closed_form, concavify_numeric, conjugate, Grid, IncentiveScheme, UtilityFunction,
};
use proptest::prelude::*;
use rand::Rng;

fn power_call() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.2f64..0.8, 0.1f64..1.0, 0.5f64..5.0)
}

fn problem(p: f64, lambda: f64, k: f64) -> BsProblem {
    BsProblem::new(BsMarket::new(0.1, 0.2, 1.0).unwrap(), p, lambda, k).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn envelope_dominates_and_is_concave((p, lambda, k) in power_call()) {
        let pu = concavify_closed_form(p, lambda, k).unwrap();
        let xs = linspace(0.0, 3.0 * k / (1.0 - p), 400);
        for &x in &xs {
            prop_assert!(pu.envelope(x) >= pu.value(x) - 1e-12);
        }
        for w in xs.windows(3) {
            let mid = pu.envelope(w[1]);
            prop_assert!(mid >= 0.5 * (pu.envelope(w[0]) + pu.envelope(w[2])) - 1e-10);
        }
    }

    #[test]
    fn fenchel_inequality((p, lambda, k) in power_call(), x in 0.0f64..40.0, y in 0.01f64..2.0) {
        let pu = concavify_closed_form(p, lambda, k).unwrap();
        let du = conjugate(&pu);
        prop_assert!(du.value(y) >= pu.envelope(x) - x * y - 1e-10);
        prop_assert!(du.value(y) >= pu.value(x) - x * y - 1e-10);
    }

    #[test]
    fn numeric_envelope_matches_closed_form((p, lambda, k) in power_call()) {
        let exact = concavify_closed_form(p, lambda, k).unwrap().segments()[0];
        let composed = compose(UtilityFunction::power(p).unwrap(), IncentiveScheme::call(lambda, k).unwrap()).unwrap();
        let numeric = concavify_numeric(&composed, &Grid::default_for(0.0, 2.0 * exact.a_plus + 5.0)).unwrap();
        let seg = numeric.segments()[0];
        prop_assert!((seg.a_plus - exact.a_plus).abs() <= 1e-8 * exact.a_plus.max(1.0));
        prop_assert!((seg.gamma - exact.gamma).abs() <= 1e-8);
    }

    #[test]
    fn bs_dual_is_convex_and_decreasing((p, lambda, k) in power_call()) {
        let b = problem(p, lambda, k);
        let ys = logspace(0.01, 3.0, 40);
        let v: Vec<f64> = ys.iter().map(|&y| b.dual_value(y).unwrap()).collect();
        for w in v.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
        for (yw, vw) in ys.windows(3).zip(v.windows(3)) {
            let t = (yw[1] - yw[0]) / (yw[2] - yw[0]);
            prop_assert!(vw[1] <= (1.0 - t) * vw[0] + t * vw[2] + 1e-10);
        }
    }

    #[test]
    fn rra_is_scale_invariant((p, lambda, k) in power_call(), alpha in 0.2f64..3.0, y in 0.02f64..1.0) {
        prop_assume!(lambda * alpha.powf((1.0 - p) / p) <= 1.0);
        let b = problem(p, lambda, k);
        let (k_a, l_a) = scale_family(p, k, lambda, alpha).unwrap();
        let scaled = b.with_incentive(l_a, k_a).unwrap();
        prop_assert!((scaled.rra_dual(y).unwrap() - b.rra_dual(y).unwrap()).abs() <= 1e-8);
    }

    #[test]
    fn optimal_wealth_skips_the_flat_segment((p, lambda, k) in power_call(), x in 0.1f64..20.0, w in -4.0f64..4.0) {
        let b = problem(p, lambda, k);
        let value = b.optimal_wealth(x).unwrap().value(w);
        prop_assert!(value == 0.0 || value >= b.x_star() * (1.0 - 1e-12));
    }

    #[test]
    fn discrete_weak_duality(n in 2usize..9, sigma in 0.1f64..0.5, x in 0.5f64..10.0, y in 0.05f64..1.0) {
        let mkt = FiniteMarket::lognormal(0.05, sigma, n).unwrap();
        let pu = concavify_closed_form(0.5, 0.25, 3.0).unwrap();
        let gap = biduality_gap(&mkt, &pu, x);
        let dual = dual_value_exact(&mkt, &conjugate(&pu), y);
        prop_assert!(gap.u <= gap.w + 1e-12);
        prop_assert!(gap.w <= dual.value + x * y + 1e-9);
    }

    #[test]
    fn atom_jump_is_a_probability(values in prop::collection::vec(prop::sample::select(vec![0.5, 1.0, 1.5, 2.0]), 1..300)) {
        let ds = DensitySample {
            z_values: values,
            seed: 0,
            n_steps: 0,
            tag: "test".into(),
            vol_terminal: Vec::new(),
            truncated_fraction: None,
        };
        let n = ds.len() as f64;
        let jump = atom_diagnostic(&ds).unwrap().max_cdf_jump;
        prop_assert!(jump >= 1.0 / n - 1e-15 && jump <= 1.0 + 1e-15);
    }

    #[test]
    fn gramian_is_symmetric_psd(vals in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 1..5)) {
        let theta: Vec<StepFunction> = vals
            .into_iter()
            .map(|v| StepFunction::new(vec![0.3, 0.7], v).unwrap())
            .collect();
        let g = gramian(&theta, 1.0);
        prop_assert!((&g - g.transpose()).abs().max() <= 1e-15);
        for e in g.symmetric_eigenvalues().iter() {
            prop_assert!(*e >= -1e-12);
        }
    }

    #[test]
    fn graded_grid_is_increasing(n in 1usize..1024, beta in 0.3f64..1.0, horizon in 0.1f64..5.0) {
        let t = graded_time_grid(horizon, n, beta);
        prop_assert_eq!(t.len(), n + 1);
        prop_assert_eq!(t[0], 0.0);
        prop_assert!((t[n] - horizon).abs() <= 1e-12 * horizon);
        prop_assert!(t.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn path_streams_are_reproducible(seed in any::<u64>(), n in 1usize..500) {
        let draw = || par_map_paths(RngPlan::new(seed), n, |_, rng| rng.gen::<u64>());
        prop_assert_eq!(draw(), draw());
    }
}
