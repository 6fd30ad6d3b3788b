//! Monte Carlo substrate: per-path reproducible random streams, exact GBM
//! paths, strategy replay and estimator statistics.

mod estimate;
mod paths;
mod rng;

pub use estimate::{estimate, estimate_antithetic, McEstimate};
pub use paths::{
    graded_time_grid, replay_gbm_nested, replay_gbm_streaming, replay_strategy, simulate_gbm, PathBundle, ReplayMode,
    ReplayOutcome,
};
pub use rng::{par_map_paths, RngPlan};
