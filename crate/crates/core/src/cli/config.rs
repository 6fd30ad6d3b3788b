use std::path::Path;

use serde::{Deserialize, Serialize};

use super::GlobalArgs;
use crate::bs::BsMarket;
use crate::discrete::{FiniteMarket, State};
use crate::error::{Error, Result};
use crate::models::{ExcessRate, ModelSpec};
use crate::utility::{AffinePiece, IncentiveScheme, UtilityFunction};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum UtilitySpec {
    Power { p: f64 },
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum IncentiveSpec {
    Call {
        lambda: f64,
        k: f64,
    },
    Identity,
    /// `sum_i lambda_i (x - k_i)^+` from `[lambda_i, k_i]` pairs.
    Calls {
        legs: Vec<(f64, f64)>,
    },
    Pieces {
        pieces: Vec<AffinePiece>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketSpec {
    pub mu: f64,
    pub sigma: f64,
    pub horizon: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericSpec {
    pub paths: Option<usize>,
    pub steps: Option<usize>,
    pub seed: Option<u64>,
    pub grid_points: Option<usize>,
    pub x_max: Option<f64>,
    pub y_grid: Option<Vec<f64>>,
}

/// Everything a run may read from a config file; flags take precedence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub utility: Option<UtilitySpec>,
    pub incentive: Option<IncentiveSpec>,
    pub market: Option<MarketSpec>,
    /// Finite market states for `discrete`.
    pub states: Option<Vec<State>>,
    pub x: Option<f64>,
    pub model: Option<ModelSpec>,
    #[serde(default)]
    pub numeric: NumericSpec,
}

impl RunConfig {
    /// Parses TOML when the extension is `.toml`, JSON otherwise.
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let is_toml = path.extension().is_some_and(|e| e == "toml");
        if is_toml {
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
        } else {
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
        }
    }
}

const BASE_P: f64 = 0.5;
const BASE_LAMBDA: f64 = 0.25;
const BASE_K: f64 = 3.0;

/// Merged view of flags, config file and preset.
pub(super) struct Resolved<'a> {
    pub g: &'a GlobalArgs,
    pub cfg: &'a RunConfig,
}

impl Resolved<'_> {
    fn preset(&self) -> Option<&str> {
        self.g.preset.as_deref()
    }

    pub fn check_preset(&self, allowed: &[&str]) -> Result<()> {
        match self.preset() {
            Some(name) if !allowed.contains(&name) => {
                Err(Error::Config(format!("unknown preset {name:?} for this command (expected one of {allowed:?})")))
            }
            _ => Ok(()),
        }
    }

    pub fn seed(&self) -> u64 {
        self.g.seed.or(self.cfg.numeric.seed).unwrap_or(20_240_601)
    }

    pub fn paths(&self, default: usize) -> usize {
        self.g.paths.or(self.cfg.numeric.paths).unwrap_or(default)
    }

    pub fn steps(&self, default: usize) -> usize {
        self.g.steps.or(self.cfg.numeric.steps).unwrap_or(default)
    }

    pub fn x(&self, default: f64) -> f64 {
        self.g.x.or(self.cfg.x).unwrap_or(default)
    }

    pub fn utility_spec(&self) -> UtilitySpec {
        match (self.g.p, self.cfg.utility) {
            (Some(p), _) => UtilitySpec::Power { p },
            (None, Some(u)) => u,
            (None, None) => UtilitySpec::Power { p: BASE_P },
        }
    }

    pub fn incentive_spec(&self) -> IncentiveSpec {
        if self.preset() == Some("concave") {
            return IncentiveSpec::Identity;
        }
        let base = self.cfg.incentive.clone().unwrap_or(IncentiveSpec::Call { lambda: BASE_LAMBDA, k: BASE_K });
        if self.g.lambda.is_none() && self.g.k.is_none() {
            return base;
        }
        let (l0, k0) = match base {
            IncentiveSpec::Call { lambda, k } => (lambda, k),
            _ => (BASE_LAMBDA, BASE_K),
        };
        IncentiveSpec::Call { lambda: self.g.lambda.unwrap_or(l0), k: self.g.k.unwrap_or(k0) }
    }

    pub fn utility(&self) -> Result<UtilityFunction> {
        match self.utility_spec() {
            UtilitySpec::Power { p } => UtilityFunction::power(p),
            UtilitySpec::Log => Ok(UtilityFunction::log()),
        }
    }

    pub fn incentive(&self) -> Result<IncentiveScheme> {
        match self.incentive_spec() {
            IncentiveSpec::Call { lambda, k } => IncentiveScheme::call(lambda, k),
            IncentiveSpec::Identity => Ok(IncentiveScheme::identity()),
            IncentiveSpec::Calls { legs } => IncentiveScheme::sum_of_calls(&legs),
            IncentiveSpec::Pieces { pieces } => IncentiveScheme::from_pieces(pieces),
        }
    }

    /// `(p, lambda, k)` for commands that need power utility with one call.
    pub fn power_call(&self) -> Result<(f64, f64, f64)> {
        match (self.utility_spec(), self.incentive_spec()) {
            (UtilitySpec::Power { p }, IncentiveSpec::Call { lambda, k }) => Ok((p, lambda, k)),
            (u, g) => Err(Error::Config(format!(
                "this command needs power utility with a call incentive, got {u:?} and {g:?}"
            ))),
        }
    }

    pub fn market(&self) -> Result<BsMarket> {
        let base = self.cfg.market.unwrap_or(MarketSpec { mu: 0.1, sigma: 0.2, horizon: 1.0 });
        BsMarket::new(
            self.g.mu.unwrap_or(base.mu),
            self.g.sigma.unwrap_or(base.sigma),
            self.g.horizon.unwrap_or(base.horizon),
        )
    }

    pub fn finite_market(&self) -> Result<FiniteMarket> {
        match &self.cfg.states {
            Some(states) if self.preset().is_none() => FiniteMarket::new(states.clone()),
            _ => Ok(FiniteMarket::counterexample()),
        }
    }

    pub fn model(&self) -> Result<ModelSpec> {
        let steps = |d| self.steps(d);
        let tanh = ExcessRate::Tanh { m: 0.3, s: 1.0 };
        let horizon = self.g.horizon.unwrap_or(1.0);
        let mut spec = match (self.preset(), &self.cfg.model) {
            (None, Some(m)) => m.clone(),
            (None | Some("hull-white"), None) => ModelSpec::hull_white_example(tanh, horizon, steps(1024)),
            (Some("mixture"), _) => ModelSpec::mixture_example(horizon),
            (Some("scott"), _) => ModelSpec::scott_example(tanh, horizon, steps(1024)),
            (Some("heston"), _) => ModelSpec::heston_example(tanh, horizon, steps(1024)),
            (Some("zero-rate"), _) => ModelSpec::hull_white_example(ExcessRate::Zero, horizon, steps(64)),
            (Some(other), _) => {
                return Err(Error::Config(format!(
                    "unknown model preset {other:?} (expected mixture, hull-white, scott, heston, zero-rate)"
                )))
            }
        };
        if let Some(n) = self.g.steps {
            spec.n_steps = n;
        }
        spec.validate()?;
        Ok(spec)
    }
}
