//! Density-process samplers for incomplete markets and empirical atom checks.

mod diagnostics;
mod dual;
mod mixture;
mod sv;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use diagnostics::{atom_diagnostic, ks_critical_value, ks_statistic, silverman_bandwidth, AtomDiagnostic, Verdict};
pub use dual::{dual_curve_mc, dual_value_mc, DualMcReport};
pub use mixture::{gramian, mixture_draws, sample_mixture_density, sample_mixture_euler, MixtureDraws};
pub use sv::{sample_density, sample_sv_density};

/// Bounded excess appreciation rate `f(w)`, so that `theta_t = f(W^1_t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExcessRate {
    Zero,
    Constant {
        theta: f64,
    },
    /// `m * tanh(w / s)`
    Tanh {
        m: f64,
        s: f64,
    },
}

impl ExcessRate {
    pub fn eval(&self, w: f64) -> f64 {
        match *self {
            ExcessRate::Zero => 0.0,
            ExcessRate::Constant { theta } => theta,
            ExcessRate::Tanh { m, s } => m * (w / s).tanh(),
        }
    }

    /// `sup |f|`.
    pub fn bound(&self) -> f64 {
        match *self {
            ExcessRate::Zero => 0.0,
            ExcessRate::Constant { theta } => theta.abs(),
            ExcessRate::Tanh { m, .. } => m.abs(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.bound() == 0.0
    }

    fn validate(&self) -> Result<()> {
        match *self {
            ExcessRate::Constant { theta } if !theta.is_finite() => {
                Err(Error::InvalidModel(format!("excess rate {theta} is not finite")))
            }
            ExcessRate::Tanh { m, s } if !(m.is_finite() && s.is_finite() && s > 0.0) => {
                Err(Error::InvalidModel(format!("tanh excess rate needs finite m and s > 0, got m={m}, s={s}")))
            }
            _ => Ok(()),
        }
    }
}

/// Right-continuous step function on `[0, T]`: `values[j]` holds on
/// `[breaks[j-1], breaks[j])` with `breaks[-1] = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepFunction {
    #[serde(default)]
    pub breaks: Vec<f64>,
    pub values: Vec<f64>,
}

impl StepFunction {
    pub fn constant(value: f64) -> Self {
        StepFunction { breaks: Vec::new(), values: vec![value] }
    }

    pub fn new(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let f = StepFunction { breaks, values };
        f.check(f64::INFINITY)?;
        Ok(f)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.values[self.breaks.partition_point(|&b| b <= t)]
    }

    /// `int_0^T self(t) other(t) dt`, exact.
    pub fn inner_product(&self, other: &StepFunction, horizon: f64) -> f64 {
        let mut knots: Vec<f64> = self.breaks.iter().chain(&other.breaks).copied().filter(|&b| b < horizon).collect();
        knots.push(0.0);
        knots.push(horizon);
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        knots.windows(2).map(|w| self.eval(w[0]) * other.eval(w[0]) * (w[1] - w[0])).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    fn check(&self, horizon: f64) -> Result<()> {
        if self.values.len() != self.breaks.len() + 1 {
            return Err(Error::InvalidModel(format!(
                "step function needs one more value than breaks, got {} values and {} breaks",
                self.values.len(),
                self.breaks.len()
            )));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("step function values must be finite".into()));
        }
        let mut prev = 0.0;
        for &b in &self.breaks {
            if !(b > prev && b < horizon) {
                return Err(Error::InvalidModel(format!(
                    "step breaks must increase strictly inside (0, {horizon}), got {b}"
                )));
            }
            prev = b;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelKind {
    /// Lognormal mixture: component `i` has probability `p[i]` and market
    /// price of risk `theta[i](t)`.
    Mixture { p: Vec<f64>, theta: Vec<StepFunction> },
    /// Volatility `Y` is a geometric Brownian motion.
    HullWhite { b: f64, a: f64, rho: f64, y0: f64, f: ExcessRate },
    /// Volatility `exp(Y)` with `Y` Ornstein-Uhlenbeck.
    Scott { kappa: f64, theta_bar: f64, xi: f64, rho: f64, y0: f64, f: ExcessRate },
    /// Variance `Y` is a CIR process.
    Heston { kappa: f64, theta_bar: f64, xi: f64, rho: f64, y0: f64, f: ExcessRate },
}

impl ModelKind {
    pub fn tag(&self) -> &'static str {
        match self {
            ModelKind::Mixture { .. } => "mixture",
            ModelKind::HullWhite { .. } => "hull_white",
            ModelKind::Scott { .. } => "scott",
            ModelKind::Heston { .. } => "heston",
        }
    }

    pub fn excess_rate(&self) -> Option<&ExcessRate> {
        match self {
            ModelKind::Mixture { .. } => None,
            ModelKind::HullWhite { f, .. } | ModelKind::Scott { f, .. } | ModelKind::Heston { f, .. } => Some(f),
        }
    }
}

/// Incomplete-market model with its horizon and Euler step count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub model: ModelKind,
    pub horizon: f64,
    pub n_steps: usize,
}

impl ModelSpec {
    pub fn new(model: ModelKind, horizon: f64, n_steps: usize) -> Result<Self> {
        let spec = ModelSpec { model, horizon, n_steps };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidModel(format!("horizon must be positive, got {}", self.horizon)));
        }
        if self.n_steps == 0 {
            return Err(Error::InvalidModel("n_steps must be at least 1".into()));
        }
        let check_rho = |rho: f64| {
            if rho > -1.0 && rho < 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidModel(format!("correlation must lie in (-1, 1), got {rho}")))
            }
        };
        match &self.model {
            ModelKind::Mixture { p, theta } => {
                if p.is_empty() || p.len() != theta.len() {
                    return Err(Error::InvalidModel(format!(
                        "mixture needs matching non-empty p and theta, got {} and {}",
                        p.len(),
                        theta.len()
                    )));
                }
                if p.iter().any(|&pi| !(pi > 0.0)) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-10 {
                    return Err(Error::InvalidModel(format!(
                        "mixture weights must be positive and sum to 1, got {p:?}"
                    )));
                }
                for th in theta {
                    th.check(self.horizon)?;
                }
            }
            ModelKind::HullWhite { b, a, rho, y0, f } => {
                check_rho(*rho)?;
                f.validate()?;
                if !(b.is_finite() && *a > 0.0 && *y0 > 0.0) {
                    return Err(Error::InvalidModel(format!(
                        "Hull-White needs finite b, a > 0, y0 > 0, got b={b}, a={a}, y0={y0}"
                    )));
                }
            }
            ModelKind::Scott { kappa, theta_bar, xi, rho, y0, f } => {
                check_rho(*rho)?;
                f.validate()?;
                if !(*kappa > 0.0 && *xi > 0.0 && theta_bar.is_finite() && y0.is_finite()) {
                    return Err(Error::InvalidModel(format!(
                        "Scott needs kappa > 0, xi > 0, finite theta_bar and y0, got kappa={kappa}, xi={xi}"
                    )));
                }
            }
            ModelKind::Heston { kappa, theta_bar, xi, rho, y0, f } => {
                check_rho(*rho)?;
                f.validate()?;
                if !(*kappa > 0.0 && *theta_bar > 0.0 && *xi > 0.0 && *y0 > 0.0) {
                    return Err(Error::InvalidModel(format!(
                        "Heston needs kappa, theta_bar, xi, y0 > 0, got kappa={kappa}, theta_bar={theta_bar}, xi={xi}, y0={y0}"
                    )));
                }
                if 2.0 * kappa * theta_bar <= xi * xi {
                    return Err(Error::FellerViolation { kappa: *kappa, theta: *theta_bar, xi: *xi });
                }
            }
        }
        Ok(())
    }

    /// Three-component mixture: common risk price 0.5 until `t = T/4`, then
    /// three linearly independent step profiles.
    pub fn mixture_example(horizon: f64) -> Self {
        let breaks = vec![0.25 * horizon, 0.5 * horizon, 0.75 * horizon];
        let profile = |v: [f64; 4]| StepFunction { breaks: breaks.clone(), values: v.to_vec() };
        ModelSpec {
            model: ModelKind::Mixture {
                p: vec![0.5, 0.3, 0.2],
                theta: vec![
                    profile([0.5, 0.8, 0.4, 0.6]),
                    profile([0.5, 0.3, 0.7, 0.5]),
                    profile([0.5, 0.6, 0.6, 0.2]),
                ],
            },
            horizon,
            n_steps: 1,
        }
    }

    pub fn hull_white_example(f: ExcessRate, horizon: f64, n_steps: usize) -> Self {
        ModelSpec { model: ModelKind::HullWhite { b: 0.05, a: 0.3, rho: -0.5, y0: 0.2, f }, horizon, n_steps }
    }

    pub fn heston_example(f: ExcessRate, horizon: f64, n_steps: usize) -> Self {
        ModelSpec {
            model: ModelKind::Heston { kappa: 2.0, theta_bar: 0.04, xi: 0.3, rho: -0.7, y0: 0.04, f },
            horizon,
            n_steps,
        }
    }

    pub fn scott_example(f: ExcessRate, horizon: f64, n_steps: usize) -> Self {
        ModelSpec {
            model: ModelKind::Scott { kappa: 1.5, theta_bar: (0.2f64).ln(), xi: 0.4, rho: -0.5, y0: (0.2f64).ln(), f },
            horizon,
            n_steps,
        }
    }
}

/// Samples of `Z_T` from one model run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensitySample {
    pub z_values: Vec<f64>,
    pub seed: u64,
    pub n_steps: usize,
    pub tag: String,
    /// Terminal volatility state per path; empty for mixtures.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub vol_terminal: Vec<f64>,
    /// Share of Heston steps where the variance was negative and truncated.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncated_fraction: Option<f64>,
}

impl DensitySample {
    pub fn len(&self) -> usize {
        self.z_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z_values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.z_values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Writes `path,z[,vol_T]` as CSV.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let with_vol = !self.vol_terminal.is_empty();
        if with_vol {
            w.write_record(["path", "z", "vol_T"])?;
        } else {
            w.write_record(["path", "z"])?;
        }
        for (i, z) in self.z_values.iter().enumerate() {
            if with_vol {
                w.write_record(&[i.to_string(), z.to_string(), self.vol_terminal[i].to_string()])?;
            } else {
                w.write_record(&[i.to_string(), z.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_function_inner_product_is_exact() {
        let f = StepFunction::new(vec![0.5], vec![1.0, 2.0]).unwrap();
        let g = StepFunction::new(vec![0.25, 0.75], vec![3.0, 0.0, 1.0]).unwrap();
        // [0,.25): 3, [.25,.5): 0, [.5,.75): 0, [.75,1): 2
        assert!((f.inner_product(&g, 1.0) - (0.75 + 0.5)).abs() < 1e-15);
        assert!((f.inner_product(&f, 1.0) - 2.5).abs() < 1e-15);
        assert_eq!(f.eval(0.5), 2.0);
        assert!(StepFunction::new(vec![0.5, 0.4], vec![1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn heston_feller_guard() {
        let bad = ModelKind::Heston { kappa: 1.0, theta_bar: 0.04, xi: 0.5, rho: 0.0, y0: 0.04, f: ExcessRate::Zero };
        assert!(matches!(ModelSpec::new(bad, 1.0, 64), Err(Error::FellerViolation { .. })));
        let s = ModelSpec::heston_example(ExcessRate::Zero, 1.0, 64);
        assert!(s.validate().is_ok());
    }

    #[test]
    fn spec_json_roundtrip_and_unknown_fields() {
        let spec = ModelSpec::hull_white_example(ExcessRate::Tanh { m: 0.3, s: 1.0 }, 1.0, 256);
        let text = serde_json::to_string(&spec).unwrap();
        let back: ModelSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
        let bad = text.replace("\"rho\"", "\"rho_typo\"");
        assert!(serde_json::from_str::<ModelSpec>(&bad).is_err());
        let mix = ModelSpec::mixture_example(1.0);
        let text = serde_json::to_string(&mix).unwrap();
        assert_eq!(serde_json::from_str::<ModelSpec>(&text).unwrap(), mix);
    }

    #[test]
    fn mixture_weights_checked() {
        let bad = ModelKind::Mixture {
            p: vec![0.6, 0.6],
            theta: vec![StepFunction::constant(0.1), StepFunction::constant(0.2)],
        };
        assert!(ModelSpec::new(bad, 1.0, 1).is_err());
    }
}
