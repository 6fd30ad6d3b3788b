use std::io::Write;

use crate::error::Result;
use crate::numeric::{golden_min, logspace};

use super::envelope::EnvelopeSource;
use super::PiecewiseUtility;

const KINK_TOL: f64 = 1e-10;

/// Convex conjugate `Ubar*(y) = sup_x (Ubar(x) - x y)` of a composed utility.
#[derive(Debug, Clone)]
pub struct DualUtility {
    primal: PiecewiseUtility,
}

/// Builds the conjugate of `pu`.
pub fn conjugate(pu: &PiecewiseUtility) -> DualUtility {
    DualUtility { primal: pu.clone() }
}

impl DualUtility {
    pub fn primal(&self) -> &PiecewiseUtility {
        &self.primal
    }

    /// `Ubar*(y)` for `y > 0`; `+inf` for `y <= 0`.
    pub fn value(&self, y: f64) -> f64 {
        if !(y > 0.0) {
            return f64::INFINITY;
        }
        match self.primal.source {
            EnvelopeSource::PowerCall { p, lambda, k } => {
                let y_star = self.primal.segments()[0].gamma;
                if y >= y_star {
                    0.0
                } else {
                    ((1.0 - p) / p * (y / lambda).powf(p / (p - 1.0)) - k * y).max(0.0)
                }
            }
            EnvelopeSource::Numeric => self.primal.composed().sup_minus_linear(y, self.primal.beta(), f64::INFINITY).1,
        }
    }

    /// `-dUbar*(y)` as a closed interval `[lo, hi]`: the set of maximizers of
    /// `Ubar** - y x`.
    pub fn subdifferential(&self, y: f64) -> (f64, f64) {
        if let Some(s) = self.primal.segments().iter().find(|s| (y - s.gamma).abs() <= KINK_TOL * s.gamma) {
            return (s.a_minus, s.a_plus);
        }
        let x = match self.primal.source {
            EnvelopeSource::PowerCall { p, lambda, k } => {
                if y > self.primal.segments()[0].gamma {
                    0.0
                } else {
                    (y / lambda).powf(1.0 / (p - 1.0)) / lambda + k
                }
            }
            EnvelopeSource::Numeric => self.primal.composed().sup_minus_linear(y, self.primal.beta(), f64::INFINITY).0,
        };
        (x, x)
    }

    /// Kink set `Gamma` of `Ubar*`.
    pub fn kinks(&self) -> Vec<f64> {
        self.primal.gamma_set()
    }

    /// Whether `y` lies on a kink, up to the relative kink tolerance.
    pub fn is_kink(&self, y: f64) -> bool {
        self.primal.segments().iter().any(|s| (y - s.gamma).abs() <= KINK_TOL * s.gamma)
    }

    /// `(Ubar**)'(beta+)`, at and above which `Ubar*` is constant; `None`
    /// when the slope at `beta` is infinite.
    pub fn y_flat(&self) -> Option<f64> {
        self.primal.slope_at_beta()
    }
}

/// `max_x |inf_y (Ubar*(y) + x y) - Ubar**(x)|` over `grid`. The inner infimum
/// takes the smaller of the analytic candidate `y = (Ubar**)'(x)` and a
/// log-grid scan refined by golden section.
pub fn conjugate_roundtrip_check(pu: &PiecewiseUtility, grid: &[f64]) -> f64 {
    let du = conjugate(pu);
    let ys = logspace(1e-8, 1e4, 481);
    grid.iter()
        .map(|&x| {
            let obj = |y: f64| du.value(y) + x * y;
            let analytic = obj(pu.envelope_slope(x));
            let (i, _) =
                ys.iter()
                    .map(|&y| obj(y))
                    .enumerate()
                    .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
            let a = ys[i.saturating_sub(1)].ln();
            let b = ys[(i + 1).min(ys.len() - 1)].ln();
            let (_, scanned) = golden_min(|t| obj(t.exp()), a, b, 1e-13);
            (analytic.min(scanned) - pu.envelope(x)).abs()
        })
        .fold(0.0, f64::max)
}

/// Writes the CSV table `x, U_bar, U_star_star, y, U_star` with one row per
/// index; `xs` and `ys` are zipped and the shorter one sets the row count.
pub fn write_table<W: Write>(pu: &PiecewiseUtility, du: &DualUtility, xs: &[f64], ys: &[f64], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "U_bar", "U_star_star", "y", "U_star"])?;
    for (&x, &y) in xs.iter().zip(ys) {
        w.write_record(&[
            x.to_string(),
            pu.value(x).to_string(),
            pu.envelope(x).to_string(),
            y.to_string(),
            du.value(y).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::linspace;
    use crate::utility::{
        compose, concavify_closed_form, concavify_numeric, without_envelope, Grid, IncentiveScheme, UtilityFunction,
    };

    fn sqrt3() -> f64 {
        3f64.sqrt()
    }

    #[test]
    fn closed_form_branches() {
        let du = conjugate(&concavify_closed_form(0.5, 0.25, 3.0).unwrap());
        assert!((du.value(0.1) - 2.2).abs() < 1e-12);
        assert_eq!(du.value(1.0), 0.0);
        assert!(du.value(sqrt3() / 6.0).abs() < 1e-12);
        assert_eq!(du.value(0.0), f64::INFINITY);
        let (lo, hi) = du.subdifferential(sqrt3() / 6.0);
        assert!(lo.abs() < 1e-12 && (hi - 6.0).abs() < 1e-12);
        assert_eq!(du.y_flat(), Some(sqrt3() / 6.0));
    }

    #[test]
    fn closed_form_agrees_with_piecewise_sup() {
        let pu = concavify_closed_form(0.5, 0.25, 3.0).unwrap();
        let du = conjugate(&pu);
        for y in logspace(1e-3, 5.0, 50) {
            let (_, numeric) = pu.composed().sup_minus_linear(y, 0.0, f64::INFINITY);
            assert!((du.value(y) - numeric).abs() < 1e-10 * (1.0 + numeric.abs()));
            let (lo, hi) = du.subdifferential(y);
            assert_eq!(lo, hi);
            // the maximizer attains the supremum
            assert!((pu.value(lo) - lo * y - du.value(y)).abs() < 1e-9 * (1.0 + du.value(y)));
        }
    }

    #[test]
    fn numeric_subdifferential_at_kink() {
        let c = compose(UtilityFunction::power(0.5).unwrap(), IncentiveScheme::call(0.25, 3.0).unwrap()).unwrap();
        let pu = concavify_numeric(&c, &Grid::linear(0.0, 20.0, 2048)).unwrap();
        let du = conjugate(&pu);
        let g = du.kinks()[0];
        let (lo, hi) = du.subdifferential(g);
        assert!(lo.abs() < 1e-8 && (hi - 6.0).abs() < 1e-8);
        assert!(du.is_kink(g) && !du.is_kink(g * 1.01));
        assert!((du.value(0.1) - 2.2).abs() < 1e-10);
    }

    #[test]
    fn log_utility_has_no_flat_threshold() {
        let c = compose(UtilityFunction::log(), IncentiveScheme::identity()).unwrap();
        let du = conjugate(&without_envelope(c));
        assert_eq!(du.y_flat(), None);
        // U*(y) = -log y - 1
        assert!((du.value(0.5) - (-(0.5f64).ln() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn roundtrip_closed_form_and_classical() {
        let pu = concavify_closed_form(0.5, 0.25, 3.0).unwrap();
        assert!(conjugate_roundtrip_check(&pu, &linspace(0.1, 30.0, 120)) < 1e-8);
        let c = compose(UtilityFunction::power(0.5).unwrap(), IncentiveScheme::identity()).unwrap();
        let pu = without_envelope(c);
        assert!(conjugate_roundtrip_check(&pu, &linspace(0.1, 30.0, 120)) < 1e-8);
    }

    #[test]
    fn strict_convexity_below_flat_threshold() {
        let du = conjugate(&concavify_closed_form(0.5, 0.25, 3.0).unwrap());
        let y_flat = du.y_flat().unwrap();
        let ys = linspace(0.01, y_flat, 60);
        for w in ys.windows(3) {
            assert!(du.value(w[1]) < 0.5 * (du.value(w[0]) + du.value(w[2])));
        }
    }

    #[test]
    fn table_has_expected_header() {
        let pu = concavify_closed_form(0.5, 0.25, 3.0).unwrap();
        let du = conjugate(&pu);
        let mut buf = Vec::new();
        write_table(&pu, &du, &[1.0, 7.0], &[0.1, 1.0], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x,U_bar,U_star_star,y,U_star"));
        assert_eq!(lines.count(), 2);
    }
}
