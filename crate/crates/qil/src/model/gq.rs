//! The g-and-h and g-and-k quantile-defined distributions.
//!
//! q(lambda) = A + B (1 + c tanh(g z/2)) z psi(z) with z the standard normal
//! quantile of lambda and c = 0.8; psi = exp(h z^2 / 2) for g-and-h and
//! (1 + z^2)^k for g-and-k. The density has no closed form in y, but at a
//! model quantile it is phi(z) / (dq/dz), which is all the surrogate
//! likelihood needs.

use crate::data::Dataset;
use crate::error::{QilError, Result};
use crate::model::Model;
use crate::quantiles::quantile_sorted;
use crate::rng::Rng;
use crate::special::{normal_pdf, normal_quantile};

pub const C: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GqKind {
    /// Tail parameter h, psi = exp(h z^2 / 2).
    H,
    /// Tail parameter k, psi = (1 + z^2)^k.
    K,
}

/// Location A, scale B, skewness g, and tail h-or-k.
#[derive(Debug, Clone, Copy)]
pub struct GqParams {
    pub a: f64,
    pub b: f64,
    pub g: f64,
    pub tail: f64,
}

impl GqParams {
    pub fn from_slice(theta: &[f64]) -> Self {
        Self {
            a: theta[0],
            b: theta[1],
            g: theta[2],
            tail: theta[3],
        }
    }
}

/// Quantile at z = normal_quantile(lambda).
pub fn gq_quantile_z(kind: GqKind, p: &GqParams, z: f64) -> f64 {
    let skew = 1.0 + C * (0.5 * p.g * z).tanh();
    let psi = match kind {
        GqKind::H => (0.5 * p.tail * z * z).exp(),
        GqKind::K => (1.0 + z * z).powf(p.tail),
    };
    p.a + p.b * skew * z * psi
}

pub fn gq_quantile(kind: GqKind, p: &GqParams, lambda: f64) -> Result<f64> {
    let z = normal_quantile(lambda)?;
    Ok(gq_quantile_z(kind, p, z))
}

/// Analytic dq/dz.
fn gq_dqdz(kind: GqKind, p: &GqParams, z: f64) -> f64 {
    let half_gz = 0.5 * p.g * z;
    let tanh = half_gz.tanh();
    let skew = 1.0 + C * tanh;
    let sech2 = 1.0 - tanh * tanh;
    let slope_skew = C * 0.5 * p.g * sech2; // d skew / dz
    match kind {
        GqKind::H => {
            let psi = (0.5 * p.tail * z * z).exp();
            p.b * psi * (slope_skew * z + skew * (1.0 + p.tail * z * z))
        }
        GqKind::K => {
            let psi = (1.0 + z * z).powf(p.tail);
            p.b * psi
                * (slope_skew * z + skew * (1.0 + 2.0 * p.tail * z * z / (1.0 + z * z)))
        }
    }
}

/// Density at the model quantile: phi(z) / (dq/dz).
pub fn gq_density_at_quantile(kind: GqKind, p: &GqParams, lambda: f64) -> Result<f64> {
    let z = normal_quantile(lambda)?;
    let slope = gq_dqdz(kind, p, z);
    if !(slope > 0.0) || !slope.is_finite() {
        return Err(QilError::DegenerateQuantiles);
    }
    Ok(normal_pdf(z) / slope)
}

#[derive(Debug, Clone, Copy)]
pub struct GqModel {
    kind: GqKind,
}

impl GqModel {
    pub fn new(kind: GqKind) -> Self {
        Self { kind }
    }

    pub fn kind(&self) -> GqKind {
        self.kind
    }

    /// Quantile-matching starting points for estimation: location and scale
    /// from the median and interquartile range, skewness from the octile
    /// ratio, and a small grid over the tail parameter.
    pub fn starts(&self, data: &Dataset) -> Vec<Vec<f64>> {
        let v = data.sorted();
        let med = quantile_sorted(v, 0.5);
        let iqr = (quantile_sorted(v, 0.75) - quantile_sorted(v, 0.25)).max(1e-6);
        let b0 = (iqr / 1.349).clamp(1e-4, 10.0);
        let z = normal_quantile(7.0 / 8.0).unwrap();
        let upper = quantile_sorted(v, 7.0 / 8.0) - med;
        let lower = med - quantile_sorted(v, 1.0 / 8.0);
        let g0 = if upper > 0.0 && lower > 0.0 {
            let ratio = upper / lower;
            let arg = ((ratio - 1.0) / (C * (ratio + 1.0))).clamp(-0.999, 0.999);
            ((2.0 / z) * arg.atanh()).clamp(-10.0, 10.0)
        } else {
            0.0
        };
        let mut starts = Vec::new();
        for tail in [0.0, 0.25, 0.5, 1.0] {
            starts.push(vec![med, b0, g0, tail]);
        }
        starts.push(vec![med, b0, 0.0, 0.5]);
        starts
    }
}

impl Model for GqModel {
    fn name(&self) -> &str {
        match self.kind {
            GqKind::H => "g_and_h",
            GqKind::K => "g_and_k",
        }
    }

    fn dim(&self) -> usize {
        4
    }

    fn param_names(&self) -> Vec<String> {
        let tail = match self.kind {
            GqKind::H => "h",
            GqKind::K => "k",
        };
        vec!["a".into(), "b".into(), "g".into(), tail.into()]
    }

    fn bounds(&self) -> Vec<(f64, f64)> {
        vec![(-10.0, 10.0), (1e-6, 10.0), (-10.0, 10.0), (0.0, 10.0)]
    }

    fn truth(&self) -> Vec<f64> {
        vec![-0.7, 1.7, -0.4, 0.5]
    }

    fn quantile(&self, theta: &[f64], lambda: f64) -> f64 {
        gq_quantile(self.kind, &GqParams::from_slice(theta), lambda).unwrap_or(f64::NAN)
    }

    fn pdf_at_quantile(&self, theta: &[f64], lambda: f64) -> Option<f64> {
        gq_density_at_quantile(self.kind, &GqParams::from_slice(theta), lambda).ok()
    }

    fn log_prior(&self, theta: &[f64]) -> f64 {
        if self.in_box(theta) {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    }

    fn simulate(&self, theta: &[f64], n: usize, rng: &mut Rng) -> Vec<f64> {
        let p = GqParams::from_slice(theta);
        (0..n)
            .map(|_| gq_quantile_z(self.kind, &p, rng.standard_normal()))
            .collect()
    }

    fn prior_sample(&self, rng: &mut Rng) -> Option<Vec<f64>> {
        Some(
            self.bounds()
                .iter()
                .map(|(lo, hi)| rng.uniform_in(*lo, *hi))
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_is_location() {
        let p = GqParams {
            a: -0.7,
            b: 1.7,
            g: -0.4,
            tail: 0.5,
        };
        for kind in [GqKind::H, GqKind::K] {
            let q = gq_quantile(kind, &p, 0.5).unwrap();
            assert!((q + 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_collapse() {
        let p = GqParams {
            a: 0.0,
            b: 1.0,
            g: 0.0,
            tail: 0.0,
        };
        for kind in [GqKind::H, GqKind::K] {
            let z = normal_quantile(0.8).unwrap();
            assert!((gq_quantile(kind, &p, 0.8).unwrap() - z).abs() < 1e-12);
            let f = gq_density_at_quantile(kind, &p, 0.5).unwrap();
            assert!((f - 0.3989422804014327).abs() < 1e-10);
        }
    }

    #[test]
    fn analytic_derivative_matches_finite_difference() {
        let p = GqParams {
            a: -0.7,
            b: 1.7,
            g: -0.4,
            tail: 0.5,
        };
        for kind in [GqKind::H, GqKind::K] {
            for j in 1..40 {
                let lambda = j as f64 / 40.0;
                let z = normal_quantile(lambda).unwrap();
                let analytic = gq_dqdz(kind, &p, z);
                let h = 1e-6;
                let fd = (gq_quantile_z(kind, &p, z + h) - gq_quantile_z(kind, &p, z - h))
                    / (2.0 * h);
                assert!(
                    (analytic - fd).abs() < 1e-6 * (1.0 + fd.abs()),
                    "{kind:?} lambda={lambda}: {analytic} vs {fd}"
                );
            }
        }
    }

    #[test]
    fn heavier_tail_lowers_extreme_density() {
        let heavy = GqParams {
            a: 0.0,
            b: 1.0,
            g: 0.0,
            tail: 0.5,
        };
        let gauss = GqParams { tail: 0.0, ..heavy };
        for kind in [GqKind::H, GqKind::K] {
            let f_heavy = gq_density_at_quantile(kind, &heavy, 0.999).unwrap();
            let f_gauss = gq_density_at_quantile(kind, &gauss, 0.999).unwrap();
            assert!(f_heavy < f_gauss);
        }
    }

    #[test]
    fn monotone_on_fine_grid_at_truth() {
        let model_h = GqModel::new(GqKind::H);
        let model_k = GqModel::new(GqKind::K);
        for model in [model_h, model_k] {
            let theta = model.truth();
            let mut prev = f64::NEG_INFINITY;
            for j in 1..1000 {
                let q = model.quantile(&theta, j as f64 / 1000.0);
                assert!(q > prev, "{} at j={j}", model.name());
                prev = q;
            }
        }
    }

    #[test]
    fn starts_are_in_box() {
        let model = GqModel::new(GqKind::K);
        let mut rng = Rng::from_seed(5);
        let data = Dataset::from_values(model.simulate(&model.truth(), 2000, &mut rng)).unwrap();
        for s in model.starts(&data) {
            assert!(model.in_box(&s), "{s:?}");
        }
    }
}
