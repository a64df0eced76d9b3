//! Model specifications: quantile function, density, prior, simulator, and
//! an exact-likelihood estimator used as the benchmark oracle.

mod basic;
mod gq;

pub use basic::{analytic_moments, basic_models, model_by_name, BasicModel, QuantileOnly};
pub use gq::{GqKind, GqModel, GqParams};

use crate::data::Dataset;
use crate::rng::Rng;

/// A parametric model exposing everything the surrogate likelihood needs.
///
/// `quantile` must be strictly increasing in lambda for every theta inside
/// the parameter box. Models whose density is awkward analytically may
/// return `None` from `pdf_at_quantile`, in which case the equiprobability
/// fallback applies. Discrete models route through the normal-moment
/// surrogate instead, via `surrogate_moments`.
pub trait Model: Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn param_names(&self) -> Vec<String>;
    /// Per-parameter (lower, upper) bounds.
    fn bounds(&self) -> Vec<(f64, f64)>;
    /// Data-generating parameter values for simulation studies.
    fn truth(&self) -> Vec<f64>;

    fn quantile(&self, theta: &[f64], lambda: f64) -> f64;

    /// Density evaluated at the model quantile q_theta(lambda), when
    /// tractable there.
    fn pdf_at_quantile(&self, theta: &[f64], lambda: f64) -> Option<f64>;

    /// Log prior density (up to a constant). Finite inside the box.
    fn log_prior(&self, theta: &[f64]) -> f64;

    fn simulate(&self, theta: &[f64], n: usize, rng: &mut Rng) -> Vec<f64>;

    /// Exact-likelihood estimate, used as the benchmark oracle. None when
    /// the exact likelihood is intractable.
    fn mle(&self, data: &Dataset) -> Option<Vec<f64>> {
        let _ = data;
        None
    }

    /// Mean and variance for discrete models handled through the normal
    /// quantile surrogate.
    fn surrogate_moments(&self, theta: &[f64]) -> Option<(f64, f64)> {
        let _ = theta;
        None
    }

    /// Draw from the prior, for importance sampling and rejection methods.
    /// None when the prior is improper or unsampleable.
    fn prior_sample(&self, rng: &mut Rng) -> Option<Vec<f64>> {
        let _ = rng;
        None
    }

    fn in_box(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim()
            && theta
                .iter()
                .zip(self.bounds())
                .all(|(t, (lo, hi))| t.is_finite() && *t >= lo && *t <= hi)
    }
}
