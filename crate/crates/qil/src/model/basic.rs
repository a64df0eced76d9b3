//! The basic univariate model catalog: quantile functions, densities at
//! quantiles, priors, simulators, and exact-likelihood estimators.
//!
//! Discrete models (Bernoulli, Geometric, negative binomial, Poisson) go
//! through the normal-moment surrogate, so they expose moments instead of a
//! density.

use crate::data::Dataset;
use crate::model::gq::{GqKind, GqModel};
use crate::model::Model;
use crate::optim::{self, NmOptions};
use crate::rng::Rng;
use crate::special::{
    inc_beta_reg, inv_inc_beta_reg, inv_lower_gamma_reg, ln_gamma, lower_gamma_reg, normal_cdf,
    normal_pdf, normal_quantile, LN_2PI,
};

const POS_LO: f64 = 1e-6;
const PROB_LO: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasicModel {
    Bernoulli,
    Beta,
    BirnbaumSaunders,
    Burr,
    Exponential,
    Gamma,
    Geometric,
    Gev,
    HalfNormal,
    InverseGaussian,
    LogNormal,
    NegBinomial,
    NormalMu,
    NormalSigma,
    NormalMuSigma,
    Poisson,
    StudentT,
    UniformScale,
    Weibull,
}

/// The full catalog in its canonical order.
pub fn basic_models() -> Vec<BasicModel> {
    use BasicModel::*;
    vec![
        Bernoulli,
        Beta,
        BirnbaumSaunders,
        Burr,
        Exponential,
        Gamma,
        Geometric,
        Gev,
        HalfNormal,
        InverseGaussian,
        LogNormal,
        NegBinomial,
        NormalMu,
        NormalSigma,
        NormalMuSigma,
        Poisson,
        StudentT,
        UniformScale,
        Weibull,
    ]
}

/// Look up any univariate model by its CLI name.
pub fn model_by_name(name: &str) -> Option<Box<dyn Model>> {
    use BasicModel::*;
    let basic = match name {
        "bernoulli" => Some(Bernoulli),
        "beta" => Some(Beta),
        "birnbaum_saunders" => Some(BirnbaumSaunders),
        "burr" => Some(Burr),
        "exponential" => Some(Exponential),
        "gamma" => Some(Gamma),
        "geometric" => Some(Geometric),
        "gev" => Some(Gev),
        "half_normal" => Some(HalfNormal),
        "inverse_gaussian" => Some(InverseGaussian),
        "log_normal" => Some(LogNormal),
        "negative_binomial" => Some(NegBinomial),
        "normal_mu" => Some(NormalMu),
        "normal_sigma" => Some(NormalSigma),
        "normal_mu_sigma" => Some(NormalMuSigma),
        "poisson" => Some(Poisson),
        "student_t" => Some(StudentT),
        "uniform" => Some(UniformScale),
        "weibull" => Some(Weibull),
        _ => None,
    };
    if let Some(m) = basic {
        return Some(Box::new(m));
    }
    match name {
        "g_and_h" => Some(Box::new(GqModel::new(GqKind::H))),
        "g_and_k" => Some(Box::new(GqModel::new(GqKind::K))),
        _ => None,
    }
}

fn student_t_quantile(nu: f64, lambda: f64) -> f64 {
    if lambda == 0.5 {
        return 0.0;
    }
    let tail = 2.0 * lambda.min(1.0 - lambda);
    let x = inv_inc_beta_reg(0.5 * nu, 0.5, tail);
    let t = (nu * (1.0 - x) / x.max(1e-300)).sqrt();
    if lambda < 0.5 {
        -t
    } else {
        t
    }
}

fn inverse_gaussian_cdf(mu: f64, lam: f64, y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    let s = (lam / y).sqrt();
    normal_cdf(s * (y / mu - 1.0)) + (2.0 * lam / mu).exp() * normal_cdf(-s * (y / mu + 1.0))
}

fn inverse_gaussian_quantile(mu: f64, lam: f64, lambda: f64) -> f64 {
    // bracketed Newton on the cdf
    let mut lo = 1e-300;
    let mut hi = mu;
    while inverse_gaussian_cdf(mu, lam, hi) < lambda {
        hi *= 2.0;
        if hi > 1e12 {
            break;
        }
    }
    let mut x = mu * (lambda / (1.0 - lambda + 1e-12)).max(0.01).min(100.0);
    x = x.clamp(lo, hi);
    for _ in 0..200 {
        let f = inverse_gaussian_cdf(mu, lam, x) - lambda;
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let pdf = (0.5 * (lam / (2.0 * std::f64::consts::PI * x.powi(3))).ln()
            - lam * (x - mu).powi(2) / (2.0 * mu * mu * x))
            .exp();
        let mut next = if pdf > 0.0 { x - f / pdf } else { 0.5 * (lo + hi) };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-10 * x.abs() {
            return next;
        }
        x = next;
    }
    x
}

impl BasicModel {
    fn ln_pdf(&self, theta: &[f64], y: f64) -> f64 {
        use BasicModel::*;
        match self {
            Bernoulli => {
                let p = theta[0];
                if y == 1.0 {
                    p.ln()
                } else if y == 0.0 {
                    (1.0 - p).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Beta => {
                let (a, b) = (theta[0], theta[1]);
                if !(0.0..1.0).contains(&y) {
                    return f64::NEG_INFINITY;
                }
                (a - 1.0) * y.ln() + (b - 1.0) * (1.0 - y).ln() + ln_gamma(a + b)
                    - ln_gamma(a)
                    - ln_gamma(b)
            }
            BirnbaumSaunders => {
                let (scale, shape) = (theta[0], theta[1]);
                if y <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                let r = (y / scale).sqrt();
                let w = (r - 1.0 / r) / shape;
                ((r + 1.0 / r) / (2.0 * shape * y)).ln() - 0.5 * w * w - 0.5 * LN_2PI
            }
            Burr => {
                let (c, s, k) = (theta[0], theta[1], theta[2]);
                if y <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                (c * k / s).ln() + (c - 1.0) * (y / s).ln() - (k + 1.0) * (1.0 + (y / s).powf(c)).ln()
            }
            Exponential => {
                let rate = theta[0];
                if y < 0.0 {
                    return f64::NEG_INFINITY;
                }
                rate.ln() - rate * y
            }
            Gamma => {
                let (a, rate) = (theta[0], theta[1]);
                if y <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                a * rate.ln() + (a - 1.0) * y.ln() - rate * y - ln_gamma(a)
            }
            Geometric => {
                let p = theta[0];
                if y < 0.0 || y.fract() != 0.0 {
                    return f64::NEG_INFINITY;
                }
                p.ln() + y * (1.0 - p).ln()
            }
            Gev => {
                let (kappa, sigma, mu) = (theta[0], theta[1], theta[2]);
                let z = (y - mu) / sigma;
                if kappa.abs() < 1e-8 {
                    -sigma.ln() - z - (-z).exp()
                } else {
                    let u = 1.0 + kappa * z;
                    if u <= 0.0 {
                        return f64::NEG_INFINITY;
                    }
                    -sigma.ln() - (1.0 + 1.0 / kappa) * u.ln() - u.powf(-1.0 / kappa)
                }
            }
            HalfNormal => {
                let s = theta[0];
                if y < 0.0 {
                    return f64::NEG_INFINITY;
                }
                (2.0f64).ln() + normal_pdf(y / s).ln() - s.ln()
            }
            InverseGaussian => {
                let (mu, lam) = (theta[0], theta[1]);
                if y <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                0.5 * (lam / (2.0 * std::f64::consts::PI * y.powi(3))).ln()
                    - lam * (y - mu).powi(2) / (2.0 * mu * mu * y)
            }
            LogNormal => {
                let (mu, sigma) = (theta[0], theta[1]);
                if y <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                let z = (y.ln() - mu) / sigma;
                -0.5 * z * z - 0.5 * LN_2PI - sigma.ln() - y.ln()
            }
            NegBinomial => {
                let p = theta[0];
                let r = 3.0;
                if y < 0.0 || y.fract() != 0.0 {
                    return f64::NEG_INFINITY;
                }
                ln_gamma(y + r) - ln_gamma(r) - ln_gamma(y + 1.0) + r * p.ln()
                    + y * (1.0 - p).ln()
            }
            NormalMu => {
                let z = y - theta[0];
                -0.5 * z * z - 0.5 * LN_2PI
            }
            NormalSigma => {
                let s = theta[0];
                let z = (y - 3.0) / s;
                -0.5 * z * z - 0.5 * LN_2PI - s.ln()
            }
            NormalMuSigma => {
                let (mu, s) = (theta[0], theta[1]);
                let z = (y - mu) / s;
                -0.5 * z * z - 0.5 * LN_2PI - s.ln()
            }
            Poisson => {
                let th = theta[0];
                if y < 0.0 || y.fract() != 0.0 {
                    return f64::NEG_INFINITY;
                }
                y * th.ln() - th - ln_gamma(y + 1.0)
            }
            StudentT => {
                let (mu, s, nu) = (theta[0], theta[1], theta[2]);
                let z = (y - mu) / s;
                ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu)
                    - 0.5 * (nu * std::f64::consts::PI).ln()
                    - s.ln()
                    - 0.5 * (nu + 1.0) * (1.0 + z * z / nu).ln()
            }
            UniformScale => {
                let th = theta[0];
                if (0.0..=th).contains(&y) {
                    -th.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Weibull => {
                let (a, b) = (theta[0], theta[1]);
                if y < 0.0 {
                    return f64::NEG_INFINITY;
                }
                (a / b).ln() + (a - 1.0) * (y / b).ln() - (y / b).powf(a)
            }
        }
    }

    /// Analytic cdf; used as the cross-check oracle against `quantile`.
    pub fn cdf(&self, theta: &[f64], y: f64) -> Option<f64> {
        use BasicModel::*;
        let v = match self {
            Bernoulli | Geometric | NegBinomial | Poisson => return None,
            Beta => {
                if y <= 0.0 {
                    0.0
                } else if y >= 1.0 {
                    1.0
                } else {
                    inc_beta_reg(theta[0], theta[1], y)
                }
            }
            BirnbaumSaunders => {
                if y <= 0.0 {
                    0.0
                } else {
                    let r = (y / theta[0]).sqrt();
                    normal_cdf((r - 1.0 / r) / theta[1])
                }
            }
            Burr => {
                if y <= 0.0 {
                    0.0
                } else {
                    1.0 - (1.0 + (y / theta[1]).powf(theta[0])).powf(-theta[2])
                }
            }
            Exponential => {
                if y < 0.0 {
                    0.0
                } else {
                    1.0 - (-theta[0] * y).exp()
                }
            }
            Gamma => {
                if y <= 0.0 {
                    0.0
                } else {
                    lower_gamma_reg(theta[0], theta[1] * y)
                }
            }
            Gev => {
                let (kappa, sigma, mu) = (theta[0], theta[1], theta[2]);
                let z = (y - mu) / sigma;
                if kappa.abs() < 1e-8 {
                    (-(-z).exp()).exp()
                } else {
                    let u = 1.0 + kappa * z;
                    if u <= 0.0 {
                        if kappa > 0.0 {
                            0.0
                        } else {
                            1.0
                        }
                    } else {
                        (-u.powf(-1.0 / kappa)).exp()
                    }
                }
            }
            HalfNormal => {
                if y < 0.0 {
                    0.0
                } else {
                    2.0 * normal_cdf(y / theta[0]) - 1.0
                }
            }
            InverseGaussian => inverse_gaussian_cdf(theta[0], theta[1], y),
            LogNormal => {
                if y <= 0.0 {
                    0.0
                } else {
                    normal_cdf((y.ln() - theta[0]) / theta[1])
                }
            }
            NormalMu => normal_cdf(y - theta[0]),
            NormalSigma => normal_cdf((y - 3.0) / theta[0]),
            NormalMuSigma => normal_cdf((y - theta[0]) / theta[1]),
            StudentT => {
                let z = (y - theta[0]) / theta[1];
                let nu = theta[2];
                let x = nu / (nu + z * z);
                let half_tail = 0.5 * inc_beta_reg(0.5 * nu, 0.5, x);
                if z >= 0.0 {
                    1.0 - half_tail
                } else {
                    half_tail
                }
            }
            UniformScale => (y / theta[0]).clamp(0.0, 1.0),
            Weibull => {
                if y < 0.0 {
                    0.0
                } else {
                    1.0 - (-(y / theta[1]).powf(theta[0])).exp()
                }
            }
        };
        Some(v)
    }

    fn neg_loglik(&self, theta: &[f64], data: &Dataset) -> f64 {
        -data.sorted().iter().map(|&y| self.ln_pdf(theta, y)).sum::<f64>()
    }

    fn moment_start(&self, data: &Dataset) -> Vec<f64> {
        use BasicModel::*;
        let m = data.mean();
        let v = data.variance().max(1e-12);
        match self {
            Beta => {
                let m = m.clamp(0.01, 0.99);
                let scale = (m * (1.0 - m) / v - 1.0).max(0.01);
                vec![m * scale, (1.0 - m) * scale]
            }
            BirnbaumSaunders => {
                let med = crate::quantiles::quantile_sorted(data.sorted(), 0.5).max(1e-6);
                let shape = (2.0 * (m / med - 1.0).max(1e-4)).sqrt();
                vec![med, shape]
            }
            Burr => {
                // quantile-matching over a coarse (c, k) grid; the scale
                // follows from the median: q(1/2) = s (2^{1/k} - 1)^{1/c}
                let med = crate::quantiles::quantile_sorted(data.sorted(), 0.5).max(1e-6);
                let mut best = (f64::INFINITY, vec![1.0, med, 1.0]);
                for &c in &[0.3, 0.5, 1.0, 2.0, 4.0] {
                    for &k in &[0.5, 1.0, 2.0, 5.0, 10.0] {
                        let s = med / (2f64.powf(1.0 / k) - 1.0).powf(1.0 / c);
                        if !s.is_finite() || s <= 0.0 {
                            continue;
                        }
                        let cand = vec![c, s.min(100.0), k];
                        let nll = self.neg_loglik(&cand, data);
                        if nll < best.0 {
                            best = (nll, cand);
                        }
                    }
                }
                best.1
            }
            Gamma => vec![(m * m / v).max(0.01), (m / v).max(1e-4)],
            Gev => {
                let sigma = (v.sqrt() * 6f64.sqrt() / std::f64::consts::PI).max(1e-4);
                vec![0.0, sigma, m - 0.5772 * sigma]
            }
            InverseGaussian => vec![m.max(1e-4), (m.powi(3) / v).max(1e-4)],
            NegBinomial => vec![(3.0 / (3.0 + m)).clamp(PROB_LO, 1.0 - PROB_LO)],
            StudentT => {
                let med = crate::quantiles::quantile_sorted(data.sorted(), 0.5);
                let iqr = crate::quantiles::quantile_sorted(data.sorted(), 0.75)
                    - crate::quantiles::quantile_sorted(data.sorted(), 0.25);
                vec![med, (iqr / 1.349).max(1e-4), 6.0]
            }
            Weibull => {
                let logs: Vec<f64> = data.sorted().iter().map(|y| y.max(1e-300).ln()).collect();
                let lm = logs.iter().sum::<f64>() / logs.len() as f64;
                let lv = logs.iter().map(|x| (x - lm).powi(2)).sum::<f64>()
                    / (logs.len().max(2) - 1) as f64;
                let a = (std::f64::consts::PI / (6.0 * lv.max(1e-12)).sqrt()).clamp(0.05, 50.0);
                vec![a, (lm + 0.5772 / a).exp()]
            }
            _ => self.truth(),
        }
    }

    fn numeric_mle(&self, data: &Dataset) -> Option<Vec<f64>> {
        let bounds = Model::bounds(self);
        let lower: Vec<f64> = bounds.iter().map(|b| b.0).collect();
        let upper: Vec<f64> = bounds.iter().map(|b| b.1).collect();
        let start = self.moment_start(data);
        let opts = NmOptions {
            restarts: 3,
            ..NmOptions::for_dim(self.dim())
        };
        let r = optim::minimize_multistart(
            |th| self.neg_loglik(th, data),
            &[start],
            &lower,
            &upper,
            &opts,
        )
        .ok()?;
        Some(r.x)
    }
}

impl Model for BasicModel {
    fn name(&self) -> &str {
        use BasicModel::*;
        match self {
            Bernoulli => "bernoulli",
            Beta => "beta",
            BirnbaumSaunders => "birnbaum_saunders",
            Burr => "burr",
            Exponential => "exponential",
            Gamma => "gamma",
            Geometric => "geometric",
            Gev => "gev",
            HalfNormal => "half_normal",
            InverseGaussian => "inverse_gaussian",
            LogNormal => "log_normal",
            NegBinomial => "negative_binomial",
            NormalMu => "normal_mu",
            NormalSigma => "normal_sigma",
            NormalMuSigma => "normal_mu_sigma",
            Poisson => "poisson",
            StudentT => "student_t",
            UniformScale => "uniform",
            Weibull => "weibull",
        }
    }

    fn dim(&self) -> usize {
        use BasicModel::*;
        match self {
            Burr | Gev | StudentT => 3,
            Beta | BirnbaumSaunders | Gamma | InverseGaussian | LogNormal | NormalMuSigma
            | Weibull => 2,
            _ => 1,
        }
    }

    fn param_names(&self) -> Vec<String> {
        use BasicModel::*;
        let names: &[&str] = match self {
            Bernoulli | Geometric | NegBinomial | Poisson => &["theta"],
            Beta => &["alpha", "beta"],
            BirnbaumSaunders => &["scale", "shape"],
            Burr => &["c", "scale", "k"],
            Exponential => &["rate"],
            Gamma => &["shape", "rate"],
            Gev => &["shape", "scale", "loc"],
            HalfNormal | NormalSigma => &["sigma"],
            InverseGaussian => &["mu", "lambda"],
            LogNormal | NormalMuSigma => &["mu", "sigma"],
            NormalMu => &["mu"],
            StudentT => &["mu", "sigma", "nu"],
            UniformScale => &["theta"],
            Weibull => &["shape", "scale"],
        };
        names.iter().map(|s| s.to_string()).collect()
    }

    fn bounds(&self) -> Vec<(f64, f64)> {
        use BasicModel::*;
        match self {
            Bernoulli | Geometric | NegBinomial => vec![(PROB_LO, 1.0 - PROB_LO)],
            Beta | Gamma | InverseGaussian | Weibull | BirnbaumSaunders => {
                vec![(POS_LO, 100.0), (POS_LO, 100.0)]
            }
            Burr => vec![(POS_LO, 100.0), (POS_LO, 100.0), (POS_LO, 100.0)],
            Exponential | Poisson | UniformScale | HalfNormal | NormalSigma => {
                vec![(POS_LO, 100.0)]
            }
            Gev => vec![(-10.0, 10.0), (POS_LO, 100.0), (-10.0, 10.0)],
            LogNormal => vec![(-10.0, 10.0), (POS_LO, 100.0)],
            NormalMu => vec![(-100.0, 100.0)],
            NormalMuSigma => vec![(-100.0, 100.0), (POS_LO, 100.0)],
            StudentT => vec![(-100.0, 100.0), (POS_LO, 100.0), (3.0, 40.0)],
        }
    }

    fn truth(&self) -> Vec<f64> {
        use BasicModel::*;
        match self {
            Bernoulli | Geometric | NegBinomial => vec![1.0 / 3.0],
            Beta | BirnbaumSaunders | Gamma | InverseGaussian | LogNormal => vec![3.0, 1.0],
            Burr => vec![0.5, 2.0, 5.0],
            Exponential | Poisson | UniformScale | NormalMu | HalfNormal => vec![3.0],
            Gev => vec![0.0, 3.0, 0.0],
            NormalSigma => vec![1.0],
            NormalMuSigma => vec![3.0, 1.0],
            StudentT => vec![3.0, 1.0, 4.0],
            Weibull => vec![3.0, 1.0],
        }
    }

    fn quantile(&self, theta: &[f64], lambda: f64) -> f64 {
        use BasicModel::*;
        let z = || normal_quantile(lambda).unwrap();
        match self {
            // discrete models never reach here: they use the surrogate
            Bernoulli | Geometric | NegBinomial | Poisson => {
                let (mu, var) = self.surrogate_moments(theta).unwrap();
                mu + var.max(0.0).sqrt() * z()
            }
            Beta => inv_inc_beta_reg(theta[0], theta[1], lambda),
            BirnbaumSaunders => {
                let half = 0.5 * theta[1] * z();
                theta[0] * (half + (half * half + 1.0).sqrt()).powi(2)
            }
            Burr => theta[1] * ((1.0 - lambda).powf(-1.0 / theta[2]) - 1.0).powf(1.0 / theta[0]),
            Exponential => -(1.0 - lambda).ln() / theta[0],
            Gamma => inv_lower_gamma_reg(theta[0], lambda) / theta[1],
            Gev => {
                let (kappa, sigma, mu) = (theta[0], theta[1], theta[2]);
                if kappa.abs() < 1e-8 {
                    mu - sigma * (-lambda.ln()).ln()
                } else {
                    mu + sigma * ((-lambda.ln()).powf(-kappa) - 1.0) / kappa
                }
            }
            HalfNormal => theta[0] * normal_quantile(0.5 * (1.0 + lambda)).unwrap(),
            InverseGaussian => inverse_gaussian_quantile(theta[0], theta[1], lambda),
            LogNormal => (theta[0] + theta[1] * z()).exp(),
            NormalMu => theta[0] + z(),
            NormalSigma => 3.0 + theta[0] * z(),
            NormalMuSigma => theta[0] + theta[1] * z(),
            StudentT => theta[0] + theta[1] * student_t_quantile(theta[2], lambda),
            UniformScale => lambda * theta[0],
            Weibull => theta[1] * (-(1.0 - lambda).ln()).powf(1.0 / theta[0]),
        }
    }

    fn pdf_at_quantile(&self, theta: &[f64], lambda: f64) -> Option<f64> {
        use BasicModel::*;
        match self {
            Bernoulli | Geometric | NegBinomial | Poisson => None,
            Gev => {
                // at the quantile, (1 + kappa z)^(-1/kappa) = -ln(lambda)
                let (kappa, sigma) = (theta[0], theta[1]);
                Some(lambda * (-lambda.ln()).powf(kappa + 1.0) / sigma)
            }
            Weibull => {
                let q = self.quantile(theta, lambda);
                let (a, b) = (theta[0], theta[1]);
                Some((a / b) * (q / b).powf(a - 1.0) * (1.0 - lambda))
            }
            _ => {
                let q = self.quantile(theta, lambda);
                Some(self.ln_pdf(theta, q).exp())
            }
        }
    }

    fn log_prior(&self, theta: &[f64]) -> f64 {
        use BasicModel::*;
        if !self.in_box(theta) {
            return f64::NEG_INFINITY;
        }
        match self {
            Exponential | Poisson => -theta[0],
            NormalMu => -theta[0] * theta[0] / 200.0,
            NormalSigma => -2.0 / (theta[0] * theta[0]),
            NormalMuSigma => {
                -theta[0] * theta[0] / (200.0 * theta[1] * theta[1]) - 1.0 / (theta[1] * theta[1])
            }
            StudentT => -theta[0] * theta[0] / 200.0 - theta[1],
            UniformScale => -theta[0].ln(),
            _ => 0.0,
        }
    }

    fn simulate(&self, theta: &[f64], n: usize, rng: &mut Rng) -> Vec<f64> {
        use BasicModel::*;
        (0..n)
            .map(|_| match self {
                Bernoulli => {
                    if rng.uniform() < theta[0] {
                        1.0
                    } else {
                        0.0
                    }
                }
                Beta => {
                    let x = rng.gamma(theta[0]);
                    let y = rng.gamma(theta[1]);
                    x / (x + y)
                }
                Gamma => rng.gamma(theta[0]) / theta[1],
                Geometric => (rng.uniform().ln() / (1.0 - theta[0]).ln()).floor(),
                NegBinomial => {
                    let mut acc = 0.0;
                    for _ in 0..3 {
                        acc += (rng.uniform().ln() / (1.0 - theta[0]).ln()).floor();
                    }
                    acc
                }
                Poisson => {
                    let th = theta[0];
                    let mut k = 0.0f64;
                    let mut p = (-th).exp();
                    let mut f = p;
                    let u = rng.uniform();
                    while u > f && k < th * 20.0 + 200.0 {
                        k += 1.0;
                        p *= th / k;
                        f += p;
                    }
                    k
                }
                InverseGaussian => {
                    let (mu, lam) = (theta[0], theta[1]);
                    let z = rng.standard_normal();
                    let nu = z * z;
                    let x = mu + mu * mu * nu / (2.0 * lam)
                        - mu / (2.0 * lam) * (4.0 * mu * lam * nu + mu * mu * nu * nu).sqrt();
                    if rng.uniform() <= mu / (mu + x) {
                        x
                    } else {
                        mu * mu / x
                    }
                }
                // everything else samples by inverting the quantile function
                _ => self.quantile(theta, rng.uniform()),
            })
            .collect()
    }

    fn mle(&self, data: &Dataset) -> Option<Vec<f64>> {
        use BasicModel::*;
        let m = data.mean();
        let bounds = Model::bounds(self);
        let fit = match self {
            Bernoulli => vec![m],
            Exponential => vec![1.0 / m.max(1e-12)],
            Poisson => vec![m],
            Geometric => vec![1.0 / (1.0 + m)],
            NormalMu => vec![m],
            NormalSigma => {
                let s2 = data.sorted().iter().map(|y| (y - 3.0).powi(2)).sum::<f64>()
                    / data.n() as f64;
                vec![s2.sqrt()]
            }
            NormalMuSigma => {
                let s2 =
                    data.sorted().iter().map(|y| (y - m).powi(2)).sum::<f64>() / data.n() as f64;
                vec![m, s2.sqrt()]
            }
            HalfNormal => {
                let s2 = data.sorted().iter().map(|y| y * y).sum::<f64>() / data.n() as f64;
                vec![s2.sqrt()]
            }
            UniformScale => vec![*data.sorted().last().unwrap()],
            LogNormal => {
                let logs: Vec<f64> = data.sorted().iter().map(|y| y.max(1e-300).ln()).collect();
                let lm = logs.iter().sum::<f64>() / logs.len() as f64;
                let lv = logs.iter().map(|x| (x - lm).powi(2)).sum::<f64>() / logs.len() as f64;
                vec![lm, lv.sqrt()]
            }
            _ => return self.numeric_mle(data),
        };
        Some(
            fit.into_iter()
                .zip(bounds)
                .map(|(v, (lo, hi))| v.clamp(lo, hi))
                .collect(),
        )
    }

    fn surrogate_moments(&self, theta: &[f64]) -> Option<(f64, f64)> {
        use BasicModel::*;
        let th = theta[0];
        match self {
            Bernoulli => Some((th, th * (1.0 - th))),
            Geometric => Some(((1.0 - th) / th, (1.0 - th) / (th * th))),
            NegBinomial => Some((3.0 * (1.0 - th) / th, 3.0 * (1.0 - th) / (th * th))),
            Poisson => Some((th, th)),
            _ => None,
        }
    }

    fn prior_sample(&self, rng: &mut Rng) -> Option<Vec<f64>> {
        use BasicModel::*;
        let from_box = |rng: &mut Rng, bounds: Vec<(f64, f64)>| {
            bounds.iter().map(|(lo, hi)| rng.uniform_in(*lo, *hi)).collect::<Vec<f64>>()
        };
        match self {
            Exponential | Poisson => Some(vec![-rng.uniform().ln()]),
            NormalMu => Some(vec![10.0 * rng.standard_normal()]),
            StudentT => Some(vec![
                10.0 * rng.standard_normal(),
                -rng.uniform().ln(),
                rng.uniform_in(3.0, 40.0),
            ]),
            // improper priors have no sampler
            NormalSigma | NormalMuSigma | UniformScale => None,
            _ => Some(from_box(rng, Model::bounds(self))),
        }
    }
}

/// Convenience wrapper: a model with everything but the quantile function
/// hidden, used to exercise the equiprobability fallback in tests.
pub struct QuantileOnly<M: Model>(pub M);

impl<M: Model> Model for QuantileOnly<M> {
    fn name(&self) -> &str {
        self.0.name()
    }
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn param_names(&self) -> Vec<String> {
        self.0.param_names()
    }
    fn bounds(&self) -> Vec<(f64, f64)> {
        self.0.bounds()
    }
    fn truth(&self) -> Vec<f64> {
        self.0.truth()
    }
    fn quantile(&self, theta: &[f64], lambda: f64) -> f64 {
        self.0.quantile(theta, lambda)
    }
    fn pdf_at_quantile(&self, _theta: &[f64], _lambda: f64) -> Option<f64> {
        None
    }
    fn log_prior(&self, theta: &[f64]) -> f64 {
        self.0.log_prior(theta)
    }
    fn simulate(&self, theta: &[f64], n: usize, rng: &mut Rng) -> Vec<f64> {
        self.0.simulate(theta, n, rng)
    }
}

/// Analytic mean and variance at theta, for simulator checks. Variance is
/// None when the needed moments do not exist or have no tidy closed form.
pub fn analytic_moments(model: &BasicModel, theta: &[f64]) -> (f64, Option<f64>) {
    use BasicModel::*;
    match model {
        Bernoulli | Geometric | NegBinomial | Poisson => {
            let (m, v) = model.surrogate_moments(theta).unwrap();
            (m, Some(v))
        }
        Beta => {
            let (a, b) = (theta[0], theta[1]);
            let m = a / (a + b);
            (m, Some(a * b / ((a + b).powi(2) * (a + b + 1.0))))
        }
        BirnbaumSaunders => {
            let (s, g) = (theta[0], theta[1]);
            (
                s * (1.0 + 0.5 * g * g),
                Some((s * g).powi(2) * (1.0 + 1.25 * g * g)),
            )
        }
        Burr => {
            let (c, s, k) = (theta[0], theta[1], theta[2]);
            // E[Y^r] = s^r Gamma(1 + r/c) Gamma(k - r/c) / Gamma(k)
            let raw = |r: f64| {
                (r / c < k).then(|| {
                    s.powf(r) * (ln_gamma(1.0 + r / c) + ln_gamma(k - r / c) - ln_gamma(k)).exp()
                })
            };
            let m = raw(1.0).unwrap();
            // second moment exists here but the fourth does not at the
            // catalog truth, so variance checks are skipped upstream
            (m, raw(2.0).map(|m2| m2 - m * m))
        }
        Exponential => (1.0 / theta[0], Some(1.0 / (theta[0] * theta[0]))),
        Gamma => (theta[0] / theta[1], Some(theta[0] / (theta[1] * theta[1]))),
        Gev => {
            let (kappa, sigma, mu) = (theta[0], theta[1], theta[2]);
            assert!(kappa.abs() < 1e-8, "moments coded for the Gumbel limit");
            (
                mu + 0.5772156649015329 * sigma,
                Some(sigma * sigma * std::f64::consts::PI.powi(2) / 6.0),
            )
        }
        HalfNormal => {
            let s = theta[0];
            (
                s * (2.0 / std::f64::consts::PI).sqrt(),
                Some(s * s * (1.0 - 2.0 / std::f64::consts::PI)),
            )
        }
        InverseGaussian => (theta[0], Some(theta[0].powi(3) / theta[1])),
        LogNormal => {
            let (mu, s) = (theta[0], theta[1]);
            let m = (mu + 0.5 * s * s).exp();
            (m, Some(((s * s).exp() - 1.0) * (2.0 * mu + s * s).exp()))
        }
        NormalMu => (theta[0], Some(1.0)),
        NormalSigma => (3.0, Some(theta[0] * theta[0])),
        NormalMuSigma => (theta[0], Some(theta[1] * theta[1])),
        StudentT => {
            let (mu, s, nu) = (theta[0], theta[1], theta[2]);
            (mu, (nu > 2.0).then(|| s * s * nu / (nu - 2.0)))
        }
        UniformScale => (0.5 * theta[0], Some(theta[0] * theta[0] / 12.0)),
        Weibull => {
            let (a, b) = (theta[0], theta[1]);
            let g1 = ln_gamma(1.0 + 1.0 / a).exp();
            let g2 = ln_gamma(1.0 + 2.0 / a).exp();
            (b * g1, Some(b * b * (g2 - g1 * g1)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_has_nineteen() {
        assert_eq!(basic_models().len(), 19);
        let dims: usize = basic_models().iter().map(|m| m.dim()).sum();
        assert_eq!(dims, 32);
    }

    #[test]
    fn surrogate_moment_maps() {
        let (m, v) = BasicModel::Bernoulli.surrogate_moments(&[1.0 / 3.0]).unwrap();
        assert!((m - 1.0 / 3.0).abs() < 1e-15);
        assert!((v - 2.0 / 9.0).abs() < 1e-15);
        let (m, v) = BasicModel::Poisson.surrogate_moments(&[3.0]).unwrap();
        assert_eq!((m, v), (3.0, 3.0));
    }

    #[test]
    fn exponential_quantile_closed_form() {
        let q = BasicModel::Exponential.quantile(&[3.0], 0.3);
        assert!((q + (0.7f64).ln() / 3.0).abs() < 1e-14);
    }

    #[test]
    fn uniform_mle_is_max() {
        let d = Dataset::from_values(vec![0.4, 2.9, 1.3]).unwrap();
        let mle = BasicModel::UniformScale.mle(&d).unwrap();
        assert_eq!(mle[0], 2.9);
    }

    #[test]
    fn cdf_quantile_roundtrip_all_continuous() {
        for model in basic_models() {
            let theta = model.truth();
            if model.cdf(&theta, 1.0).is_none() {
                continue;
            }
            for j in 1..100 {
                let lambda = j as f64 / 100.0;
                let q = model.quantile(&theta, lambda);
                let back = model.cdf(&theta, q).unwrap();
                assert!(
                    (back - lambda).abs() < 1e-8,
                    "{} lambda={lambda} q={q} back={back}",
                    model.name()
                );
            }
        }
    }

    #[test]
    fn density_at_quantile_matches_cdf_slope() {
        // central difference of the cdf at the quantile
        for model in basic_models() {
            let theta = model.truth();
            if model.cdf(&theta, 1.0).is_none() {
                continue;
            }
            for &lambda in &[0.1, 0.5, 0.9] {
                let q = model.quantile(&theta, lambda);
                let f = model.pdf_at_quantile(&theta, lambda).unwrap();
                let h = 1e-5 * (1.0 + q.abs());
                let slope =
                    (model.cdf(&theta, q + h).unwrap() - model.cdf(&theta, q - h).unwrap())
                        / (2.0 * h);
                assert!(
                    (f - slope).abs() <= 1e-4 * (1.0 + slope.abs()),
                    "{} lambda={lambda}: f={f} slope={slope}",
                    model.name()
                );
            }
        }
    }

    #[test]
    fn simulators_match_analytic_moments() {
        let r = 100_000usize;
        for model in basic_models() {
            let theta = model.truth();
            let mut rng = Rng::from_seed(0xBEEF ^ model.name().len() as u64);
            let draws = model.simulate(&theta, r, &mut rng);
            let mean = draws.iter().sum::<f64>() / r as f64;
            let s2 = draws.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (r - 1) as f64;
            let (am, av) = analytic_moments(&model, &theta);
            let se_mean = (s2 / r as f64).sqrt();
            assert!(
                (mean - am).abs() < 3.0 * se_mean + 1e-9,
                "{}: mean {mean} vs {am}",
                model.name()
            );
            // variance check where the fourth moment exists
            let fourth_ok = !matches!(model, BasicModel::Burr | BasicModel::StudentT);
            if let (Some(av), true) = (av, fourth_ok) {
                let m4 = draws.iter().map(|y| (y - mean).powi(4)).sum::<f64>() / r as f64;
                let se_var = ((m4 - s2 * s2).max(0.0) / r as f64).sqrt();
                assert!(
                    (s2 - av).abs() < 3.0 * se_var + 1e-9,
                    "{}: var {s2} vs {av}",
                    model.name()
                );
            }
        }
    }

    #[test]
    fn mle_at_least_as_good_as_truth() {
        for model in basic_models() {
            let theta = model.truth();
            let mut rng = Rng::from_seed(7);
            let data = Dataset::from_values(model.simulate(&theta, 4000, &mut rng)).unwrap();
            let mle = model.mle(&data).expect("catalog models all have an mle");
            let nll_hat = model.neg_loglik(&mle, &data);
            let nll_true = model.neg_loglik(&theta, &data);
            assert!(
                nll_hat <= nll_true + 1e-3,
                "{}: nll {nll_hat} vs truth {nll_true}",
                model.name()
            );
            // parameter recovery, except on ridge-shaped likelihoods where
            // the optimum legitimately sits far from the generator (Burr)
            if matches!(model, BasicModel::Burr) {
                continue;
            }
            for ((est, tru), name) in mle.iter().zip(&theta).zip(model.param_names()) {
                let tol = 0.25 * (1.0 + tru.abs());
                assert!(
                    (est - tru).abs() < tol,
                    "{} {name}: {est} vs {tru}",
                    model.name()
                );
            }
        }
    }

    #[test]
    fn student_t_quantile_frozen() {
        // classical table value for nu = 4
        let q = student_t_quantile(4.0, 0.975);
        assert!((q - 2.7764451051977987).abs() < 1e-8, "{q}");
        assert_eq!(student_t_quantile(4.0, 0.5), 0.0);
    }

    #[test]
    fn gev_gumbel_branch() {
        let theta = vec![0.0, 3.0, 0.0];
        let q = BasicModel::Gev.quantile(&theta, 0.5);
        let expect = -3.0 * (-(0.5f64.ln())).ln();
        assert!((q - expect).abs() < 1e-12);
        // shape below the numerical switch uses the limit form
        let q_eps = BasicModel::Gev.quantile(&[1e-12, 3.0, 0.0], 0.5);
        assert!((q - q_eps).abs() < 1e-9);
    }
}
