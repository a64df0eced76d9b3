//! Surrogate likelihoods from sample quantiles.
//!
//! The pivotal statistic of a set of sample quantiles against the quantiles
//! a model implies is asymptotically chi-square; its density is a tractable
//! stand-in for likelihoods that are too expensive or impossible to
//! evaluate. This crate provides that surrogate for univariate iid data,
//! grouped (composite) data, multivariate data via Mahalanobis depth,
//! binary regression and network models, and biased-urn choice models,
//! together with the estimation machinery: penalized least squares and
//! penalized maximization, adaptive Metropolis, importance sampling, and an
//! ABC rejection baseline.

pub mod data;
pub mod depth;
pub mod diagnostics;
pub mod error;
pub mod glm;
pub mod inference;
pub mod linalg;
pub mod model;
pub mod network;
pub mod optim;
pub mod pivotal;
pub mod quantiles;
pub mod rng;
pub mod special;
pub mod wallenius;

pub use data::Dataset;
pub use error::{QilError, Result};
pub use pivotal::{DPolicy, PivotalResult};
pub use rng::Rng;
