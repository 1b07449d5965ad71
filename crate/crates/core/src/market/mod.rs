//! Market models: geometric-Brownian dynamics discretized by an explicit
//! Euler scheme with its tangent process, payoffs written with the
//! generalized-derivative primitives, reproducible counter-based random
//! numbers, and closed-form / Malliavin verification oracles.

mod black_scholes;
mod malliavin;
mod payoff;
mod pricing;
mod rng;
mod scenario;
mod simulate;

pub use black_scholes::{bs_closed_form, norm_cdf, norm_quantile, BsValues};
pub use malliavin::malliavin_gamma;
pub use payoff::{Payoff, PayoffKind};
pub use pricing::{discount_factor, price_mc};
pub use rng::{stream, PathRng};
pub use scenario::{Scenario, ScenarioError};
pub use simulate::{simulate, PathBatch, Theta};

use crate::vaad::det_sum;
use std::fmt;

/// A Monte Carlo estimate with its standard error. Deterministic
/// quantities carry a zero standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, std_error: 0.0 }
    }

    /// Mean and standard error of the mean, reduced deterministically.
    pub fn from_samples(xs: &[f64]) -> Self {
        let m = xs.len();
        if m == 0 {
            return Self::exact(0.0);
        }
        let mean = det_sum(xs) / m as f64;
        if m == 1 {
            return Self { value: mean, std_error: 0.0 };
        }
        let mut sq = vec![0.0; m];
        for (s, &x) in sq.iter_mut().zip(xs) {
            let d = x - mean;
            *s = d * d;
        }
        let var = det_sum(&sq) / (m - 1) as f64;
        Self { value: mean, std_error: (var / m as f64).sqrt() }
    }

    /// Three-combined-standard-error agreement check against another
    /// estimate or an exact value.
    pub fn within_k_se(&self, other: &Estimate, k: f64) -> bool {
        let se = (self.std_error * self.std_error + other.std_error * other.std_error).sqrt();
        (self.value - other.value).abs() <= k * se
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    InvalidParams(String),
    /// Requested operation does not apply to this payoff.
    UnsupportedPayoff(&'static str),
    /// Diffusion coefficient vanished where a positive one is required.
    SingularDiffusion { path: usize },
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::InvalidParams(msg) => write!(f, "invalid parameters: {msg}"),
            ModelError::UnsupportedPayoff(what) => write!(f, "unsupported payoff: {what}"),
            ModelError::SingularDiffusion { path } => {
                write!(f, "nonpositive diffusion coefficient on path {path}")
            }
        }
    }
}

impl std::error::Error for ModelError {}

pub type ModelResult<T> = Result<T, ModelError>;
