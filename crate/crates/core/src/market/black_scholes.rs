use super::{ModelError, ModelResult};
use statrs::distribution::{ContinuousCDF, Normal};

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

/// Standard normal quantile (used for equal-probability bucket edges).
pub fn norm_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// Closed-form European prices and sensitivities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsValues {
    pub call: f64,
    pub put: f64,
    pub delta_call: f64,
    pub delta_put: f64,
    /// Identical for call and put.
    pub gamma: f64,
    pub vega: f64,
}

/// Black-Scholes closed form for constant rate and volatility.
pub fn bs_closed_form(
    spot: f64,
    strike: f64,
    rate: f64,
    sigma: f64,
    t: f64,
) -> ModelResult<BsValues> {
    if !(spot > 0.0 && strike > 0.0) {
        return Err(ModelError::InvalidParams("spot and strike must be positive".into()));
    }
    if !(sigma > 0.0 && t > 0.0) {
        return Err(ModelError::InvalidParams("sigma and maturity must be positive".into()));
    }
    let st = sigma * t.sqrt();
    let d1 = ((spot / strike).ln() + (rate + 0.5 * sigma * sigma) * t) / st;
    let d2 = d1 - st;
    let disc = (-rate * t).exp();
    let nd1 = norm_cdf(d1);
    let nd2 = norm_cdf(d2);
    let pdf_d1 = (-0.5 * d1 * d1).exp() / (2.0 * std::f64::consts::PI).sqrt();

    let call = spot * nd1 - strike * disc * nd2;
    let put = strike * disc * (1.0 - nd2) - spot * (1.0 - nd1);
    Ok(BsValues {
        call,
        put,
        delta_call: nd1,
        delta_put: nd1 - 1.0,
        gamma: pdf_d1 / (spot * st),
        vega: spot * pdf_d1 * t.sqrt(),
    })
}
