use super::payoff::{Payoff, PayoffKind};
use super::simulate::PathBatch;
use super::{Estimate, ModelError, ModelResult};
use rayon::prelude::*;

/// Malliavin-weighted gamma for terminal payoffs under constant
/// coefficients:
///
/// `Gamma = E[ e^{-rT} V(X_T) / (x^2 T sigma) * (W_T^2 / (sigma T) - W_T - 1/sigma) ]`
///
/// The payoff is evaluated, never differentiated. The weight is the
/// likelihood-ratio kernel of the exact lognormal terminal law, so the
/// terminal value is rebuilt from the batch's Brownian increments
/// (`W_T = sqrt(h) sum Z`) with the exact map rather than read off the
/// Euler recursion, keeping the estimator unbiased for the closed form.
pub fn malliavin_gamma(batch: &PathBatch, payoff: &Payoff, rate: f64) -> ModelResult<Estimate> {
    if !(batch.sigma > 0.0) {
        return Err(ModelError::InvalidParams(
            "Malliavin weight is singular at zero volatility".into(),
        ));
    }
    if !(batch.maturity > 0.0) {
        return Err(ModelError::InvalidParams(
            "Malliavin weight is singular at zero maturity".into(),
        ));
    }
    if matches!(payoff.kind, PayoffKind::DoubleBarrierCall | PayoffKind::AmericanPut) {
        return Err(ModelError::UnsupportedPayoff(
            "Malliavin gamma weight applies to terminal payoffs only",
        ));
    }
    let (x0, sig, t) = (batch.spot, batch.sigma, batch.maturity);
    let disc = (-rate * t).exp();
    let drift = (rate - 0.5 * sig * sig) * t;
    let scale = 1.0 / (x0 * x0 * t * sig);

    let samples: Vec<f64> = (0..batch.m)
        .into_par_iter()
        .map(|i| {
            let w = batch.brownian_terminal(i);
            let x_t = x0 * (drift + sig * w).exp();
            let weight = w * w / (sig * t) - w - 1.0 / sig;
            disc * payoff.terminal(x_t) * scale * weight
        })
        .collect();
    Ok(Estimate::from_samples(&samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{bs_closed_form, simulate, PathRng, PayoffKind, Scenario, Theta};

    fn scenario(paths: usize) -> Scenario {
        Scenario {
            spot: 40.0,
            rate: 0.06,
            sigma: 0.2,
            strike: 40.0,
            maturity: 1.0,
            steps: 50,
            paths,
            seed: 31,
            payoff: PayoffKind::EuropeanCall,
            barrier_lo: None,
            barrier_hi: None,
            hazard: 0.0,
            lgd: 0.6,
            smoothing_a: None,
            groups: 10,
        }
    }

    #[test]
    fn gamma_matches_closed_form() {
        let sc = scenario(1_000_000);
        let batch = simulate(&sc, Theta::Spot, &PathRng::new(sc.seed)).unwrap();
        let est = malliavin_gamma(&batch, &sc.payoff_struct(), sc.rate).unwrap();
        let bs = bs_closed_form(40.0, 40.0, 0.06, 0.2, 1.0).unwrap();
        assert!(
            (est.value - bs.gamma).abs() < 3.0 * est.std_error,
            "malliavin {} closed form {} se {}",
            est.value,
            bs.gamma,
            est.std_error
        );
    }

    #[test]
    fn constant_payoff_weight_has_zero_mean() {
        let sc = scenario(400_000);
        let batch = simulate(&sc, Theta::Spot, &PathRng::new(sc.seed)).unwrap();
        // Constant payoff: terminal() replaced by a unit payoff via a
        // deep-in-the-money put minus its intrinsic trick is overkill;
        // evaluate the weight directly.
        let (x0, sig, t) = (batch.spot, batch.sigma, batch.maturity);
        let scale = 1.0 / (x0 * x0 * t * sig);
        let samples: Vec<f64> = (0..batch.m)
            .map(|i| {
                let w = batch.brownian_terminal(i);
                scale * (w * w / (sig * t) - w - 1.0 / sig)
            })
            .collect();
        let est = Estimate::from_samples(&samples);
        assert!(est.value.abs() < 3.0 * est.std_error, "{} vs {}", est.value, est.std_error);
    }

    #[test]
    fn singular_parameters_are_rejected() {
        let mut sc = scenario(16);
        sc.sigma = 0.0;
        let batch = simulate(&sc, Theta::Spot, &PathRng::new(1)).unwrap();
        assert!(malliavin_gamma(&batch, &sc.payoff_struct(), sc.rate).is_err());
    }
}
