use super::payoff::{Payoff, PayoffKind};
use super::simulate::PathBatch;
use super::{Estimate, ModelError, ModelResult};
use rayon::prelude::*;

pub fn discount_factor(rate: f64, t: f64) -> f64 {
    (-rate * t).exp()
}

/// Discounted Monte Carlo price of a (possibly path-dependent) payoff on a
/// simulated batch. American payoffs need the exercise machinery instead.
pub fn price_mc(batch: &PathBatch, payoff: &Payoff, rate: f64) -> ModelResult<Estimate> {
    if payoff.kind == PayoffKind::AmericanPut {
        return Err(ModelError::UnsupportedPayoff(
            "american_put is priced by the exercise-policy engine",
        ));
    }
    let disc = discount_factor(rate, batch.maturity);
    let values: Vec<f64> = (0..batch.m)
        .into_par_iter()
        .map(|i| disc * payoff.path_value(batch.path(i)))
        .collect();
    Ok(Estimate::from_samples(&values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{bs_closed_form, simulate, PathRng, PayoffKind, Scenario, Theta};

    fn scenario() -> Scenario {
        Scenario {
            spot: 36.0,
            rate: 0.06,
            sigma: 0.2,
            strike: 40.0,
            maturity: 1.0,
            steps: 50,
            paths: 100_000,
            seed: 42,
            payoff: PayoffKind::EuropeanPut,
            barrier_lo: None,
            barrier_hi: None,
            hazard: 0.0,
            lgd: 0.6,
            smoothing_a: None,
            groups: 10,
        }
    }

    #[test]
    fn european_put_close_to_closed_form() {
        let sc = scenario();
        let batch = simulate(&sc, Theta::Spot, &PathRng::new(sc.seed)).unwrap();
        let est = price_mc(&batch, &sc.payoff_struct(), sc.rate).unwrap();
        let bs = bs_closed_form(36.0, 40.0, 0.06, 0.2, 1.0).unwrap();
        assert!(
            (est.value - bs.put).abs() < 3.0 * est.std_error + 0.01,
            "mc {} bs {} se {}",
            est.value,
            bs.put,
            est.std_error
        );
    }

    #[test]
    fn zero_volatility_put_is_exact_discounted_intrinsic() {
        let mut sc = scenario();
        sc.sigma = 0.0;
        sc.paths = 64;
        let batch = simulate(&sc, Theta::Spot, &PathRng::new(sc.seed)).unwrap();
        let est = price_mc(&batch, &sc.payoff_struct(), sc.rate).unwrap();
        let h = sc.step_size();
        let xt = 36.0 * (1.0f64 + 0.06 * h).powi(50);
        let expect = (-0.06f64).exp() * (40.0 - xt);
        assert!((est.value - expect).abs() < 1e-12 * expect);
        assert!(est.std_error < 1e-12);
    }

    #[test]
    fn narrower_corridor_never_raises_the_barrier_price() {
        let mut prices = Vec::new();
        for &(lo, hi) in &[(20.0, 70.0), (28.0, 55.0), (33.0, 45.0)] {
            let mut sc = scenario();
            sc.spot = 40.0;
            sc.payoff = PayoffKind::DoubleBarrierCall;
            sc.barrier_lo = Some(lo);
            sc.barrier_hi = Some(hi);
            sc.paths = 60_000;
            let batch = simulate(&sc, Theta::Spot, &PathRng::new(sc.seed)).unwrap();
            let est = price_mc(&batch, &sc.payoff_struct(), sc.rate).unwrap();
            prices.push(est);
        }
        assert!(prices[0].value > prices[1].value);
        assert!(prices[1].value > prices[2].value);
        assert!(prices[2].value >= 0.0);
    }
}
