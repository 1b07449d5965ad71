//! American option valuation by least-squares Monte Carlo: backward
//! dynamic programming with the continuation value projected on a
//! polynomial basis, exercise-policy extraction, and delta/gamma with the
//! stopping time frozen (its parameter dependence is neglected).
//!
//! Foresight bias is avoided by a two-pass protocol: the policy is fitted
//! on one batch and prices/sensitivities are evaluated on an independent
//! batch, making the price a lower-bound estimator.

use crate::ad::SmoothingConfig;
use crate::market::{
    discount_factor, Estimate, ModelError, PathBatch, PathRng, Payoff, PayoffKind,
};
use crate::vibrato::{
    vad_second_order_at, vibrato_first_order_at, VibratoConfig, VibratoError,
};
use nalgebra::{DMatrix, DVector};
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum AmericanError {
    /// Regression data contained non-finite values at this exercise date.
    NonFiniteRegression { date: usize },
    UnsupportedPayoff(&'static str),
    Model(ModelError),
    Vibrato(VibratoError),
}

impl fmt::Display for AmericanError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AmericanError::NonFiniteRegression { date } => {
                write!(f, "non-finite regression data at exercise date {date}")
            }
            AmericanError::UnsupportedPayoff(w) => write!(f, "unsupported payoff: {w}"),
            AmericanError::Model(e) => write!(f, "{e}"),
            AmericanError::Vibrato(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for AmericanError {}

impl From<ModelError> for AmericanError {
    fn from(e: ModelError) -> Self {
        AmericanError::Model(e)
    }
}

impl From<VibratoError> for AmericanError {
    fn from(e: VibratoError) -> Self {
        AmericanError::Vibrato(e)
    }
}

pub type AmericanResult<T> = Result<T, AmericanError>;

/// Monomial regression basis `psi_i(x) = (x/K)^(i-1), i = 1..size`.
/// Normalizing by the strike keeps the design matrix well scaled.
#[derive(Debug, Clone, Copy)]
pub struct RegressionBasis {
    pub size: usize,
}

impl Default for RegressionBasis {
    fn default() -> Self {
        Self { size: 3 }
    }
}

impl RegressionBasis {
    fn row(&self, x_over_k: f64, out: &mut [f64]) {
        let mut p = 1.0;
        for slot in out.iter_mut() {
            *slot = p;
            p *= x_over_k;
        }
    }

    fn predict(&self, coeffs: &[f64], x_over_k: f64) -> f64 {
        let mut p = 1.0;
        let mut acc = 0.0;
        for &c in coeffs {
            acc += c * p;
            p *= x_over_k;
        }
        acc
    }
}

/// Continuation-value fit per exercise date (the policy, in coefficient
/// form). Dates with no in-the-money paths carry no fit and never
/// exercise.
#[derive(Debug, Clone)]
pub struct PolicyCoeffs {
    pub strike: f64,
    pub basis: RegressionBasis,
    /// Index k in 1..n holds the fit for exercise date k.
    pub per_date: Vec<Option<Vec<f64>>>,
    /// Whether immediate exercise at the valuation date is optimal.
    pub immediate: bool,
}

/// Per-path stopping indices; 0 means exercise at the valuation date.
#[derive(Debug, Clone)]
pub struct ExercisePolicy {
    pub tau: Vec<usize>,
}

impl ExercisePolicy {
    /// Degenerate policy that never exercises early (European behaviour).
    pub fn european(m: usize, n: usize) -> Self {
        Self { tau: vec![n; m] }
    }
}

#[derive(Debug, Clone)]
pub struct LsqFit {
    pub price: Estimate,
    pub policy: ExercisePolicy,
    pub coeffs: PolicyCoeffs,
}

/// Backward least-squares recursion in cash-flow form: regress realized
/// discounted cash flows on the basis over in-the-money paths, exercise
/// where intrinsic value beats the fitted continuation, and price as the
/// mean discounted cash flow at the resulting stopping times (with the
/// immediate-exercise comparison at the valuation date).
pub fn longstaff_schwartz(
    batch: &PathBatch,
    payoff: &Payoff,
    basis: RegressionBasis,
) -> AmericanResult<LsqFit> {
    if payoff.kind != PayoffKind::AmericanPut {
        return Err(AmericanError::UnsupportedPayoff(
            "exercise-policy pricing covers american_put",
        ));
    }
    let (m, n, h, r) = (batch.m, batch.n, batch.h, batch.rate);
    let disc_step = discount_factor(r, h);
    let k_strike = payoff.strike;

    let mut cash: Vec<f64> = (0..m).map(|i| payoff.intrinsic(batch.path(i)[n])).collect();
    let mut tau: Vec<usize> = vec![n; m];
    let mut per_date: Vec<Option<Vec<f64>>> = vec![None; n];

    let width = basis.size;
    let mut row = vec![0.0; width];

    for k in (1..n).rev() {
        let itm: Vec<usize> =
            (0..m).filter(|&i| payoff.intrinsic(batch.path(i)[k]) > 0.0).collect();
        if itm.len() < 1 {
            continue;
        }
        let mut design = DMatrix::zeros(itm.len(), width);
        let mut target = DVector::zeros(itm.len());
        for (ridx, &i) in itm.iter().enumerate() {
            let x = batch.path(i)[k];
            basis.row(x / k_strike, &mut row);
            for (c, &v) in row.iter().enumerate() {
                design[(ridx, c)] = v;
            }
            let y = disc_step.powi((tau[i] - k) as i32) * cash[i];
            if !y.is_finite() || !x.is_finite() {
                return Err(AmericanError::NonFiniteRegression { date: k });
            }
            target[ridx] = y;
        }
        // Orthogonal factorization with a singular-value cutoff: a
        // degenerate date (all spots equal) degrades gracefully to the
        // minimal-norm fit instead of failing.
        let svd = design.svd(true, true);
        let eps = 1e-10 * svd.singular_values.max();
        let alpha = svd
            .solve(&target, eps)
            .map_err(|_| AmericanError::NonFiniteRegression { date: k })?;
        let alpha: Vec<f64> = alpha.iter().copied().collect();

        for &i in &itm {
            let x = batch.path(i)[k];
            let intrinsic = payoff.intrinsic(x);
            let continuation = basis.predict(&alpha, x / k_strike);
            if intrinsic >= continuation {
                cash[i] = intrinsic;
                tau[i] = k;
            }
        }
        per_date[k] = Some(alpha);
    }

    let discounted: Vec<f64> =
        (0..m).map(|i| discount_factor(r, tau[i] as f64 * h) * cash[i]).collect();
    let continuation0 = Estimate::from_samples(&discounted);
    let intrinsic0 = payoff.intrinsic(batch.spot);
    let immediate = intrinsic0 > 0.0 && intrinsic0 >= continuation0.value;
    let price = if immediate { Estimate::exact(intrinsic0) } else { continuation0 };
    let tau = if immediate { vec![0; m] } else { tau };

    Ok(LsqFit {
        price,
        policy: ExercisePolicy { tau },
        coeffs: PolicyCoeffs { strike: k_strike, basis, per_date, immediate },
    })
}

/// Apply a fitted policy to an independent batch: per path, the first
/// date whose intrinsic value is positive and beats the fitted
/// continuation.
pub fn apply_policy(coeffs: &PolicyCoeffs, batch: &PathBatch, payoff: &Payoff) -> ExercisePolicy {
    let (m, n) = (batch.m, batch.n);
    if coeffs.immediate {
        return ExercisePolicy { tau: vec![0; m] };
    }
    let mut tau = vec![n; m];
    for i in 0..m {
        let path = batch.path(i);
        for (k, fit) in coeffs.per_date.iter().enumerate().skip(1) {
            let Some(alpha) = fit else { continue };
            let intrinsic = payoff.intrinsic(path[k]);
            if intrinsic > 0.0
                && intrinsic >= coeffs.basis.predict(alpha, path[k] / coeffs.strike)
            {
                tau[i] = k;
                break;
            }
        }
    }
    ExercisePolicy { tau }
}

/// Price an independent batch under a frozen policy (lower-bound
/// estimator).
pub fn price_under_policy(
    batch: &PathBatch,
    payoff: &Payoff,
    policy: &ExercisePolicy,
) -> Estimate {
    let samples: Vec<f64> = (0..batch.m)
        .map(|i| {
            let k = policy.tau[i];
            discount_factor(batch.rate, k as f64 * batch.h) * payoff.intrinsic(batch.path(i)[k])
        })
        .collect();
    Estimate::from_samples(&samples)
}

#[derive(Debug, Clone)]
pub struct AmericanGreeks {
    pub delta: Estimate,
    pub gamma: Estimate,
    /// Paths exercising at the valuation date, excluded from the frames.
    pub excluded: usize,
}

/// Delta and gamma with the stopping time frozen: each path is treated as
/// a European claim maturing at its exercise date, with the conditional
/// last-step estimator evaluated one step before exercise.
pub fn american_greeks_vad(
    batch: &PathBatch,
    payoff: &Payoff,
    policy: &ExercisePolicy,
    cfg: &VibratoConfig,
    rng: &PathRng,
    smoothing: &SmoothingConfig,
) -> AmericanResult<AmericanGreeks> {
    let (delta, ex1) = vibrato_first_order_at(batch, payoff, cfg, rng, &policy.tau)?;
    let (gamma, ex2) = vad_second_order_at(batch, payoff, cfg, rng, smoothing, &policy.tau)?;
    debug_assert_eq!(ex1, ex2);
    Ok(AmericanGreeks { delta, gamma, excluded: ex1.max(ex2) })
}

/// Fraction of in-the-money exercise decisions violating the threshold
/// form of the put's exercise region (exercise below a per-date cutoff).
pub fn threshold_violation_fraction(
    batch: &PathBatch,
    coeffs: &PolicyCoeffs,
    payoff: &Payoff,
) -> f64 {
    let mut decisions = 0usize;
    let mut violations = 0usize;
    for (k, fit) in coeffs.per_date.iter().enumerate().skip(1) {
        let Some(alpha) = fit else { continue };
        let mut exercised_max = f64::NEG_INFINITY;
        let mut held: Vec<f64> = Vec::new();
        for i in 0..batch.m {
            let x = batch.path(i)[k];
            if payoff.intrinsic(x) <= 0.0 {
                continue;
            }
            decisions += 1;
            let exercise =
                payoff.intrinsic(x) >= coeffs.basis.predict(alpha, x / coeffs.strike);
            if exercise {
                exercised_max = exercised_max.max(x);
            } else {
                held.push(x);
            }
        }
        violations += held.iter().filter(|&&x| x < exercised_max).count();
    }
    if decisions == 0 {
        0.0
    } else {
        violations as f64 / decisions as f64
    }
}

/// One cell of the benchmark grid.
#[derive(Debug, Clone)]
pub struct AmericanRun {
    pub spot: f64,
    pub sigma: f64,
    pub maturity: f64,
    pub price: Estimate,
    pub delta: Estimate,
    pub gamma: Estimate,
    pub excluded: usize,
}

/// Two-pass run: fit on seed, evaluate price and sensitivities on seed+1.
pub fn run_american(
    scenario: &crate::market::Scenario,
    basis: RegressionBasis,
    vib: &VibratoConfig,
) -> AmericanResult<AmericanRun> {
    use crate::market::{simulate, Theta};
    let rng_a = PathRng::new(scenario.seed);
    let rng_b = rng_a.offset(1);
    let payoff = scenario.payoff_struct();
    let batch_a = simulate(scenario, Theta::Spot, &rng_a)?;
    let fit = longstaff_schwartz(&batch_a, &payoff, basis)?;
    let batch_b = simulate(scenario, vib.theta, &rng_b)?;
    let policy = apply_policy(&fit.coeffs, &batch_b, &payoff);
    let price = price_under_policy(&batch_b, &payoff, &policy);
    let greeks =
        american_greeks_vad(&batch_b, &payoff, &policy, vib, &rng_b, &scenario.smoothing())?;
    Ok(AmericanRun {
        spot: scenario.spot,
        sigma: scenario.sigma,
        maturity: scenario.maturity,
        price,
        delta: greeks.delta,
        gamma: greeks.gamma,
        excluded: greeks.excluded,
    })
}

/// Greek sensitivity to the frozen-policy approximation: refit the policy
/// under a bumped parameter and report both estimates on the same
/// evaluation batch.
pub struct PolicyShift {
    pub frozen: AmericanGreeks,
    pub refit: AmericanGreeks,
}

pub fn policy_shift_experiment(
    scenario: &crate::market::Scenario,
    basis: RegressionBasis,
    vib: &VibratoConfig,
    bump_rel: f64,
) -> AmericanResult<PolicyShift> {
    use crate::market::{simulate, Theta};
    let rng_a = PathRng::new(scenario.seed);
    let rng_b = rng_a.offset(1);
    let payoff = scenario.payoff_struct();
    let smoothing = scenario.smoothing();

    let batch_a = simulate(scenario, Theta::Spot, &rng_a)?;
    let fit = longstaff_schwartz(&batch_a, &payoff, basis)?;

    let mut bumped = scenario.clone();
    bumped.spot *= 1.0 + bump_rel;
    let batch_a2 = simulate(&bumped, Theta::Spot, &rng_a)?;
    let fit2 = longstaff_schwartz(&batch_a2, &payoff, basis)?;

    let batch_b = simulate(scenario, vib.theta, &rng_b)?;
    let frozen_policy = apply_policy(&fit.coeffs, &batch_b, &payoff);
    let refit_policy = apply_policy(&fit2.coeffs, &batch_b, &payoff);
    let frozen =
        american_greeks_vad(&batch_b, &payoff, &frozen_policy, vib, &rng_b, &smoothing)?;
    let refit = american_greeks_vad(&batch_b, &payoff, &refit_policy, vib, &rng_b, &smoothing)?;
    Ok(PolicyShift { frozen, refit })
}

/// The 20-cell benchmark grid: spot 36..44, vol {0.2, 0.4}, maturity
/// {1, 2}, strike 40, rate 6%.
pub fn benchmark_grid() -> Vec<(f64, f64, f64)> {
    let mut cells = Vec::new();
    for &s in &[36.0, 38.0, 40.0, 42.0, 44.0] {
        for &sig in &[0.2, 0.4] {
            for &t in &[1.0, 2.0] {
                cells.push((s, sig, t));
            }
        }
    }
    cells
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{simulate, PayoffKind, Scenario, Theta};

    fn scenario(spot: f64, sigma: f64, maturity: f64, paths: usize) -> Scenario {
        Scenario {
            spot,
            rate: 0.06,
            sigma,
            strike: 40.0,
            maturity,
            steps: 50,
            paths,
            seed: 99,
            payoff: PayoffKind::AmericanPut,
            barrier_lo: None,
            barrier_hi: None,
            hazard: 0.0,
            lgd: 0.6,
            smoothing_a: None,
            groups: 10,
        }
    }

    #[test]
    fn in_sample_price_near_reference() {
        let sc = scenario(36.0, 0.2, 1.0, 50_000);
        let batch = simulate(&sc, Theta::Spot, &PathRng::new(sc.seed)).unwrap();
        let fit =
            longstaff_schwartz(&batch, &sc.payoff_struct(), RegressionBasis::default()).unwrap();
        assert!(
            (fit.price.value - 4.46289).abs() < 5.0 * 0.013_f64.max(fit.price.std_error),
            "price {} se {}",
            fit.price.value,
            fit.price.std_error
        );
    }

    #[test]
    fn deep_itm_zero_vol_exercises_immediately() {
        let sc = scenario(20.0, 0.0, 1.0, 256);
        let batch = simulate(&sc, Theta::Spot, &PathRng::new(sc.seed)).unwrap();
        let fit =
            longstaff_schwartz(&batch, &sc.payoff_struct(), RegressionBasis::default()).unwrap();
        assert!(fit.coeffs.immediate);
        assert_eq!(fit.price.value, 20.0);
        assert_eq!(fit.price.std_error, 0.0);
        assert!(fit.policy.tau.iter().all(|&t| t == 0));
    }

    #[test]
    fn two_pass_price_is_a_lower_bound_near_reference() {
        let sc = scenario(36.0, 0.2, 1.0, 50_000);
        let run = run_american(&sc, RegressionBasis::default(), &VibratoConfig::default())
            .unwrap();
        // Lower-bound property against the in-sample reference value.
        assert!(run.price.value <= 4.46289 + 3.0 * (0.013 + run.price.std_error));
        assert!((run.price.value - 4.46289).abs() < 0.08, "price {}", run.price.value);
    }

    #[test]
    fn forcing_terminal_exercise_reproduces_european_put() {
        let sc = scenario(36.0, 0.2, 1.0, 100_000);
        let rng = PathRng::new(sc.seed);
        let batch = simulate(&sc, Theta::Spot, &rng).unwrap();
        let payoff = sc.payoff_struct();
        let policy = ExercisePolicy::european(batch.m, batch.n);
        let price = price_under_policy(&batch, &payoff, &policy);
        let bs = crate::market::bs_closed_form(36.0, 40.0, 0.06, 0.2, 1.0).unwrap();
        assert!(
            (price.value - bs.put).abs() < 3.0 * price.std_error + 0.012,
            "forced-european {} bs {}",
            price.value,
            bs.put
        );
        let greeks = american_greeks_vad(
            &batch,
            &payoff,
            &policy,
            &VibratoConfig::default(),
            &rng,
            &sc.smoothing(),
        )
        .unwrap();
        assert!(
            (greeks.delta.value - bs.delta_put).abs() < 3.0 * greeks.delta.std_error + 2e-3,
            "delta {} bs {}",
            greeks.delta.value,
            bs.delta_put
        );
    }

    #[test]
    fn far_out_of_the_money_greeks_vanish() {
        let sc = scenario(400.0, 0.2, 1.0, 5_000);
        let run = run_american(&sc, RegressionBasis::default(), &VibratoConfig::default())
            .unwrap();
        assert_eq!(run.price.value, 0.0);
        assert!(run.delta.value.abs() <= 3.0 * run.delta.std_error);
        assert!(run.gamma.value.abs() <= 3.0 * run.gamma.std_error.max(1e-300));
    }

    #[test]
    fn exercise_region_is_threshold_shaped() {
        let sc = scenario(40.0, 0.2, 1.0, 50_000);
        let rng = PathRng::new(sc.seed);
        let batch_a = simulate(&sc, Theta::Spot, &rng).unwrap();
        let fit =
            longstaff_schwartz(&batch_a, &sc.payoff_struct(), RegressionBasis::default())
                .unwrap();
        let batch_b = simulate(&sc, Theta::Spot, &rng.offset(1)).unwrap();
        let frac = threshold_violation_fraction(&batch_b, &fit.coeffs, &sc.payoff_struct());
        assert!(frac < 0.02, "violation fraction {frac}");
    }
}
