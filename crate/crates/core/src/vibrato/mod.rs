//! Vibrato sensitivities: the last Euler step is replaced by its
//! conditional Gaussian law, so the payoff is evaluated under re-sampled
//! terminal draws and weighted by likelihood-ratio kernels, never
//! differentiated. Second-order sensitivities come from reverse AD applied
//! to the per-path first-order estimator program (Euler chain, tangent
//! chain, conditional frame and weights), taped path by path and freed
//! after each path.

use crate::ad::{record_into, AdError, Expr, FlowGraph, GraphBuilder, SmoothingConfig, Tape};
use crate::market::{
    discount_factor, stream, Estimate, PathBatch, PathRng, Payoff, PayoffKind, Theta,
};
use rayon::prelude::*;
use std::collections::HashMap;
use std::fmt;
use std::sync::Mutex;

#[derive(Debug, Clone, PartialEq)]
pub enum VibratoError {
    /// Conditional standard deviation must be positive on every path.
    SingularDiffusion { path: usize },
    /// The tangent-process recursion covers spot, rate, sigma and strike.
    UnsupportedTheta(&'static str),
    /// Per-path tape exceeded the configured node cap.
    TapeGrowth { nodes: usize, cap: usize },
    Ad(AdError),
}

impl fmt::Display for VibratoError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VibratoError::SingularDiffusion { path } => {
                write!(f, "nonpositive conditional volatility on path {path}")
            }
            VibratoError::UnsupportedTheta(t) => {
                write!(f, "vibrato does not differentiate against {t}")
            }
            VibratoError::TapeGrowth { nodes, cap } => {
                write!(f, "estimator tape needs {nodes} nodes, cap is {cap}")
            }
            VibratoError::Ad(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for VibratoError {}

impl From<AdError> for VibratoError {
    fn from(e: AdError) -> Self {
        VibratoError::Ad(e)
    }
}

pub type VibratoResult<T> = Result<T, VibratoError>;

/// Estimator controls. `m_z` is the number of conditional draws per path
/// (must be even with antithetic pairing, where each draw serves as +Z and
/// -Z).
#[derive(Debug, Clone, Copy)]
pub struct VibratoConfig {
    pub m_z: usize,
    pub antithetic: bool,
    pub theta: Theta,
    /// Guard against runaway per-path tapes.
    pub node_cap: usize,
}

impl Default for VibratoConfig {
    fn default() -> Self {
        Self { m_z: 16, antithetic: true, theta: Theta::Spot, node_cap: 200_000 }
    }
}

/// Conditional frame of a path one step before exercise:
/// `X_n = mu + sig_c sqrt(h) Z` with `mu = X(1 + r h)`, `sig_c = sigma X`,
/// and the parameter derivatives `R = dmu/dtheta`, `S = dsig_c/dtheta`.
#[derive(Debug, Clone, Copy)]
pub struct LastStepFrame {
    pub x: f64,
    pub y: f64,
    pub mu: f64,
    pub sig_c: f64,
    pub r_weight: f64,
    pub s_weight: f64,
    pub discount: f64,
}

fn selectors(theta: Theta) -> VibratoResult<(f64, f64)> {
    match theta {
        Theta::Spot | Theta::Strike => Ok((0.0, 0.0)),
        Theta::Rate => Ok((1.0, 0.0)),
        Theta::Sigma => Ok((0.0, 1.0)),
        Theta::Maturity => Err(VibratoError::UnsupportedTheta("maturity")),
    }
}

fn frame_at(batch: &PathBatch, path: usize, step: usize, dr: f64, dsig: f64) -> LastStepFrame {
    let j = step - 1;
    let x = batch.path(path)[j];
    let y = batch.tangent(path)[j];
    let (r, sig, h) = (batch.rate, batch.sigma, batch.h);
    LastStepFrame {
        x,
        y,
        mu: x + r * h * x,
        sig_c: sig * x,
        r_weight: y * (1.0 + r * h) + x * dr * h,
        s_weight: y * sig + x * dsig,
        discount: discount_factor(r, step as f64 * h),
    }
}

/// First-order sensitivity with the terminal step conditioned out; the
/// payoff is evaluated, never differentiated. `exercise_step[i]` gives the
/// per-path evaluation date (use `n` everywhere for European payoffs);
/// paths with step 0 are excluded and counted.
pub fn vibrato_first_order_at(
    batch: &PathBatch,
    payoff: &Payoff,
    cfg: &VibratoConfig,
    rng: &PathRng,
    exercise_step: &[usize],
) -> VibratoResult<(Estimate, usize)> {
    let (dr, dsig) = selectors(cfg.theta)?;
    if cfg.theta != batch.theta && batch_theta_matters(cfg.theta) {
        // The tangent process in the batch must match the requested theta.
        debug_assert_eq!(cfg.theta, batch.theta, "batch simulated for a different theta");
    }
    let sqh = batch.h.sqrt();
    let draws = if cfg.antithetic {
        assert!(cfg.m_z % 2 == 0, "antithetic pairing needs an even m_z");
        cfg.m_z / 2
    } else {
        cfg.m_z
    };
    let strike_mode = cfg.theta == Theta::Strike;

    let per_path: Vec<Result<Option<f64>, usize>> = (0..batch.m)
        .into_par_iter()
        .map(|i| {
            let step = exercise_step[i];
            if step == 0 {
                return Ok(None);
            }
            let f = frame_at(batch, i, step, dr, dsig);
            if !(f.sig_c > 0.0) {
                return Err(i);
            }
            let mut acc = 0.0;
            for d in 0..draws {
                let z = rng.normal(stream::INNER, i as u64, d as u64);
                let xp = f.mu + f.sig_c * sqh * z;
                let vp = payoff.terminal(xp);
                if cfg.antithetic {
                    let xm = f.mu - f.sig_c * sqh * z;
                    let vm = payoff.terminal(xm);
                    let vo = payoff.terminal(f.mu);
                    let mut e = f.r_weight * (vp - vm) * z / (2.0 * f.sig_c * sqh)
                        + f.s_weight * (vp - 2.0 * vo + vm) * (z * z - 1.0) / (2.0 * f.sig_c);
                    if strike_mode {
                        e += 0.5 * (payoff.terminal_d_strike(xp) + payoff.terminal_d_strike(xm));
                    }
                    acc += e;
                } else {
                    let mut e = f.r_weight * vp * z / (f.sig_c * sqh)
                        + f.s_weight * vp * (z * z - 1.0) / f.sig_c;
                    if strike_mode {
                        e += payoff.terminal_d_strike(xp);
                    }
                    acc += e;
                }
            }
            Ok(Some(f.discount * acc / draws as f64))
        })
        .collect();

    let mut samples = Vec::with_capacity(batch.m);
    let mut excluded = 0usize;
    for r in per_path {
        match r {
            Ok(Some(v)) => samples.push(v),
            Ok(None) => excluded += 1,
            Err(path) => return Err(VibratoError::SingularDiffusion { path }),
        }
    }
    Ok((Estimate::from_samples(&samples), excluded))
}

fn batch_theta_matters(theta: Theta) -> bool {
    theta != Theta::Strike
}

/// European convenience wrapper: every path evaluates at maturity.
pub fn vibrato_first_order(
    batch: &PathBatch,
    payoff: &Payoff,
    cfg: &VibratoConfig,
    rng: &PathRng,
) -> VibratoResult<Estimate> {
    let steps = vec![batch.n; batch.m];
    Ok(vibrato_first_order_at(batch, payoff, cfg, rng, &steps)?.0)
}

/// The first-order estimator written as a differentiable program for a
/// path evaluated at step `tau`: inputs are `[theta, z_0..z_{tau-2},
/// Z_0..Z_{draws-1}]`; output is the estimator averaged over the
/// conditional draws. Reverse AD over this graph yields the second
/// derivative.
fn estimator_graph(
    model: &PathBatch,
    payoff: &Payoff,
    cfg: &VibratoConfig,
    tau: usize,
    draws: usize,
) -> FlowGraph {
    let (r0, sig0, x0, k0) = (model.rate, model.sigma, model.spot, payoff.strike);
    let h = model.h;
    let sqh = h.sqrt();
    let n_inputs = 1 + (tau - 1) + draws;
    let b = GraphBuilder::new(n_inputs);

    let theta_in = b.x(0);
    let (x_init, r, sig, k): (Expr, Expr, Expr, Expr) = match cfg.theta {
        Theta::Spot => (theta_in, b.constant(r0), b.constant(sig0), b.constant(k0)),
        Theta::Rate => (b.constant(x0), theta_in, b.constant(sig0), b.constant(k0)),
        Theta::Sigma => (b.constant(x0), b.constant(r0), theta_in, b.constant(k0)),
        Theta::Strike => (b.constant(x0), b.constant(r0), b.constant(sig0), theta_in),
        Theta::Maturity => unreachable!("rejected by selectors"),
    };
    let (dx0, dr, dsig) = match cfg.theta {
        Theta::Spot => (1.0, 0.0, 0.0),
        Theta::Rate => (0.0, 1.0, 0.0),
        Theta::Sigma => (0.0, 0.0, 1.0),
        _ => (0.0, 0.0, 0.0),
    };

    // Euler and tangent chains up to the frame at tau - 1.
    let mut x = x_init;
    let mut y = b.constant(dx0);
    for kstep in 0..tau - 1 {
        let z = b.x(1 + kstep);
        let x_next = x + r * x * h + x * sig * (z * sqh);
        let y_next =
            y + r * y * h + (x * h) * dr + (y * sig + x * dsig) * (z * sqh);
        x = x_next;
        y = y_next;
    }

    // Frame and likelihood-ratio weights.
    let mu = x + r * x * h;
    let sig_c = sig * x;
    let r_w = y + r * y * h + (x * h) * dr;
    let s_w = y * sig + x * dsig;
    let inv_first = 1.0 / ((sig_c * 2.0) * sqh);
    let inv_second = 1.0 / (sig_c * 2.0);
    let inv_first_plain = 1.0 / (sig_c * sqh);
    let inv_second_plain = 1.0 / sig_c;

    fn pay<'g>(kind: PayoffKind, k: Expr<'g>, xt: Expr<'g>) -> Expr<'g> {
        match kind {
            PayoffKind::EuropeanCall | PayoffKind::DoubleBarrierCall => (xt - k).ramp(),
            PayoffKind::EuropeanPut | PayoffKind::AmericanPut => (k - xt).ramp(),
        }
    }
    fn pay_dk<'g>(kind: PayoffKind, k: Expr<'g>, xt: Expr<'g>) -> Expr<'g> {
        match kind {
            PayoffKind::EuropeanCall | PayoffKind::DoubleBarrierCall => -(xt - k).heaviside(),
            PayoffKind::EuropeanPut | PayoffKind::AmericanPut => (k - xt).heaviside(),
        }
    }
    let strike_mode = cfg.theta == Theta::Strike;

    let mut total: Option<Expr> = None;
    for d in 0..draws {
        let z = b.x(1 + (tau - 1) + d);
        let xp = mu + sig_c * (z * sqh);
        let vp = pay(payoff.kind, k, xp);
        let est = if cfg.antithetic {
            let xm = mu - sig_c * (z * sqh);
            let vm = pay(payoff.kind, k, xm);
            let vo = pay(payoff.kind, k, mu);
            let first = r_w * ((vp - vm) * z) * inv_first;
            let second = s_w * ((vp - vo * 2.0 + vm) * (z * z - 1.0)) * inv_second;
            let mut e = first + second;
            if strike_mode {
                e = e + (pay_dk(payoff.kind, k, xp) + pay_dk(payoff.kind, k, xm)) * 0.5;
            }
            e
        } else {
            let first = r_w * (vp * z) * inv_first_plain;
            let second = s_w * (vp * (z * z - 1.0)) * inv_second_plain;
            let mut e = first + second;
            if strike_mode {
                e = e + pay_dk(payoff.kind, k, xp);
            }
            e
        };
        total = Some(match total {
            Some(t) => t + est,
            None => est,
        });
    }
    let mean = total.expect("at least one draw") / draws as f64;
    b.graph(&[mean])
}

/// Second-order sensitivity: reverse AD applied path by path to the
/// first-order estimator program (the full chain including the tangent
/// recursion). Re-uses one tape per worker; tapes never outlive a path.
pub fn vad_second_order_at(
    batch: &PathBatch,
    payoff: &Payoff,
    cfg: &VibratoConfig,
    rng: &PathRng,
    smoothing: &SmoothingConfig,
    exercise_step: &[usize],
) -> VibratoResult<(Estimate, usize)> {
    let (dr, dsig) = selectors(cfg.theta)?;
    let _ = (dr, dsig);
    let draws = if cfg.antithetic {
        assert!(cfg.m_z % 2 == 0, "antithetic pairing needs an even m_z");
        cfg.m_z / 2
    } else {
        cfg.m_z
    };
    let theta_value = match cfg.theta {
        Theta::Spot => batch.spot,
        Theta::Rate => batch.rate,
        Theta::Sigma => batch.sigma,
        Theta::Strike => payoff.strike,
        Theta::Maturity => unreachable!(),
    };

    // One estimator graph per distinct evaluation date, built lazily.
    let graphs: Mutex<HashMap<usize, std::sync::Arc<FlowGraph>>> = Mutex::new(HashMap::new());
    let graph_for = |tau: usize| -> VibratoResult<std::sync::Arc<FlowGraph>> {
        let mut map = graphs.lock().expect("graph cache");
        if let Some(g) = map.get(&tau) {
            return Ok(g.clone());
        }
        let g = std::sync::Arc::new(estimator_graph(batch, payoff, cfg, tau, draws));
        if g.n_nodes() > cfg.node_cap {
            return Err(VibratoError::TapeGrowth { nodes: g.n_nodes(), cap: cfg.node_cap });
        }
        map.insert(tau, g.clone());
        Ok(g.clone())
    };

    let results: Vec<VibratoResult<Option<f64>>> = (0..batch.m)
        .into_par_iter()
        .map_init(
            || (Tape::default(), Vec::<f64>::new()),
            |(tape, inputs), i| {
                let step = exercise_step[i];
                if step == 0 {
                    return Ok(None);
                }
                if !(batch.sigma * batch.path(i)[step - 1] > 0.0) {
                    return Err(VibratoError::SingularDiffusion { path: i });
                }
                let g = graph_for(step)?;
                inputs.clear();
                inputs.push(theta_value);
                inputs.extend_from_slice(&batch.noise(i)[..step - 1]);
                for d in 0..draws {
                    inputs.push(rng.normal(stream::INNER, i as u64, d as u64));
                }
                record_into(&g, inputs, smoothing, tape)?;
                let grad = tape.reverse_sweep(&[1.0])?;
                let disc = discount_factor(batch.rate, step as f64 * batch.h);
                Ok(Some(disc * grad[0]))
            },
        )
        .collect();

    let mut samples = Vec::with_capacity(batch.m);
    let mut excluded = 0usize;
    for r in results {
        match r? {
            Some(v) => samples.push(v),
            None => excluded += 1,
        }
    }
    Ok((Estimate::from_samples(&samples), excluded))
}

/// European wrapper for [`vad_second_order_at`].
pub fn vad_second_order(
    batch: &PathBatch,
    payoff: &Payoff,
    cfg: &VibratoConfig,
    rng: &PathRng,
    smoothing: &SmoothingConfig,
) -> VibratoResult<Estimate> {
    let steps = vec![batch.n; batch.m];
    Ok(vad_second_order_at(batch, payoff, cfg, rng, smoothing, &steps)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{bs_closed_form, simulate, PayoffKind, Scenario};

    fn scenario(paths: usize) -> Scenario {
        Scenario {
            spot: 40.0,
            rate: 0.06,
            sigma: 0.2,
            strike: 40.0,
            maturity: 1.0,
            steps: 50,
            paths,
            seed: 404,
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
    fn delta_matches_closed_form() {
        let sc = scenario(100_000);
        let rng = PathRng::new(sc.seed);
        let batch = simulate(&sc, Theta::Spot, &rng).unwrap();
        let cfg = VibratoConfig::default();
        let est = vibrato_first_order(&batch, &sc.payoff_struct(), &cfg, &rng).unwrap();
        let bs = bs_closed_form(40.0, 40.0, 0.06, 0.2, 1.0).unwrap();
        assert!(
            (est.value - bs.delta_call).abs() < 3.0 * est.std_error,
            "vibrato {} bs {} se {}",
            est.value,
            bs.delta_call,
            est.std_error
        );
    }

    #[test]
    fn worthless_payoff_estimates_exactly_zero() {
        // A put at zero strike never pays; weights multiply a zero payoff.
        let sc = scenario(5_000);
        let rng = PathRng::new(sc.seed);
        let batch = simulate(&sc, Theta::Spot, &rng).unwrap();
        let payoff = Payoff::new(PayoffKind::EuropeanPut, 0.0);
        let cfg = VibratoConfig::default();
        let est = vibrato_first_order(&batch, &payoff, &cfg, &rng).unwrap();
        assert_eq!(est.value, 0.0);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn vanishing_weights_give_exact_zero() {
        // theta = strike on a strike-free payoff: mu and sigma carry no
        // theta-dependence and the explicit term is zero away from the kink.
        let sc = scenario(2_000);
        let rng = PathRng::new(sc.seed);
        let batch = simulate(&sc, Theta::Strike, &rng).unwrap();
        let payoff = Payoff::new(PayoffKind::EuropeanPut, 0.0);
        let cfg = VibratoConfig { theta: Theta::Strike, ..VibratoConfig::default() };
        let est = vibrato_first_order(&batch, &payoff, &cfg, &rng).unwrap();
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn gamma_matches_closed_form() {
        let sc = scenario(40_000);
        let rng = PathRng::new(sc.seed);
        let batch = simulate(&sc, Theta::Spot, &rng).unwrap();
        let cfg = VibratoConfig::default();
        let est =
            vad_second_order(&batch, &sc.payoff_struct(), &cfg, &rng, &sc.smoothing()).unwrap();
        let bs = bs_closed_form(40.0, 40.0, 0.06, 0.2, 1.0).unwrap();
        assert!(
            (est.value - bs.gamma).abs() < 3.0 * est.std_error,
            "vad {} bs {} se {}",
            est.value,
            bs.gamma,
            est.std_error
        );
    }

    #[test]
    fn linear_payoff_has_zero_second_derivative() {
        // Deep in-the-money put: the payoff is affine over the path range,
        // the curvature terms cancel exactly and the tangent process does
        // not depend on the spot for this linear scheme.
        let sc = scenario(2_000);
        let rng = PathRng::new(sc.seed);
        let batch = simulate(&sc, Theta::Spot, &rng).unwrap();
        let payoff = Payoff::new(PayoffKind::EuropeanPut, 1.0e4);
        let cfg = VibratoConfig::default();
        let est = vad_second_order(&batch, &payoff, &cfg, &rng, &sc.smoothing()).unwrap();
        assert!(est.value.abs() < 1e-10, "gamma {}", est.value);
    }

    #[test]
    fn singular_diffusion_is_reported() {
        let mut sc = scenario(64);
        sc.sigma = 0.0;
        let rng = PathRng::new(sc.seed);
        let batch = simulate(&sc, Theta::Spot, &rng).unwrap();
        let cfg = VibratoConfig::default();
        assert!(matches!(
            vibrato_first_order(&batch, &sc.payoff_struct(), &cfg, &rng),
            Err(VibratoError::SingularDiffusion { .. })
        ));
    }

    #[test]
    fn tape_cap_guards_growth() {
        let sc = scenario(16);
        let rng = PathRng::new(sc.seed);
        let batch = simulate(&sc, Theta::Spot, &rng).unwrap();
        let cfg = VibratoConfig { node_cap: 10, ..VibratoConfig::default() };
        assert!(matches!(
            vad_second_order(&batch, &sc.payoff_struct(), &cfg, &rng, &sc.smoothing()),
            Err(VibratoError::TapeGrowth { .. })
        ));
    }

    #[test]
    fn maturity_theta_is_rejected() {
        let sc = scenario(16);
        let rng = PathRng::new(sc.seed);
        let batch = simulate(&sc, Theta::Spot, &rng).unwrap();
        let cfg = VibratoConfig { theta: Theta::Maturity, ..VibratoConfig::default() };
        assert!(matches!(
            vibrato_first_order(&batch, &sc.payoff_struct(), &cfg, &rng),
            Err(VibratoError::UnsupportedTheta(_))
        ));
    }

    #[test]
    fn antithetic_reduces_standard_error_for_gamma() {
        // Paired conditional draws against plain draws at equal m_z,
        // across seeds.
        let mut wins = 0;
        let seeds = 20;
        for s in 0..seeds {
            let mut sc = scenario(4_000);
            sc.seed = 1000 + s;
            let rng = PathRng::new(sc.seed);
            let batch = simulate(&sc, Theta::Spot, &rng).unwrap();
            let anti = VibratoConfig { antithetic: true, m_z: 16, ..VibratoConfig::default() };
            let plain = VibratoConfig { antithetic: false, m_z: 16, ..VibratoConfig::default() };
            let ea =
                vad_second_order(&batch, &sc.payoff_struct(), &anti, &rng, &sc.smoothing())
                    .unwrap();
            let ep =
                vad_second_order(&batch, &sc.payoff_struct(), &plain, &rng, &sc.smoothing())
                    .unwrap();
            if ea.std_error < ep.std_error {
                wins += 1;
            }
        }
        assert!(wins * 100 >= seeds * 95, "antithetic won only {wins}/{seeds}");
    }
}
