//! Monte Carlo pricing sensitivities through adjoint algorithmic
//! differentiation.
//!
//! The crate is organised around six subsystems:
//!
//! - [`ad`]: scalar forward/reverse AD on a recorded flow graph, with
//!   complex-step and finite-difference baselines and generalized
//!   derivatives (`ramp`/`heaviside`/smoothed Dirac) for kinked payoffs.
//! - [`vaad`]: path-vectorized adjoint engine for Monte Carlo graphs:
//!   scalar/vector slots, mean-of-adjoints checkpointing, layered
//!   scheduling with logarithmic adjoint aggregation, and group-based
//!   variance estimation.
//! - [`market`]: asset dynamics (Euler scheme with tangent process),
//!   payoffs, reproducible counter-based random numbers, Black-Scholes
//!   and Malliavin oracles, scenario files.
//! - [`vibrato`]: first-order sensitivities by conditioning the last Euler
//!   step, and second-order sensitivities by differentiating that
//!   estimator with reverse AD (with antithetic variance reduction).
//! - [`american`]: Longstaff-Schwartz valuation with a polynomial basis,
//!   exercise-policy extraction, and delta/gamma with the stopping time
//!   frozen.
//! - [`cva`]: credit valuation adjustment by nested Monte Carlo and by the
//!   four-step adjoint method (input-sensitivity surface, hedging
//!   sensitivities, martingale exposure reconstruction, pathwise CVA).

pub mod ad;
pub mod american;
pub mod cva;
pub mod market;
pub mod report;
pub mod selfcheck;
pub mod vaad;
pub mod vibrato;

pub use market::{Estimate, Scenario, Theta};
