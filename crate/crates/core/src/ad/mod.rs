//! Scalar automatic differentiation: forward mode on dual numbers, reverse
//! mode on a recorded tape, complex-step and finite-difference baselines,
//! and generalized-derivative primitives (`ramp`, `heaviside`, smoothed
//! Dirac) for payoffs with kinks.
//!
//! Expressions are built once as a [`FlowGraph`] through operator
//! overloading on [`Expr`] handles, then evaluated under any scalar type:
//! plain `f64`, [`Dual`] for tangents, [`Cplx`] for complex step, or
//! `Dual<Cplx>` for complex-stepping a tangent program.

mod complex;
mod dual;
mod eval;
mod fd;
mod graph;
mod scalar;
mod tape;

pub use complex::Cplx;
pub use dual::Dual;
pub use eval::{
    complex_step_derivative, complex_step_gradient, eval, eval_with, forward_directional,
    forward_jacobian, tangent_at_complex,
};
pub use fd::{central_difference, central_second_difference};
pub use graph::{Expr, FlowGraph, GraphBuilder, Op};
pub use scalar::{dirac_a, heaviside, ramp, AdScalar, SmoothingConfig};
pub use tape::{record, record_into, Recording, ReverseStats, Tape};

use std::fmt;

/// Errors raised while evaluating or differentiating an expression.
#[derive(Debug, Clone, PartialEq)]
pub enum AdError {
    /// Division with a zero denominator.
    DivisionByZero,
    /// Argument outside the domain of a primitive (`ln`, `sqrt`).
    Domain { op: &'static str, arg: f64 },
    /// `max` appears in the graph; it is evaluation-only. Differentiable
    /// kinks must be written with `ramp`/`heaviside`.
    MaxNotDifferentiable,
    /// Input slice length does not match the graph's input count.
    InputLength { expected: usize, got: usize },
    /// Reverse-sweep seed length does not match the output count.
    SeedLength { expected: usize, got: usize },
    /// Complex-step or finite-difference step size must be positive.
    InvalidStep(f64),
    /// Smoothing width for the Dirac approximation must be positive.
    InvalidSmoothingWidth(f64),
}

impl fmt::Display for AdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdError::DivisionByZero => write!(f, "division by zero"),
            AdError::Domain { op, arg } => write!(f, "domain error: {op}({arg})"),
            AdError::MaxNotDifferentiable => write!(
                f,
                "max() is not differentiable; write the payoff with ramp()/heaviside()"
            ),
            AdError::InputLength { expected, got } => {
                write!(f, "expected {expected} inputs, got {got}")
            }
            AdError::SeedLength { expected, got } => {
                write!(f, "expected seed of length {expected}, got {got}")
            }
            AdError::InvalidStep(h) => write!(f, "step size must be positive, got {h}"),
            AdError::InvalidSmoothingWidth(a) => {
                write!(f, "smoothing width must be positive, got {a}")
            }
        }
    }
}

impl std::error::Error for AdError {}

pub type AdResult<T> = Result<T, AdError>;
