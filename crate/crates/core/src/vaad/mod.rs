//! Path-vectorized adjoint engine for Monte Carlo graphs.
//!
//! Nodes carry scalar or M-vector payloads (M = path count). Values that do
//! not depend on any random input are deterministic and computed once as
//! scalars; everything downstream of a noise input is vectorial. The
//! reverse sweep propagates per-path adjoints and path-averages them at the
//! parameters, so one sweep prices every sensitivity at once.
//!
//! The mean-of-adjoints checkpoint pauses the reverse sweep at a
//! deterministic frontier, replaces each vectorial adjoint there by its
//! scalar mean, and finishes the sweep in scalars. Taking the mean is
//! linear, so the result is unchanged; the deterministic part of the sweep
//! then costs the same no matter how many paths there are.

mod graph;
mod groups;
mod schedule;
mod sweep;

pub use graph::{Barrier, GatherSpec, NodeId, VExpr, VGraph, VGraphBuilder, VOp};
pub use groups::{group_sensitivity_variance, GroupSpec, GroupStats};
pub use schedule::{layer_schedule, tree_reduce, tree_rounds, LayerSchedule};
pub use sweep::{det_sum, Counters, NoiseMatrix, SweepMode, SweepResult, VPayload, VState};

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum VaadError {
    /// Noise matrix does not match the graph's declared random inputs.
    ShapeMismatch { expected: usize, got: usize },
    ParamCount { expected: usize, got: usize },
    /// Domain violation in a vector primitive (lane reported).
    Domain { op: &'static str, lane: usize },
    /// A barrier node is not deterministic.
    BarrierNotDeterministic { node: u32 },
    SeedLength { expected: usize, got: usize },
    /// Seed payload length disagrees with the path count.
    SeedShape { expected: usize, got: usize },
    /// Group count must be >= 2 and divide the path count.
    BadGroups { groups: usize, paths: usize },
}

impl fmt::Display for VaadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VaadError::ShapeMismatch { expected, got } => {
                write!(f, "noise matrix has {got} columns, graph declares {expected}")
            }
            VaadError::ParamCount { expected, got } => {
                write!(f, "expected {expected} parameters, got {got}")
            }
            VaadError::Domain { op, lane } => write!(f, "domain error in {op} at path {lane}"),
            VaadError::BarrierNotDeterministic { node } => {
                write!(f, "barrier node {node} is not deterministic")
            }
            VaadError::SeedLength { expected, got } => {
                write!(f, "expected {expected} output seeds, got {got}")
            }
            VaadError::SeedShape { expected, got } => {
                write!(f, "seed vector length {got} does not match path count {expected}")
            }
            VaadError::BadGroups { groups, paths } => {
                write!(f, "need >= 2 groups evenly dividing {paths} paths, got {groups}")
            }
        }
    }
}

impl std::error::Error for VaadError {}

pub type VaadResult<T> = Result<T, VaadError>;
