use super::graph::{FlowGraph, Op};
use super::scalar::{dirac_a, dirac_a_deriv, heaviside, ramp, SmoothingConfig};
use super::{AdError, AdResult};
use std::fmt::Write as _;

/// Flop-equivalent cost model used by the instrumentation counters.
/// Transcendentals count 1; negations and comparisons count 1.
fn primal_cost(op: Op) -> u64 {
    match op {
        Op::SinCos => 2,
        Op::Ramp => 2,
        Op::DiracA => 4,
        _ => 1,
    }
}

fn partial_cost(op: Op) -> u64 {
    match op {
        Op::Add | Op::Sub | Op::Neg | Op::Mul | Op::Exp => 0,
        Op::Ln | Op::Sin | Op::SinCos | Op::Ramp => 1,
        Op::Sqrt | Op::Cos => 2,
        Op::Div | Op::DiracA => 3,
        Op::Heaviside => 4,
        Op::Max => 0,
    }
}

#[derive(Debug, Clone, Copy)]
struct TapeNode {
    op: Op,
    args: [u32; 2],
    out: u32,
    /// Row-major local partials, `partials[row * arity + arg]`.
    partials: [f64; 2],
}

/// Counters accumulated while recording.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RecordStats {
    /// Flop-equivalents of the primal evaluation.
    pub primal_ops: u64,
    /// Flop-equivalents spent computing local partials eagerly.
    pub partial_ops: u64,
}

/// Counters for one reverse sweep.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReverseStats {
    pub ops: u64,
}

/// A recorded execution: every primitive application in order, with stored
/// primal values and local partials evaluated at them. The saved state is
/// sufficient to run any number of reverse sweeps without re-executing the
/// primal; replaying the recording is bit-identical to direct evaluation.
#[derive(Debug, Clone, Default)]
pub struct Tape {
    values: Vec<f64>,
    nodes: Vec<TapeNode>,
    n_inputs: usize,
    outputs: Vec<u32>,
    is_const: Vec<bool>,
    stats: RecordStats,
}

/// Result of [`record`]: the tape plus the primal outputs.
#[derive(Debug, Clone)]
pub struct Recording {
    pub tape: Tape,
    pub outputs: Vec<f64>,
}

/// Record the graph at `x`, storing primal values and eager local partials.
pub fn record(g: &FlowGraph, x: &[f64], cfg: &SmoothingConfig) -> AdResult<Recording> {
    let mut tape = Tape::default();
    let outputs = record_into(g, x, cfg, &mut tape)?;
    Ok(Recording { tape, outputs })
}

/// Like [`record`] but reusing the tape's buffers across calls.
pub fn record_into(
    g: &FlowGraph,
    x: &[f64],
    cfg: &SmoothingConfig,
    tape: &mut Tape,
) -> AdResult<Vec<f64>> {
    if g.uses_max {
        return Err(AdError::MaxNotDifferentiable);
    }
    if x.len() != g.n_inputs {
        return Err(AdError::InputLength { expected: g.n_inputs, got: x.len() });
    }
    tape.values.clear();
    tape.values.resize(g.n_values, 0.0);
    tape.nodes.clear();
    tape.nodes.reserve(g.nodes.len());
    tape.n_inputs = g.n_inputs;
    tape.outputs.clear();
    tape.outputs.extend_from_slice(&g.outputs);
    tape.is_const = g.value_is_const();
    tape.stats = RecordStats::default();

    let v = &mut tape.values;
    v[..g.n_inputs].copy_from_slice(x);
    for &(id, c) in &g.consts {
        v[id as usize] = c;
    }

    for node in &g.nodes {
        let a = v[node.args[0] as usize];
        let out = node.out as usize;
        let partials = match node.op {
            Op::Add => {
                v[out] = a + v[node.args[1] as usize];
                [1.0, 1.0]
            }
            Op::Sub => {
                v[out] = a - v[node.args[1] as usize];
                [1.0, -1.0]
            }
            Op::Mul => {
                let b = v[node.args[1] as usize];
                v[out] = a * b;
                [b, a]
            }
            Op::Div => {
                let b = v[node.args[1] as usize];
                if b == 0.0 {
                    return Err(AdError::DivisionByZero);
                }
                let inv = 1.0 / b;
                v[out] = a * inv;
                [inv, -v[out] * inv]
            }
            Op::Neg => {
                v[out] = -a;
                [-1.0, 0.0]
            }
            Op::Exp => {
                v[out] = a.exp();
                [v[out], 0.0]
            }
            Op::Ln => {
                if a <= 0.0 {
                    return Err(AdError::Domain { op: "ln", arg: a });
                }
                v[out] = a.ln();
                [1.0 / a, 0.0]
            }
            Op::Sqrt => {
                if a < 0.0 {
                    return Err(AdError::Domain { op: "sqrt", arg: a });
                }
                v[out] = a.sqrt();
                [0.5 / v[out], 0.0]
            }
            Op::Sin => {
                v[out] = a.sin();
                [a.cos(), 0.0]
            }
            Op::Cos => {
                v[out] = a.cos();
                [-a.sin(), 0.0]
            }
            Op::SinCos => {
                let (s, c) = (a.sin(), a.cos());
                v[out] = s;
                v[out + 1] = c;
                [c, -s]
            }
            Op::Ramp => {
                v[out] = ramp(a);
                [heaviside(a), 0.0]
            }
            Op::Heaviside => {
                v[out] = heaviside(a);
                [dirac_a(a, cfg), 0.0]
            }
            Op::DiracA => {
                v[out] = dirac_a(a, cfg);
                [dirac_a_deriv(a, cfg), 0.0]
            }
            Op::Max => unreachable!("max graphs are refused above"),
        };
        tape.stats.primal_ops += primal_cost(node.op);
        tape.stats.partial_ops += partial_cost(node.op);
        tape.nodes.push(TapeNode { op: node.op, args: node.args, out: node.out, partials });
    }

    Ok(g.outputs.iter().map(|&id| v[id as usize]).collect())
}

impl Tape {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn stats(&self) -> RecordStats {
        self.stats
    }

    pub fn outputs(&self) -> Vec<f64> {
        self.outputs.iter().map(|&id| self.values[id as usize]).collect()
    }

    /// Propagate output adjoints back to the inputs:
    /// returns `J^T . seed`. Fanout accumulates by addition.
    pub fn reverse_sweep(&self, seed: &[f64]) -> AdResult<Vec<f64>> {
        Ok(self.reverse_sweep_counted(seed)?.0)
    }

    /// Reverse sweep with an operation counter.
    pub fn reverse_sweep_counted(&self, seed: &[f64]) -> AdResult<(Vec<f64>, ReverseStats)> {
        if seed.len() != self.outputs.len() {
            return Err(AdError::SeedLength { expected: self.outputs.len(), got: seed.len() });
        }
        let mut adj = vec![0.0; self.values.len()];
        for (&out_id, &s) in self.outputs.iter().zip(seed) {
            adj[out_id as usize] += s;
        }
        let mut ops = 0u64;
        for node in self.nodes.iter().rev() {
            let arity = node.op.arity();
            let n_out = node.op.n_out();
            for row in 0..n_out {
                let abar = adj[node.out as usize + row];
                if abar == 0.0 {
                    continue;
                }
                for (j, &arg) in node.args[..arity].iter().enumerate() {
                    if self.is_const[arg as usize] {
                        continue;
                    }
                    let p = node.partials[row * arity + j];
                    if p == 1.0 {
                        adj[arg as usize] += abar;
                        ops += 1;
                    } else if p == -1.0 {
                        adj[arg as usize] -= abar;
                        ops += 1;
                    } else if p != 0.0 {
                        adj[arg as usize] += abar * p;
                        ops += 2;
                    }
                }
            }
        }
        Ok((adj[..self.n_inputs].to_vec(), ReverseStats { ops }))
    }

    /// Full Jacobian from `m` reverse sweeps over basis seeds.
    pub fn reverse_jacobian(&self) -> AdResult<Vec<Vec<f64>>> {
        let m = self.outputs.len();
        let mut jac = Vec::with_capacity(m);
        let mut seed = vec![0.0; m];
        for i in 0..m {
            seed[i] = 1.0;
            jac.push(self.reverse_sweep(&seed)?);
            seed[i] = 0.0;
        }
        Ok(jac)
    }

    /// Line-oriented debug dump: `node-id op parent-ids primal partials`.
    pub fn dump(&self) -> String {
        fn fmt(x: f64) -> String {
            let x = if x == 0.0 { 0.0 } else { x };
            format!("{x}")
        }
        let mut s = String::new();
        for (i, node) in self.nodes.iter().enumerate() {
            let arity = node.op.arity();
            let n_out = node.op.n_out();
            let parents: Vec<String> =
                node.args[..arity].iter().map(|a| a.to_string()).collect();
            let primals: Vec<String> = (0..n_out)
                .map(|r| fmt(self.values[node.out as usize + r]))
                .collect();
            let partials: Vec<String> =
                (0..n_out * arity).map(|p| fmt(node.partials[p])).collect();
            let _ = writeln!(
                s,
                "{} {} {} {} {}",
                i,
                node.op.name(),
                parents.join(","),
                primals.join(","),
                partials.join(",")
            );
        }
        s
    }
}
