use std::cell::RefCell;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Primitive operations of the flow graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Exp,
    Ln,
    Sqrt,
    Sin,
    Cos,
    /// One primitive producing both sin and cos of its argument.
    SinCos,
    Ramp,
    Heaviside,
    DiracA,
    /// Evaluation-only; differentiation refuses graphs containing it.
    Max,
}

impl Op {
    pub(crate) fn arity(self) -> usize {
        match self {
            Op::Add | Op::Sub | Op::Mul | Op::Div | Op::Max => 2,
            _ => 1,
        }
    }

    pub(crate) fn n_out(self) -> usize {
        match self {
            Op::SinCos => 2,
            _ => 1,
        }
    }

    pub(crate) fn name(self) -> &'static str {
        match self {
            Op::Add => "add",
            Op::Sub => "sub",
            Op::Mul => "mul",
            Op::Div => "div",
            Op::Neg => "neg",
            Op::Exp => "exp",
            Op::Ln => "ln",
            Op::Sqrt => "sqrt",
            Op::Sin => "sin",
            Op::Cos => "cos",
            Op::SinCos => "sincos",
            Op::Ramp => "ramp",
            Op::Heaviside => "heaviside",
            Op::DiracA => "dirac",
            Op::Max => "max",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Node {
    pub op: Op,
    pub args: [u32; 2],
    /// First output value id; `op.n_out()` consecutive ids belong to it.
    pub out: u32,
}

/// An immutable recorded expression: inputs, constants and primitive
/// applications in execution order. Build one with [`GraphBuilder`].
#[derive(Debug, Clone)]
pub struct FlowGraph {
    pub(crate) n_inputs: usize,
    pub(crate) n_values: usize,
    pub(crate) consts: Vec<(u32, f64)>,
    pub(crate) nodes: Vec<Node>,
    pub(crate) outputs: Vec<u32>,
    pub(crate) uses_max: bool,
}

impl FlowGraph {
    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn n_outputs(&self) -> usize {
        self.outputs.len()
    }

    /// Number of recorded primitive applications (inputs and constants are
    /// leaves, not nodes).
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn uses_max(&self) -> bool {
        self.uses_max
    }

    pub(crate) fn value_is_const(&self) -> Vec<bool> {
        let mut is_const = vec![false; self.n_values];
        for &(id, _) in &self.consts {
            is_const[id as usize] = true;
        }
        is_const
    }
}

#[derive(Default)]
struct Inner {
    n_inputs: usize,
    n_values: usize,
    consts: Vec<(u32, f64)>,
    nodes: Vec<Node>,
    uses_max: bool,
}

/// Records an expression as it is written. Obtain inputs with [`GraphBuilder::x`],
/// combine them with the usual operators and the methods on [`Expr`], then
/// freeze with [`GraphBuilder::graph`].
pub struct GraphBuilder {
    inner: RefCell<Inner>,
}

impl GraphBuilder {
    pub fn new(n_inputs: usize) -> Self {
        Self {
            inner: RefCell::new(Inner {
                n_inputs,
                n_values: n_inputs,
                ..Inner::default()
            }),
        }
    }

    /// Handle to input `i`.
    pub fn x(&self, i: usize) -> Expr<'_> {
        let n = self.inner.borrow().n_inputs;
        assert!(i < n, "input index {i} out of range ({n} inputs)");
        Expr { g: self, v: i as u32 }
    }

    pub fn constant(&self, c: f64) -> Expr<'_> {
        let mut inner = self.inner.borrow_mut();
        let id = inner.n_values as u32;
        inner.n_values += 1;
        inner.consts.push((id, c));
        Expr { g: self, v: id }
    }

    fn push(&self, op: Op, args: [u32; 2]) -> u32 {
        let mut inner = self.inner.borrow_mut();
        let out = inner.n_values as u32;
        inner.n_values += op.n_out();
        if op == Op::Max {
            inner.uses_max = true;
        }
        inner.nodes.push(Node { op, args, out });
        out
    }

    /// Freeze the recorded expression with the given outputs.
    pub fn graph(&self, outputs: &[Expr<'_>]) -> FlowGraph {
        let inner = self.inner.borrow();
        FlowGraph {
            n_inputs: inner.n_inputs,
            n_values: inner.n_values,
            consts: inner.consts.clone(),
            nodes: inner.nodes.clone(),
            outputs: outputs.iter().map(|e| e.v).collect(),
            uses_max: inner.uses_max,
        }
    }
}

/// Handle to a value inside a [`GraphBuilder`].
#[derive(Clone, Copy)]
pub struct Expr<'g> {
    g: &'g GraphBuilder,
    v: u32,
}

impl<'g> Expr<'g> {
    fn unary(self, op: Op) -> Expr<'g> {
        let out = self.g.push(op, [self.v, 0]);
        Expr { g: self.g, v: out }
    }

    fn binary(self, op: Op, o: Expr<'g>) -> Expr<'g> {
        let out = self.g.push(op, [self.v, o.v]);
        Expr { g: self.g, v: out }
    }

    pub fn exp(self) -> Expr<'g> {
        self.unary(Op::Exp)
    }

    pub fn ln(self) -> Expr<'g> {
        self.unary(Op::Ln)
    }

    pub fn sqrt(self) -> Expr<'g> {
        self.unary(Op::Sqrt)
    }

    pub fn sin(self) -> Expr<'g> {
        self.unary(Op::Sin)
    }

    pub fn cos(self) -> Expr<'g> {
        self.unary(Op::Cos)
    }

    /// Fused sine and cosine as a single primitive with two outputs.
    pub fn sincos(self) -> (Expr<'g>, Expr<'g>) {
        let out = self.g.push(Op::SinCos, [self.v, 0]);
        (Expr { g: self.g, v: out }, Expr { g: self.g, v: out + 1 })
    }

    /// Positive part `x^+` with derivative `heaviside`.
    pub fn ramp(self) -> Expr<'g> {
        self.unary(Op::Ramp)
    }

    /// Step function with derivative `dirac_a`.
    pub fn heaviside(self) -> Expr<'g> {
        self.unary(Op::Heaviside)
    }

    pub fn dirac(self) -> Expr<'g> {
        self.unary(Op::DiracA)
    }

    /// Pointwise max. Recording it marks the graph non-differentiable:
    /// plain evaluation works, any derivative path returns
    /// [`super::AdError::MaxNotDifferentiable`]. Payoff kinks belong in
    /// [`Expr::ramp`].
    pub fn max(self, o: Expr<'g>) -> Expr<'g> {
        self.binary(Op::Max, o)
    }

    /// Integer power by repeated multiplication.
    pub fn powi(self, n: u32) -> Expr<'g> {
        assert!(n >= 1, "powi exponent must be >= 1");
        let mut acc = self;
        for _ in 1..n {
            acc = acc * self;
        }
        acc
    }
}

impl<'g> Add for Expr<'g> {
    type Output = Expr<'g>;
    fn add(self, o: Expr<'g>) -> Expr<'g> {
        self.binary(Op::Add, o)
    }
}

impl<'g> Sub for Expr<'g> {
    type Output = Expr<'g>;
    fn sub(self, o: Expr<'g>) -> Expr<'g> {
        self.binary(Op::Sub, o)
    }
}

impl<'g> Mul for Expr<'g> {
    type Output = Expr<'g>;
    fn mul(self, o: Expr<'g>) -> Expr<'g> {
        self.binary(Op::Mul, o)
    }
}

impl<'g> Div for Expr<'g> {
    type Output = Expr<'g>;
    fn div(self, o: Expr<'g>) -> Expr<'g> {
        self.binary(Op::Div, o)
    }
}

impl<'g> Neg for Expr<'g> {
    type Output = Expr<'g>;
    fn neg(self) -> Expr<'g> {
        self.unary(Op::Neg)
    }
}

impl<'g> Add<f64> for Expr<'g> {
    type Output = Expr<'g>;
    fn add(self, c: f64) -> Expr<'g> {
        self + self.g.constant(c)
    }
}

impl<'g> Add<Expr<'g>> for f64 {
    type Output = Expr<'g>;
    fn add(self, e: Expr<'g>) -> Expr<'g> {
        e.g.constant(self) + e
    }
}

impl<'g> Sub<f64> for Expr<'g> {
    type Output = Expr<'g>;
    fn sub(self, c: f64) -> Expr<'g> {
        self - self.g.constant(c)
    }
}

impl<'g> Sub<Expr<'g>> for f64 {
    type Output = Expr<'g>;
    fn sub(self, e: Expr<'g>) -> Expr<'g> {
        e.g.constant(self) - e
    }
}

impl<'g> Mul<f64> for Expr<'g> {
    type Output = Expr<'g>;
    fn mul(self, c: f64) -> Expr<'g> {
        self * self.g.constant(c)
    }
}

impl<'g> Mul<Expr<'g>> for f64 {
    type Output = Expr<'g>;
    fn mul(self, e: Expr<'g>) -> Expr<'g> {
        e.g.constant(self) * e
    }
}

impl<'g> Div<f64> for Expr<'g> {
    type Output = Expr<'g>;
    fn div(self, c: f64) -> Expr<'g> {
        self / self.g.constant(c)
    }
}

impl<'g> Div<Expr<'g>> for f64 {
    type Output = Expr<'g>;
    fn div(self, e: Expr<'g>) -> Expr<'g> {
        e.g.constant(self) / e
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fig_graph_has_two_primitive_nodes() {
        let b = GraphBuilder::new(3);
        let (a, bb, u) = (b.x(0), b.x(1), b.x(2));
        let c = a * bb;
        let (v, w) = u.sincos();
        let g = b.graph(&[c, v, w]);
        assert_eq!(g.n_nodes(), 2);
        assert_eq!(g.n_outputs(), 3);
    }

    #[test]
    fn identity_graph_has_no_nodes() {
        let b = GraphBuilder::new(2);
        let g = b.graph(&[b.x(1), b.x(0)]);
        assert_eq!(g.n_nodes(), 0);
    }

    #[test]
    fn max_marks_graph() {
        let b = GraphBuilder::new(2);
        let m = b.x(0).max(b.x(1));
        let g = b.graph(&[m]);
        assert!(g.uses_max());
    }
}
