use super::{VaadError, VaadResult};
use std::cell::RefCell;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Index of a node in a [`VGraph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(pub u32);

/// Bucketed lookup table: interior edges partition the real line into
/// `edges.len() + 1` cells.
#[derive(Debug, Clone)]
pub struct GatherSpec {
    pub edges: Vec<f64>,
}

impl GatherSpec {
    #[inline]
    pub fn bucket(&self, x: f64) -> usize {
        self.edges.partition_point(|&e| e <= x)
    }

    pub fn n_cells(&self) -> usize {
        self.edges.len() + 1
    }
}

#[derive(Debug, Clone)]
pub enum VOp {
    /// Scalar input, index into the parameter vector.
    Param(u32),
    /// Vector input, column index into the noise matrix.
    Noise(u32),
    Const(f64),
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
    Ramp,
    Heaviside,
    /// Per-path table lookup: parents are `[key, cell_0, .., cell_{B-1}]`;
    /// output lane m is the value of the cell `key[m]` falls into. Piecewise
    /// constant in the key, so the key receives no adjoint; cell adjoints
    /// accumulate the masked sums.
    Gather(GatherSpec),
}

impl VOp {
    pub(crate) fn name(&self) -> &'static str {
        match self {
            VOp::Param(_) => "param",
            VOp::Noise(_) => "noise",
            VOp::Const(_) => "const",
            VOp::Add => "add",
            VOp::Sub => "sub",
            VOp::Mul => "mul",
            VOp::Div => "div",
            VOp::Neg => "neg",
            VOp::Exp => "exp",
            VOp::Ln => "ln",
            VOp::Sqrt => "sqrt",
            VOp::Sin => "sin",
            VOp::Cos => "cos",
            VOp::Ramp => "ramp",
            VOp::Heaviside => "heaviside",
            VOp::Gather(_) => "gather",
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct VNode {
    pub op: VOp,
    pub parents: Vec<u32>,
}

/// Immutable vectorized computation graph.
#[derive(Debug, Clone)]
pub struct VGraph {
    pub(crate) nodes: Vec<VNode>,
    pub(crate) n_params: usize,
    pub(crate) n_noise: usize,
    pub(crate) outputs: Vec<u32>,
    /// True iff the node does not depend, directly or transitively, on any
    /// noise input. Deterministic nodes carry scalar payloads.
    pub(crate) det: Vec<bool>,
    /// Number of consuming edges per node.
    pub(crate) fanout: Vec<u32>,
}

impl VGraph {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn n_noise(&self) -> usize {
        self.n_noise
    }

    pub fn outputs(&self) -> Vec<NodeId> {
        self.outputs.iter().map(|&i| NodeId(i)).collect()
    }

    pub fn is_deterministic(&self, n: NodeId) -> bool {
        self.det[n.0 as usize]
    }

    pub fn fanout(&self, n: NodeId) -> u32 {
        self.fanout[n.0 as usize]
    }

    /// Maximal deterministic frontier: deterministic nodes consumed by at
    /// least one non-deterministic node. Separates the deterministic part
    /// from everything the noise touches.
    pub fn auto_barrier(&self) -> Barrier {
        let mut on_frontier = vec![false; self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            if !self.det[i] {
                for &p in &node.parents {
                    if self.det[p as usize] {
                        on_frontier[p as usize] = true;
                    }
                }
            }
        }
        Barrier {
            nodes: on_frontier
                .iter()
                .enumerate()
                .filter_map(|(i, &b)| b.then_some(i as u32))
                .collect(),
        }
    }

    pub fn validate_barrier(&self, barrier: &Barrier) -> VaadResult<()> {
        for &n in &barrier.nodes {
            if !self.det.get(n as usize).copied().unwrap_or(false) {
                return Err(VaadError::BarrierNotDeterministic { node: n });
            }
        }
        Ok(())
    }

    /// Line-oriented dump: `node-id op parents scalar|vector layer`.
    pub fn dump(&self, schedule: Option<&super::LayerSchedule>) -> String {
        use std::fmt::Write as _;
        let mut s = String::new();
        for (i, node) in self.nodes.iter().enumerate() {
            let parents: Vec<String> = node.parents.iter().map(|p| p.to_string()).collect();
            let kind = if self.det[i] { "scalar" } else { "vector" };
            let layer = schedule.map(|sch| sch.forward_layer[i].to_string()).unwrap_or_default();
            let _ = writeln!(
                s,
                "{} {} {} {} {}",
                i,
                node.op.name(),
                if parents.is_empty() { "-".to_string() } else { parents.join(",") },
                kind,
                layer
            );
        }
        s
    }
}

/// The cut separating the deterministic part from the stochastic part:
/// the reverse sweep replaces each of these nodes' vectorial adjoints by
/// its scalar mean before continuing. An empty barrier leaves the sweep
/// fully vectorial (the means are then taken at the very end, on the
/// parameter adjoints).
#[derive(Debug, Clone, Default)]
pub struct Barrier {
    pub nodes: Vec<u32>,
}

impl Barrier {
    /// Degenerate barrier at the outputs: no mid-sweep collapse.
    pub fn at_outputs() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn manual(nodes: Vec<NodeId>) -> Self {
        Self { nodes: nodes.into_iter().map(|n| n.0).collect() }
    }
}

#[derive(Default)]
struct Inner {
    nodes: Vec<VNode>,
    n_params: usize,
    n_noise: usize,
    det: Vec<bool>,
}

/// Builds a [`VGraph`] through operator overloading on [`VExpr`] handles.
pub struct VGraphBuilder {
    inner: RefCell<Inner>,
}

impl Default for VGraphBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl VGraphBuilder {
    pub fn new() -> Self {
        Self { inner: RefCell::new(Inner::default()) }
    }

    fn push(&self, op: VOp, parents: Vec<u32>, det: bool) -> u32 {
        let mut inner = self.inner.borrow_mut();
        let id = inner.nodes.len() as u32;
        inner.nodes.push(VNode { op, parents });
        inner.det.push(det);
        id
    }

    /// Scalar model parameter; the reverse sweep reports one sensitivity
    /// per parameter, in declaration order.
    pub fn param(&self, value_index: Option<usize>) -> VExpr<'_> {
        let idx = {
            let inner = self.inner.borrow();
            value_index.unwrap_or(inner.n_params)
        };
        let id = self.push(VOp::Param(idx as u32), Vec::new(), true);
        let mut inner = self.inner.borrow_mut();
        inner.n_params = inner.n_params.max(idx + 1);
        drop(inner);
        VExpr { g: self, id }
    }

    /// Fresh parameter slot.
    pub fn next_param(&self) -> VExpr<'_> {
        self.param(None)
    }

    /// Vector random input, one lane per Monte Carlo path.
    pub fn noise(&self, col: usize) -> VExpr<'_> {
        let id = self.push(VOp::Noise(col as u32), Vec::new(), false);
        let mut inner = self.inner.borrow_mut();
        inner.n_noise = inner.n_noise.max(col + 1);
        drop(inner);
        VExpr { g: self, id }
    }

    pub fn constant(&self, c: f64) -> VExpr<'_> {
        let id = self.push(VOp::Const(c), Vec::new(), true);
        VExpr { g: self, id }
    }

    /// Per-path bucketed lookup of scalar cells keyed by `key`.
    pub fn gather(&self, key: VExpr<'_>, cells: &[VExpr<'_>], spec: GatherSpec) -> VExpr<'_> {
        assert_eq!(cells.len(), spec.n_cells(), "cell count must match bucket count");
        let mut parents = Vec::with_capacity(1 + cells.len());
        parents.push(key.id);
        parents.extend(cells.iter().map(|c| c.id));
        let id = self.push(VOp::Gather(spec), parents, false);
        VExpr { g: self, id }
    }

    pub fn graph(&self, outputs: &[VExpr<'_>]) -> VGraph {
        let inner = self.inner.borrow();
        let mut fanout = vec![0u32; inner.nodes.len()];
        for node in &inner.nodes {
            for &p in &node.parents {
                fanout[p as usize] += 1;
            }
        }
        VGraph {
            nodes: inner.nodes.clone(),
            n_params: inner.n_params,
            n_noise: inner.n_noise,
            outputs: outputs.iter().map(|e| e.id).collect(),
            det: inner.det.clone(),
            fanout,
        }
    }
}

/// Handle to a node being built.
#[derive(Clone, Copy)]
pub struct VExpr<'g> {
    g: &'g VGraphBuilder,
    id: u32,
}

impl<'g> VExpr<'g> {
    pub fn node_id(self) -> NodeId {
        NodeId(self.id)
    }

    fn det(self) -> bool {
        self.g.inner.borrow().det[self.id as usize]
    }

    fn unary(self, op: VOp) -> VExpr<'g> {
        let det = self.det();
        let id = self.g.push(op, vec![self.id], det);
        VExpr { g: self.g, id }
    }

    fn binary(self, op: VOp, o: VExpr<'g>) -> VExpr<'g> {
        let det = self.det() && o.det();
        let id = self.g.push(op, vec![self.id, o.id], det);
        VExpr { g: self.g, id }
    }

    pub fn exp(self) -> VExpr<'g> {
        self.unary(VOp::Exp)
    }

    pub fn ln(self) -> VExpr<'g> {
        self.unary(VOp::Ln)
    }

    pub fn sqrt(self) -> VExpr<'g> {
        self.unary(VOp::Sqrt)
    }

    pub fn sin(self) -> VExpr<'g> {
        self.unary(VOp::Sin)
    }

    pub fn cos(self) -> VExpr<'g> {
        self.unary(VOp::Cos)
    }

    pub fn ramp(self) -> VExpr<'g> {
        self.unary(VOp::Ramp)
    }

    pub fn heaviside(self) -> VExpr<'g> {
        self.unary(VOp::Heaviside)
    }
}

impl<'g> Add for VExpr<'g> {
    type Output = VExpr<'g>;
    fn add(self, o: VExpr<'g>) -> VExpr<'g> {
        self.binary(VOp::Add, o)
    }
}

impl<'g> Sub for VExpr<'g> {
    type Output = VExpr<'g>;
    fn sub(self, o: VExpr<'g>) -> VExpr<'g> {
        self.binary(VOp::Sub, o)
    }
}

impl<'g> Mul for VExpr<'g> {
    type Output = VExpr<'g>;
    fn mul(self, o: VExpr<'g>) -> VExpr<'g> {
        self.binary(VOp::Mul, o)
    }
}

impl<'g> Div for VExpr<'g> {
    type Output = VExpr<'g>;
    fn div(self, o: VExpr<'g>) -> VExpr<'g> {
        self.binary(VOp::Div, o)
    }
}

impl<'g> Neg for VExpr<'g> {
    type Output = VExpr<'g>;
    fn neg(self) -> VExpr<'g> {
        self.unary(VOp::Neg)
    }
}

impl<'g> Add<f64> for VExpr<'g> {
    type Output = VExpr<'g>;
    fn add(self, c: f64) -> VExpr<'g> {
        self + self.g.constant(c)
    }
}

impl<'g> Add<VExpr<'g>> for f64 {
    type Output = VExpr<'g>;
    fn add(self, e: VExpr<'g>) -> VExpr<'g> {
        e.g.constant(self) + e
    }
}

impl<'g> Sub<f64> for VExpr<'g> {
    type Output = VExpr<'g>;
    fn sub(self, c: f64) -> VExpr<'g> {
        self - self.g.constant(c)
    }
}

impl<'g> Sub<VExpr<'g>> for f64 {
    type Output = VExpr<'g>;
    fn sub(self, e: VExpr<'g>) -> VExpr<'g> {
        e.g.constant(self) - e
    }
}

impl<'g> Mul<f64> for VExpr<'g> {
    type Output = VExpr<'g>;
    fn mul(self, c: f64) -> VExpr<'g> {
        self * self.g.constant(c)
    }
}

impl<'g> Mul<VExpr<'g>> for f64 {
    type Output = VExpr<'g>;
    fn mul(self, e: VExpr<'g>) -> VExpr<'g> {
        e.g.constant(self) * e
    }
}

impl<'g> Div<f64> for VExpr<'g> {
    type Output = VExpr<'g>;
    fn div(self, c: f64) -> VExpr<'g> {
        self / self.g.constant(c)
    }
}
