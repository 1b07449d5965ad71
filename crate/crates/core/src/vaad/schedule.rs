use super::graph::{VGraph, VOp};

/// Parallel execution plan: chronologically ordered layers with no
/// dependencies inside a layer. Adjoint updates to one slot are aggregated
/// pairwise by powers of two, so a fanout of k costs ceil(log2 k) layers
/// instead of k.
#[derive(Debug, Clone)]
pub struct LayerSchedule {
    /// Forward layer per node; every parent sits in a strictly earlier layer.
    pub forward_layer: Vec<u32>,
    pub forward_depth: u32,
    /// Layers needed to aggregate each node's adjoint updates:
    /// 0 for unused slots, 1 for a single consumer, ceil(log2 k) otherwise.
    pub agg_layers: Vec<u32>,
    /// Longest chain of adjoint propagation steps.
    pub reverse_depth: u32,
    /// Total layers of the combined forward + reverse schedule.
    pub total_layers: u64,
}

pub(crate) fn agg_layers_for_fanout(k: u32) -> u32 {
    match k {
        0 => 0,
        1 => 1,
        k => (k as f64).log2().ceil() as u32,
    }
}

/// Compute the layered schedule of a graph.
pub fn layer_schedule(g: &VGraph) -> LayerSchedule {
    let n = g.nodes.len();
    let mut forward_layer = vec![0u32; n];
    for (i, node) in g.nodes.iter().enumerate() {
        if matches!(node.op, VOp::Param(_) | VOp::Noise(_) | VOp::Const(_)) {
            continue;
        }
        forward_layer[i] =
            1 + node.parents.iter().map(|&p| forward_layer[p as usize]).max().unwrap_or(0);
    }
    let forward_depth = forward_layer.iter().copied().max().unwrap_or(0);

    // Reverse pass: a node's adjoint is complete once every consumer has
    // produced its contribution and the pairwise aggregation tree has run.
    // Consumers appear later in topological order, so a reverse scan sees
    // them finalized.
    let mut rev_done = vec![0u32; n];
    let mut rev_depth_edges = vec![0u32; n];
    let mut consumers: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (i, node) in g.nodes.iter().enumerate() {
        for &p in &node.parents {
            consumers[p as usize].push(i as u32);
        }
    }
    let agg: Vec<u32> = g.fanout.iter().map(|&k| agg_layers_for_fanout(k)).collect();
    for i in (0..n).rev() {
        let ready = consumers[i].iter().map(|&c| rev_done[c as usize]).max().unwrap_or(0);
        rev_done[i] = ready + agg[i];
        rev_depth_edges[i] = consumers[i]
            .iter()
            .map(|&c| rev_depth_edges[c as usize] + 1)
            .max()
            .unwrap_or(0);
    }
    let reverse_depth = rev_depth_edges.iter().copied().max().unwrap_or(0);
    let total_layers =
        forward_depth as u64 + rev_done.iter().copied().max().unwrap_or(0) as u64;

    LayerSchedule { forward_layer, forward_depth, agg_layers: agg, reverse_depth, total_layers }
}

impl LayerSchedule {
    /// Upper bound the schedule must respect:
    /// forward depth + reverse depth + sum of per-slot log2 fanouts.
    pub fn layer_bound(&self, g: &VGraph) -> u64 {
        let extra: u64 = g
            .fanout
            .iter()
            .map(|&k| if k >= 2 { (k as f64).log2().ceil() as u64 } else { 0 })
            .sum();
        self.forward_depth as u64 + self.reverse_depth as u64 + extra
    }
}

/// Pairwise aggregation by powers of two, adjacent pairs per round; the
/// round count is ceil(log2 k). Matches the schedule's aggregation shape.
pub fn tree_reduce(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    while v.len() > 1 {
        let mut next = Vec::with_capacity(v.len().div_ceil(2));
        for pair in v.chunks(2) {
            next.push(pair.iter().sum());
        }
        v = next;
    }
    v.first().copied().unwrap_or(0.0)
}

/// Rounds the pairwise aggregation takes for k contributions.
pub fn tree_rounds(k: usize) -> u32 {
    if k <= 1 {
        k as u32
    } else {
        (k as f64).log2().ceil() as u32
    }
}
