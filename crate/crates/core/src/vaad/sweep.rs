use super::graph::{VGraph, VOp};
use super::{VaadError, VaadResult};
use crate::ad::{dirac_a, heaviside, ramp, SmoothingConfig};
use rayon::prelude::*;

const PAR_THRESHOLD: usize = 16_384;
const BLOCK: usize = 4096;

/// Standard-normal draws, one column per random input, one row per path.
/// Column-major so a column is a contiguous lane vector.
#[derive(Debug, Clone)]
pub struct NoiseMatrix {
    m: usize,
    cols: usize,
    data: Vec<f64>,
}

impl NoiseMatrix {
    pub fn from_fn(m: usize, cols: usize, f: impl Fn(usize, usize) -> f64 + Sync) -> Self {
        let mut data = vec![0.0; m * cols];
        data.par_chunks_mut(m).enumerate().for_each(|(j, col)| {
            for (i, v) in col.iter_mut().enumerate() {
                *v = f(i, j);
            }
        });
        Self { m, cols, data }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.m..(j + 1) * self.m]
    }

    /// Contiguous row block `[start, start + len)` as its own matrix.
    pub fn row_block(&self, start: usize, len: usize) -> NoiseMatrix {
        assert!(start + len <= self.m);
        let mut data = Vec::with_capacity(len * self.cols);
        for j in 0..self.cols {
            data.extend_from_slice(&self.col(j)[start..start + len]);
        }
        NoiseMatrix { m: len, cols: self.cols, data }
    }
}

/// How cross-path reductions associate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reduction {
    /// Fixed-shape pairwise tree: bit-identical across runs and thread
    /// counts.
    #[default]
    Deterministic,
    /// Unordered parallel fold; faster, association varies with threading.
    Fast,
}

fn pairwise_in_place(xs: &mut Vec<f64>) -> f64 {
    while xs.len() > 1 {
        let len = xs.len();
        let half = len.div_ceil(2);
        for i in 0..len / 2 {
            xs[i] = xs[2 * i] + xs[2 * i + 1];
        }
        if len % 2 == 1 {
            xs[len / 2] = xs[len - 1];
        }
        xs.truncate(half);
    }
    xs.first().copied().unwrap_or(0.0)
}

pub(crate) fn det_sum_by(
    m: usize,
    mode: Reduction,
    block_sum: impl Fn(std::ops::Range<usize>) -> f64 + Sync,
) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let nb = m.div_ceil(BLOCK);
    let ranges = |b: usize| b * BLOCK..((b + 1) * BLOCK).min(m);
    match mode {
        Reduction::Deterministic => {
            let mut sums: Vec<f64> = if m >= PAR_THRESHOLD {
                (0..nb).into_par_iter().map(|b| block_sum(ranges(b))).collect()
            } else {
                (0..nb).map(|b| block_sum(ranges(b))).collect()
            };
            pairwise_in_place(&mut sums)
        }
        Reduction::Fast => (0..nb).into_par_iter().map(|b| block_sum(ranges(b))).sum(),
    }
}

/// Fixed-shape deterministic sum of a lane vector.
pub fn det_sum(xs: &[f64]) -> f64 {
    det_sum_by(xs.len(), Reduction::Deterministic, |r| xs[r].iter().sum())
}

/// Scalar-or-vector slot payload.
#[derive(Debug, Clone)]
pub enum VPayload {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl VPayload {
    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            VPayload::Scalar(s) => Some(*s),
            VPayload::Vector(_) => None,
        }
    }

    pub fn as_vector(&self) -> Option<&[f64]> {
        match self {
            VPayload::Vector(v) => Some(v),
            VPayload::Scalar(_) => None,
        }
    }

    #[inline]
    fn lane(&self, i: usize) -> f64 {
        match self {
            VPayload::Scalar(s) => *s,
            VPayload::Vector(v) => v[i],
        }
    }

    fn is_vector(&self) -> bool {
        matches!(self, VPayload::Vector(_))
    }
}

/// Operation counters. A vector op touches all M lanes but counts once;
/// scalar ops count individual f64 primitive applications, so the scalar
/// tally of a checkpointed sweep is independent of the path count.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    pub fwd_scalar_ops: u64,
    pub fwd_vector_ops: u64,
    pub rev_scalar_ops: u64,
    pub rev_vector_ops: u64,
}

/// Populated slots of one forward sweep.
pub struct VState {
    pub(crate) m: usize,
    pub(crate) payloads: Vec<VPayload>,
    pub(crate) buckets: Vec<Option<Vec<u32>>>,
    pub(crate) cfg: SmoothingConfig,
    pub counters: Counters,
}

impl VState {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn payload(&self, n: super::NodeId) -> &VPayload {
        &self.payloads[n.0 as usize]
    }
}

#[derive(Clone, Copy)]
enum Partial<'a> {
    One,
    NegOne,
    Payload(&'a VPayload),
    /// Lane-wise function of two stored payloads.
    Map2(&'a VPayload, &'a VPayload, fn(f64, f64) -> f64),
    /// Lane-wise function of one stored payload (plus the smoothing width).
    Map1(&'a VPayload, f64, fn(f64, f64) -> f64),
}

impl Partial<'_> {
    #[inline]
    fn lane(&self, i: usize) -> f64 {
        match self {
            Partial::One => 1.0,
            Partial::NegOne => -1.0,
            Partial::Payload(p) => p.lane(i),
            Partial::Map2(a, b, f) => f(a.lane(i), b.lane(i)),
            Partial::Map1(a, w, f) => f(a.lane(i), *w),
        }
    }

    fn scalar(&self) -> Option<f64> {
        match self {
            Partial::One => Some(1.0),
            Partial::NegOne => Some(-1.0),
            Partial::Payload(VPayload::Scalar(s)) => Some(*s),
            Partial::Map2(VPayload::Scalar(a), VPayload::Scalar(b), f) => Some(f(*a, *b)),
            Partial::Map1(VPayload::Scalar(a), w, f) => Some(f(*a, *w)),
            _ => None,
        }
    }
}

fn apply2(
    m: usize,
    a: &VPayload,
    b: &VPayload,
    cnt: &mut Counters,
    f: impl Fn(f64, f64) -> f64 + Sync,
) -> VPayload {
    match (a, b) {
        (VPayload::Scalar(x), VPayload::Scalar(y)) => {
            cnt.fwd_scalar_ops += 1;
            VPayload::Scalar(f(*x, *y))
        }
        _ => {
            cnt.fwd_vector_ops += 1;
            let mut out = vec![0.0; m];
            if m >= PAR_THRESHOLD {
                out.par_iter_mut()
                    .enumerate()
                    .for_each(|(i, o)| *o = f(a.lane(i), b.lane(i)));
            } else {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = f(a.lane(i), b.lane(i));
                }
            }
            VPayload::Vector(out)
        }
    }
}

fn apply1(
    m: usize,
    a: &VPayload,
    cnt: &mut Counters,
    f: impl Fn(f64) -> f64 + Sync,
) -> VPayload {
    match a {
        VPayload::Scalar(x) => {
            cnt.fwd_scalar_ops += 1;
            VPayload::Scalar(f(*x))
        }
        VPayload::Vector(v) => {
            cnt.fwd_vector_ops += 1;
            let out = if m >= PAR_THRESHOLD {
                v.par_iter().map(|&x| f(x)).collect()
            } else {
                v.iter().map(|&x| f(x)).collect()
            };
            VPayload::Vector(out)
        }
    }
}

/// First lane failing `ok`, if any.
fn scan_domain(p: &VPayload, ok: impl Fn(f64) -> bool + Sync) -> Option<usize> {
    match p {
        VPayload::Scalar(s) => (!ok(*s)).then_some(0),
        VPayload::Vector(v) => {
            if v.len() >= PAR_THRESHOLD {
                v.par_iter().position_first(|&x| !ok(x))
            } else {
                v.iter().position(|&x| !ok(x))
            }
        }
    }
}

impl VGraph {
    /// Populate every slot. Deterministic slots are computed once, as
    /// scalars; slots with any vector parent are vectors of length `m`.
    pub fn forward(
        &self,
        params: &[f64],
        noise: &NoiseMatrix,
        cfg: &SmoothingConfig,
    ) -> VaadResult<VState> {
        if params.len() != self.n_params {
            return Err(VaadError::ParamCount { expected: self.n_params, got: params.len() });
        }
        if noise.cols() != self.n_noise {
            return Err(VaadError::ShapeMismatch { expected: self.n_noise, got: noise.cols() });
        }
        let m = noise.m();
        let mut cnt = Counters::default();
        let mut payloads: Vec<VPayload> = Vec::with_capacity(self.nodes.len());
        let mut buckets: Vec<Option<Vec<u32>>> = vec![None; self.nodes.len()];

        for (i, node) in self.nodes.iter().enumerate() {
            let pay = match &node.op {
                VOp::Param(j) => VPayload::Scalar(params[*j as usize]),
                VOp::Const(c) => VPayload::Scalar(*c),
                VOp::Noise(j) => VPayload::Vector(noise.col(*j as usize).to_vec()),
                VOp::Add => {
                    let (a, b) = (&payloads[node.parents[0] as usize], &payloads[node.parents[1] as usize]);
                    apply2(m, a, b, &mut cnt, |x, y| x + y)
                }
                VOp::Sub => {
                    let (a, b) = (&payloads[node.parents[0] as usize], &payloads[node.parents[1] as usize]);
                    apply2(m, a, b, &mut cnt, |x, y| x - y)
                }
                VOp::Mul => {
                    let (a, b) = (&payloads[node.parents[0] as usize], &payloads[node.parents[1] as usize]);
                    apply2(m, a, b, &mut cnt, |x, y| x * y)
                }
                VOp::Div => {
                    let (a, b) = (&payloads[node.parents[0] as usize], &payloads[node.parents[1] as usize]);
                    if let Some(lane) = scan_domain(b, |x| x != 0.0) {
                        return Err(VaadError::Domain { op: "div", lane });
                    }
                    apply2(m, a, b, &mut cnt, |x, y| x / y)
                }
                VOp::Neg => apply1(m, &payloads[node.parents[0] as usize], &mut cnt, |x| -x),
                VOp::Exp => apply1(m, &payloads[node.parents[0] as usize], &mut cnt, f64::exp),
                VOp::Ln => {
                    let a = &payloads[node.parents[0] as usize];
                    if let Some(lane) = scan_domain(a, |x| x > 0.0) {
                        return Err(VaadError::Domain { op: "ln", lane });
                    }
                    apply1(m, a, &mut cnt, f64::ln)
                }
                VOp::Sqrt => {
                    let a = &payloads[node.parents[0] as usize];
                    if let Some(lane) = scan_domain(a, |x| x >= 0.0) {
                        return Err(VaadError::Domain { op: "sqrt", lane });
                    }
                    apply1(m, a, &mut cnt, f64::sqrt)
                }
                VOp::Sin => apply1(m, &payloads[node.parents[0] as usize], &mut cnt, f64::sin),
                VOp::Cos => apply1(m, &payloads[node.parents[0] as usize], &mut cnt, f64::cos),
                VOp::Ramp => apply1(m, &payloads[node.parents[0] as usize], &mut cnt, ramp),
                VOp::Heaviside => {
                    apply1(m, &payloads[node.parents[0] as usize], &mut cnt, heaviside)
                }
                VOp::Gather(spec) => {
                    let key = &payloads[node.parents[0] as usize];
                    let cells: Vec<f64> = node.parents[1..]
                        .iter()
                        .map(|&c| payloads[c as usize].lane(0))
                        .collect();
                    cnt.fwd_vector_ops += 1;
                    let mut idx = vec![0u32; m];
                    let mut out = vec![0.0; m];
                    if m >= PAR_THRESHOLD {
                        idx.par_iter_mut().zip(out.par_iter_mut()).enumerate().for_each(
                            |(i, (b, o))| {
                                let k = spec.bucket(key.lane(i));
                                *b = k as u32;
                                *o = cells[k];
                            },
                        );
                    } else {
                        for i in 0..m {
                            let k = spec.bucket(key.lane(i));
                            idx[i] = k as u32;
                            out[i] = cells[k];
                        }
                    }
                    buckets[i] = Some(idx);
                    VPayload::Vector(out)
                }
            };
            debug_assert!(
                !self.det[i] || !pay.is_vector(),
                "deterministic node {i} produced a vector payload"
            );
            payloads.push(pay);
        }

        Ok(VState { m, payloads, buckets, cfg: *cfg, counters: cnt })
    }

    /// Reverse sweep with unit seed on every output; returns path-averaged
    /// parameter sensitivities.
    pub fn reverse(&self, state: &VState, mode: SweepMode<'_>) -> VaadResult<SweepResult> {
        let seeds: Vec<VPayload> = self
            .outputs
            .iter()
            .map(|&o| match &state.payloads[o as usize] {
                VPayload::Scalar(_) => VPayload::Scalar(1.0),
                VPayload::Vector(_) => VPayload::Vector(vec![1.0; state.m]),
            })
            .collect();
        self.reverse_seeded(state, &seeds, mode, Reduction::Deterministic)
    }

    /// Reverse sweep with explicit output seeds.
    pub fn reverse_seeded(
        &self,
        state: &VState,
        seeds: &[VPayload],
        mode: SweepMode<'_>,
        reduction: Reduction,
    ) -> VaadResult<SweepResult> {
        if seeds.len() != self.outputs.len() {
            return Err(VaadError::SeedLength { expected: self.outputs.len(), got: seeds.len() });
        }
        let mut collapse = vec![false; self.nodes.len()];
        if let SweepMode::MeanAt(barrier) = mode {
            self.validate_barrier(barrier)?;
            for &n in &barrier.nodes {
                collapse[n as usize] = true;
            }
        }

        let m = state.m;
        let mut cnt = state.counters;
        let mut adj_vec: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        let mut adj_sc = vec![0.0; self.nodes.len()];

        for (&out, seed) in self.outputs.iter().zip(seeds) {
            match seed {
                VPayload::Scalar(s) => adj_sc[out as usize] += s,
                VPayload::Vector(v) => {
                    if v.len() != m {
                        return Err(VaadError::SeedShape { expected: m, got: v.len() });
                    }
                    add_vec(&mut adj_vec[out as usize], v, m);
                }
            }
        }

        let mut sens = vec![0.0; self.n_params];
        for i in (0..self.nodes.len()).rev() {
            if collapse[i] {
                if let Some(v) = adj_vec[i].take() {
                    cnt.rev_vector_ops += 1;
                    adj_sc[i] += det_sum_by(m, reduction, |r| v[r].iter().sum()) / m as f64;
                }
            }
            let src_vec = adj_vec[i].take();
            let src_sc = adj_sc[i];
            if src_vec.is_none() && src_sc == 0.0 {
                continue;
            }
            let node = &self.nodes[i];
            let out_pay = &state.payloads[i];
            let w = state.cfg.width();
            match &node.op {
                // Consumers sit later in node order, so a parameter's
                // adjoint is complete by the time the sweep reaches it;
                // path-average it into the sensitivity vector.
                VOp::Param(j) => {
                    let mut total = src_sc;
                    if let Some(v) = &src_vec {
                        cnt.rev_vector_ops += 1;
                        total += det_sum_by(m, reduction, |r| v[r].iter().sum()) / m as f64;
                    }
                    sens[*j as usize] += total;
                }
                VOp::Noise(_) | VOp::Const(_) => {}
                VOp::Gather(spec) => {
                    let n_cells = spec.n_cells();
                    let idx = state.buckets[i].as_ref().expect("gather buckets stored");
                    // Cells are deterministic scalars: their adjoints take
                    // the path mean here (the gather is an intrinsic
                    // checkpoint; the masked mean is exact by linearity).
                    let mut acc = vec![0.0; n_cells];
                    if let Some(sv) = &src_vec {
                        cnt.rev_vector_ops += 1;
                        let nb = m.div_ceil(BLOCK);
                        let blocks: Vec<Vec<f64>> = if m >= PAR_THRESHOLD {
                            (0..nb)
                                .into_par_iter()
                                .map(|bk| {
                                    let mut a = vec![0.0; n_cells];
                                    for j in bk * BLOCK..((bk + 1) * BLOCK).min(m) {
                                        a[idx[j] as usize] += sv[j];
                                    }
                                    a
                                })
                                .collect()
                        } else {
                            (0..nb)
                                .map(|bk| {
                                    let mut a = vec![0.0; n_cells];
                                    for j in bk * BLOCK..((bk + 1) * BLOCK).min(m) {
                                        a[idx[j] as usize] += sv[j];
                                    }
                                    a
                                })
                                .collect()
                        };
                        for c in 0..n_cells {
                            let mut sums: Vec<f64> = blocks.iter().map(|b| b[c]).collect();
                            acc[c] = pairwise_in_place(&mut sums);
                        }
                    }
                    if src_sc != 0.0 {
                        cnt.rev_vector_ops += 1;
                        for &b in idx {
                            acc[b as usize] += src_sc;
                        }
                    }
                    for (c, &cell) in node.parents[1..].iter().enumerate() {
                        if acc[c] != 0.0 {
                            adj_sc[cell as usize] += acc[c] / m as f64;
                            cnt.rev_scalar_ops += 1;
                        }
                    }
                    // Piecewise constant in the key: no adjoint flows there.
                }
                op => {
                    let parents = &node.parents;
                    let a = &state.payloads[parents[0] as usize];
                    let partials: [(u32, Partial); 2] = match op {
                        VOp::Add => [(parents[0], Partial::One), (parents[1], Partial::One)],
                        VOp::Sub => [(parents[0], Partial::One), (parents[1], Partial::NegOne)],
                        VOp::Mul => [
                            (parents[0], Partial::Payload(&state.payloads[parents[1] as usize])),
                            (parents[1], Partial::Payload(a)),
                        ],
                        VOp::Div => {
                            let b = &state.payloads[parents[1] as usize];
                            [
                                (parents[0], Partial::Map2(b, b, |x, _| 1.0 / x)),
                                (parents[1], Partial::Map2(out_pay, b, |o, x| -o / x)),
                            ]
                        }
                        VOp::Neg => [(parents[0], Partial::NegOne), (u32::MAX, Partial::One)],
                        VOp::Exp => {
                            [(parents[0], Partial::Payload(out_pay)), (u32::MAX, Partial::One)]
                        }
                        VOp::Ln => [
                            (parents[0], Partial::Map2(a, a, |x, _| 1.0 / x)),
                            (u32::MAX, Partial::One),
                        ],
                        VOp::Sqrt => [
                            (parents[0], Partial::Map2(out_pay, out_pay, |o, _| 0.5 / o)),
                            (u32::MAX, Partial::One),
                        ],
                        VOp::Sin => [
                            (parents[0], Partial::Map2(a, a, |x, _| x.cos())),
                            (u32::MAX, Partial::One),
                        ],
                        VOp::Cos => [
                            (parents[0], Partial::Map2(a, a, |x, _| -x.sin())),
                            (u32::MAX, Partial::One),
                        ],
                        VOp::Ramp => [
                            (parents[0], Partial::Map1(a, w, |x, _| heaviside(x))),
                            (u32::MAX, Partial::One),
                        ],
                        VOp::Heaviside => [
                            (parents[0], Partial::Map1(a, w, dirac_by_width)),
                            (u32::MAX, Partial::One),
                        ],
                        _ => unreachable!(),
                    };
                    for (parent, partial) in partials {
                        if parent == u32::MAX {
                            continue;
                        }
                        if matches!(
                            self.nodes[parent as usize].op,
                            VOp::Const(_) | VOp::Noise(_)
                        ) {
                            continue;
                        }
                        accumulate(
                            m,
                            &mut adj_vec[parent as usize],
                            &mut adj_sc[parent as usize],
                            src_vec.as_deref(),
                            src_sc,
                            partial,
                            &mut cnt,
                        );
                    }
                }
            }
        }

        Ok(SweepResult { sensitivities: sens, counters: cnt })
    }
}

fn dirac_by_width(x: f64, w: f64) -> f64 {
    let cfg = SmoothingConfig::new(w).expect("validated width");
    dirac_a(x, &cfg)
}

fn add_vec(dst: &mut Option<Vec<f64>>, src: &[f64], m: usize) {
    let d = dst.get_or_insert_with(|| vec![0.0; m]);
    if m >= PAR_THRESHOLD {
        d.par_iter_mut().zip(src.par_iter()).for_each(|(a, b)| *a += b);
    } else {
        for (a, b) in d.iter_mut().zip(src) {
            *a += b;
        }
    }
}

fn accumulate(
    m: usize,
    dst_vec: &mut Option<Vec<f64>>,
    dst_sc: &mut f64,
    src_vec: Option<&[f64]>,
    src_sc: f64,
    partial: Partial<'_>,
    cnt: &mut Counters,
) {
    if let Some(sv) = src_vec {
        cnt.rev_vector_ops += 1;
        let d = dst_vec.get_or_insert_with(|| vec![0.0; m]);
        if m >= PAR_THRESHOLD {
            d.par_iter_mut()
                .enumerate()
                .for_each(|(i, a)| *a += sv[i] * partial.lane(i));
        } else {
            for (i, a) in d.iter_mut().enumerate() {
                *a += sv[i] * partial.lane(i);
            }
        }
    }
    if src_sc != 0.0 {
        match partial.scalar() {
            Some(p) => {
                *dst_sc += src_sc * p;
                cnt.rev_scalar_ops += 1;
            }
            None => {
                // Scalar adjoint against a vector partial: broadcast.
                cnt.rev_vector_ops += 1;
                let d = dst_vec.get_or_insert_with(|| vec![0.0; m]);
                for (i, a) in d.iter_mut().enumerate() {
                    *a += src_sc * partial.lane(i);
                }
            }
        }
    }
}

/// Where the reverse sweep takes its means.
#[derive(Debug, Clone, Copy)]
pub enum SweepMode<'a> {
    /// Fully vectorial reverse sweep; means taken at the parameters.
    Plain,
    /// Collapse each barrier node's vector adjoint to its scalar mean,
    /// then continue the deterministic part in scalars.
    MeanAt(&'a super::Barrier),
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    /// Path-averaged sensitivity per parameter slot.
    pub sensitivities: Vec<f64>,
    pub counters: Counters,
}
