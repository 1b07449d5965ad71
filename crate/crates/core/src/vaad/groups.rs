use super::sweep::{NoiseMatrix, Reduction, SweepMode};
use super::{VGraph, VaadError, VaadResult};
use crate::ad::SmoothingConfig;

/// Contiguous partition of the paths into `groups` equal blocks.
#[derive(Debug, Clone, Copy)]
pub struct GroupSpec {
    pub groups: usize,
}

#[derive(Debug, Clone)]
pub struct GroupStats {
    /// Mean over group sensitivities, per parameter.
    pub mean: Vec<f64>,
    /// Variance of the G-group mean estimator, per parameter
    /// (unbiased sample variance of the group means, divided by G).
    pub variance: Vec<f64>,
    pub per_group: Vec<Vec<f64>>,
}

/// Mean-of-adjoints sensitivities per contiguous path group, their mean,
/// and the variance estimate of the grouped estimator. The mean trick is
/// linear, so it cannot produce a variance directly; splitting the paths
/// into groups recovers one from the spread of the group sensitivities.
pub fn group_sensitivity_variance(
    g: &VGraph,
    params: &[f64],
    noise: &NoiseMatrix,
    spec: GroupSpec,
    cfg: &SmoothingConfig,
) -> VaadResult<GroupStats> {
    let m = noise.m();
    let gn = spec.groups;
    if gn < 2 || gn > m || m % gn != 0 {
        return Err(VaadError::BadGroups { groups: gn, paths: m });
    }
    let per = m / gn;
    let barrier = g.auto_barrier();
    let mut per_group = Vec::with_capacity(gn);
    for k in 0..gn {
        let block = noise.row_block(k * per, per);
        let state = g.forward(params, &block, cfg)?;
        let sweep = g.reverse_seeded(
            &state,
            &ones_seed(g, &state),
            SweepMode::MeanAt(&barrier),
            Reduction::Deterministic,
        )?;
        per_group.push(sweep.sensitivities);
    }

    let p = g.n_params();
    let mut mean = vec![0.0; p];
    for s in &per_group {
        for (m_j, v) in mean.iter_mut().zip(s) {
            *m_j += v;
        }
    }
    for v in &mut mean {
        *v /= gn as f64;
    }
    let mut variance = vec![0.0; p];
    for s in &per_group {
        for j in 0..p {
            let d = s[j] - mean[j];
            variance[j] += d * d;
        }
    }
    for v in &mut variance {
        *v /= (gn - 1) as f64; // unbiased variance of a group mean
        *v /= gn as f64; // variance of the mean over groups
    }

    Ok(GroupStats { mean, variance, per_group })
}

fn ones_seed(g: &VGraph, state: &super::VState) -> Vec<super::VPayload> {
    g.outputs()
        .iter()
        .map(|&o| match state.payload(o) {
            super::VPayload::Scalar(_) => super::VPayload::Scalar(1.0),
            super::VPayload::Vector(_) => super::VPayload::Vector(vec![1.0; state.m()]),
        })
        .collect()
}
