use super::eval::eval;
use super::graph::FlowGraph;
use super::scalar::SmoothingConfig;
use super::{AdError, AdResult};

/// Central first difference `(f(x + h e_j) - f(x - h e_j)) / 2h` for every
/// output. Truncation O(h^2), round-off O(eps/h).
pub fn central_difference(
    g: &FlowGraph,
    x: &[f64],
    j: usize,
    h: f64,
    cfg: &SmoothingConfig,
) -> AdResult<Vec<f64>> {
    if !(h > 0.0) {
        return Err(AdError::InvalidStep(h));
    }
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    xp[j] += h;
    xm[j] -= h;
    let fp = eval(g, &xp, cfg)?;
    let fm = eval(g, &xm, cfg)?;
    Ok(fp.iter().zip(&fm).map(|(p, m)| (p - m) / (2.0 * h)).collect())
}

/// Three-point second difference `(f(x+h) - 2 f(x) + f(x-h)) / h^2`.
///
/// Truncation O(h^2) but round-off O(eps/h^2): both numerator and
/// denominator vanish as h shrinks, so the estimate is unstable in h and
/// blows up to O(1/h) at kinks (a smeared Dirac mass).
pub fn central_second_difference(
    g: &FlowGraph,
    x: &[f64],
    j: usize,
    h: f64,
    cfg: &SmoothingConfig,
) -> AdResult<Vec<f64>> {
    if !(h > 0.0) {
        return Err(AdError::InvalidStep(h));
    }
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    xp[j] += h;
    xm[j] -= h;
    let fp = eval(g, &xp, cfg)?;
    let f0 = eval(g, x, cfg)?;
    let fm = eval(g, &xm, cfg)?;
    Ok(fp
        .iter()
        .zip(&f0)
        .zip(&fm)
        .map(|((p, c), m)| (p - 2.0 * c + m) / (h * h))
        .collect())
}
