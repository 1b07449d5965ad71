use super::complex::Cplx;
use super::dual::Dual;
use super::graph::{FlowGraph, Op};
use super::scalar::{AdScalar, SmoothingConfig};
use super::{AdError, AdResult};

/// Interpret the graph over any scalar field.
pub fn eval_with<T: AdScalar>(
    g: &FlowGraph,
    inputs: &[T],
    cfg: &SmoothingConfig,
) -> AdResult<Vec<T>> {
    if inputs.len() != g.n_inputs {
        return Err(AdError::InputLength { expected: g.n_inputs, got: inputs.len() });
    }
    let mut values = vec![T::from_re(0.0); g.n_values];
    values[..g.n_inputs].copy_from_slice(inputs);
    for &(id, c) in &g.consts {
        values[id as usize] = T::from_re(c);
    }
    for node in &g.nodes {
        let a = values[node.args[0] as usize];
        let out = node.out as usize;
        match node.op {
            Op::Add => values[out] = a.add(values[node.args[1] as usize]),
            Op::Sub => values[out] = a.sub(values[node.args[1] as usize]),
            Op::Mul => values[out] = a.mul(values[node.args[1] as usize]),
            Op::Div => values[out] = a.div(values[node.args[1] as usize])?,
            Op::Neg => values[out] = a.neg(),
            Op::Exp => values[out] = a.exp(),
            Op::Ln => values[out] = a.ln()?,
            Op::Sqrt => values[out] = a.sqrt()?,
            Op::Sin => values[out] = a.sin(),
            Op::Cos => values[out] = a.cos(),
            Op::SinCos => {
                values[out] = a.sin();
                values[out + 1] = a.cos();
            }
            Op::Ramp => values[out] = a.ramp(cfg),
            Op::Heaviside => values[out] = a.heaviside(cfg),
            Op::DiracA => values[out] = a.dirac(cfg),
            Op::Max => values[out] = a.binary_max(values[node.args[1] as usize])?,
        }
    }
    Ok(g.outputs.iter().map(|&v| values[v as usize]).collect())
}

/// Plain primal evaluation.
pub fn eval(g: &FlowGraph, x: &[f64], cfg: &SmoothingConfig) -> AdResult<Vec<f64>> {
    eval_with::<f64>(g, x, cfg)
}

fn refuse_max(g: &FlowGraph) -> AdResult<()> {
    if g.uses_max {
        Err(AdError::MaxNotDifferentiable)
    } else {
        Ok(())
    }
}

/// One dual-number pass: `(f(x), J_f(x) . dx)`, exact for smooth primitives.
pub fn forward_directional(
    g: &FlowGraph,
    x: &[f64],
    dx: &[f64],
    cfg: &SmoothingConfig,
) -> AdResult<(Vec<f64>, Vec<f64>)> {
    refuse_max(g)?;
    if dx.len() != g.n_inputs {
        return Err(AdError::InputLength { expected: g.n_inputs, got: dx.len() });
    }
    let duals: Vec<Dual> = x.iter().zip(dx).map(|(&v, &t)| Dual::new(v, t)).collect();
    let out = eval_with::<Dual>(g, &duals, cfg)?;
    let values = out.iter().map(|d| d.value).collect();
    let tangents = out.iter().map(|d| d.tangent).collect();
    Ok((values, tangents))
}

/// Full Jacobian from `k` forward passes over basis directions;
/// row `i`, column `j` is d out_i / d x_j.
pub fn forward_jacobian(
    g: &FlowGraph,
    x: &[f64],
    cfg: &SmoothingConfig,
) -> AdResult<Vec<Vec<f64>>> {
    refuse_max(g)?;
    let k = g.n_inputs;
    let m = g.n_outputs();
    let mut jac = vec![vec![0.0; k]; m];
    let mut dx = vec![0.0; k];
    for j in 0..k {
        dx[j] = 1.0;
        let (_, tangents) = forward_directional(g, x, &dx, cfg)?;
        for i in 0..m {
            jac[i][j] = tangents[i];
        }
        dx[j] = 0.0;
    }
    Ok(jac)
}

/// `Im f(x + i da e_j) / da` for every output: first derivative free of
/// subtractive cancellation.
pub fn complex_step_derivative(
    g: &FlowGraph,
    x: &[f64],
    j: usize,
    da: f64,
    cfg: &SmoothingConfig,
) -> AdResult<Vec<f64>> {
    if !(da > 0.0) {
        return Err(AdError::InvalidStep(da));
    }
    refuse_max(g)?;
    let mut z: Vec<Cplx> = x.iter().map(|&v| Cplx::from_re(v)).collect();
    z[j].im = da;
    let out = eval_with::<Cplx>(g, &z, cfg)?;
    Ok(out.iter().map(|c| c.im / da).collect())
}

/// Complex-step gradient of a scalar-output graph: one complex pass per input.
pub fn complex_step_gradient(
    g: &FlowGraph,
    x: &[f64],
    da: f64,
    cfg: &SmoothingConfig,
) -> AdResult<Vec<f64>> {
    let mut grad = vec![0.0; g.n_inputs];
    for (j, gj) in grad.iter_mut().enumerate() {
        *gj = complex_step_derivative(g, x, j, da, cfg)?[0];
    }
    Ok(grad)
}

/// Tangent of the graph evaluated at a complex point: the dual pass runs over
/// `Dual<Cplx>`. Used to complex-step a first-derivative program, e.g. for
/// second derivatives of kinked payoffs.
pub fn tangent_at_complex(
    g: &FlowGraph,
    z: &[Cplx],
    dz: &[Cplx],
    cfg: &SmoothingConfig,
) -> AdResult<Vec<Cplx>> {
    refuse_max(g)?;
    if dz.len() != g.n_inputs {
        return Err(AdError::InputLength { expected: g.n_inputs, got: dz.len() });
    }
    let duals: Vec<Dual<Cplx>> = z.iter().zip(dz).map(|(&v, &t)| Dual::new(v, t)).collect();
    let out = eval_with::<Dual<Cplx>>(g, &duals, cfg)?;
    Ok(out.iter().map(|d| d.tangent).collect())
}
