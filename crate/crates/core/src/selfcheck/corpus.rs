//! A corpus of composed smooth functions with evaluation points in safe
//! domains. Shared by the AD consistency checks and the self-check suite.

use crate::ad::{FlowGraph, GraphBuilder};

pub struct CorpusFn {
    pub name: &'static str,
    pub graph: FlowGraph,
    pub points: Vec<Vec<f64>>,
}

/// Composed smooth functions; >= 20 entries, one or more points each.
pub fn smooth_corpus() -> Vec<CorpusFn> {
    let mut fns = Vec::new();

    fns.push(CorpusFn {
        name: "cubic_poly",
        graph: {
            let b = GraphBuilder::new(1);
            let x = b.x(0);
            b.graph(&[x.powi(3) + 2.0 * x.powi(2) - x])
        },
        points: vec![vec![1.3], vec![-0.7], vec![0.2]],
    });

    fns.push(CorpusFn {
        name: "rational",
        graph: {
            let b = GraphBuilder::new(2);
            let (x, y) = (b.x(0), b.x(1));
            b.graph(&[(x * y + 1.0) / (x * x + y * y + 2.0)])
        },
        points: vec![vec![0.8, -1.2], vec![2.0, 0.5]],
    });

    fns.push(CorpusFn {
        name: "exp_of_trig",
        graph: {
            let b = GraphBuilder::new(2);
            let (x, y) = (b.x(0), b.x(1));
            b.graph(&[(x.sin() * y.cos()).exp()])
        },
        points: vec![vec![0.4, 1.1], vec![-1.0, 0.3]],
    });

    fns.push(CorpusFn {
        name: "log_sum_exp",
        graph: {
            let b = GraphBuilder::new(2);
            let (x, y) = (b.x(0), b.x(1));
            b.graph(&[(x.exp() + y.exp()).ln()])
        },
        points: vec![vec![0.5, -0.25], vec![1.5, 1.0]],
    });

    fns.push(CorpusFn {
        name: "norm3",
        graph: {
            let b = GraphBuilder::new(3);
            let (x, y, z) = (b.x(0), b.x(1), b.x(2));
            b.graph(&[(x * x + y * y + z * z + 1.0).sqrt()])
        },
        points: vec![vec![0.3, -0.8, 1.7]],
    });

    fns.push(CorpusFn {
        name: "lognormal_map",
        graph: {
            let b = GraphBuilder::new(3);
            let (spot, sig, w) = (b.x(0), b.x(1), b.x(2));
            let drift = (b.constant(0.05) - sig * sig * 0.5) * 2.0;
            b.graph(&[spot * (drift + sig * w).exp()])
        },
        points: vec![vec![100.0, 0.2, 0.35], vec![80.0, 0.4, -1.1]],
    });

    fns.push(CorpusFn {
        name: "trig_mix",
        graph: {
            let b = GraphBuilder::new(2);
            let (x, y) = (b.x(0), b.x(1));
            b.graph(&[x.sin() * y.cos() + x * y])
        },
        points: vec![vec![0.9, -0.4]],
    });

    fns.push(CorpusFn {
        name: "nested_sqrt_exp_sin",
        graph: {
            let b = GraphBuilder::new(1);
            let x = b.x(0);
            b.graph(&[(x.sin().exp() + 2.0).sqrt()])
        },
        points: vec![vec![0.6], vec![-2.1]],
    });

    fns.push(CorpusFn {
        name: "div_chain",
        graph: {
            let b = GraphBuilder::new(2);
            let (x, y) = (b.x(0), b.x(1));
            b.graph(&[x / (y * y + 1.0)])
        },
        points: vec![vec![1.1, 0.7]],
    });

    fns.push(CorpusFn {
        name: "product5",
        graph: {
            let b = GraphBuilder::new(5);
            let p = b.x(0) * b.x(1) * b.x(2) * b.x(3) * b.x(4);
            b.graph(&[p])
        },
        points: vec![vec![1.1, 0.9, -1.3, 0.5, 2.0]],
    });

    fns.push(CorpusFn {
        name: "sum_of_squares6",
        graph: {
            let b = GraphBuilder::new(6);
            let mut acc = b.x(0) * b.x(0);
            for i in 1..6 {
                acc = acc + b.x(i) * b.x(i);
            }
            b.graph(&[acc])
        },
        points: vec![vec![0.1, -0.2, 0.3, -0.4, 0.5, -0.6]],
    });

    fns.push(CorpusFn {
        name: "sincos_combination",
        graph: {
            let b = GraphBuilder::new(1);
            let x = b.x(0);
            let (s, c) = (x * 2.0).sincos();
            b.graph(&[s * 0.5 + c * c])
        },
        points: vec![vec![0.35], vec![1.25]],
    });

    fns.push(CorpusFn {
        name: "x_log_y",
        graph: {
            let b = GraphBuilder::new(2);
            let (x, y) = (b.x(0), b.x(1));
            b.graph(&[x * (y + 2.0).ln()])
        },
        points: vec![vec![1.4, 0.9]],
    });

    fns.push(CorpusFn {
        name: "gaussian_kernel",
        graph: {
            let b = GraphBuilder::new(1);
            let x = b.x(0);
            b.graph(&[(-(x * x) / 2.0).exp()])
        },
        points: vec![vec![0.75], vec![-1.5]],
    });

    fns.push(CorpusFn {
        name: "difference_of_squares_damped",
        graph: {
            let b = GraphBuilder::new(2);
            let (x, y) = (b.x(0), b.x(1));
            b.graph(&[(x + y) * (x - y) / (x * x + 1.0)])
        },
        points: vec![vec![0.8, 0.3]],
    });

    fns.push(CorpusFn {
        name: "pythagorean_identity",
        graph: {
            let b = GraphBuilder::new(1);
            let (s, c) = b.x(0).sincos();
            b.graph(&[s * s + c * c])
        },
        points: vec![vec![0.123], vec![2.7]],
    });

    fns.push(CorpusFn {
        name: "horner_two_vars",
        graph: {
            let b = GraphBuilder::new(2);
            let (x, y) = (b.x(0), b.x(1));
            let p = ((x * 0.5 + y) * x - y * 2.0) * x + y * y;
            b.graph(&[p])
        },
        points: vec![vec![1.2, -0.6]],
    });

    fns.push(CorpusFn {
        name: "softplus",
        graph: {
            let b = GraphBuilder::new(1);
            let x = b.x(0);
            b.graph(&[(x.exp() + 1.0).ln()])
        },
        points: vec![vec![0.4], vec![-1.2]],
    });

    fns.push(CorpusFn {
        name: "geometric_mean",
        graph: {
            let b = GraphBuilder::new(2);
            b.graph(&[(b.x(0) * b.x(1)).sqrt()])
        },
        points: vec![vec![2.5, 0.8]],
    });

    fns.push(CorpusFn {
        name: "logistic",
        graph: {
            let b = GraphBuilder::new(1);
            let x = b.x(0);
            b.graph(&[1.0 / ((-x).exp() + 1.0)])
        },
        points: vec![vec![0.9], vec![-0.3]],
    });

    fns.push(CorpusFn {
        name: "three_outputs",
        graph: {
            let b = GraphBuilder::new(3);
            let (a, c, u) = (b.x(0), b.x(1), b.x(2));
            let prod = a * c;
            let (v, w) = u.sincos();
            b.graph(&[prod, v, w])
        },
        points: vec![vec![2.0, 3.0, 0.5]],
    });

    fns.push(CorpusFn {
        name: "exp_ln_ladder",
        graph: {
            let b = GraphBuilder::new(1);
            let mut x = b.x(0);
            for _ in 0..5 {
                x = (x.exp() + 0.5).ln();
            }
            b.graph(&[x])
        },
        points: vec![vec![0.8]],
    });

    // Large constant offsets: derivative information is far below the value
    // scale, the regime where real-step differencing loses digits first.
    fns.push(CorpusFn {
        name: "offset_sin",
        graph: {
            let b = GraphBuilder::new(1);
            b.graph(&[1.0e3 + b.x(0).sin()])
        },
        points: vec![vec![0.5]],
    });

    fns.push(CorpusFn {
        name: "offset_cubic",
        graph: {
            let b = GraphBuilder::new(1);
            let x = b.x(0);
            b.graph(&[1.0e4 + x.powi(3)])
        },
        points: vec![vec![1.2]],
    });

    fns.push(CorpusFn {
        name: "near_critical_sin",
        graph: {
            let b = GraphBuilder::new(2);
            let (x, y) = (b.x(0), b.x(1));
            b.graph(&[x.sin() + y * y])
        },
        points: vec![vec![std::f64::consts::FRAC_PI_2 - 3.0e-5, 1.0]],
    });

    fns
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ad::{eval, SmoothingConfig};

    #[test]
    fn corpus_is_large_enough_and_evaluates() {
        let corpus = smooth_corpus();
        assert!(corpus.len() >= 20, "corpus has {} functions", corpus.len());
        let cfg = SmoothingConfig::default();
        for f in &corpus {
            for p in &f.points {
                let out = eval(&f.graph, p, &cfg).unwrap_or_else(|e| {
                    panic!("{} failed at {:?}: {e}", f.name, p);
                });
                assert!(out.iter().all(|v| v.is_finite()), "{} not finite", f.name);
            }
        }
    }
}
