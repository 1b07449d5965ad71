//! Path-vectorized sweeps against the scalar AD engine, closed forms, and
//! counter-based invariants.

use quantad::ad::{record, GraphBuilder, SmoothingConfig};
use quantad::market::{bs_closed_form, stream, Estimate, PathRng};
use quantad::vaad::{
    group_sensitivity_variance, layer_schedule, tree_reduce, Barrier, GroupSpec, NoiseMatrix,
    NodeId, SweepMode, VExpr, VGraph, VGraphBuilder, VaadError,
};

fn cfg() -> SmoothingConfig {
    SmoothingConfig::default()
}

/// Lognormal call payoff `(exp(mu(theta) + sigma(theta) W) - K)^+` with
/// deterministic drift and volatility chains.
struct LognormalCall {
    graph: VGraph,
    mu: NodeId,
    sig: NodeId,
    pay: NodeId,
}

const STRIKE: f64 = 1.1;

fn lognormal_call() -> LognormalCall {
    let b = VGraphBuilder::new();
    let th0 = b.next_param();
    let th1 = b.next_param();
    let mu = th0 * 1.0 - th1 * th1 * 0.5;
    let sig = th1 * 0.8 + th0 * 0.1;
    let w = b.noise(0);
    let pay = ((mu + sig * w).exp() - STRIKE).ramp();
    let graph = b.graph(&[pay]);
    LognormalCall { graph, mu: mu.node_id(), sig: sig.node_id(), pay: pay.node_id() }
}

fn gauss_noise(m: usize, cols: usize, seed: u64) -> NoiseMatrix {
    let rng = PathRng::new(seed);
    NoiseMatrix::from_fn(m, cols, |path, col| rng.normal(stream::MAIN, path as u64, col as u64))
}

const THETA: [f64; 2] = [0.04, 0.25];

#[test]
fn deterministic_slots_stay_scalar_and_noise_slots_vector() {
    let lc = lognormal_call();
    let noise = gauss_noise(512, 1, 5);
    let state = lc.graph.forward(&THETA, &noise, &cfg()).unwrap();
    assert!(state.payload(lc.mu).as_scalar().is_some());
    assert!(state.payload(lc.sig).as_scalar().is_some());
    assert!(state.payload(lc.pay).as_vector().is_some());
}

#[test]
fn graph_without_noise_is_fully_scalar() {
    let b = VGraphBuilder::new();
    let x = b.next_param();
    let y = (x * 2.0 + 1.0).exp() * x;
    let g = b.graph(&[y]);
    let noise = NoiseMatrix::from_fn(8, 0, |_, _| 0.0);
    let state = g.forward(&[0.3], &noise, &cfg()).unwrap();
    for id in [y.node_id()] {
        assert!(state.payload(id).as_scalar().is_some());
    }
    assert_eq!(state.counters.fwd_vector_ops, 0);
}

#[test]
fn single_path_matches_scalar_engine() {
    // M = 1: the vector engine degenerates to the scalar AD engine.
    let lc = lognormal_call();
    let noise = gauss_noise(1, 1, 9);
    let state = lc.graph.forward(&THETA, &noise, &cfg()).unwrap();
    let sweep = lc.graph.reverse(&state, SweepMode::Plain).unwrap();

    let b = GraphBuilder::new(3);
    let (t0, t1, w) = (b.x(0), b.x(1), b.x(2));
    let mu = t0 * 1.0 - t1 * t1 * 0.5;
    let sig = t1 * 0.8 + t0 * 0.1;
    let pay = ((mu + sig * w).exp() - STRIKE).ramp();
    let g = b.graph(&[pay]);
    let rec = record(&g, &[THETA[0], THETA[1], noise.col(0)[0]], &cfg()).unwrap();
    let grad = rec.tape.reverse_sweep(&[1.0]).unwrap();

    for j in 0..2 {
        assert!(
            (sweep.sensitivities[j] - grad[j]).abs() <= 1e-12 * (1.0 + grad[j].abs()),
            "param {j}: vector {} scalar {}",
            sweep.sensitivities[j],
            grad[j]
        );
    }
}

#[test]
fn path_averaged_sensitivities_match_scalar_engine_average() {
    let m = 4096;
    let lc = lognormal_call();
    let noise = gauss_noise(m, 1, 17);
    let state = lc.graph.forward(&THETA, &noise, &cfg()).unwrap();
    let sweep = lc.graph.reverse(&state, SweepMode::Plain).unwrap();

    let b = GraphBuilder::new(3);
    let (t0, t1, w) = (b.x(0), b.x(1), b.x(2));
    let mu = t0 * 1.0 - t1 * t1 * 0.5;
    let sig = t1 * 0.8 + t0 * 0.1;
    let pay = ((mu + sig * w).exp() - STRIKE).ramp();
    let g = b.graph(&[pay]);

    let mut sums = [0.0f64; 2];
    for i in 0..m {
        let rec = record(&g, &[THETA[0], THETA[1], noise.col(0)[i]], &cfg()).unwrap();
        let grad = rec.tape.reverse_sweep(&[1.0]).unwrap();
        sums[0] += grad[0];
        sums[1] += grad[1];
    }
    for j in 0..2 {
        let avg = sums[j] / m as f64;
        assert!(
            (sweep.sensitivities[j] - avg).abs() <= 1e-9 * (1.0 + avg.abs()),
            "param {j}: vector {} per-path avg {}",
            sweep.sensitivities[j],
            avg
        );
    }
}

#[test]
fn constant_output_has_zero_sensitivities() {
    let b = VGraphBuilder::new();
    let x = b.next_param();
    let w = b.noise(0);
    let c = b.constant(3.5) * 2.0;
    let _touch = x + w; // graph uses its inputs elsewhere
    let g = b.graph(&[c]);
    let noise = gauss_noise(64, 1, 3);
    let state = g.forward(&[1.0], &noise, &cfg()).unwrap();
    let sweep = g.reverse(&state, SweepMode::Plain).unwrap();
    assert_eq!(sweep.sensitivities, vec![0.0]);
}

#[test]
fn exact_terminal_delta_matches_black_scholes() {
    // European call under the exact lognormal terminal map; pathwise delta
    // from one reverse sweep, standard error from 10 path groups.
    let (s0, k, r, sig, t): (f64, f64, f64, f64, f64) = (40.0, 40.0, 0.06, 0.2, 1.0);
    let m = 100_000;
    let b = VGraphBuilder::new();
    let spot = b.next_param();
    let w = b.noise(0);
    let drift = (r - 0.5 * sig * sig) * t;
    let x_t = spot * ((sig * t.sqrt()) * w + drift).exp();
    let pay = (x_t - k).ramp();
    let g = b.graph(&[pay]);
    let noise = gauss_noise(m, 1, 77);

    let stats =
        group_sensitivity_variance(&g, &[s0], &noise, GroupSpec { groups: 10 }, &cfg()).unwrap();
    let disc = (-r * t as f64).exp();
    let delta = disc * stats.mean[0];
    let se = disc * stats.variance[0].sqrt();
    let bs = bs_closed_form(s0, k, r, sig, t).unwrap();
    assert!(
        (delta - bs.delta_call).abs() < 3.0 * se,
        "delta {delta} bs {} se {se}",
        bs.delta_call
    );
}

#[test]
fn mean_of_adjoints_is_exact_and_scalar_cost_is_path_independent() {
    let lc = lognormal_call();
    let mut scalar_costs = Vec::new();
    for &m in &[1_000usize, 100_000] {
        let noise = gauss_noise(m, 1, 23);
        let state = lc.graph.forward(&THETA, &noise, &cfg()).unwrap();
        let plain = lc.graph.reverse(&state, SweepMode::Plain).unwrap();
        let barrier = lc.graph.auto_barrier();
        let mean = lc.graph.reverse(&state, SweepMode::MeanAt(&barrier)).unwrap();
        for j in 0..2 {
            let (a, b) = (plain.sensitivities[j], mean.sensitivities[j]);
            assert!(
                (a - b).abs() <= 1e-12 * (1.0 + a.abs()),
                "m={m} param {j}: plain {a} mean {b}"
            );
        }
        let rev_scalar = mean.counters.rev_scalar_ops - state.counters.rev_scalar_ops;
        scalar_costs.push(rev_scalar);
    }
    assert_eq!(scalar_costs[0], scalar_costs[1], "scalar reverse cost must not scale with M");
}

#[test]
fn barrier_at_outputs_degenerates_to_plain_sweep() {
    let lc = lognormal_call();
    let noise = gauss_noise(2048, 1, 29);
    let state = lc.graph.forward(&THETA, &noise, &cfg()).unwrap();
    let plain = lc.graph.reverse(&state, SweepMode::Plain).unwrap();
    let at_out = Barrier::at_outputs();
    let degenerate = lc.graph.reverse(&state, SweepMode::MeanAt(&at_out)).unwrap();
    for j in 0..2 {
        assert_eq!(
            plain.sensitivities[j].to_bits(),
            degenerate.sensitivities[j].to_bits(),
            "param {j}"
        );
    }
}

#[test]
fn shape_mismatch_is_an_error() {
    let lc = lognormal_call();
    let noise = gauss_noise(16, 2, 1);
    assert!(matches!(
        lc.graph.forward(&THETA, &noise, &cfg()),
        Err(VaadError::ShapeMismatch { .. })
    ));
    let noise = gauss_noise(16, 1, 1);
    assert!(matches!(
        lc.graph.forward(&[0.1], &noise, &cfg()),
        Err(VaadError::ParamCount { .. })
    ));
}

#[test]
fn aggregation_layers_and_tree_totals() {
    // Fanout k needs only ceil(log2 k) aggregation layers and the pairwise
    // totals agree with sequential summation.
    for &k in &[2usize, 4, 16, 1024] {
        let b = VGraphBuilder::new();
        let x = b.next_param();
        let w = b.noise(0);
        let shared = x + w;
        let mut consumers: Vec<VExpr> = Vec::new();
        for i in 0..k {
            consumers.push(shared * (i as f64 + 1.0));
        }
        let mut acc = consumers[0];
        for c in &consumers[1..] {
            acc = acc + *c;
        }
        let g = b.graph(&[acc]);
        let sch = layer_schedule(&g);
        let expected = (k as f64).log2().ceil() as u32;
        let got = sch.agg_layers[shared.node_id().0 as usize];
        assert!(got <= expected.max(1), "k={k}: {got} layers");
        assert!(sch.total_layers <= sch.layer_bound(&g));

        let contributions: Vec<f64> =
            (0..k).map(|i| ((i * 37 + 11) % 101) as f64 * 0.013 - 0.5).collect();
        let seq: f64 = contributions.iter().sum();
        let tree = tree_reduce(&contributions);
        assert!((tree - seq).abs() <= 1e-13 * (1.0 + seq.abs()));
    }
}

#[test]
fn group_variance_tracks_per_path_variance() {
    // IID payoff: the grouped variance estimate agrees with the exact
    // per-path sample variance / M within the chi-square band.
    let lc = lognormal_call();
    let m = 10_000;
    let noise = gauss_noise(m, 1, 41);
    let stats =
        group_sensitivity_variance(&lc.graph, &THETA, &noise, GroupSpec { groups: 10 }, &cfg())
            .unwrap();

    // Per-path oracle via the scalar engine.
    let b = GraphBuilder::new(3);
    let (t0, t1, w) = (b.x(0), b.x(1), b.x(2));
    let mu = t0 * 1.0 - t1 * t1 * 0.5;
    let sig = t1 * 0.8 + t0 * 0.1;
    let pay = ((mu + sig * w).exp() - STRIKE).ramp();
    let g = b.graph(&[pay]);
    for j in 0..2 {
        let grads: Vec<f64> = (0..m)
            .map(|i| {
                let rec = record(&g, &[THETA[0], THETA[1], noise.col(0)[i]], &cfg()).unwrap();
                rec.tape.reverse_sweep(&[1.0]).unwrap()[j]
            })
            .collect();
        let per_path = Estimate::from_samples(&grads);
        let exact_var_of_mean = per_path.std_error * per_path.std_error;
        let ratio = stats.variance[j] / exact_var_of_mean;
        assert!(
            (0.5..2.0).contains(&ratio),
            "param {j}: grouped {} vs exact {} (ratio {ratio})",
            stats.variance[j],
            exact_var_of_mean
        );
        // Mean over groups equals the full-sample mean.
        assert!(
            (stats.mean[j] - per_path.value).abs() <= 1e-9 * (1.0 + per_path.value.abs()),
            "group mean {} vs full mean {}",
            stats.mean[j],
            per_path.value
        );
    }
}

#[test]
fn zero_variance_payoff_has_zero_group_variance() {
    let b = VGraphBuilder::new();
    let x = b.next_param();
    let w = b.noise(0);
    let pay = x * 2.0 + (w - w); // noise cancels exactly
    let g = b.graph(&[pay]);
    let noise = gauss_noise(1000, 1, 2);
    let stats =
        group_sensitivity_variance(&g, &[1.5], &noise, GroupSpec { groups: 10 }, &cfg()).unwrap();
    assert_eq!(stats.variance[0], 0.0);
}

#[test]
fn bad_group_counts_are_rejected() {
    let lc = lognormal_call();
    let noise = gauss_noise(1000, 1, 2);
    for groups in [0usize, 1, 3, 2000] {
        if 1000 % groups.max(1) == 0 && groups >= 2 && groups <= 1000 {
            continue;
        }
        assert!(matches!(
            group_sensitivity_variance(&lc.graph, &THETA, &noise, GroupSpec { groups }, &cfg()),
            Err(VaadError::BadGroups { .. })
        ));
    }
}

#[test]
fn results_are_bit_identical_across_thread_counts() {
    let lc = lognormal_call();
    let noise = gauss_noise(100_000, 1, 55);
    let run = || {
        let state = lc.graph.forward(&THETA, &noise, &cfg()).unwrap();
        let barrier = lc.graph.auto_barrier();
        lc.graph.reverse(&state, SweepMode::MeanAt(&barrier)).unwrap().sensitivities
    };
    let pool1 = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let pool4 = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let r1 = pool1.install(run);
    let r4 = pool4.install(run);
    for j in 0..2 {
        assert_eq!(r1[j].to_bits(), r4[j].to_bits(), "param {j}");
    }
}

#[test]
fn graph_dump_lists_kind_and_layer() {
    let lc = lognormal_call();
    let sch = layer_schedule(&lc.graph);
    let dump = lc.graph.dump(Some(&sch));
    assert!(dump.lines().count() == lc.graph.n_nodes());
    assert!(dump.contains("param"));
    assert!(dump.contains("noise"));
    assert!(dump.contains("vector"));
    assert!(dump.contains("scalar"));
}
