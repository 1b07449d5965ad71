//! Property tests on randomized graphs: the mean-of-adjoints checkpoint is
//! exact, and layered schedules respect the logarithmic aggregation bound.

use proptest::prelude::*;
use quantad::ad::SmoothingConfig;
use quantad::market::{stream, PathRng};
use quantad::vaad::{layer_schedule, NoiseMatrix, SweepMode, VExpr, VGraph, VGraphBuilder};

#[derive(Debug, Clone)]
struct OpPick {
    op: u8,
    a: u16,
    b: u16,
}

fn recipe() -> impl Strategy<Value = Vec<OpPick>> {
    prop::collection::vec(
        (0u8..7, any::<u16>(), any::<u16>()).prop_map(|(op, a, b)| OpPick { op, a, b }),
        1..60,
    )
}

/// Build a random, domain-safe graph over two parameters and two noise
/// columns.
fn build(recipe: &[OpPick]) -> VGraph {
    let b = VGraphBuilder::new();
    let mut avail: Vec<VExpr> = vec![b.next_param(), b.next_param(), b.noise(0), b.noise(1)];
    for pick in recipe {
        let x = avail[pick.a as usize % avail.len()];
        let y = avail[pick.b as usize % avail.len()];
        let node = match pick.op {
            0 => x + y,
            1 => x - y,
            2 => x * y,
            3 => -x,
            4 => x.sin(),
            5 => x.cos(),
            _ => x.ramp(),
        };
        avail.push(node);
    }
    let out = *avail.last().unwrap();
    b.graph(&[out])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mean_checkpoint_is_exact_on_random_graphs(r in recipe(), seed in 0u64..1000) {
        let g = build(&r);
        let rng = PathRng::new(seed);
        let noise = NoiseMatrix::from_fn(256, 2, |p, c| {
            rng.normal(stream::MAIN, p as u64, c as u64)
        });
        let cfg = SmoothingConfig::default();
        let params = [0.7, -0.3];
        let state = g.forward(&params, &noise, &cfg).unwrap();
        let plain = g.reverse(&state, SweepMode::Plain).unwrap();
        let barrier = g.auto_barrier();
        let mean = g.reverse(&state, SweepMode::MeanAt(&barrier)).unwrap();
        for j in 0..2 {
            let (a, b) = (plain.sensitivities[j], mean.sensitivities[j]);
            prop_assert!(
                (a - b).abs() <= 1e-12 * (1.0 + a.abs()),
                "param {}: plain {} mean {}", j, a, b
            );
        }
    }

    #[test]
    fn layer_schedule_respects_bounds_on_random_dags(r in recipe()) {
        let g = build(&r);
        let sch = layer_schedule(&g);
        prop_assert!(sch.total_layers <= sch.layer_bound(&g));
        // Forward layers are strictly increasing along every edge.
        let dump = g.dump(Some(&sch));
        for (i, line) in dump.lines().enumerate() {
            let cols: Vec<&str> = line.split(' ').collect();
            let layer: u32 = cols[4].parse().unwrap();
            if cols[2] != "-" {
                for p in cols[2].split(',') {
                    let p: usize = p.parse().unwrap();
                    let parent_layer: u32 = dump
                        .lines()
                        .nth(p)
                        .unwrap()
                        .split(' ')
                        .nth(4)
                        .unwrap()
                        .parse()
                        .unwrap();
                    prop_assert!(parent_layer < layer, "edge {}->{} layering", p, i);
                }
            }
        }
    }
}
