// scratch probe for grid cells
use quantad::american::{run_american, RegressionBasis};
use quantad::market::{PayoffKind, Scenario};
use quantad::vibrato::VibratoConfig;

fn main() {
    let cells = [
        (36.0, 0.2, 1.0, 4.46289, 0.68123, 1.820e-3, 0.06745, 6.947e-5),
        (40.0, 0.2, 1.0, 2.30565, 0.40780, 1.880e-3, 0.05954, 1.213e-4),
        (44.0, 0.4, 2.0, 5.58252, 0.28447, 1.325e-3, 0.01520, 2.162e-4),
    ];
    for (s, sig, t, p_ref, d_ref, d_se, g_ref, g_se) in cells {
        let sc = Scenario {
            spot: s, rate: 0.06, sigma: sig, strike: 40.0, maturity: t,
            steps: 50, paths: 50_000, seed: 20240, payoff: PayoffKind::AmericanPut,
            barrier_lo: None, barrier_hi: None, hazard: 0.0, lgd: 0.6,
            smoothing_a: None, groups: 10,
        };
        let t0 = std::time::Instant::now();
        let run = run_american(&sc, RegressionBasis::default(), &VibratoConfig::default()).unwrap();
        let dt = t0.elapsed().as_millis();
        println!("S={s} sig={sig} T={t}  [{dt} ms]");
        println!("  price {:.5} (se {:.4})  ref {p_ref}  diff/se {:.2}", run.price.value, run.price.std_error, (run.price.value - p_ref)/run.price.std_error.max(0.013));
        println!("  delta {:.5} (se {:.2e})  ref -{d_ref}  |d|diff/maxse {:.2}", run.delta.value, run.delta.std_error, (run.delta.value.abs() - d_ref).abs()/run.delta.std_error.max(d_se));
        println!("  gamma {:.5} (se {:.2e})  ref {g_ref}  diff/maxse {:.2}", run.gamma.value, run.gamma.std_error, (run.gamma.value - g_ref).abs()/run.gamma.std_error.max(g_se));
    }
}
