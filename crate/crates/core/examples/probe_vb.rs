// scratch probe: last-step redraw evaluated through the date value function
use quantad::american::{apply_policy, longstaff_schwartz, RegressionBasis};
use quantad::market::{discount_factor, simulate, stream, Estimate, PathRng, PayoffKind, Scenario, Theta};

fn main() {
    for (s, sig, t, d_ref, g_ref) in [
        (36.0, 0.2, 1.0, 0.68123, 0.06745),
        (40.0, 0.2, 1.0, 0.40780, 0.05954),
        (44.0, 0.4, 2.0, 0.28447, 0.01520),
    ] {
        let sc = Scenario {
            spot: s, rate: 0.06, sigma: sig, strike: 40.0, maturity: t,
            steps: 50, paths: 50_000, seed: 20240, payoff: PayoffKind::AmericanPut,
            barrier_lo: None, barrier_hi: None, hazard: 0.0, lgd: 0.6,
            smoothing_a: None, groups: 10,
        };
        let k = 40.0f64;
        let rng_a = PathRng::new(sc.seed);
        let rng_b = rng_a.offset(1);
        let payoff = sc.payoff_struct();
        let ba = simulate(&sc, Theta::Spot, &rng_a).unwrap();
        let fit = longstaff_schwartz(&ba, &payoff, RegressionBasis::default()).unwrap();
        let bb = simulate(&sc, Theta::Spot, &rng_b).unwrap();
        let pol = apply_policy(&fit.coeffs, &bb, &payoff);

        // value function at date tau: max(phi, C_tau) via fitted coeffs (tau<n), phi at n
        let value_at = |tau: usize, x: f64| -> f64 {
            let phi = (k - x).max(0.0);
            if tau == bb.n { return phi; }
            match &fit.coeffs.per_date[tau] {
                Some(a) => {
                    let u = x / k;
                    let c = (a[0] + a[1]*u + a[2]*u*u).max(0.0);
                    phi.max(c)
                }
                None => phi,
            }
        };

        let h = bb.h; let sqh = h.sqrt(); let r = 0.06f64;
        let m_z = 16usize; let draws = m_z/2;
        let mut samples = Vec::with_capacity(bb.m);
        for i in 0..bb.m {
            let tau = pol.tau[i];
            if tau == 0 { continue; }
            let x = bb.path(i)[tau-1];
            let y = bb.tangent(i)[tau-1];
            let mu = x*(1.0 + r*h);
            let sc_ = sig * x;
            let rw = y*(1.0+r*h);
            let sw = y*sig;
            let mut acc = 0.0;
            for d in 0..draws {
                let z = rng_b.normal(stream::INNER, i as u64, d as u64);
                let vp = value_at(tau, mu + sc_*sqh*z);
                let vm = value_at(tau, mu - sc_*sqh*z);
                let vo = value_at(tau, mu);
                acc += rw*(vp-vm)*z/(2.0*sc_*sqh) + sw*(vp-2.0*vo+vm)*(z*z-1.0)/(2.0*sc_);
            }
            samples.push(discount_factor(r, tau as f64 * h) * acc / draws as f64);
        }
        let est = Estimate::from_samples(&samples);
        println!("S={s} sig={sig} T={t}: deltaB {:.5} (se {:.2e})  ref -{d_ref}  diff/se {:.1}   [gref {g_ref}]",
            est.value, est.std_error, (est.value.abs()-d_ref).abs()/est.std_error);
    }
}
