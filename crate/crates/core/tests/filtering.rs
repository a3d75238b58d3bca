mod support;

use std::f64::consts::PI;

use afrelay_core::filtering::{
    stratified_resample, Genie, KalmanStat, Particle, ParticleSystem, RbsirFilter,
};
use afrelay_core::math::logsumexp;
use afrelay_core::model::{
    jakes_step, log_obs_density, simulate_frame, Frame, FrameConfig, NoiseConfig, RelayFunction,
    StaticParams,
};
use afrelay_core::rng::{complex_normal, substream, Stream};
use afrelay_core::ComplexSample;
use support::oracles::{gauss_hermite, genie_h_log_evidence, grid_posterior, kalman_log_evidence};

fn frame(t: usize, relays: usize, noise: NoiseConfig, relay: RelayFunction, seed: u64) -> Frame {
    let cfg = FrameConfig::new(t, relays, 0.0).unwrap();
    let p = StaticParams::uniform(relays, 0.95, 0.95).unwrap();
    simulate_frame(&p, &cfg, &noise, &relay, &mut substream(seed, &[])).unwrap()
}

fn pairs(zs: &[ComplexSample]) -> Vec<(f64, f64)> {
    zs.iter().map(|z| (z.re, z.im)).collect()
}

#[test]
fn kalman_update_matches_grid_integration() {
    let cases = [
        ((0.3, -0.2), 0.8, (0.7, 0.4), (0.5, 0.1), 0.5),
        ((0.0, 0.0), 1.0, (1.0, 0.0), (-0.4, 0.9), 0.2),
        ((-0.5, 0.5), 0.6, (0.2, -1.1), (1.0, 0.3), 1.5),
    ];
    for (mu, sigma, c, y, s2v) in cases {
        let prior = KalmanStat { mu: ComplexSample::new(mu.0, mu.1), sigma };
        let (post, _) = prior
            .update(ComplexSample::new(y.0, y.1), ComplexSample::new(c.0, c.1), s2v)
            .unwrap();
        let (mean, var) = grid_posterior(mu, sigma, c, y, s2v, 0.01);
        assert!((post.mu.re - mean.0).abs() < 1e-3 && (post.mu.im - mean.1).abs() < 1e-3);
        assert!((post.sigma - var).abs() < 1e-3, "{} vs {var}", post.sigma);
    }
}

#[test]
fn gauss_hermite_rule_integrates_moments() {
    let (x, w) = gauss_hermite(10);
    let m0: f64 = w.iter().sum();
    let m2: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
    let m4: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(4)).sum();
    assert!((m0 - PI.sqrt()).abs() < 1e-12);
    assert!((m2 - PI.sqrt() / 2.0).abs() < 1e-12);
    assert!((m4 - 3.0 * PI.sqrt() / 4.0).abs() < 1e-12);
}

#[test]
fn full_genie_evidence_is_the_exact_kalman_evidence() {
    let noise = NoiseConfig::from_snr_db(5.0);
    let relay = RelayFunction::power_normalized(&noise, 1.0);
    let f = frame(40, 2, noise, relay, 21);
    let truth = f.truth.clone().unwrap();
    let genie = Genie { h: Some(truth.path.h.clone()), w: Some(truth.path.w.clone()) };
    let params = StaticParams::uniform(2, 0.9, 0.8).unwrap();
    let out = RbsirFilter::new(20)
        .unwrap()
        .run_with_genie(&f, &params, &genie, &mut substream(1, &[]))
        .unwrap();
    let mut expected = 0.0;
    for l in 0..2 {
        let c: Vec<(f64, f64)> = (0..40)
            .map(|t| {
                let z = relay.apply(f.config.pilots[t] * truth.path.h.get(l, t) + truth.path.w.get(l, t));
                (z.re, z.im)
            })
            .collect();
        let e = kalman_log_evidence(&pairs(f.y.row(l)), &c, 0.8, 1.0, noise.sigma2_v);
        assert!((out.relay_log_likelihoods[l] - e).abs() < 1e-10);
        expected += e;
    }
    assert!((out.log_marginal_likelihood - expected).abs() < 1e-10);
    assert_eq!(out.resample_count, 0);
}

#[test]
fn genie_h_evidence_matches_quadrature() {
    let noise = NoiseConfig::from_snr_db(5.0);
    let f = frame(3, 1, noise, RelayFunction::Identity, 22);
    let truth = f.truth.clone().unwrap();
    let beta = 0.95;
    let params = StaticParams::uniform(1, 0.95, beta).unwrap();
    let genie = Genie { h: Some(truth.path.h.clone()), w: None };
    let out = RbsirFilter::new(1_000_000)
        .unwrap()
        .run_with_genie(&f, &params, &genie, &mut substream(2, &[]))
        .unwrap();
    let (y, s, h) = (pairs(f.y.row(0)), pairs(&f.config.pilots), pairs(truth.path.h.row(0)));
    let exact = genie_h_log_evidence(&y, &s, &h, 1.0, beta, (noise.sigma2_w, noise.sigma2_v), 14);
    let coarse = genie_h_log_evidence(&y, &s, &h, 1.0, beta, (noise.sigma2_w, noise.sigma2_v), 12);
    assert!((exact - coarse).abs() < 1e-4, "quadrature not converged: {exact} vs {coarse}");
    let rel = (out.log_marginal_likelihood - exact).exp() - 1.0;
    assert!(rel.abs() < 0.005, "relative error {rel}");
}

#[test]
fn flat_likelihood_limit() {
    let noise = NoiseConfig::new(0.1, 1e6, 1.0, 1.0).unwrap();
    let relay = RelayFunction::power_normalized(&noise, 1.0);
    let f = frame(100, 2, noise, relay, 23);
    let params = StaticParams::uniform(2, 0.95, 0.95).unwrap();
    let out = RbsirFilter::new(200).unwrap().run(&f, &params, &mut substream(3, &[])).unwrap();
    let avg_c = relay.gain().powi(2) * (noise.sigma2_h + noise.sigma2_w);
    let var = avg_c * noise.sigma2_g + noise.sigma2_v;
    let expected: f64 =
        f.y.as_slice().iter().map(|y| -(PI * var).ln() - y.norm_sqr() / var).sum();
    assert!((out.log_marginal_likelihood / expected - 1.0).abs() < 0.01);
    assert_eq!(out.resample_count, 0);
    assert!(out.ess_trace.iter().flatten().all(|&e| e > 0.999 * 200.0));
}

#[test]
fn noiseless_path_reproduces_the_observations() {
    let noise = NoiseConfig::new(1e-6, 1e-6, 1.0, 1.0).unwrap();
    let f = frame(100, 1, noise, RelayFunction::Identity, 24);
    let params = StaticParams::uniform(1, 0.95, 0.95).unwrap();
    let out = RbsirFilter::new(1000).unwrap().run(&f, &params, &mut substream(4, &[])).unwrap();
    let (mut err, mut power) = (0.0, 0.0);
    for t in 0..100 {
        let y = f.y.get(0, t);
        err += (out.path.h.get(0, t) * out.path.g.get(0, t) - y).norm_sqr();
        power += y.norm_sqr();
    }
    assert!((err / power).sqrt() < 0.1, "relative RMS {}", (err / power).sqrt());
}

#[test]
fn likelihood_estimate_is_unbiased() {
    let noise = NoiseConfig::from_snr_db(10.0);
    let relay = RelayFunction::power_normalized(&noise, 1.0);
    let f = frame(10, 1, noise, relay, 25);
    let params = StaticParams::uniform(1, 0.95, 0.95).unwrap();
    let reference = RbsirFilter::new(100_000)
        .unwrap()
        .run(&f, &params, &mut substream(5, &[]))
        .unwrap()
        .log_marginal_likelihood;
    let mut filter = RbsirFilter::new(100).unwrap();
    let mut rng = substream(6, &[]);
    let ratios: Vec<f64> = (0..200)
        .map(|_| (filter.run(&f, &params, &mut rng).unwrap().log_marginal_likelihood - reference).exp())
        .collect();
    let mean = ratios.iter().sum::<f64>() / 200.0;
    let sd = (ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / 199.0).sqrt();
    assert!((mean - 1.0).abs() < 3.0 * sd / 200f64.sqrt(), "mean ratio {mean}, sd {sd}");
}

/// Bootstrap filter over `(h, g, w)` that samples `g` from its prior
/// instead of marginalising it.
fn plain_sir_log_likelihood(f: &Frame, alpha: f64, beta: f64, n: usize, rng: &mut Stream) -> f64 {
    let noise = f.noise;
    let mut h: Vec<ComplexSample> = (0..n).map(|_| complex_normal(rng, 1.0)).collect();
    let mut g: Vec<ComplexSample> = (0..n).map(|_| complex_normal(rng, 1.0)).collect();
    let mut lw = vec![-(n as f64).ln(); n];
    let mut ll = 0.0;
    for t in 0..f.t() {
        if t > 0 {
            for i in 0..n {
                h[i] = jakes_step(h[i], alpha, complex_normal(rng, 1.0));
                g[i] = jakes_step(g[i], beta, complex_normal(rng, 1.0));
            }
        }
        for i in 0..n {
            let w = complex_normal(rng, noise.sigma2_w);
            lw[i] += log_obs_density(f.y.get(0, t), h[i], g[i], w, f.config.pilots[t], &f.relay, noise.sigma2_v)
                .unwrap();
        }
        let lse = logsumexp(&lw);
        ll += lse;
        lw.iter_mut().for_each(|x| *x -= lse);
        let ess = 1.0 / lw.iter().map(|x| (2.0 * x).exp()).sum::<f64>();
        if ess < 0.8 * n as f64 {
            let weights: Vec<f64> = lw.iter().map(|x| x.exp()).collect();
            let idx = stratified_resample(&weights, rng).unwrap();
            h = idx.iter().map(|&a| h[a]).collect();
            g = idx.iter().map(|&a| g[a]).collect();
            lw.fill(-(n as f64).ln());
        }
    }
    ll
}

fn variance(xs: &[f64]) -> f64 {
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

#[test]
fn rao_blackwellisation_reduces_variance() {
    let noise = NoiseConfig::from_snr_db(15.0);
    let relay = RelayFunction::power_normalized(&noise, 1.0);
    let f = frame(50, 1, noise, relay, 26);
    let params = StaticParams::uniform(1, 0.95, 0.95).unwrap();
    let mut rng = substream(7, &[]);
    let mut filter = RbsirFilter::new(100).unwrap();
    let rb: Vec<f64> = (0..100)
        .map(|_| filter.run(&f, &params, &mut rng).unwrap().log_marginal_likelihood)
        .collect();
    let plain: Vec<f64> = (0..100).map(|_| plain_sir_log_likelihood(&f, 0.95, 0.95, 100, &mut rng)).collect();
    assert!(variance(&rb) < variance(&plain), "{} vs {}", variance(&rb), variance(&plain));
}

#[test]
fn estimate_spread_shrinks_with_more_particles() {
    let noise = NoiseConfig::from_snr_db(15.0);
    let relay = RelayFunction::power_normalized(&noise, 1.0);
    let f = frame(100, 1, noise, relay, 27);
    let params = StaticParams::uniform(1, 0.95, 0.95).unwrap();
    let mut rng = substream(8, &[]);
    let spread: Vec<f64> = [10, 100, 1000]
        .iter()
        .map(|&n| {
            let mut filter = RbsirFilter::new(n).unwrap();
            let lls: Vec<f64> = (0..30)
                .map(|_| filter.run(&f, &params, &mut rng).unwrap().log_marginal_likelihood)
                .collect();
            assert!(lls.iter().all(|l| l.is_finite()));
            variance(&lls).sqrt()
        })
        .collect();
    assert!(spread[0] > spread[1] && spread[1] > spread[2], "{spread:?}");
}

#[test]
fn returned_path_follows_stored_ancestry() {
    let noise = NoiseConfig::from_snr_db(5.0);
    let relay = RelayFunction::power_normalized(&noise, 1.0);
    let f = frame(60, 1, noise, relay, 28);
    let params = StaticParams::uniform(1, 0.9, 0.9).unwrap();
    let mut filter = RbsirFilter::new(50).unwrap();
    for seed in 0..5 {
        let out = filter.run(&f, &params, &mut substream(9, &[seed])).unwrap();
        assert!(out.resample_count > 0);
        let sys = filter.system();
        let mut k = out.lineage_ends[0];
        for t in (0..60).rev() {
            let p = sys.stored(t, k);
            assert_eq!(out.path.h.get(0, t), p.h);
            assert_eq!(out.path.w.get(0, t), p.w);
            k = p.ancestor as usize;
        }
    }
}

#[test]
fn propagation_statistics() {
    let noise = NoiseConfig::from_snr_db(10.0);
    let mut rng = substream(10, &[]);
    let start: Vec<Particle> = (0..1000)
        .map(|i| Particle {
            h: complex_normal(&mut rng, 1.0),
            w: ComplexSample::ZERO,
            kalman: KalmanStat { mu: ComplexSample::new(0.2, 0.0), sigma: 0.5 },
            ancestor: i,
        })
        .collect();
    let mut sys = ParticleSystem::from_particles(start.clone());
    sys.propagate(0.95, 0.95, &noise, &mut rng);
    let var = sys.particles().iter().map(|p| p.h.norm_sqr()).sum::<f64>() / 1000.0;
    assert!((var - 1.0).abs() < 0.1, "{var}");
    for p in sys.particles() {
        assert!((p.kalman.sigma - 0.548_75).abs() < 1e-12);
        assert!((p.kalman.mu.re - 0.19).abs() < 1e-12);
    }

    let frozen = NoiseConfig::new(1e-24, 1.0, 1.0, 1.0).unwrap();
    let mut sys = ParticleSystem::from_particles(start.clone());
    sys.propagate(1.0 - 1e-12, 0.95, &frozen, &mut rng);
    for (p, q) in sys.particles().iter().zip(&start) {
        assert!((p.h - q.h).abs() < 1e-5);
        assert!(p.w.abs() < 1e-10);
    }
}

#[test]
fn stratified_counts_are_unbiased() {
    let weights = [0.5, 0.3, 0.2];
    let trials = 300_000;
    let mut rng = substream(11, &[]);
    let mut counts = [0usize; 3];
    for _ in 0..trials {
        for i in stratified_resample(&weights, &mut rng).unwrap() {
            counts[i] += 1;
        }
    }
    for (c, w) in counts.iter().zip(weights) {
        let mean = *c as f64 / trials as f64;
        assert!((mean / (3.0 * w) - 1.0).abs() < 0.005, "{mean} vs {}", 3.0 * w);
    }
}
