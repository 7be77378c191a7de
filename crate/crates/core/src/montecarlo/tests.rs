use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use super::*;
use crate::config::Preset;
use crate::correlator::{correlate_multistop, HistogramConfig, Mode};
use crate::detection::DetectorModel;
use crate::dynamics::{collection_operator, g2, steady_state, CorrelationSeries, Normalization, SeriesKind};
use crate::interference::average_over;
use crate::ion_model::{Liouvillian, SystemConfig};
use crate::linalg::ZERO;

const GAMMA: f64 = 100.0;
const PI_ONLY: [Complex64; 3] = [ZERO, Complex64::new(1.0, 0.0), ZERO];

fn traj(duration_s: f64, seed: u64) -> TrajectoryConfig {
    TrajectoryConfig::new(duration_s, seed, 1).unwrap()
}

fn poisson_stream(rate_per_s: f64, duration_ps: u64, origin: Origin, seed: u64) -> Vec<PhotonRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let exp = Exp::new(rate_per_s / PS_PER_S).unwrap();
    let mut t = 0.0;
    let mut out = Vec::new();
    loop {
        t += exp.sample(&mut rng);
        if t >= duration_ps as f64 {
            return out;
        }
        out.push(PhotonRecord {
            time_ps: t as u64,
            channel: origin.input_channel(),
            origin,
        });
    }
}

fn g1_exp(tau_c_ns: f64, max_ns: f64) -> CorrelationSeries {
    let tau: Vec<f64> = (0..=(max_ns * 10.0) as usize).map(|i| i as f64 * 0.1).collect();
    let v = tau.iter().map(|t| Complex64::new((-t / tau_c_ns).exp(), 0.0)).collect();
    CorrelationSeries::new_complex(SeriesKind::G1, Normalization::Normalized, tau, v).unwrap()
}

fn chi2_per_ndf(counts: &[u64], expected: &[f64]) -> f64 {
    let chi2: f64 = counts
        .iter()
        .zip(expected)
        .map(|(&c, &e)| (c as f64 - e).powi(2) / e)
        .sum();
    chi2 / counts.len() as f64
}

#[test]
fn undriven_ion_emits_nothing() {
    let cfg = SystemConfig::two_level(GAMMA, 0.0, 0.0);
    let s = mcwf_photon_stream(&cfg, &PI_ONLY, &traj(1e-3, 1), Origin::Ion1).unwrap();
    assert!(s.is_empty());
}

#[test]
fn streams_are_deterministic_per_seed_and_ion() {
    let cfg = Preset::Barium.system();
    let w = Preset::Barium.document().detection.collection_weights;
    let a = mcwf_photon_stream(&cfg, &w, &traj(2e-4, 11), Origin::Ion1).unwrap();
    let b = mcwf_photon_stream(&cfg, &w, &traj(2e-4, 11), Origin::Ion1).unwrap();
    let c = mcwf_photon_stream(&cfg, &w, &traj(2e-4, 12), Origin::Ion1).unwrap();
    let d = mcwf_photon_stream(&cfg, &w, &traj(2e-4, 11), Origin::Ion2).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b);
    assert_ne!(times(&a), times(&c));
    assert_ne!(times(&a), times(&d));
    assert!(a.iter().all(|r| r.channel == Channel::I1 && r.origin == Origin::Ion1));
    assert!(d.iter().all(|r| r.channel == Channel::I2 && r.origin == Origin::Ion2));
    check_sorted(&a, "a").unwrap();
}

#[test]
fn photon_rate_matches_steady_state() {
    let cases = [
        (SystemConfig::two_level(GAMMA, GAMMA, 0.0), PI_ONLY, 3.0),
        // slow optical pumping bunches the counts; allow for the excess variance
        (Preset::Barium.system(), Preset::Barium.document().detection.collection_weights, 5.0),
    ];
    for (cfg, w, nsigma) in cases {
        let l = Liouvillian::from_config(&cfg).unwrap();
        let rho = steady_state(&l).unwrap();
        let sigma = collection_operator(&cfg, &w).unwrap();
        let rate_per_us = (sigma.adjoint() * &sigma * rho.matrix()).trace().re;
        let t = 0.01;
        let n = mcwf_photon_stream(&cfg, &w, &traj(t, 3), Origin::Ion1).unwrap().len() as f64;
        let expected = rate_per_us * 1e6 * t;
        assert!(
            (n - expected).abs() < nsigma * expected.sqrt(),
            "{n} photons, expected {expected}"
        );
    }
}

#[test]
fn doubling_duration_doubles_counts() {
    let cfg = SystemConfig::two_level(GAMMA, 2.0 * GAMMA, 0.0);
    let short = mcwf_photon_stream(&cfg, &PI_ONLY, &traj(5e-3, 9), Origin::Ion1).unwrap().len() as f64;
    let long = mcwf_photon_stream(&cfg, &PI_ONLY, &traj(1e-2, 9), Origin::Ion1).unwrap().len() as f64;
    let sigma = (long + 4.0 * short).sqrt();
    assert!((long - 2.0 * short).abs() < 4.0 * sigma, "{short} vs {long}");
}

#[test]
fn two_level_stream_reproduces_model_g2() {
    let cfg = SystemConfig::two_level(GAMMA, GAMMA, 0.0);
    let duration = 0.035;
    let stream = mcwf_photon_stream(&cfg, &PI_ONLY, &traj(duration, 21), Origin::Ion1).unwrap();
    assert!(stream.len() >= 1_000_000, "{}", stream.len());

    // random split, as behind a beam splitter
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for r in &stream {
        if rng.random::<bool>() {
            a.push(r.time_ps)
        } else {
            b.push(r.time_ps)
        }
    }
    let hc = HistogramConfig::new(1.0, 50.0, Mode::Multistop).unwrap();
    let h = correlate_multistop(&a, &b, &hc, duration).unwrap();

    let l = Liouvillian::from_config(&cfg).unwrap();
    let rho = steady_state(&l).unwrap();
    let sigma = collection_operator(&cfg, &PI_ONLY).unwrap();
    let tau: Vec<f64> = (0..=520).map(|i| i as f64 * 0.1).collect();
    let model = g2(&l, &rho, &sigma, &tau).unwrap();
    let scale = a.len() as f64 * b.len() as f64 * hc.bin_ns() * 1e-9 / duration;
    let expected: Vec<f64> = h
        .bin_centers_ns
        .iter()
        .map(|&c| scale * average_over(&model, c - 0.5, c + 0.5).unwrap())
        .collect();
    let r = chi2_per_ndf(&h.counts, &expected);
    assert!((0.5..=1.5).contains(&r), "χ²/ndf = {r}");
}

#[test]
fn window_follows_threshold() {
    let g1 = g1_exp(2.0, 40.0);
    // |g1|² = e^{-τ} < 1e-3 beyond τ = 6.91 ns; window ends at the next sample
    assert_eq!(interference_window_ps(&g1).unwrap(), 7000);
    assert!(interference_window_ps(&g1_exp(20.0, 40.0)).is_err());
    let flat = CorrelationSeries::new_complex(
        SeriesKind::G1,
        Normalization::Normalized,
        vec![0.0, 1.0],
        vec![Complex64::new(0.0, 0.0); 2],
    )
    .unwrap();
    assert_eq!(interference_window_ps(&flat).unwrap(), 0);
}

#[test]
fn orthogonal_polarisations_never_interfere() {
    let dur = 20_000_000_000;
    let s1 = poisson_stream(5e6, dur, Origin::Ion1, 1);
    let s2 = poisson_stream(5e6, dur, Origin::Ion2, 2);
    let r = route(&s1, &s2, 90.0, &g1_exp(3.0, 60.0), 7).unwrap();
    assert_eq!(r.vetoed, 0);
    assert_eq!(r.i3.len() + r.i4.len(), s1.len() + s2.len());
    let r0 = route(&s1, &s2, 0.0, &g1_exp(3.0, 60.0), 7).unwrap();
    assert!(r0.vetoed > 0);
    assert_eq!(r0.i3.len() + r0.i4.len() + r0.vetoed, s1.len() + s2.len());
    check_sorted(&r0.i3, "i3").unwrap();
    check_sorted(&r0.i4, "i4").unwrap();
    assert!(route(&s1, &s2, 95.0, &g1_exp(3.0, 60.0), 7).is_err());
}

#[test]
fn veto_reproduces_the_dip_for_uncorrelated_emitters() {
    // two Poisson emitters: g2tot(τ, 0°) = 1 - ½|g1(τ)|²
    let tau_c = 4.0;
    let dur = 4_000_000_000_000u64;
    let s1 = poisson_stream(1e6, dur, Origin::Ion1, 31);
    let s2 = poisson_stream(1e6, dur, Origin::Ion2, 32);
    let r = route(&s1, &s2, 0.0, &g1_exp(tau_c, 60.0), 33).unwrap();
    let hc = HistogramConfig::new(1.0, 20.0, Mode::Multistop).unwrap();
    let (a, b) = (times(&r.i3), times(&r.i4));
    let duration = dur as f64 / PS_PER_S;
    let h = correlate_multistop(&a, &b, &hc, duration).unwrap();
    let scale = a.len() as f64 * b.len() as f64 * 1e-9 / duration;
    let expected: Vec<f64> = h
        .bin_centers_ns
        .iter()
        .map(|&c| {
            // bin average of e^{-2|τ|/τc}
            let f = |x: f64| x.signum() * (1.0 - (-2.0 * x.abs() / tau_c).exp()) * tau_c / 2.0;
            let avg = (f(c + 0.5) - f(c - 0.5)) / 1.0;
            scale * (1.0 - 0.5 * avg)
        })
        .collect();
    let r = chi2_per_ndf(&h.counts, &expected);
    assert!(r < 2.0, "χ²/ndf = {r}");
    let z = h.zero_bin();
    assert!((h.g2[z] - expected[z] / scale).abs() < 4.0 * h.stderr[z]);
}

#[test]
fn same_ion_pairs_are_untouched_by_polarisation() {
    let dur = 2_000_000_000_000u64;
    let s1 = poisson_stream(1e6, dur, Origin::Ion1, 41);
    let g1 = g1_exp(4.0, 60.0);
    let r0 = route(&s1, &[], 0.0, &g1, 5).unwrap();
    let r90 = route(&s1, &[], 90.0, &g1, 5).unwrap();
    assert_eq!(r0, r90);
    assert_eq!(r0.vetoed, 0);
}

#[test]
fn detection_bookkeeping() {
    let dur = 1_000_000_000_000u64;
    let port: Vec<PhotonRecord> = poisson_stream(2e5, dur, Origin::Ion1, 51)
        .into_iter()
        .map(|mut r| {
            r.channel = Channel::I3;
            r
        })
        .collect();
    let mut rng = rng_for(1, 4);
    let ideal = DetectorModel::ideal();
    assert_eq!(apply_detection(&port, &ideal, 0.0, dur, &mut rng).unwrap(), port);

    let half = DetectorModel::new(0.5, 0.0, 0.0, 0.0).unwrap();
    let kept = apply_detection(&port, &half, 0.0, dur, &mut rng).unwrap().len() as f64;
    let n = port.len() as f64;
    assert!((kept - 0.5 * n).abs() < 4.0 * (0.25 * n).sqrt());

    let bg = apply_detection(&[], &ideal, 1e4, dur, &mut rng).unwrap();
    assert!((bg.len() as f64 - 1e4).abs() < 400.0);
    assert!(bg.iter().all(|r| r.origin == Origin::Background && r.time_ps < dur));

    let dead = DetectorModel::new(1.0, 0.5, 0.0, 20.0).unwrap();
    let out = apply_detection(&port, &dead, 0.0, dur, &mut rng).unwrap();
    check_sorted(&out, "out").unwrap();
    assert!(out.windows(2).all(|w| w[1].time_ps - w[0].time_ps >= 20_000));
    // non-paralysable loss at 2e5/s with 20 ns: fraction n τ / (1 + n τ)
    let lost = 1.0 - out.len() as f64 / n;
    assert!((lost - 0.004 / 1.004).abs() < 1e-3, "{lost}");
    assert!(apply_detection(&port, &ideal, -1.0, dur, &mut rng).is_err());
}

#[test]
fn route_and_interfere_is_deterministic() {
    let dur = 100_000_000_000u64;
    let s1 = poisson_stream(1e6, dur, Origin::Ion1, 61);
    let s2 = poisson_stream(1e6, dur, Origin::Ion2, 62);
    let det = DetectorModel::new(0.3, 0.5, 100.0, 20.0).unwrap();
    let cfg = RouteConfig {
        phi_deg: 30.0,
        seed: 8,
        duration_ps: dur,
        background_rate: 500.0,
    };
    let a = route_and_interfere(&s1, &s2, &g1_exp(4.0, 60.0), &det, &cfg).unwrap();
    let b = route_and_interfere(&s1, &s2, &g1_exp(4.0, 60.0), &det, &cfg).unwrap();
    assert_eq!(a, b);
    assert!(a.i3.iter().all(|r| r.channel == Channel::I3));
    assert!(a.i4.iter().all(|r| r.channel == Channel::I4));
}

#[test]
fn trajectory_config_validation() {
    assert!(TrajectoryConfig::new(0.0, 1, 1).is_err());
    assert!(TrajectoryConfig::new(1.0, 1, 0).is_err());
    assert!(TrajectoryConfig::new(1e9, 1, 1).is_err());
    assert!(traj(1.0, 1).with_burn_in(-1.0).is_err());
    assert_eq!(traj(0.5, 1).duration_ps(), 500_000_000_000);
}
