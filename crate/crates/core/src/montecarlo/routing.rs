//! Beam splitter, two-photon interference and detector effects on photon
//! streams.
//!
//! Interference is applied pairwise: a photon that reaches one output port
//! shortly after a photon of the other ion reached the opposite port is
//! removed with probability `cos²φ |g1(Δt)|²`. Each such pair is a
//! coincidence that, at low flux, would otherwise contribute to the
//! cross-port correlation, so the removal reproduces the interference
//! deficit with no further calibration factor.
//!
//! Deleting the later photon of a pair also perturbs correlations of third
//! and higher order. Only second-order statistics are guaranteed.

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};

use super::{check_sorted, rng_for, Channel, Origin, PhotonRecord, PS_PER_NS, PS_PER_S};
use crate::detection::DetectorModel;
use crate::dynamics::{CorrelationSeries, SeriesKind};
use crate::{Error, Result};

/// `|g1|²` below which pairs no longer interfere.
pub const WINDOW_THRESHOLD: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RouteConfig {
    pub phi_deg: f64,
    pub seed: u64,
    /// Length of the recorded run, ps.
    pub duration_ps: u64,
    /// Uncorrelated background injected at each output port, counts/s.
    pub background_rate: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Routed {
    pub i3: Vec<PhotonRecord>,
    pub i4: Vec<PhotonRecord>,
    pub vetoed: usize,
}

/// Smallest lag beyond which `|g1|²` stays below the threshold on the
/// grid, ps.
pub fn interference_window_ps(g1: &CorrelationSeries) -> Result<u64> {
    if g1.kind != SeriesKind::G1 {
        return Err(Error::input("interference window needs a g1 series"));
    }
    let sq = g1.abs_squared();
    let last_above = sq.iter().rposition(|&v| v >= WINDOW_THRESHOLD);
    match last_above {
        None => Ok(0),
        Some(i) if i + 1 >= sq.len() => Err(Error::input(format!(
            "|g1|² is still {:.2e} at the end of the lag grid ({} ns); extend tau_max_ns",
            sq[i],
            g1.tau_ns[i]
        ))),
        Some(i) => Ok((g1.tau_ns[i + 1] * PS_PER_NS).ceil() as u64),
    }
}

/// Beam splitter with interference, before any detector effect.
pub fn route(
    stream1: &[PhotonRecord],
    stream2: &[PhotonRecord],
    phi_deg: f64,
    g1: &CorrelationSeries,
    seed: u64,
) -> Result<Routed> {
    if !(0.0..=90.0).contains(&phi_deg) {
        return Err(Error::input(format!("phi must lie in [0, 90] degrees, got {phi_deg}")));
    }
    check_sorted(stream1, "stream 1")?;
    check_sorted(stream2, "stream 2")?;
    let window = interference_window_ps(g1)?;
    let cos2 = phi_deg.to_radians().cos().powi(2);
    let table: Vec<f64> = if cos2 < 1e-15 {
        Vec::new()
    } else {
        (0..=window)
            .map(|ps| cos2 * g1.interpolate(ps as f64 / PS_PER_NS).expect("window inside grid").norm_sqr())
            .collect()
    };

    // merge, ion 1 first on ties
    let mut merged: Vec<PhotonRecord> = Vec::with_capacity(stream1.len() + stream2.len());
    let (mut a, mut b) = (0, 0);
    while a < stream1.len() || b < stream2.len() {
        if b >= stream2.len() || (a < stream1.len() && stream1[a].time_ps <= stream2[b].time_ps) {
            merged.push(stream1[a]);
            a += 1;
        } else {
            merged.push(stream2[b]);
            b += 1;
        }
    }

    let mut rng = rng_for(seed, 3);
    for r in merged.iter_mut() {
        r.channel = if rng.random::<bool>() { Channel::I3 } else { Channel::I4 };
    }

    let mut alive = vec![true; merged.len()];
    let mut vetoed = 0;
    if !table.is_empty() {
        for j in 0..merged.len() {
            let late = merged[j];
            for i in (0..j).rev() {
                let early = merged[i];
                let dt = late.time_ps - early.time_ps;
                if dt > window {
                    break;
                }
                if !alive[i] || early.origin == late.origin || early.channel == late.channel {
                    continue;
                }
                let p = table[dt as usize];
                if p > 0.0 && rng.random::<f64>() < p {
                    alive[j] = false;
                    vetoed += 1;
                    break;
                }
            }
        }
    }

    let mut i3 = Vec::new();
    let mut i4 = Vec::new();
    for (r, keep) in merged.into_iter().zip(alive) {
        if keep {
            match r.channel {
                Channel::I3 => i3.push(r),
                _ => i4.push(r),
            }
        }
    }
    Ok(Routed { i3, i4, vetoed })
}

/// Detector of one output port: efficiency thinning, background injection,
/// Gaussian jitter of σ_pair/√2 per event, then time ordering and a
/// non-paralysable dead time.
pub fn apply_detection(
    port: &[PhotonRecord],
    det: &DetectorModel,
    background_rate: f64,
    duration_ps: u64,
    rng: &mut impl Rng,
) -> Result<Vec<PhotonRecord>> {
    if !(background_rate >= 0.0 && background_rate.is_finite()) {
        return Err(Error::input("background rate must be finite and >= 0"));
    }
    let channel = port.first().map_or(Channel::I3, |r| r.channel);
    let mut out: Vec<PhotonRecord> = port
        .iter()
        .copied()
        .filter(|_| rng.random::<f64>() < det.quantum_efficiency)
        .collect();

    let mean = background_rate * duration_ps as f64 / PS_PER_S;
    if mean > 0.0 {
        let n = Poisson::new(mean).map_err(|e| Error::input(e.to_string()))?.sample(rng) as u64;
        for _ in 0..n {
            out.push(PhotonRecord {
                time_ps: rng.random_range(0..duration_ps.max(1)),
                channel,
                origin: Origin::Background,
            });
        }
    }

    let sigma_ps = det.response_sigma_ns() * PS_PER_NS / std::f64::consts::SQRT_2;
    if sigma_ps > 0.0 {
        let normal = Normal::new(0.0, sigma_ps).map_err(|e| Error::input(e.to_string()))?;
        for r in out.iter_mut() {
            let t = r.time_ps as f64 + normal.sample(rng);
            r.time_ps = t.round().max(0.0) as u64;
        }
    }
    out.sort_by_key(|r| r.time_ps);

    let dead = (det.dead_time_ns * PS_PER_NS).round() as u64;
    if dead > 0 {
        let mut last: Option<u64> = None;
        out.retain(|r| match last {
            Some(t) if r.time_ps < t + dead => false,
            _ => {
                last = Some(r.time_ps);
                true
            }
        });
    }
    Ok(out)
}

/// Full measurement of two ion streams behind the beam splitter.
pub fn route_and_interfere(
    stream1: &[PhotonRecord],
    stream2: &[PhotonRecord],
    g1: &CorrelationSeries,
    det: &DetectorModel,
    cfg: &RouteConfig,
) -> Result<Routed> {
    let routed = route(stream1, stream2, cfg.phi_deg, g1, cfg.seed)?;
    let mut rng3 = rng_for(cfg.seed, 4);
    let mut rng4 = rng_for(cfg.seed, 5);
    let mut i3 = apply_detection(&routed.i3, det, cfg.background_rate, cfg.duration_ps, &mut rng3)?;
    let mut i4 = apply_detection(&routed.i4, det, cfg.background_rate, cfg.duration_ps, &mut rng4)?;
    i3.iter_mut().for_each(|r| r.channel = Channel::I3);
    i4.iter_mut().for_each(|r| r.channel = Channel::I4);
    Ok(Routed {
        i3,
        i4,
        vetoed: routed.vetoed,
    })
}
