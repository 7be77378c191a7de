//! Measurement chain: collection losses, detector efficiency, timing
//! response and uncorrelated background.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{steady_state, CorrelationSeries, SeriesValues};
use crate::ion_model::{Liouvillian, SystemConfig, Term};
use crate::{Error, Result};

/// Ratio of Gaussian FWHM to standard deviation, `2 sqrt(2 ln 2)`.
pub const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949;

const PER_US_TO_PER_S: f64 = 1e6;

fn unit_interval(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0 && x <= 1.0) {
        return Err(Error::config(format!("detection.{name} must lie in (0, 1], got {x}")));
    }
    Ok(())
}

fn non_negative(name: &str, x: f64) -> Result<()> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::config(format!("detection.{name} must be finite and >= 0, got {x}")));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollectionChain {
    pub solid_angle_fraction: f64,
    pub fiber_coupling: f64,
    pub optical_transmission: f64,
}

impl CollectionChain {
    pub fn new(solid_angle_fraction: f64, fiber_coupling: f64, optical_transmission: f64) -> Result<Self> {
        unit_interval("solid_angle_fraction", solid_angle_fraction)?;
        unit_interval("fiber_coupling", fiber_coupling)?;
        unit_interval("optical_transmission", optical_transmission)?;
        Ok(CollectionChain {
            solid_angle_fraction,
            fiber_coupling,
            optical_transmission,
        })
    }

    pub fn lossless() -> Self {
        CollectionChain {
            solid_angle_fraction: 1.0,
            fiber_coupling: 1.0,
            optical_transmission: 1.0,
        }
    }

    pub fn efficiency(&self) -> f64 {
        self.solid_angle_fraction * self.fiber_coupling * self.optical_transmission
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pub quantum_efficiency: f64,
    /// Gaussian FWHM of the pairwise timing response, ns.
    pub response_fwhm_ns: f64,
    /// counts/s
    pub dark_rate: f64,
    /// Non-paralysable, ns.
    pub dead_time_ns: f64,
}

impl DetectorModel {
    pub fn new(quantum_efficiency: f64, response_fwhm_ns: f64, dark_rate: f64, dead_time_ns: f64) -> Result<Self> {
        unit_interval("quantum_efficiency", quantum_efficiency)?;
        non_negative("response_fwhm_ns", response_fwhm_ns)?;
        non_negative("dark_rate", dark_rate)?;
        non_negative("dead_time_ns", dead_time_ns)?;
        Ok(DetectorModel {
            quantum_efficiency,
            response_fwhm_ns,
            dark_rate,
            dead_time_ns,
        })
    }

    /// Perfect detector: unit efficiency, no jitter, no dark counts.
    pub fn ideal() -> Self {
        DetectorModel {
            quantum_efficiency: 1.0,
            response_fwhm_ns: 0.0,
            dark_rate: 0.0,
            dead_time_ns: 0.0,
        }
    }

    pub fn response_sigma_ns(&self) -> f64 {
        self.response_fwhm_ns / FWHM_PER_SIGMA
    }
}

/// Detected counts/s per unit P1/2 population: green decay rate times the
/// chain and detector efficiencies.
pub fn counts_per_population(config: &SystemConfig, chain: &CollectionChain, det: &DetectorModel) -> f64 {
    config.green_decay_rate() * PER_US_TO_PER_S * chain.efficiency() * det.quantum_efficiency
}

/// Detected rate of the total green scattering, counts/s.
pub fn effective_count_rate(config: &SystemConfig, chain: &CollectionChain, det: &DetectorModel) -> Result<f64> {
    let rho = steady_state(&Liouvillian::from_config(config)?)?;
    let p = rho.population(config.scheme.indices_of(Term::P12));
    Ok(p * counts_per_population(config, chain, det))
}

/// Detected rate of the collected mode, counts/s, from its emission rate in
/// 1/µs.
pub fn collected_count_rate(rate_per_us: f64, chain: &CollectionChain, det: &DetectorModel) -> f64 {
    rate_per_us * PER_US_TO_PER_S * chain.efficiency() * det.quantum_efficiency
}

/// Convolves a series with the detector's Gaussian timing response.
pub fn convolve_response(series: &CorrelationSeries, det: &DetectorModel) -> Result<CorrelationSeries> {
    convolve_gaussian(series, det.response_fwhm_ns)
}

/// Convolution with a unit-sum sampled Gaussian of the given FWHM, ns.
///
/// The series is extended to negative lags by its parity and held at its
/// last value beyond the end of the grid. Requires a uniform grid with
/// spacing at most FWHM/4.
pub fn convolve_gaussian(series: &CorrelationSeries, fwhm_ns: f64) -> Result<CorrelationSeries> {
    if !(fwhm_ns >= 0.0 && fwhm_ns.is_finite()) {
        return Err(Error::input("response FWHM must be finite and >= 0"));
    }
    if fwhm_ns == 0.0 {
        return Ok(series.clone());
    }
    let step = series
        .uniform_step()
        .ok_or_else(|| Error::input("convolution needs a uniform lag grid"))?;
    if step > fwhm_ns / 4.0 * (1.0 + 1e-9) {
        return Err(Error::input(format!(
            "lag grid spacing {step} ns is too coarse for a {fwhm_ns} ns response; need <= {} ns",
            fwhm_ns / 4.0
        )));
    }
    let sigma = fwhm_ns / FWHM_PER_SIGMA / step;
    let half = (6.0 * sigma).ceil() as i64;
    let mut kernel: Vec<f64> = (-half..=half)
        .map(|k| (-0.5 * (k as f64 / sigma).powi(2)).exp())
        .collect();
    let sum: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|w| *w /= sum);

    let n = series.len() as i64;
    let sample = |j: i64| -> Complex64 {
        if j < 0 {
            series.at(((-j).min(n - 1)) as usize).conj()
        } else {
            series.at(j.min(n - 1) as usize)
        }
    };
    let out: Vec<Complex64> = (0..n)
        .map(|i| {
            kernel
                .iter()
                .enumerate()
                .map(|(k, w)| sample(i + k as i64 - half) * *w)
                .sum()
        })
        .collect();
    let values = match series.values {
        SeriesValues::Complex(_) => SeriesValues::Complex(out),
        SeriesValues::Real(_) => SeriesValues::Real(out.iter().map(|z| z.re).collect()),
    };
    Ok(CorrelationSeries {
        kind: series.kind,
        normalization: series.normalization,
        tau_ns: series.tau_ns.clone(),
        values,
    })
}

/// Uncorrelated background making up a fraction `b` of each detector's
/// counts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackgroundMix {
    pub fraction: f64,
}

impl BackgroundMix {
    pub fn from_fraction(fraction: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(Error::input(format!("background fraction must lie in [0, 1], got {fraction}")));
        }
        Ok(BackgroundMix { fraction })
    }

    /// `g → (1-b)² g + 2b - b²`.
    pub fn apply_value(&self, g: f64) -> f64 {
        let b = self.fraction;
        (1.0 - b) * (1.0 - b) * g + 2.0 * b * (1.0 - b) + b * b
    }

    pub fn apply(&self, series: &CorrelationSeries) -> Result<CorrelationSeries> {
        let SeriesValues::Real(v) = &series.values else {
            return Err(Error::input("background mixing applies to intensity correlations"));
        };
        CorrelationSeries::new_real(
            series.kind,
            series.normalization,
            series.tau_ns.clone(),
            v.iter().map(|&g| self.apply_value(g)).collect(),
        )
    }
}

/// Background fraction of a detector seeing `signal_rate` plus dark and
/// stray counts, all counts/s.
pub fn accidental_floor(signal_rate: f64, dark_rate: f64, stray_rate: f64) -> Result<BackgroundMix> {
    for (name, x) in [("signal_rate", signal_rate), ("dark_rate", dark_rate), ("stray_rate", stray_rate)] {
        if !(x >= 0.0 && x.is_finite()) {
            return Err(Error::input(format!("{name} must be finite and >= 0, got {x}")));
        }
    }
    let background = dark_rate + stray_rate;
    let total = signal_rate + background;
    if total == 0.0 {
        return Err(Error::NoLight);
    }
    BackgroundMix::from_fraction(background / total)
}
