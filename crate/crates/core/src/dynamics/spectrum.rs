use serde::{Deserialize, Serialize};

use super::steady_state;
use crate::ion_model::{Liouvillian, SystemConfig, Term};
use crate::{Error, Result};

/// Which laser detuning is swept.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScanTarget {
    Green,
    Red,
}

impl ScanTarget {
    pub fn lower(self) -> Term {
        match self {
            ScanTarget::Green => Term::S12,
            ScanTarget::Red => Term::D32,
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "green" | "s-p" => Some(ScanTarget::Green),
            "red" | "d-p" => Some(ScanTarget::Red),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectrumUnit {
    /// Total P1/2 population.
    Population,
    CountsPerSecond,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PointOutcome {
    Value(f64),
    /// The steady state is not unique at this detuning.
    Degenerate { kernel_dim: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectrumPoint {
    /// rad/µs
    pub detuning: f64,
    pub outcome: PointOutcome,
}

impl SpectrumPoint {
    pub fn value(&self) -> Option<f64> {
        match self.outcome {
            PointOutcome::Value(v) => Some(v),
            PointOutcome::Degenerate { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub target: ScanTarget,
    pub unit: SpectrumUnit,
    pub points: Vec<SpectrumPoint>,
}

impl Spectrum {
    /// Converts populations to detected counts/s given the detected rate per
    /// unit P population, counts/s.
    pub fn to_count_rate(&self, counts_per_population: f64) -> Result<Spectrum> {
        if self.unit != SpectrumUnit::Population {
            return Err(Error::input("spectrum is already a count rate"));
        }
        if !(counts_per_population >= 0.0) || !counts_per_population.is_finite() {
            return Err(Error::input("count-rate scale must be finite and >= 0"));
        }
        let points = self
            .points
            .iter()
            .map(|p| SpectrumPoint {
                detuning: p.detuning,
                outcome: match p.outcome {
                    PointOutcome::Value(v) => PointOutcome::Value(v * counts_per_population),
                    other => other,
                },
            })
            .collect();
        Ok(Spectrum {
            target: self.target,
            unit: SpectrumUnit::CountsPerSecond,
            points,
        })
    }

    /// Index of the smallest defined value.
    pub fn argmin(&self) -> Option<usize> {
        self.points
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.value().map(|v| (i, v)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i)
    }
}

/// Steady-state P1/2 population across a detuning grid (rad/µs).
///
/// Points with a non-unique steady state are kept and marked; other
/// numerical failures abort the scan.
pub fn excitation_spectrum(config: &SystemConfig, target: ScanTarget, grid: &[f64]) -> Result<Spectrum> {
    config.validate()?;
    if grid.is_empty() || grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::input("detuning grid must be non-empty and finite"));
    }
    let slot = config
        .lasers
        .iter()
        .position(|l| l.lower() == target.lower())
        .expect("validated config has a drive on each transition");
    let p_levels: Vec<usize> = config.scheme.indices_of(Term::P12).collect();
    let mut cfg = config.clone();
    let mut points = Vec::with_capacity(grid.len());
    for &detuning in grid {
        cfg.lasers[slot].detuning = detuning;
        let l = Liouvillian::from_config(&cfg)?;
        let outcome = match steady_state(&l) {
            Ok(rho) => PointOutcome::Value(rho.population(p_levels.iter().copied()).max(0.0)),
            Err(Error::DegenerateSteadyState { kernel_dim }) => PointOutcome::Degenerate { kernel_dim },
            Err(e) => return Err(e),
        };
        points.push(SpectrumPoint { detuning, outcome });
    }
    Ok(Spectrum {
        target,
        unit: SpectrumUnit::Population,
        points,
    })
}
