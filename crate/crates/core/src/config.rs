//! The JSON configuration document and the shipped species presets.
//!
//! A document has five sections: `scheme`, `lasers`, `field`, `detection`
//! and `simulation`. Frequencies and rates in `scheme`, `lasers` are angular,
//! rad/µs (numerically 2π × MHz); the units of every other field are in its
//! name or doc comment. See `docs/config.md` for the full schema.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::detection::{CollectionChain, DetectorModel};
use crate::ion_model::{DecayChannel, LandeFactors, LaserDrive, LevelScheme, MagneticField, SystemConfig};
use crate::montecarlo::TrajectoryConfig;
use crate::{Error, Result};

const BARIUM_JSON: &str = include_str!("../presets/barium.json");
const CALCIUM_JSON: &str = include_str!("../presets/calcium.json");

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Barium,
    Calcium,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Barium => "barium",
            Preset::Calcium => "calcium",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "barium" | "ba" => Some(Preset::Barium),
            "calcium" | "ca" => Some(Preset::Calcium),
            _ => None,
        }
    }

    pub fn document(self) -> ConfigDocument {
        let text = match self {
            Preset::Barium => BARIUM_JSON,
            Preset::Calcium => CALCIUM_JSON,
        };
        ConfigDocument::from_json(text).expect("shipped presets are valid")
    }

    pub fn system(self) -> SystemConfig {
        self.document().system().expect("shipped presets are valid")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSection {
    pub decay_channels: Vec<DecayChannel>,
    #[serde(default = "default_lande")]
    pub lande_g: LandeFactors,
}

fn default_lande() -> LandeFactors {
    LandeFactors::LS_COUPLING
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaserSection {
    #[serde(flatten)]
    pub drive: LaserDrive,
    /// Lorentzian FWHM, rad/µs.
    #[serde(default)]
    pub linewidth: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionSection {
    /// Complex weights of the (σ⁻, π, σ⁺) green jump operators forming the
    /// collected mode; normalised on use.
    #[serde(default = "default_weights")]
    pub collection_weights: [Complex64; 3],
    #[serde(default = "default_solid_angle")]
    pub solid_angle_fraction: f64,
    pub fiber_coupling: f64,
    pub optical_transmission: f64,
    pub quantum_efficiency: f64,
    /// Gaussian FWHM of the pairwise timing response, ns.
    pub response_fwhm_ns: f64,
    /// Dark counts per detector, counts/s.
    pub dark_rate: f64,
    /// Stray-light counts per detector, counts/s.
    #[serde(default)]
    pub stray_rate: f64,
    /// Non-paralysable dead time, ns.
    #[serde(default)]
    pub dead_time_ns: f64,
}

fn default_weights() -> [Complex64; 3] {
    [Complex64::new(1.0, 0.0); 3]
}

fn default_solid_angle() -> f64 {
    0.04
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    /// Largest lag of the analytic correlation grids, ns.
    pub tau_max_ns: f64,
    /// Spacing of the analytic correlation grids, ns.
    pub tau_step_ns: f64,
    /// Monte Carlo run length, s.
    pub duration_s: f64,
    pub seed: u64,
    #[serde(default = "default_quantum")]
    pub time_quantum_ps: u64,
    /// Trajectory time discarded before recording, ns.
    #[serde(default = "default_burn_in")]
    pub burn_in_ns: f64,
    /// Histogram bin width, ns.
    #[serde(default = "default_bin")]
    pub bin_ns: f64,
    /// Histogram half-window, ns.
    #[serde(default = "default_window")]
    pub window_ns: f64,
}

fn default_quantum() -> u64 {
    1
}
fn default_burn_in() -> f64 {
    5000.0
}
fn default_bin() -> f64 {
    1.0
}
fn default_window() -> f64 {
    50.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    #[serde(default)]
    pub name: String,
    pub scheme: SchemeSection,
    pub lasers: Vec<LaserSection>,
    pub field: MagneticField,
    pub detection: DetectionSection,
    pub simulation: SimulationSection,
}

impl ConfigDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ConfigDocument =
            serde_json::from_str(text).map_err(|e| Error::config(format!("{e}")))?;
        doc.validate()?;
        Ok(doc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// Loads a file, or a shipped preset when given `builtin:<name>`.
    pub fn load_or_builtin(spec: &str) -> Result<Self> {
        if let Some(name) = spec.strip_prefix("builtin:") {
            return Preset::from_name(name)
                .map(Preset::document)
                .ok_or_else(|| Error::config(format!("unknown builtin preset `{name}`")));
        }
        Self::load(Path::new(spec))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        self.system()?;
        self.collection_chain()?;
        self.detector()?;
        self.trajectory()?;
        crate::dynamics::normalized_weights(&self.detection.collection_weights)
            .map_err(|_| Error::config("detection.collection_weights: all weights are zero"))?;
        let s = &self.simulation;
        if !(s.tau_step_ns > 0.0 && s.tau_max_ns > s.tau_step_ns) {
            return Err(Error::config(
                "simulation: need 0 < tau_step_ns < tau_max_ns",
            ));
        }
        if !(s.bin_ns > 0.0 && s.window_ns > 0.0) {
            return Err(Error::config("simulation: bin_ns and window_ns must be positive"));
        }
        if !(s.burn_in_ns >= 0.0 && s.burn_in_ns.is_finite()) {
            return Err(Error::config("simulation.burn_in_ns must be finite and >= 0"));
        }
        let d = &self.detection;
        if !(d.stray_rate >= 0.0 && d.stray_rate.is_finite()) {
            return Err(Error::config("detection.stray_rate must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn system(&self) -> Result<SystemConfig> {
        let scheme = LevelScheme::new(self.scheme.decay_channels.clone(), self.scheme.lande_g)?;
        let lasers = self.lasers.iter().map(|l| l.drive.clone()).collect();
        let lw: Vec<f64> = self.lasers.iter().map(|l| l.linewidth).collect();
        let linewidths = if lw.iter().all(|&x| x == 0.0) { None } else { Some(lw) };
        SystemConfig::new(scheme, lasers, self.field, linewidths)
    }

    pub fn collection_chain(&self) -> Result<CollectionChain> {
        let d = &self.detection;
        CollectionChain::new(d.solid_angle_fraction, d.fiber_coupling, d.optical_transmission)
    }

    pub fn detector(&self) -> Result<DetectorModel> {
        let d = &self.detection;
        DetectorModel::new(d.quantum_efficiency, d.response_fwhm_ns, d.dark_rate, d.dead_time_ns)
    }

    /// Background counts per detector (dark plus stray light), counts/s.
    pub fn background_rate(&self) -> f64 {
        self.detection.dark_rate + self.detection.stray_rate
    }

    pub fn trajectory(&self) -> Result<TrajectoryConfig> {
        let s = &self.simulation;
        TrajectoryConfig::new(s.duration_s, s.seed, s.time_quantum_ps)?.with_burn_in(s.burn_in_ns)
    }

    /// Uniform analytic lag grid `0, step, ..., tau_max`, ns.
    pub fn tau_grid(&self) -> Vec<f64> {
        let s = &self.simulation;
        let n = (s.tau_max_ns / s.tau_step_ns).round() as usize;
        (0..=n).map(|i| i as f64 * s.tau_step_ns).collect()
    }

    /// Short content hash (hex) of the canonical serialisation.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serialises");
        let digest = Sha256::digest(&bytes);
        hex::encode(&digest[..6])
    }
}
