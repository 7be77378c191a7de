//! Synthetic photon streams: quantum-jump trajectories of two ions, the
//! beam splitter with two-photon interference, and detector effects.
//!
//! All times are integer picoseconds from the start of the recorded run.

mod routing;
mod trajectory;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use routing::{apply_detection, interference_window_ps, route, route_and_interfere, RouteConfig, Routed};
pub use trajectory::mcwf_photon_stream;

pub const PS_PER_S: f64 = 1e12;
pub const PS_PER_NS: f64 = 1e3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Channel {
    I1,
    I2,
    I3,
    I4,
}

/// Where a record came from; diagnostic only, not exported.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Origin {
    Ion1,
    Ion2,
    Background,
}

impl Origin {
    fn input_channel(self) -> Channel {
        match self {
            Origin::Ion2 => Channel::I2,
            _ => Channel::I1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PhotonRecord {
    pub time_ps: u64,
    pub channel: Channel,
    pub origin: Origin,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryConfig {
    pub duration_s: f64,
    pub seed: u64,
    pub time_quantum_ps: u64,
    /// Trajectory time discarded before recording starts, ns.
    pub burn_in_ns: f64,
}

impl TrajectoryConfig {
    pub const DEFAULT_BURN_IN_NS: f64 = 5000.0;

    pub fn new(duration_s: f64, seed: u64, time_quantum_ps: u64) -> Result<Self> {
        if !(duration_s > 0.0 && duration_s.is_finite()) {
            return Err(Error::config(format!("simulation.duration_s must be > 0, got {duration_s}")));
        }
        if duration_s * PS_PER_S > u64::MAX as f64 / 4.0 {
            return Err(Error::config("simulation.duration_s exceeds the picosecond time range"));
        }
        if time_quantum_ps < 1 {
            return Err(Error::config("simulation.time_quantum_ps must be >= 1"));
        }
        Ok(TrajectoryConfig {
            duration_s,
            seed,
            time_quantum_ps,
            burn_in_ns: Self::DEFAULT_BURN_IN_NS,
        })
    }

    pub fn with_burn_in(mut self, burn_in_ns: f64) -> Result<Self> {
        if !(burn_in_ns >= 0.0 && burn_in_ns.is_finite()) {
            return Err(Error::config("simulation.burn_in_ns must be finite and >= 0"));
        }
        self.burn_in_ns = burn_in_ns;
        Ok(self)
    }

    pub fn duration_ps(&self) -> u64 {
        (self.duration_s * PS_PER_S).round() as u64
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_duration(self, duration_s: f64) -> Result<Self> {
        let burn = self.burn_in_ns;
        Self::new(duration_s, self.seed, self.time_quantum_ps)?.with_burn_in(burn)
    }
}

/// Independent random stream of a run: 1, 2 for the ions, 3 for routing,
/// 4 and 5 for the two detectors.
pub(crate) fn rng_for(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) fn check_sorted(stream: &[PhotonRecord], name: &str) -> Result<()> {
    if let Some(i) = stream.windows(2).position(|w| w[1].time_ps < w[0].time_ps) {
        return Err(Error::input(format!("{name} is not time-ordered at record {}", i + 1)));
    }
    Ok(())
}

/// Times of one channel.
pub fn times(stream: &[PhotonRecord]) -> Vec<u64> {
    stream.iter().map(|r| r.time_ps).collect()
}

#[cfg(test)]
mod tests;
