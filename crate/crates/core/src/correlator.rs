//! Coincidence histograms of two time-tag channels.
//!
//! Bin `k` is centred on `k·w` and covers the half-open lag interval
//! `[(k-½)w, (k+½)w)`, `k = -n..=n` with `n = window / w`. Lags are
//! `t_b - t_a`: `t(I4) - t(I3)` when I3 starts the clock (the default).

use serde::{Deserialize, Serialize};

use crate::timetag::TimeTags;
use crate::{Error, Result};

/// Output port whose events start the lag clock.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StartChannel {
    I3,
    I4,
}

impl StartChannel {
    pub fn from_name(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "i3" => Some(StartChannel::I3),
            "i4" => Some(StartChannel::I4),
            _ => None,
        }
    }

    /// The lag convention, e.g. `t(I4)-t(I3)`.
    pub fn lag_label(self) -> &'static str {
        match self {
            StartChannel::I3 => "t(I4)-t(I3)",
            StartChannel::I4 => "t(I3)-t(I4)",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Multistop,
    Tac,
}

impl Mode {
    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "multistop" => Some(Mode::Multistop),
            "tac" | "tac_startstop" => Some(Mode::Tac),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Multistop => "multistop",
            Mode::Tac => "tac",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramConfig {
    bin_ps: u64,
    half_bins: u64,
    pub mode: Mode,
    pub start: StartChannel,
}

impl HistogramConfig {
    /// `bin_ns` must be a whole number of picoseconds and `window_ns` a
    /// whole number of bins.
    pub fn new(bin_ns: f64, window_ns: f64, mode: Mode) -> Result<Self> {
        if !(bin_ns > 0.0 && window_ns > 0.0 && bin_ns.is_finite() && window_ns.is_finite()) {
            return Err(Error::input("bin width and window must be positive"));
        }
        let bin = bin_ns * 1e3;
        if (bin - bin.round()).abs() > 1e-6 || bin.round() < 1.0 {
            return Err(Error::input(format!("bin width {bin_ns} ns is not a whole number of ps")));
        }
        let ratio = window_ns / bin_ns;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) || ratio.round() < 1.0 {
            return Err(Error::input(format!(
                "window {window_ns} ns is not a whole multiple of the bin width {bin_ns} ns"
            )));
        }
        Ok(HistogramConfig {
            bin_ps: bin.round() as u64,
            half_bins: ratio.round() as u64,
            mode,
            start: StartChannel::I3,
        })
    }

    pub fn with_start(mut self, start: StartChannel) -> Self {
        self.start = start;
        self
    }

    pub fn bin_ps(&self) -> u64 {
        self.bin_ps
    }

    pub fn bin_ns(&self) -> f64 {
        self.bin_ps as f64 / 1e3
    }

    pub fn window_ns(&self) -> f64 {
        self.bin_ns() * self.half_bins as f64
    }

    pub fn n_bins(&self) -> usize {
        (2 * self.half_bins + 1) as usize
    }

    /// Lowest lag counted (inclusive), ps.
    fn lo(&self) -> i64 {
        -((((2 * self.half_bins + 1) * self.bin_ps) / 2) as i64)
    }

    /// Bin index (0-based) of a lag, if inside the histogram range.
    #[inline]
    pub fn bin_of(&self, lag_ps: i64) -> Option<usize> {
        let w = self.bin_ps as i64;
        // k = floor((2Δ + w) / 2w), doubled to stay in integers
        let k = (2 * lag_ps + w).div_euclid(2 * w);
        let n = self.half_bins as i64;
        (-n..=n).contains(&k).then(|| (k + n) as usize)
    }

    pub fn bin_centers_ns(&self) -> Vec<f64> {
        let n = self.half_bins as i64;
        (-n..=n).map(|k| k as f64 * self.bin_ns()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramResult {
    pub mode: Mode,
    pub start: StartChannel,
    pub bin_ns: f64,
    pub window_ns: f64,
    pub bin_centers_ns: Vec<f64>,
    pub counts: Vec<u64>,
    /// Rate-product normalised estimate.
    pub g2: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Estimate normalised by the far-lag plateau; `None` when the plateau
    /// bins hold no counts.
    pub g2_plateau: Option<Vec<f64>>,
    pub stderr_plateau: Option<Vec<f64>>,
    pub duration_s: f64,
    pub rate_a: f64,
    pub rate_b: f64,
}

impl HistogramResult {
    pub fn total_counts(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Index of the bin centred on τ = 0.
    pub fn zero_bin(&self) -> usize {
        self.counts.len() / 2
    }
}

fn check_inputs(a: &[u64], b: &[u64], duration_s: f64) -> Result<()> {
    if !(duration_s > 0.0 && duration_s.is_finite()) {
        return Err(Error::NoData("run duration must be positive".into()));
    }
    if a.is_empty() || b.is_empty() {
        return Err(Error::NoData("a channel has no events".into()));
    }
    for (name, v) in [("start", a), ("stop", b)] {
        if v.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::input(format!("{name} channel is not time-ordered")));
        }
    }
    Ok(())
}

/// Counts every pair with `t_b - t_a` in range.
pub fn multistop_counts(a: &[u64], b: &[u64], cfg: &HistogramConfig) -> Vec<u64> {
    let mut counts = vec![0u64; cfg.n_bins()];
    let lo = cfg.lo();
    let mut first = 0usize;
    for &ta in a {
        let ta = ta as i64;
        while first < b.len() && (b[first] as i64) - ta < lo {
            first += 1;
        }
        for &tb in &b[first..] {
            match cfg.bin_of(tb as i64 - ta) {
                Some(k) => counts[k] += 1,
                None => break,
            }
        }
    }
    counts
}

/// Start-stop counting with the stop channel delayed by the window: each
/// accepted start takes the first stop in range and the converter ignores
/// further starts until that stop, or the end of the range, has passed.
pub fn tac_counts(start: &[u64], stop: &[u64], cfg: &HistogramConfig) -> Vec<u64> {
    let mut counts = vec![0u64; cfg.n_bins()];
    let lo = cfg.lo();
    let range = (cfg.n_bins() as u64 * cfg.bin_ps) as i64;
    let mut first = 0usize;
    let mut busy_until = i64::MIN;
    for &ta in start {
        let ta = ta as i64;
        if ta < busy_until {
            continue;
        }
        while first < stop.len() && (stop[first] as i64) - ta < lo {
            first += 1;
        }
        match stop.get(first).and_then(|&tb| cfg.bin_of(tb as i64 - ta).map(|k| (k, tb as i64))) {
            Some((k, tb)) => {
                counts[k] += 1;
                busy_until = tb - lo + 1;
            }
            None => busy_until = ta + range,
        }
    }
    counts
}

/// Both normalisations of a set of counts: by `r_a r_b w T` and by the mean
/// count of the outer fifth of the window on either side.
pub fn normalize(counts: Vec<u64>, cfg: &HistogramConfig, n_a: usize, n_b: usize, duration_s: f64) -> Result<HistogramResult> {
    if !(duration_s > 0.0) {
        return Err(Error::NoData("run duration must be positive".into()));
    }
    let rate_a = n_a as f64 / duration_s;
    let rate_b = n_b as f64 / duration_s;
    let expected = rate_a * rate_b * cfg.bin_ns() * 1e-9 * duration_s;
    if !(expected > 0.0) {
        return Err(Error::NoData("a channel has no events".into()));
    }
    let g2 = counts.iter().map(|&c| c as f64 / expected).collect();
    let stderr = counts.iter().map(|&c| (c as f64).sqrt() / expected).collect();

    let centers = cfg.bin_centers_ns();
    let edge = 0.8 * cfg.window_ns();
    let far: Vec<u64> = counts
        .iter()
        .zip(&centers)
        .filter(|(_, t)| t.abs() >= edge - 1e-9)
        .map(|(c, _)| *c)
        .collect();
    let plateau = if far.is_empty() {
        0.0
    } else {
        far.iter().sum::<u64>() as f64 / far.len() as f64
    };
    let (g2_plateau, stderr_plateau) = if plateau > 0.0 {
        (
            Some(counts.iter().map(|&c| c as f64 / plateau).collect()),
            Some(counts.iter().map(|&c| (c as f64).sqrt() / plateau).collect()),
        )
    } else {
        (None, None)
    };

    Ok(HistogramResult {
        mode: cfg.mode,
        start: cfg.start,
        bin_ns: cfg.bin_ns(),
        window_ns: cfg.window_ns(),
        bin_centers_ns: centers,
        counts,
        g2,
        stderr,
        g2_plateau,
        stderr_plateau,
        duration_s,
        rate_a,
        rate_b,
    })
}

pub fn correlate_multistop(a: &[u64], b: &[u64], cfg: &HistogramConfig, duration_s: f64) -> Result<HistogramResult> {
    check_inputs(a, b, duration_s)?;
    normalize(multistop_counts(a, b, cfg), cfg, a.len(), b.len(), duration_s)
}

pub fn correlate_tac(start: &[u64], stop: &[u64], cfg: &HistogramConfig, duration_s: f64) -> Result<HistogramResult> {
    check_inputs(start, stop, duration_s)?;
    normalize(tac_counts(start, stop, cfg), cfg, start.len(), stop.len(), duration_s)
}

/// Histogram in the mode named by the config.
pub fn correlate(a: &[u64], b: &[u64], cfg: &HistogramConfig, duration_s: f64) -> Result<HistogramResult> {
    match cfg.mode {
        Mode::Multistop => correlate_multistop(a, b, cfg, duration_s),
        Mode::Tac => correlate_tac(a, b, cfg, duration_s),
    }
}

/// Histogram of a time-tag file's two ports, started by `cfg.start`.
pub fn correlate_tags(tags: &TimeTags, cfg: &HistogramConfig, duration_s: f64) -> Result<HistogramResult> {
    let (a, b) = match cfg.start {
        StartChannel::I3 => (&tags.i3, &tags.i4),
        StartChannel::I4 => (&tags.i4, &tags.i3),
    };
    correlate(a, b, cfg, duration_s)
}
