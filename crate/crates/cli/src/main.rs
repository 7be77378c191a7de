use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hom_cli::*;
use hom_core::correlator::{Mode, StartChannel};
use hom_core::dynamics::ScanTarget;

/// Resonance fluorescence and two-photon interference of two trapped ions.
///
/// `--config` takes a JSON file or `builtin:barium` / `builtin:calcium`.
#[derive(Parser)]
#[command(name = "homsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Steady-state P-state population against one laser detuning.
    Spectrum {
        #[arg(long)]
        config: String,
        #[arg(long)]
        out: PathBuf,
        /// Laser to scan: green (S-P) or red (D-P).
        #[arg(long, default_value = "green", value_parser = parse_scan)]
        scan: ScanTarget,
        /// First detuning, rad/µs.
        #[arg(long, default_value_t = -400.0, allow_hyphen_values = true)]
        from: f64,
        /// Last detuning, rad/µs.
        #[arg(long, default_value_t = 200.0, allow_hyphen_values = true)]
        to: f64,
        #[arg(long, default_value_t = 301)]
        points: usize,
        /// Report detected counts/s instead of population.
        #[arg(long)]
        counts: bool,
    },
    /// Single-ion g1 and g2, model and as detected.
    Correlations {
        #[arg(long)]
        config: String,
        #[arg(long)]
        out: PathBuf,
        /// Display bin of the detected curve, ns.
        #[arg(long = "bin")]
        bin_ns: Option<f64>,
        /// Half-width of the detected curve, ns.
        #[arg(long = "window")]
        window_ns: Option<f64>,
    },
    /// Cross-port correlation behind the beam splitter per polarisation angle.
    Hom {
        #[arg(long)]
        config: String,
        #[arg(long)]
        out: PathBuf,
        /// Angles between the two photon polarisations, degrees.
        #[arg(long, value_delimiter = ',', default_value = "0,90")]
        phi: Vec<f64>,
        #[arg(long = "bin")]
        bin_ns: Option<f64>,
        #[arg(long = "window")]
        window_ns: Option<f64>,
    },
    /// Monte Carlo time tags of the two-ion experiment.
    Simulate {
        #[arg(long)]
        config: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0,90")]
        phi: Vec<f64>,
        /// Recorded run length, s.
        #[arg(long = "duration")]
        duration_s: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Perfect detectors: no losses, jitter, background or dead time.
        #[arg(long)]
        ideal_detector: bool,
    },
    /// Coincidence histogram of time-tag files.
    Correlate {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "bin", default_value_t = 1.0)]
        bin_ns: f64,
        #[arg(long = "window", default_value_t = 50.0)]
        window_ns: f64,
        #[arg(long, default_value = "multistop", value_parser = parse_mode)]
        mode: Mode,
        /// Port that starts the lag clock: i3 (lag t(I4)-t(I3)) or i4.
        #[arg(long, default_value = "i3", value_parser = parse_start)]
        start: StartChannel,
        /// Run length for files without a metadata sidecar, s.
        #[arg(long = "duration")]
        duration_s: Option<f64>,
    },
}

fn parse_scan(s: &str) -> Result<ScanTarget, String> {
    ScanTarget::from_name(s).ok_or_else(|| format!("unknown scan `{s}`; use green or red"))
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    Mode::from_name(s).ok_or_else(|| format!("unknown mode `{s}`; use multistop or tac"))
}

fn parse_start(s: &str) -> Result<StartChannel, String> {
    StartChannel::from_name(s).ok_or_else(|| format!("unknown start channel `{s}`; use i3 or i4"))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Spectrum {
            config,
            out,
            scan,
            from,
            to,
            points,
            counts,
        } => {
            let path = cmd_spectrum(&SpectrumArgs {
                config,
                out,
                scan,
                from,
                to,
                points,
                counts,
            })?;
            eprintln!("wrote {}", path.display());
        }
        Command::Correlations {
            config,
            out,
            bin_ns,
            window_ns,
        } => {
            let s = cmd_correlations(&CorrelationsArgs {
                config,
                out,
                bin_ns,
                window_ns,
            })?;
            eprintln!(
                "g2(0) model {:.3e}, detected {:.4} (background fraction {:.4})",
                s.g2_zero, s.g2_zero_detected, s.background_fraction
            );
        }
        Command::Hom {
            config,
            out,
            phi,
            bin_ns,
            window_ns,
        } => {
            let s = cmd_hom(&HomArgs {
                config,
                out,
                phi,
                bin_ns,
                window_ns,
            })?;
            for r in &s.rows {
                eprintln!(
                    "phi={}: g2tot(0) {:.4} detected {:.4} contrast {:.4}",
                    r.phi_deg, r.zero, r.zero_detected, r.contrast_detected
                );
            }
        }
        Command::Simulate {
            config,
            out,
            phi,
            duration_s,
            seed,
            ideal_detector,
        } => {
            let s = cmd_simulate(&SimulateArgs {
                config,
                out,
                phi,
                duration_s,
                seed,
                ideal_detector,
            })?;
            eprintln!(
                "{} + {} photons in {:.1} s",
                s.photons_ion1, s.photons_ion2, s.seconds
            );
        }
        Command::Correlate {
            files,
            out,
            bin_ns,
            window_ns,
            mode,
            start,
            duration_s,
        } => {
            for (path, h) in cmd_correlate(&CorrelateArgs {
                files,
                out,
                bin_ns,
                window_ns,
                mode,
                start,
                duration_s,
            })? {
                let z = h.zero_bin();
                eprintln!(
                    "wrote {}: g2(0) = {:.4} ± {:.4}",
                    path.display(),
                    h.g2[z],
                    h.stderr[z]
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::from(EXIT_OK as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
