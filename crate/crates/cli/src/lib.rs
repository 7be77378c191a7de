//! Subcommands of `homsim`. Each one reads a configuration, writes CSV or
//! time-tag files into an output directory and returns a summary for the
//! caller. Every file carries the configuration hash; reruns with the same
//! inputs produce identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde_json::json;

use hom_core::config::ConfigDocument;
use hom_core::correlator::{correlate_tags, HistogramConfig, HistogramResult, Mode, StartChannel};
use hom_core::detection::{
    accidental_floor, collected_count_rate, convolve_response, counts_per_population, BackgroundMix, DetectorModel,
};
use hom_core::dynamics::{collection_operator, excitation_spectrum, g1_g2, steady_state, CorrelationSeries, ScanTarget};
use hom_core::interference::{at_resolution, contrast, hom_g2_tot, nutation_reduction};
use hom_core::ion_model::Liouvillian;
use hom_core::montecarlo::{mcwf_photon_stream, route_and_interfere, times, Origin, RouteConfig};
use hom_core::report::{histogram_csv, key_values, series_csv, spectrum_csv, table_csv, Header};
use hom_core::timetag::{read_timetags, write_timetags, RunMetadata, TimeTags};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Exit status for an error chain: the first library error found decides.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    use hom_core::Error as E;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::InvalidConfig(_) | E::InvalidInput(_) | E::Json(_) => EXIT_CONFIG,
                E::Io(_) | E::Format { .. } => EXIT_IO,
                _ => EXIT_NUMERIC,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return EXIT_IO;
        }
    }
    EXIT_CONFIG
}

/// Written as `manifest.json` next to the outputs of every run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunManifest {
    pub subcommand: String,
    pub config: String,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub config_hash: String,
}

impl RunManifest {
    fn write(&self, files: &[PathBuf]) -> Result<()> {
        let names: Vec<String> = files
            .iter()
            .map(|p| p.file_name().unwrap_or_default().to_string_lossy().into_owned())
            .collect();
        let value = json!({
            "subcommand": self.subcommand,
            "config": self.config,
            "out": self.out.to_string_lossy(),
            "seed": self.seed,
            "config_hash": self.config_hash,
            "files": names,
        });
        write_file(&self.out.join("manifest.json"), &(serde_json::to_string_pretty(&value)? + "\n"))
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn prepare_out(out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))
}

fn load(config: &str) -> Result<ConfigDocument> {
    ConfigDocument::load_or_builtin(config).with_context(|| format!("loading config {config}"))
}

/// File-name form of an angle: `47`, `22.5`.
pub fn phi_tag(phi: f64) -> String {
    format!("phi{phi}")
}

/// Model curves of one configuration and the detection effects that turn
/// them into measured curves.
pub struct AnalyticModel {
    pub doc: ConfigDocument,
    pub hash: String,
    pub g1: CorrelationSeries,
    pub g2: CorrelationSeries,
    pub detector: DetectorModel,
    /// Collected-mode photon rate of one ion, 1/µs.
    pub collected_rate: f64,
    /// Detected signal of one detector, counts/s.
    pub signal_rate: f64,
    pub background: BackgroundMix,
}

impl AnalyticModel {
    pub fn new(doc: &ConfigDocument) -> Result<Self> {
        let cfg = doc.system()?;
        let l = Liouvillian::from_config(&cfg)?;
        let rho = steady_state(&l)?;
        let sigma = collection_operator(&cfg, &doc.detection.collection_weights)?;
        let (g1, g2) = g1_g2(&l, &rho, &sigma, &doc.tau_grid())?;
        let collected_rate = (sigma.adjoint() * &sigma * rho.matrix()).trace().re;
        let detector = doc.detector()?;
        let signal_rate = collected_count_rate(collected_rate, &doc.collection_chain()?, &detector);
        let background = accidental_floor(signal_rate, doc.detection.dark_rate, doc.detection.stray_rate)?;
        Ok(AnalyticModel {
            doc: doc.clone(),
            hash: doc.hash(),
            g1,
            g2,
            detector,
            collected_rate,
            signal_rate,
            background,
        })
    }

    pub fn hom(&self, phi_deg: f64) -> Result<CorrelationSeries> {
        Ok(hom_g2_tot(&self.g1, &self.g2, phi_deg)?)
    }

    /// Response convolution followed by the accidental floor.
    pub fn detected(&self, series: &CorrelationSeries) -> Result<CorrelationSeries> {
        Ok(self.background.apply(&convolve_response(series, &self.detector)?)?)
    }

    fn header(&self) -> Header {
        Header::new().with("config_hash", &self.hash)
    }
}

/// Bin averages of an even curve at centres `k·bin`, |k·bin| ≤ window.
pub fn binned(series: &CorrelationSeries, bin_ns: f64, window_ns: f64) -> Result<Vec<(f64, f64)>> {
    let k = (window_ns / bin_ns).round() as i64;
    (-k..=k)
        .map(|i| {
            let c = i as f64 * bin_ns;
            Ok((c, at_resolution(series, c, bin_ns)?))
        })
        .collect()
}

pub struct SpectrumArgs {
    pub config: String,
    pub out: PathBuf,
    pub scan: ScanTarget,
    pub from: f64,
    pub to: f64,
    pub points: usize,
    /// Report counts/s instead of P-state population.
    pub counts: bool,
}

pub fn cmd_spectrum(args: &SpectrumArgs) -> Result<PathBuf> {
    let doc = load(&args.config)?;
    if args.points < 2 || args.to.partial_cmp(&args.from) != Some(std::cmp::Ordering::Greater) {
        return Err(hom_core::Error::InvalidInput("scan needs --to > --from and at least 2 points".into()).into());
    }
    prepare_out(&args.out)?;
    let cfg = doc.system()?;
    let step = (args.to - args.from) / (args.points - 1) as f64;
    let grid: Vec<f64> = (0..args.points).map(|i| args.from + i as f64 * step).collect();
    let mut spectrum = excitation_spectrum(&cfg, args.scan, &grid)?;
    if args.counts {
        let k = counts_per_population(&cfg, &doc.collection_chain()?, &doc.detector()?);
        spectrum = spectrum.to_count_rate(k)?;
    }
    let name = match args.scan {
        ScanTarget::Green => "spectrum_green.csv",
        ScanTarget::Red => "spectrum_red.csv",
    };
    let path = args.out.join(name);
    write_file(&path, &spectrum_csv(&spectrum, &Header::new().with("config_hash", doc.hash())))?;
    RunManifest {
        subcommand: "spectrum".into(),
        config: args.config.clone(),
        out: args.out.clone(),
        seed: None,
        config_hash: doc.hash(),
    }
    .write(std::slice::from_ref(&path))?;
    Ok(path)
}

pub struct CorrelationsArgs {
    pub config: String,
    pub out: PathBuf,
    pub bin_ns: Option<f64>,
    pub window_ns: Option<f64>,
}

pub struct CorrelationsSummary {
    pub files: Vec<PathBuf>,
    pub g2_zero: f64,
    pub g2_zero_detected: f64,
    pub background_fraction: f64,
}

/// Single-ion g1 and g2, plus the g2 a detector would record.
pub fn cmd_correlations(args: &CorrelationsArgs) -> Result<CorrelationsSummary> {
    let doc = load(&args.config)?;
    prepare_out(&args.out)?;
    let m = AnalyticModel::new(&doc)?;
    let bin = args.bin_ns.unwrap_or(doc.simulation.bin_ns);
    let window = args.window_ns.unwrap_or(doc.simulation.window_ns);

    let mut files = Vec::new();
    for (name, s) in [("g1.csv", &m.g1), ("g2.csv", &m.g2)] {
        let path = args.out.join(name);
        write_file(&path, &series_csv(s, &m.header()))?;
        files.push(path);
    }
    let detected = m.detected(&m.g2)?;
    let rows = binned(&detected, bin, window)?;
    let header = m
        .header()
        .with("bin_ns", bin)
        .with("response_fwhm_ns", m.detector.response_fwhm_ns)
        .with("background_fraction", m.background.fraction);
    let path = args.out.join("g2_detected.csv");
    write_file(&path, &table_csv(["tau_ns", "g2_detected"], &rows, &header))?;
    files.push(path);

    let g2_zero = m.g2.real().unwrap()[0];
    let g2_zero_detected = at_resolution(&detected, 0.0, bin)?;
    let path = args.out.join("rates.txt");
    write_file(
        &path,
        &key_values(&[
            ("config_hash", m.hash.clone()),
            ("collected_rate_per_us", m.collected_rate.to_string()),
            ("signal_rate_per_s", m.signal_rate.to_string()),
            ("background_fraction", m.background.fraction.to_string()),
            ("g2_zero_model", g2_zero.to_string()),
            ("g2_zero_detected", g2_zero_detected.to_string()),
        ]),
    )?;
    files.push(path);
    RunManifest {
        subcommand: "correlations".into(),
        config: args.config.clone(),
        out: args.out.clone(),
        seed: None,
        config_hash: m.hash.clone(),
    }
    .write(&files)?;
    Ok(CorrelationsSummary {
        files,
        g2_zero,
        g2_zero_detected,
        background_fraction: m.background.fraction,
    })
}

pub struct HomArgs {
    pub config: String,
    pub out: PathBuf,
    pub phi: Vec<f64>,
    pub bin_ns: Option<f64>,
    pub window_ns: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HomRow {
    pub phi_deg: f64,
    /// Model g2tot(0).
    pub zero: f64,
    /// Detected g2tot in the bin centred on 0.
    pub zero_detected: f64,
    pub contrast: f64,
    pub contrast_detected: f64,
    /// Detected bin centres and values.
    pub detected: Vec<(f64, f64)>,
}

pub struct HomSummary {
    pub files: Vec<PathBuf>,
    pub rows: Vec<HomRow>,
    pub nutation_reduction: Option<f64>,
    pub background_fraction: f64,
}

fn check_phis(phis: &[f64]) -> Result<()> {
    if phis.is_empty() {
        return Err(hom_core::Error::InvalidInput("--phi needs at least one angle".into()).into());
    }
    if let Some(p) = phis.iter().find(|p| !(0.0..=90.0).contains(*p)) {
        return Err(hom_core::Error::InvalidInput(format!("--phi: {p} is outside [0, 90] degrees")).into());
    }
    Ok(())
}

/// Cross-port correlation behind the beam splitter for each angle, with
/// contrasts against the orthogonal case.
pub fn cmd_hom(args: &HomArgs) -> Result<HomSummary> {
    check_phis(&args.phi)?;
    let doc = load(&args.config)?;
    prepare_out(&args.out)?;
    let m = AnalyticModel::new(&doc)?;
    let bin = args.bin_ns.unwrap_or(doc.simulation.bin_ns);
    let window = args.window_ns.unwrap_or(doc.simulation.window_ns);

    let orth = m.hom(90.0)?;
    let orth_det = m.detected(&orth)?;
    let orth_zero = at_resolution(&orth, 0.0, 0.0)?;
    let orth_zero_det = at_resolution(&orth_det, 0.0, bin)?;

    let mut files = Vec::new();
    let mut rows = Vec::new();
    for &phi in &args.phi {
        let s = m.hom(phi)?;
        let header = m.header().with("phi_deg", phi);
        let path = args.out.join(format!("hom_{}.csv", phi_tag(phi)));
        write_file(&path, &series_csv(&s, &header))?;
        files.push(path);

        let det = m.detected(&s)?;
        let detected = binned(&det, bin, window)?;
        let header = header
            .with("bin_ns", bin)
            .with("response_fwhm_ns", m.detector.response_fwhm_ns)
            .with("background_fraction", m.background.fraction);
        let path = args.out.join(format!("hom_{}_detected.csv", phi_tag(phi)));
        write_file(&path, &table_csv(["tau_ns", "g2tot_detected"], &detected, &header))?;
        files.push(path);

        let zero = at_resolution(&s, 0.0, 0.0)?;
        let zero_detected = at_resolution(&det, 0.0, bin)?;
        rows.push(HomRow {
            phi_deg: phi,
            zero,
            zero_detected,
            contrast: contrast(zero, 0.0, orth_zero, 0.0)?.value,
            contrast_detected: contrast(zero_detected, 0.0, orth_zero_det, 0.0)?.value,
            detected,
        });
    }

    let nutation = nutation_reduction(&m.hom(0.0)?, &orth)?;
    let report = vec![
        ("config_hash", m.hash.clone()),
        ("bin_ns", bin.to_string()),
        ("response_fwhm_ns", m.detector.response_fwhm_ns.to_string()),
        ("background_fraction", m.background.fraction.to_string()),
        (
            "nutation_reduction",
            nutation.map_or_else(|| "none".to_string(), |v| v.to_string()),
        ),
    ];
    let mut text = key_values(&report);
    for r in &rows {
        writeln!(text, "contrast_{}={}", phi_tag(r.phi_deg), r.contrast)?;
        writeln!(text, "contrast_detected_{}={}", phi_tag(r.phi_deg), r.contrast_detected)?;
    }
    let path = args.out.join("contrast.txt");
    write_file(&path, &text)?;
    files.push(path);

    let mut scan = m.header().with("bin_ns", bin).render();
    scan.push_str("phi_deg,g2tot_zero,half_sin2,g2tot_zero_detected\n");
    for r in &rows {
        let half_sin2 = 0.5 * r.phi_deg.to_radians().sin().powi(2);
        writeln!(scan, "{},{},{},{}", r.phi_deg, r.zero, half_sin2, r.zero_detected)?;
    }
    let path = args.out.join("polarization_scan.csv");
    write_file(&path, &scan)?;
    files.push(path);

    RunManifest {
        subcommand: "hom".into(),
        config: args.config.clone(),
        out: args.out.clone(),
        seed: None,
        config_hash: m.hash.clone(),
    }
    .write(&files)?;
    Ok(HomSummary {
        files,
        rows,
        nutation_reduction: nutation,
        background_fraction: m.background.fraction,
    })
}

pub struct SimulateArgs {
    pub config: String,
    pub out: PathBuf,
    pub phi: Vec<f64>,
    pub duration_s: Option<f64>,
    pub seed: Option<u64>,
    /// Unit efficiency, no jitter, background or dead time.
    pub ideal_detector: bool,
}

pub struct SimulateSummary {
    pub files: Vec<PathBuf>,
    pub photons_ion1: usize,
    pub photons_ion2: usize,
    pub seconds: f64,
}

/// Two-ion Monte Carlo run behind the beam splitter, one time-tag file
/// per angle. The ion streams are shared between angles.
pub fn cmd_simulate(args: &SimulateArgs) -> Result<SimulateSummary> {
    check_phis(&args.phi)?;
    let doc = load(&args.config)?;
    prepare_out(&args.out)?;
    let start = Instant::now();
    let mut traj = doc.trajectory()?;
    if let Some(d) = args.duration_s {
        traj = traj.with_duration(d)?;
    }
    if let Some(s) = args.seed {
        traj = traj.with_seed(s);
    }
    let cfg = doc.system()?;
    let weights = doc.detection.collection_weights;
    let hash = doc.hash();

    // the veto needs g1 out to where it has decayed
    let l = Liouvillian::from_config(&cfg)?;
    let rho = steady_state(&l)?;
    let sigma = collection_operator(&cfg, &weights)?;
    let (g1, _) = g1_g2(&l, &rho, &sigma, &doc.tau_grid())?;

    eprintln!("simulating ion 1 for {} s", traj.duration_s);
    let s1 = mcwf_photon_stream(&cfg, &weights, &traj, Origin::Ion1)?;
    eprintln!("simulating ion 2 for {} s", traj.duration_s);
    let s2 = mcwf_photon_stream(&cfg, &weights, &traj, Origin::Ion2)?;

    // Streams carry every collected-mode photon; only the detector
    // efficiency thins them. Background is scaled by the same missing
    // collection factor so the background fraction matches the model.
    let (det, background_rate) = if args.ideal_detector {
        (DetectorModel::ideal(), 0.0)
    } else {
        (doc.detector()?, doc.background_rate() / doc.collection_chain()?.efficiency())
    };

    let mut files = Vec::new();
    for &phi in &args.phi {
        let routed = route_and_interfere(
            &s1,
            &s2,
            &g1,
            &det,
            &RouteConfig {
                phi_deg: phi,
                seed: traj.seed,
                duration_ps: traj.duration_ps(),
                background_rate,
            },
        )?;
        eprintln!(
            "phi={phi}: I3 {} I4 {} vetoed {}",
            routed.i3.len(),
            routed.i4.len(),
            routed.vetoed
        );
        let tags = TimeTags {
            i3: times(&routed.i3),
            i4: times(&routed.i4),
        };
        let meta = RunMetadata {
            duration_s: traj.duration_s,
            seed: traj.seed,
            config_hash: hash.clone(),
            phi_deg: Some(phi),
        };
        let path = args.out.join(format!("tags_{}.htag", phi_tag(phi)));
        write_timetags(&path, &tags, Some(&meta)).with_context(|| format!("writing {}", path.display()))?;
        files.push(path);
    }
    RunManifest {
        subcommand: "simulate".into(),
        config: args.config.clone(),
        out: args.out.clone(),
        seed: Some(traj.seed),
        config_hash: hash,
    }
    .write(&files)?;
    Ok(SimulateSummary {
        files,
        photons_ion1: s1.len(),
        photons_ion2: s2.len(),
        seconds: start.elapsed().as_secs_f64(),
    })
}

pub struct CorrelateArgs {
    pub files: Vec<PathBuf>,
    pub out: PathBuf,
    pub bin_ns: f64,
    pub window_ns: f64,
    pub mode: Mode,
    pub start: StartChannel,
    /// Run length when a file has no sidecar, s.
    pub duration_s: Option<f64>,
}

/// Cross-correlation histogram of each time-tag file.
pub fn cmd_correlate(args: &CorrelateArgs) -> Result<Vec<(PathBuf, HistogramResult)>> {
    if args.files.is_empty() {
        return Err(hom_core::Error::InvalidInput("no time-tag files given".into()).into());
    }
    let hc = HistogramConfig::new(args.bin_ns, args.window_ns, args.mode)?.with_start(args.start);
    prepare_out(&args.out)?;
    let mut results = Vec::new();
    let mut hashes = Vec::new();
    for file in &args.files {
        let (tags, meta) = read_timetags(file).with_context(|| format!("reading {}", file.display()))?;
        let duration = match (&meta, args.duration_s) {
            (_, Some(d)) => d,
            (Some(m), None) => m.duration_s,
            (None, None) => {
                return Err(hom_core::Error::InvalidInput(format!(
                    "{}: no metadata sidecar; pass --duration",
                    file.display()
                ))
                .into())
            }
        };
        let h = correlate_tags(&tags, &hc, duration).with_context(|| format!("correlating {}", file.display()))?;
        let mut header = Header::new().with("source", file.file_name().unwrap_or_default().to_string_lossy());
        if let Some(m) = &meta {
            header = header.with("config_hash", &m.config_hash).with("seed", m.seed);
            if let Some(phi) = m.phi_deg {
                header = header.with("phi_deg", phi);
            }
            hashes.push(m.config_hash.clone());
        }
        let stem = file.file_stem().unwrap_or_default().to_string_lossy();
        let path = args.out.join(format!("{stem}_{}.csv", args.mode.name()));
        write_file(&path, &histogram_csv(&h, &header))?;
        results.push((path, h));
    }
    hashes.dedup();
    let files: Vec<PathBuf> = results.iter().map(|(p, _)| p.clone()).collect();
    RunManifest {
        subcommand: "correlate".into(),
        config: args
            .files
            .iter()
            .map(|f| f.to_string_lossy().into_owned())
            .collect::<Vec<_>>()
            .join(","),
        out: args.out.clone(),
        seed: None,
        config_hash: hashes.join(","),
    }
    .write(&files)?;
    Ok(results)
}
