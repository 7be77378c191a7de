//! CSV and key=value text output. Metadata goes in leading `#` lines.

use std::fmt::Write;

use crate::correlator::HistogramResult;
use crate::dynamics::{CorrelationSeries, PointOutcome, SeriesValues, Spectrum, SpectrumUnit};

/// Ordered `# key=value` header block.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Header(Vec<(String, String)>);

impl Header {
    pub fn new() -> Self {
        Header::default()
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.0.push((key.to_string(), value.to_string()));
        self
    }

    pub fn render(&self) -> String {
        self.0.iter().map(|(k, v)| format!("# {k}={v}\n")).collect()
    }
}

pub fn series_csv(series: &CorrelationSeries, header: &Header) -> String {
    let mut out = header.clone().with("kind", series.kind.label()).render();
    match &series.values {
        SeriesValues::Complex(v) => {
            out.push_str("tau_ns,re,im\n");
            for (t, z) in series.tau_ns.iter().zip(v) {
                writeln!(out, "{t},{},{}", z.re, z.im).unwrap();
            }
        }
        SeriesValues::Real(v) => {
            out.push_str(&format!("tau_ns,{}\n", series.kind.label()));
            for (t, x) in series.tau_ns.iter().zip(v) {
                writeln!(out, "{t},{x}").unwrap();
            }
        }
    }
    out
}

/// Two-column table with a named value column.
pub fn table_csv(columns: [&str; 2], rows: &[(f64, f64)], header: &Header) -> String {
    let mut out = header.render();
    writeln!(out, "{},{}", columns[0], columns[1]).unwrap();
    for (a, b) in rows {
        writeln!(out, "{a},{b}").unwrap();
    }
    out
}

pub fn histogram_csv(h: &HistogramResult, header: &Header) -> String {
    let mut out = header
        .clone()
        .with("mode", h.mode.name())
        .with("bin_ns", h.bin_ns)
        .with("window_ns", h.window_ns)
        .with("lag", h.start.lag_label())
        .with("rate_i3_per_s", h.rate_a)
        .with("rate_i4_per_s", h.rate_b)
        .with("duration_s", h.duration_s)
        .render();
    out.push_str("tau_ns,counts,g2,stderr,g2_plateau,stderr_plateau\n");
    for i in 0..h.counts.len() {
        let (gp, sp) = match (&h.g2_plateau, &h.stderr_plateau) {
            (Some(g), Some(s)) => (g[i].to_string(), s[i].to_string()),
            _ => (String::new(), String::new()),
        };
        writeln!(
            out,
            "{},{},{},{},{gp},{sp}",
            h.bin_centers_ns[i], h.counts[i], h.g2[i], h.stderr[i]
        )
        .unwrap();
    }
    out
}

pub fn spectrum_csv(s: &Spectrum, header: &Header) -> String {
    let unit = match s.unit {
        SpectrumUnit::Population => "population",
        SpectrumUnit::CountsPerSecond => "counts_per_s",
    };
    let mut out = header.clone().with("scan", format!("{:?}", s.target).to_lowercase()).render();
    writeln!(out, "detuning_rad_per_us,{unit},status").unwrap();
    for p in &s.points {
        match p.outcome {
            PointOutcome::Value(v) => writeln!(out, "{},{v},ok", p.detuning).unwrap(),
            PointOutcome::Degenerate { kernel_dim } => {
                writeln!(out, "{},,degenerate(kernel_dim={kernel_dim})", p.detuning).unwrap()
            }
        }
    }
    out
}

/// Plain `key=value` lines.
pub fn key_values(pairs: &[(&str, String)]) -> String {
    pairs.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}
