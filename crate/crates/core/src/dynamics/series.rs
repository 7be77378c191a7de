use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeriesKind {
    G1,
    G2,
    G2Tot,
}

impl SeriesKind {
    pub fn label(self) -> &'static str {
        match self {
            SeriesKind::G1 => "g1",
            SeriesKind::G2 => "g2",
            SeriesKind::G2Tot => "g2tot",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Normalization {
    Raw,
    Normalized,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SeriesValues {
    Complex(Vec<Complex64>),
    Real(Vec<f64>),
}

/// A correlation function sampled on a lag grid that starts at τ = 0.
///
/// Negative lags are implied: g⁽¹⁾(-τ) = g⁽¹⁾(τ)* and the intensity
/// correlations are even in τ.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationSeries {
    pub kind: SeriesKind,
    pub normalization: Normalization,
    pub tau_ns: Vec<f64>,
    pub values: SeriesValues,
}

impl CorrelationSeries {
    pub fn new_complex(kind: SeriesKind, normalization: Normalization, tau_ns: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        Self::checked(kind, normalization, tau_ns, SeriesValues::Complex(values))
    }

    pub fn new_real(kind: SeriesKind, normalization: Normalization, tau_ns: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::checked(kind, normalization, tau_ns, SeriesValues::Real(values))
    }

    fn checked(kind: SeriesKind, normalization: Normalization, tau_ns: Vec<f64>, values: SeriesValues) -> Result<Self> {
        super::validate_tau_grid(&tau_ns)?;
        let n = match &values {
            SeriesValues::Complex(v) => v.len(),
            SeriesValues::Real(v) => v.len(),
        };
        if n != tau_ns.len() {
            return Err(Error::input(format!(
                "series has {n} values for {} lags",
                tau_ns.len()
            )));
        }
        match (&values, kind) {
            (SeriesValues::Complex(_), SeriesKind::G1) => {}
            (SeriesValues::Real(v), SeriesKind::G2 | SeriesKind::G2Tot) => {
                if normalization == Normalization::Normalized && v.iter().any(|x| *x < -1e-9 || !x.is_finite()) {
                    return Err(Error::input("normalized intensity correlation must be real and >= 0"));
                }
            }
            _ => return Err(Error::input("g1 series are complex, g2 series are real")),
        }
        Ok(CorrelationSeries {
            kind,
            normalization,
            tau_ns,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.tau_ns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau_ns.is_empty()
    }

    pub fn real(&self) -> Option<&[f64]> {
        match &self.values {
            SeriesValues::Real(v) => Some(v),
            SeriesValues::Complex(_) => None,
        }
    }

    pub fn complex(&self) -> Option<&[Complex64]> {
        match &self.values {
            SeriesValues::Complex(v) => Some(v),
            SeriesValues::Real(_) => None,
        }
    }

    /// Value at grid index `i` as a complex number.
    pub fn at(&self, i: usize) -> Complex64 {
        match &self.values {
            SeriesValues::Complex(v) => v[i],
            SeriesValues::Real(v) => Complex64::new(v[i], 0.0),
        }
    }

    pub fn abs_squared(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.at(i).norm_sqr()).collect()
    }

    pub fn same_grid(&self, other: &CorrelationSeries) -> bool {
        self.tau_ns.len() == other.tau_ns.len()
            && self.tau_ns.iter().zip(&other.tau_ns).all(|(a, b)| a == b)
    }

    /// Grid spacing when the grid is uniform to 1e-9 relative.
    pub fn uniform_step(&self) -> Option<f64> {
        if self.len() < 2 {
            return None;
        }
        let step = self.tau_ns[1] - self.tau_ns[0];
        let ok = self
            .tau_ns
            .iter()
            .enumerate()
            .all(|(i, t)| (t - i as f64 * step).abs() <= 1e-9 * step.max(t.abs()));
        ok.then_some(step)
    }

    /// Linear interpolation at any lag, using the parity of the series for
    /// τ < 0. Returns `None` beyond the end of the grid.
    pub fn interpolate(&self, tau_ns: f64) -> Option<Complex64> {
        let t = tau_ns.abs();
        let last = *self.tau_ns.last()?;
        if t > last {
            return None;
        }
        let i = self.tau_ns.partition_point(|&x| x <= t).saturating_sub(1);
        let v = if i + 1 >= self.len() {
            self.at(i)
        } else {
            let (t0, t1) = (self.tau_ns[i], self.tau_ns[i + 1]);
            let w = (t - t0) / (t1 - t0);
            self.at(i) * (1.0 - w) + self.at(i + 1) * w
        };
        Some(if tau_ns < 0.0 { v.conj() } else { v })
    }

    /// Symmetric series over `-τmax..=τmax` (lags, values).
    pub fn mirrored(&self) -> (Vec<f64>, Vec<Complex64>) {
        let n = self.len();
        let mut taus = Vec::with_capacity(2 * n - 1);
        let mut vals = Vec::with_capacity(2 * n - 1);
        for i in (1..n).rev() {
            taus.push(-self.tau_ns[i]);
            vals.push(self.at(i).conj());
        }
        for i in 0..n {
            taus.push(self.tau_ns[i]);
            vals.push(self.at(i));
        }
        (taus, vals)
    }
}
