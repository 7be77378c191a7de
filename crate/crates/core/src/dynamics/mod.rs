//! Steady states, time evolution, excitation spectra and fluorescence
//! correlation functions of the single-ion master equation.
//!
//! Lags are given in ns at every public interface and converted to µs
//! (the unit of the generator's rates) right before exponentiation.

mod correlation;
mod series;
mod spectrum;

use std::cell::RefCell;
use std::collections::HashMap;

use crate::ion_model::Liouvillian;
use crate::linalg::{
    c, hermitian_eigenvalues, hermitian_part, is_hermitian, trace, unvectorize, vectorize, CMatrix,
    CVector,
};
use crate::{Error, Result};

pub use correlation::{collection_operator, g1, g1_g2, g1_raw, g2, g2_raw, normalized_weights, RawCorrelation};
pub use series::{CorrelationSeries, Normalization, SeriesKind, SeriesValues};
pub use spectrum::{excitation_spectrum, PointOutcome, ScanTarget, Spectrum, SpectrumPoint, SpectrumUnit};

pub const NS_PER_US: f64 = 1e3;

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !is_hermitian(&matrix, 1e-10) {
            return Err(Error::input("density matrix is not Hermitian within 1e-10"));
        }
        let tr = trace(&matrix);
        if (tr - c(1.0)).norm() > 1e-10 {
            return Err(Error::input(format!("density matrix trace is {tr}, expected 1")));
        }
        let min = hermitian_eigenvalues(&matrix)[0];
        if min < -1e-8 {
            return Err(Error::input(format!(
                "density matrix has negative eigenvalue {min}"
            )));
        }
        Ok(DensityMatrix { matrix })
    }

    /// Pure state `|k><k|`.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut m = CMatrix::zeros(dim, dim);
        m[(k, k)] = c(1.0);
        DensityMatrix { matrix: m }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn population(&self, indices: impl IntoIterator<Item = usize>) -> f64 {
        indices.into_iter().map(|i| self.matrix[(i, i)].re).sum()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.matrix)[0]
    }
}

/// Unique trace-one kernel vector of the generator.
///
/// The kernel dimension is read off the singular values; anything other than
/// a one-dimensional kernel is reported rather than resolved arbitrarily.
pub fn steady_state(l: &Liouvillian) -> Result<DensityMatrix> {
    let d = l.dim();
    let m = l.matrix();
    let svd = m.clone().svd(false, false);
    let sv = &svd.singular_values;
    let sigma_max = sv.iter().copied().fold(0.0, f64::max);
    let tol = 64.0 * f64::EPSILON * sigma_max.max(1.0);
    let kernel_dim = sv.iter().filter(|&&s| s <= tol).count();
    if kernel_dim > 1 {
        return Err(Error::DegenerateSteadyState { kernel_dim });
    }

    // Trace condition replaces the (0,0) population equation, which is
    // linearly dependent on the other population equations.
    let mut a = m.clone();
    let trace_row = vectorize(&CMatrix::identity(d, d));
    for j in 0..d * d {
        a[(0, j)] = trace_row[j];
    }
    let mut rhs = CVector::zeros(d * d);
    rhs[0] = c(1.0);
    let x = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("steady-state system is singular".into()))?;

    let rho = hermitian_part(&unvectorize(&x, d));
    let residual = (m * vectorize(&rho)).norm();
    if residual > 1e-9 * (1.0 + sigma_max * 1e-3) {
        return Err(Error::Numerical(format!(
            "steady-state residual {residual:e} exceeds tolerance"
        )));
    }
    DensityMatrix::new(rho)
}

/// Caches `exp(L Δ)` for each distinct step Δ.
pub struct Propagator<'a> {
    l: &'a Liouvillian,
    cache: RefCell<HashMap<i64, CMatrix>>,
}

impl<'a> Propagator<'a> {
    pub fn new(l: &'a Liouvillian) -> Self {
        Propagator {
            l,
            cache: RefCell::new(HashMap::new()),
        }
    }

    fn step_matrix(&self, dt_ns: f64) -> CMatrix {
        // steps differing only by rounding noise of the grid share one entry
        let key = (dt_ns * 1e12).round() as i64;
        self.cache
            .borrow_mut()
            .entry(key)
            .or_insert_with(|| (self.l.matrix() * c(dt_ns / NS_PER_US)).exp())
            .clone()
    }

    pub fn evolve(&self, x: &CVector, t_ns: f64) -> Result<CVector> {
        if !(t_ns >= 0.0) || !t_ns.is_finite() {
            return Err(Error::input(format!("propagation time must be finite and >= 0, got {t_ns}")));
        }
        if t_ns == 0.0 {
            return Ok(x.clone());
        }
        Ok(self.step_matrix(t_ns) * x)
    }

    /// Evaluates `f(exp(L τ) x)` for every τ of an increasing grid.
    pub fn scan<T>(&self, x0: &CVector, tau_ns: &[f64], mut f: impl FnMut(&CVector) -> T) -> Result<Vec<T>> {
        validate_tau_grid(tau_ns)?;
        let mut out = Vec::with_capacity(tau_ns.len());
        let mut x = self.evolve(x0, tau_ns[0])?;
        out.push(f(&x));
        for w in tau_ns.windows(2) {
            let step = self.step_matrix(w[1] - w[0]);
            x = step * x;
            out.push(f(&x));
        }
        Ok(out)
    }
}

pub(crate) fn validate_tau_grid(tau_ns: &[f64]) -> Result<()> {
    if tau_ns.is_empty() {
        return Err(Error::input("empty lag grid"));
    }
    if tau_ns[0] != 0.0 {
        return Err(Error::input("lag grid must start at 0"));
    }
    if tau_ns.iter().any(|t| !t.is_finite()) || tau_ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::input("lag grid must be finite and strictly increasing"));
    }
    Ok(())
}

/// `exp(L t) ρ0`, t in ns.
pub fn propagate(l: &Liouvillian, rho0: &DensityMatrix, t_ns: f64) -> Result<DensityMatrix> {
    if !(t_ns >= 0.0) || !t_ns.is_finite() {
        return Err(Error::input(format!("propagation time must be finite and >= 0, got {t_ns}")));
    }
    if t_ns == 0.0 {
        return Ok(rho0.clone());
    }
    let x = Propagator::new(l).evolve(&vectorize(rho0.matrix()), t_ns)?;
    let rho = hermitian_part(&unvectorize(&x, l.dim()));
    DensityMatrix::new(rho)
}
