use num_complex::Complex64;

use super::{validate_tau_grid, CorrelationSeries, DensityMatrix, Normalization, Propagator, SeriesKind};
use crate::ion_model::{build_jump_operators, Liouvillian, SystemConfig, Term, SPHERICAL_COMPONENTS};
use crate::linalg::{c, dot_unconjugated, trace, trace_functional, vectorize, CMatrix};
use crate::{Error, Result};

/// Scales a (σ⁻, π, σ⁺) weight vector to unit norm.
pub fn normalized_weights(weights: &[Complex64; 3]) -> Result<[Complex64; 3]> {
    let norm = weights.iter().map(|w| w.norm_sqr()).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::input("collection weights must be finite and not all zero"));
    }
    Ok(weights.map(|w| w / norm))
}

/// Collected-mode lowering operator `Σ = Σ_q u_q A_q` over the green
/// (P1/2 → S1/2) jump operators, with `u` the normalised weights.
pub fn collection_operator(config: &SystemConfig, weights: &[Complex64; 3]) -> Result<CMatrix> {
    let u = normalized_weights(weights)?;
    let d = config.scheme.dim();
    let mut sigma = CMatrix::zeros(d, d);
    for op in build_jump_operators(config)? {
        if op.channel.1 != Term::S12 {
            continue;
        }
        let slot = SPHERICAL_COMPONENTS
            .iter()
            .position(|&q| q == op.q)
            .expect("q is a spherical component");
        sigma += &op.matrix * u[slot];
    }
    Ok(sigma)
}

/// Unnormalised regression values together with the collected photon rate
/// `n = Tr(Σ†Σ ρ)` in 1/µs.
#[derive(Clone, Debug, PartialEq)]
pub struct RawCorrelation {
    pub tau_ns: Vec<f64>,
    pub values: Vec<Complex64>,
    pub rate: f64,
}

fn emission_rate(rho: &DensityMatrix, sigma: &CMatrix) -> Result<f64> {
    let n = trace(&(sigma.adjoint() * sigma * rho.matrix())).re;
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::NoSignal);
    }
    Ok(n)
}

fn check_dims(l: &Liouvillian, rho: &DensityMatrix, sigma: &CMatrix) -> Result<()> {
    let d = l.dim();
    if rho.dim() != d || sigma.nrows() != d || sigma.ncols() != d {
        return Err(Error::input(format!(
            "dimension mismatch: generator {d}, state {}, collection operator {}x{}",
            rho.dim(),
            sigma.nrows(),
            sigma.ncols()
        )));
    }
    Ok(())
}

/// `G1(τ) = Tr[Σ e^{Lτ}(ρ Σ†)]`.
pub fn g1_raw(l: &Liouvillian, rho: &DensityMatrix, sigma: &CMatrix, tau_ns: &[f64]) -> Result<RawCorrelation> {
    g1_with(&Propagator::new(l), l, rho, sigma, tau_ns)
}

/// `G2(τ) = Tr[Σ†Σ e^{Lτ}(Σ ρ Σ†)]`.
pub fn g2_raw(l: &Liouvillian, rho: &DensityMatrix, sigma: &CMatrix, tau_ns: &[f64]) -> Result<RawCorrelation> {
    g2_with(&Propagator::new(l), l, rho, sigma, tau_ns)
}

pub(crate) fn g1_with(
    p: &Propagator<'_>,
    l: &Liouvillian,
    rho: &DensityMatrix,
    sigma: &CMatrix,
    tau_ns: &[f64],
) -> Result<RawCorrelation> {
    check_dims(l, rho, sigma)?;
    validate_tau_grid(tau_ns)?;
    let rate = emission_rate(rho, sigma)?;
    let x0 = vectorize(&(rho.matrix() * sigma.adjoint()));
    let f = trace_functional(sigma);
    let values = p.scan(&x0, tau_ns, |x| dot_unconjugated(&f, x))?;
    Ok(RawCorrelation {
        tau_ns: tau_ns.to_vec(),
        values,
        rate,
    })
}

pub(crate) fn g2_with(
    p: &Propagator<'_>,
    l: &Liouvillian,
    rho: &DensityMatrix,
    sigma: &CMatrix,
    tau_ns: &[f64],
) -> Result<RawCorrelation> {
    check_dims(l, rho, sigma)?;
    validate_tau_grid(tau_ns)?;
    let rate = emission_rate(rho, sigma)?;
    let post_jump = sigma * rho.matrix() * sigma.adjoint();
    let number = sigma.adjoint() * sigma;
    let f = trace_functional(&number);
    let mut values = p.scan(&vectorize(&post_jump), tau_ns, |x| dot_unconjugated(&f, x))?;
    // τ = 0 straight from the conditional state, no propagation round-off
    values[0] = trace(&(&number * &post_jump));
    Ok(RawCorrelation {
        tau_ns: tau_ns.to_vec(),
        values,
        rate,
    })
}

/// Normalised first-order correlation, exactly 1 at τ = 0.
pub fn g1(l: &Liouvillian, rho: &DensityMatrix, sigma: &CMatrix, tau_ns: &[f64]) -> Result<CorrelationSeries> {
    normalize_g1(g1_raw(l, rho, sigma, tau_ns)?)
}

/// Normalised intensity correlation.
pub fn g2(l: &Liouvillian, rho: &DensityMatrix, sigma: &CMatrix, tau_ns: &[f64]) -> Result<CorrelationSeries> {
    normalize_g2(g2_raw(l, rho, sigma, tau_ns)?)
}

/// Both normalised correlations, sharing one propagator cache.
pub fn g1_g2(
    l: &Liouvillian,
    rho: &DensityMatrix,
    sigma: &CMatrix,
    tau_ns: &[f64],
) -> Result<(CorrelationSeries, CorrelationSeries)> {
    let p = Propagator::new(l);
    let a = normalize_g1(g1_with(&p, l, rho, sigma, tau_ns)?)?;
    let b = normalize_g2(g2_with(&p, l, rho, sigma, tau_ns)?)?;
    Ok((a, b))
}

fn normalize_g1(raw: RawCorrelation) -> Result<CorrelationSeries> {
    let n = c(raw.rate);
    let mut v: Vec<Complex64> = raw.values.iter().map(|z| z / n).collect();
    v[0] = c(1.0);
    CorrelationSeries::new_complex(SeriesKind::G1, Normalization::Normalized, raw.tau_ns, v)
}

fn normalize_g2(raw: RawCorrelation) -> Result<CorrelationSeries> {
    let n2 = raw.rate * raw.rate;
    let v = raw.values.iter().map(|z| z.re / n2).collect();
    CorrelationSeries::new_real(SeriesKind::G2, Normalization::Normalized, raw.tau_ns, v)
}
