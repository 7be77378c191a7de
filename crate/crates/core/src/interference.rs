//! Two emitters combined on a 50/50 beam splitter.
//!
//! The detectors behind the two output ports see the cross correlation
//!
//! ```text
//! g2_tot(τ, φ) = ½ g2(τ) + ½ [1 - cos²φ |g1(τ)|²]
//! ```
//!
//! for identical emitters whose polarisations enclose the angle φ, after
//! averaging over the random optical path phase between the two sources.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{CorrelationSeries, Normalization, RawCorrelation, SeriesKind};
use crate::{Error, Result};

/// Lossless symmetric beam splitter with `-i t = r = 1/√2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeamSplitter;

impl BeamSplitter {
    pub fn transmission(self) -> Complex64 {
        Complex64::new(0.0, std::f64::consts::FRAC_1_SQRT_2)
    }

    pub fn reflection(self) -> Complex64 {
        Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomConfig {
    /// Angle between the two photon polarisations, degrees in [0, 90].
    pub phi_deg: f64,
    /// Detected rate of each emitter, counts/s.
    pub mean_rate_each: f64,
}

impl HomConfig {
    pub fn new(phi_deg: f64, mean_rate_each: f64) -> Result<Self> {
        check_phi(phi_deg)?;
        if !(mean_rate_each >= 0.0 && mean_rate_each.is_finite()) {
            return Err(Error::input("mean_rate_each must be finite and >= 0"));
        }
        Ok(HomConfig {
            phi_deg,
            mean_rate_each,
        })
    }
}

fn check_phi(phi_deg: f64) -> Result<()> {
    if !(0.0..=90.0).contains(&phi_deg) {
        return Err(Error::input(format!("phi must lie in [0, 90] degrees, got {phi_deg}")));
    }
    Ok(())
}

fn cos2(phi_deg: f64) -> f64 {
    let c = phi_deg.to_radians().cos();
    c * c
}

fn check_inputs(g1: &CorrelationSeries, g2: &CorrelationSeries) -> Result<()> {
    if g1.kind != SeriesKind::G1 || g2.kind != SeriesKind::G2 {
        return Err(Error::input("expected a g1 and a g2 series"));
    }
    if g1.normalization != Normalization::Normalized || g2.normalization != Normalization::Normalized {
        return Err(Error::input("g1 and g2 must be normalised"));
    }
    if !g1.same_grid(g2) {
        return Err(Error::input("g1 and g2 are sampled on different lag grids"));
    }
    Ok(())
}

/// Identical-emitter cross-port correlation.
pub fn hom_g2_tot(g1: &CorrelationSeries, g2: &CorrelationSeries, phi_deg: f64) -> Result<CorrelationSeries> {
    hom_g2_tot_general([g1, g1], [g2, g2], [1.0, 1.0], phi_deg)
}

/// Cross-port correlation for two emitters with different correlation
/// functions and rates `n`, from the four-term sum
/// `n₁²g2₁ + n₂²g2₂ - 2cos²φ n₁n₂ Re(g1₁ g1₂*) + 2n₁n₂`, over `(n₁+n₂)²`.
pub fn hom_g2_tot_general(
    g1: [&CorrelationSeries; 2],
    g2: [&CorrelationSeries; 2],
    rates: [f64; 2],
    phi_deg: f64,
) -> Result<CorrelationSeries> {
    check_phi(phi_deg)?;
    check_inputs(g1[0], g2[0])?;
    check_inputs(g1[1], g2[1])?;
    if !g1[0].same_grid(g1[1]) {
        return Err(Error::input("the two emitters are sampled on different lag grids"));
    }
    let [n1, n2] = rates;
    if !(n1 > 0.0 && n2 > 0.0 && n1.is_finite() && n2.is_finite()) {
        return Err(Error::NoLight);
    }
    let (a, b) = (g2[0].real().unwrap(), g2[1].real().unwrap());
    let k = cos2(phi_deg);
    let norm = (n1 + n2) * (n1 + n2);
    let values = (0..g1[0].len())
        .map(|i| {
            let cross = (g1[0].at(i) * g1[1].at(i).conj()).re;
            let v = n1 * n1 * a[i] + n2 * n2 * b[i] - 2.0 * k * n1 * n2 * cross + 2.0 * n1 * n2;
            (v / norm).max(0.0)
        })
        .collect();
    CorrelationSeries::new_real(SeriesKind::G2Tot, Normalization::Normalized, g1[0].tau_ns.clone(), values)
}

/// Unnormalised cross-port correlation of identical emitters,
/// `½[G2 - cos²φ |G1|² + n²]`, from raw regression values.
pub fn hom_g2_tot_raw(g1: &RawCorrelation, g2: &RawCorrelation, phi_deg: f64) -> Result<Vec<f64>> {
    check_phi(phi_deg)?;
    if g1.tau_ns != g2.tau_ns {
        return Err(Error::input("raw g1 and g2 are sampled on different lag grids"));
    }
    let k = cos2(phi_deg);
    let n = g2.rate;
    Ok(g1
        .values
        .iter()
        .zip(&g2.values)
        .map(|(a, b)| 0.5 * (b.re - k * a.norm_sqr() + n * n))
        .collect())
}

/// `(φ, g2_tot(0, φ))` for each angle.
pub fn polarization_scan(g1: &CorrelationSeries, g2: &CorrelationSeries, angles_deg: &[f64]) -> Result<Vec<(f64, f64)>> {
    angles_deg
        .iter()
        .map(|&phi| Ok((phi, hom_g2_tot(g1, g2, phi)?.real().unwrap()[0])))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Contrast {
    pub value: f64,
    pub stderr: f64,
}

/// `C = 1 - g_par/g_orth` with first-order error propagation.
pub fn contrast(parallel: f64, parallel_err: f64, orthogonal: f64, orthogonal_err: f64) -> Result<Contrast> {
    if !(orthogonal > 0.0) {
        return Err(Error::UndefinedContrast(orthogonal));
    }
    let value = 1.0 - parallel / orthogonal;
    let stderr = ((parallel_err / orthogonal).powi(2)
        + (parallel * orthogonal_err / (orthogonal * orthogonal)).powi(2))
    .sqrt();
    Ok(Contrast { value, stderr })
}

/// First local maximum at τ > 0, refined by a parabola through three
/// samples: (τ, value).
pub fn first_local_maximum(series: &CorrelationSeries) -> Option<(f64, f64)> {
    let v = series.real()?;
    let t = &series.tau_ns;
    // a flat top counts once, and only if the curve falls after it
    (1..v.len().saturating_sub(1))
        .find(|&i| {
            v[i] > v[i - 1] && v[i + 1..].iter().find(|&&x| x != v[i]).is_some_and(|&x| x < v[i])
        })
        .map(|i| {
            let (y0, y1, y2) = (v[i - 1], v[i], v[i + 1]);
            let curv = y0 - 2.0 * y1 + y2;
            if curv >= 0.0 {
                return (t[i], y1);
            }
            let delta = 0.5 * (y0 - y2) / curv;
            let h = 0.5 * (t[i + 1] - t[i - 1]);
            (t[i] + delta * h, y1 - 0.25 * (y0 - y2) * delta)
        })
}

/// Fractional reduction of the first nutation maximum,
/// `(max_orth - max_par) / max_orth`. `None` when either curve has no
/// local maximum (overdamped drive).
pub fn nutation_reduction(parallel: &CorrelationSeries, orthogonal: &CorrelationSeries) -> Result<Option<f64>> {
    if !parallel.same_grid(orthogonal) {
        return Err(Error::input("series are sampled on different lag grids"));
    }
    let (Some((_, par)), Some((_, orth))) = (first_local_maximum(parallel), first_local_maximum(orthogonal)) else {
        return Ok(None);
    };
    Ok(Some((orth - par) / orth))
}

/// Mean of the even extension of a real series over `[lo, hi)`, ns, by
/// trapezoidal integration of the linear interpolant.
pub fn average_over(series: &CorrelationSeries, lo: f64, hi: f64) -> Result<f64> {
    if !(hi > lo) {
        return Err(Error::input("averaging interval must have positive width"));
    }
    let last = *series.tau_ns.last().unwrap();
    if lo.abs() > last || hi.abs() > last {
        return Err(Error::input(format!(
            "averaging interval [{lo}, {hi}) exceeds the lag grid (max {last} ns)"
        )));
    }
    let value = |x: f64| series.interpolate(x).expect("inside grid").re;
    // knots: interval ends plus every grid lag (either sign) inside
    let mut knots = vec![lo, hi];
    for &t in &series.tau_ns {
        for x in [t, -t] {
            if x > lo && x < hi {
                knots.push(x);
            }
        }
    }
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let integral: f64 = knots
        .windows(2)
        .map(|w| 0.5 * (value(w[0]) + value(w[1])) * (w[1] - w[0]))
        .sum();
    Ok(integral / (hi - lo))
}

/// Value seen at a display resolution: the average over the bin
/// `[τ - w/2, τ + w/2)`, or the point value when `w = 0`.
pub fn at_resolution(series: &CorrelationSeries, tau_ns: f64, bin_ns: f64) -> Result<f64> {
    if bin_ns == 0.0 {
        return series
            .interpolate(tau_ns)
            .map(|z| z.re)
            .ok_or_else(|| Error::input(format!("lag {tau_ns} ns is outside the grid")));
    }
    average_over(series, tau_ns - 0.5 * bin_ns, tau_ns + 0.5 * bin_ns)
}

/// Cross-port correlation for one angle with its contrast against 90°.
#[derive(Clone, Debug, PartialEq)]
pub struct HomResult {
    pub phi_deg: f64,
    pub series: CorrelationSeries,
    pub contrast: Contrast,
}

impl HomResult {
    /// `orthogonal` is the φ = 90° curve; contrasts are read at τ = 0 with
    /// the given display resolution.
    pub fn new(phi_deg: f64, series: CorrelationSeries, orthogonal: &CorrelationSeries, bin_ns: f64) -> Result<Self> {
        let contrast = contrast(
            at_resolution(&series, 0.0, bin_ns)?,
            0.0,
            at_resolution(orthogonal, 0.0, bin_ns)?,
            0.0,
        )?;
        Ok(HomResult {
            phi_deg,
            series,
            contrast,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toy(tau: &[f64], gamma: f64, nu: f64) -> (CorrelationSeries, CorrelationSeries) {
        let g1: Vec<Complex64> = tau
            .iter()
            .map(|t| Complex64::from_polar((-gamma * t).exp(), nu * t))
            .collect();
        let g2: Vec<f64> = tau
            .iter()
            .map(|t| 1.0 - (-1.5 * gamma * t).exp() * (nu * t).cos())
            .collect();
        (
            CorrelationSeries::new_complex(SeriesKind::G1, Normalization::Normalized, tau.to_vec(), g1).unwrap(),
            CorrelationSeries::new_real(SeriesKind::G2, Normalization::Normalized, tau.to_vec(), g2).unwrap(),
        )
    }

    fn grid(n: usize, step: f64) -> Vec<f64> {
        (0..n).map(|i| i as f64 * step).collect()
    }

    #[test]
    fn beam_splitter_is_lossless() {
        let b = BeamSplitter;
        assert!((b.transmission().norm_sqr() + b.reflection().norm_sqr() - 1.0).abs() < 1e-15);
        assert!((-Complex64::i() * b.transmission() - b.reflection()).norm() < 1e-16);
    }

    #[test]
    fn limits_at_zero_and_infinity() {
        let (g1, g2) = toy(&grid(4001, 0.05), 0.5, 2.0);
        let orth = hom_g2_tot(&g1, &g2, 90.0).unwrap();
        let par = hom_g2_tot(&g1, &g2, 0.0).unwrap();
        assert_eq!(orth.real().unwrap()[0], 0.5);
        assert_eq!(par.real().unwrap()[0], 0.0);
        assert!((par.real().unwrap().last().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fig5_angles() {
        let (g1, g2) = toy(&grid(100, 0.1), 0.3, 1.0);
        let expected = [0.0, 0.0961, 0.2675, 0.4039, 0.5];
        let scan = polarization_scan(&g1, &g2, &[0.0, 26.0, 47.0, 64.0, 90.0]).unwrap();
        for ((phi, v), e) in scan.iter().zip(expected) {
            let exact = 0.5 * phi.to_radians().sin().powi(2);
            assert!((v - exact).abs() < 1e-12);
            assert!((v - e).abs() < 1e-4, "{phi}: {v}");
        }
        let at45 = polarization_scan(&g1, &g2, &[45.0]).unwrap()[0].1;
        assert!((at45 - 0.25).abs() < 1e-12);
    }

    #[test]
    fn mismatched_grids_rejected() {
        let (g1, _) = toy(&grid(10, 0.1), 0.3, 1.0);
        let (_, g2) = toy(&grid(10, 0.2), 0.3, 1.0);
        assert!(hom_g2_tot(&g1, &g2, 0.0).is_err());
        assert!(hom_g2_tot(&g1, &g1.clone(), 0.0).is_err());
    }

    #[test]
    fn contrast_examples() {
        let c = contrast(0.0, 0.0, 0.5, 0.0).unwrap();
        assert_eq!(c.value, 1.0);
        let c = contrast(0.055, 0.0, 0.5, 0.0).unwrap();
        assert!((c.value - 0.89).abs() < 1e-12);
        assert!(matches!(contrast(0.1, 0.0, 0.0, 0.0), Err(Error::UndefinedContrast(_))));
        let c = contrast(0.1, 0.01, 0.5, 0.02).unwrap();
        let expected = ((0.01f64 / 0.5).powi(2) + (0.1f64 * 0.02 / 0.25).powi(2)).sqrt();
        assert!((c.stderr - expected).abs() < 1e-15);
    }

    #[test]
    fn nutation_identity() {
        // both curves symmetric about τ = 1 ns, so the maxima coincide on
        // a grid sample
        let tau = grid(301, 0.01);
        let pi = std::f64::consts::PI;
        let g1 = CorrelationSeries::new_complex(
            SeriesKind::G1,
            Normalization::Normalized,
            tau.clone(),
            tau.iter().map(|t| Complex64::from_polar(0.3 + 0.1 * (pi * t).cos(), 2.0 * t)).collect(),
        )
        .unwrap();
        let g2 = CorrelationSeries::new_real(
            SeriesKind::G2,
            Normalization::Normalized,
            tau.clone(),
            tau.iter().map(|t| 1.0 - (pi * t).cos()).collect(),
        )
        .unwrap();
        let par = hom_g2_tot(&g1, &g2, 0.0).unwrap();
        let orth = hom_g2_tot(&g1, &g2, 90.0).unwrap();
        assert_eq!(nutation_reduction(&orth, &orth).unwrap(), Some(0.0));
        let r = nutation_reduction(&par, &orth).unwrap().unwrap();
        let (tp, vo) = first_local_maximum(&orth).unwrap();
        let (tq, _) = first_local_maximum(&par).unwrap();
        assert!((tp - 1.0).abs() < 1e-9 && (tq - 1.0).abs() < 1e-9);
        let g1sq = g1.interpolate(tp).unwrap().norm_sqr();
        assert!((r - 0.5 * g1sq / vo).abs() < 1e-6, "{r} vs {}", 0.5 * g1sq / vo);
    }

    #[test]
    fn overdamped_has_no_maximum() {
        let tau = grid(500, 0.1);
        let g2 = CorrelationSeries::new_real(
            SeriesKind::G2,
            Normalization::Normalized,
            tau.clone(),
            tau.iter().map(|t| 1.0 - (-t).exp()).collect(),
        )
        .unwrap();
        assert_eq!(nutation_reduction(&g2, &g2).unwrap(), None);
    }

    #[test]
    fn general_form_reduces_to_identical_form() {
        let (g1, g2) = toy(&grid(300, 0.1), 0.4, 1.3);
        for phi in [0.0, 33.0, 90.0] {
            let a = hom_g2_tot(&g1, &g2, phi).unwrap();
            let b = hom_g2_tot_general([&g1, &g1], [&g2, &g2], [3.7, 3.7], phi).unwrap();
            for (x, y) in a.real().unwrap().iter().zip(b.real().unwrap()) {
                assert!((x - y).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn raw_form_normalises_to_identical_form() {
        let tau = grid(400, 0.1);
        let (g1, g2) = toy(&tau, 0.4, 1.3);
        let n = 2.5;
        let raw1 = RawCorrelation {
            tau_ns: tau.clone(),
            values: g1.complex().unwrap().iter().map(|z| z * n).collect(),
            rate: n,
        };
        let raw2 = RawCorrelation {
            tau_ns: tau.clone(),
            values: g2.real().unwrap().iter().map(|v| Complex64::new(v * n * n, 0.0)).collect(),
            rate: n,
        };
        for phi in [0.0, 47.0, 90.0] {
            let raw = hom_g2_tot_raw(&raw1, &raw2, phi).unwrap();
            let norm = hom_g2_tot(&g1, &g2, phi).unwrap();
            for (r, v) in raw.iter().zip(norm.real().unwrap()) {
                assert!((r / (n * n) - v).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn averaging_recovers_linear_and_constant_functions() {
        let tau = grid(101, 0.02);
        let s = CorrelationSeries::new_real(SeriesKind::G2Tot, Normalization::Normalized, tau.clone(), tau.iter().map(|t| 2.0 * t).collect())
            .unwrap();
        // even extension of 2|τ| over [-0.5, 0.5): mean 0.5
        assert!((at_resolution(&s, 0.0, 1.0).unwrap() - 0.5).abs() < 1e-12);
        assert!((at_resolution(&s, 1.0, 0.0).unwrap() - 2.0).abs() < 1e-12);
        assert!(at_resolution(&s, 0.0, 5.0).is_err());
    }

    proptest! {
        #[test]
        fn bounds_and_dip_identity(gamma in 0.05f64..2.0, nu in 0.0f64..5.0, phi in 0.0f64..=90.0) {
            let (g1, g2) = toy(&grid(200, 0.07), gamma, nu);
            let tot = hom_g2_tot(&g1, &g2, phi).unwrap();
            let par = hom_g2_tot(&g1, &g2, 0.0).unwrap();
            let orth = hom_g2_tot(&g1, &g2, 90.0).unwrap();
            let g2v = g2.real().unwrap();
            for (i, g) in g2v.iter().enumerate() {
                let upper = 0.5 * g + 0.5;
                let v = tot.real().unwrap()[i];
                prop_assert!(v >= 0.0 && v <= upper + 1e-12);
                prop_assert!((orth.real().unwrap()[i] - upper).abs() < 1e-12);
                let dip = orth.real().unwrap()[i] - 0.5 * g1.at(i).norm_sqr();
                prop_assert!((par.real().unwrap()[i] - dip.max(0.0)).abs() < 1e-12);
            }
            let at0 = tot.real().unwrap()[0];
            prop_assert!((at0 - 0.5 * phi.to_radians().sin().powi(2)).abs() < 1e-12);
        }

        #[test]
        fn scan_is_monotone(a in 0.0f64..89.0, d in 0.01f64..1.0) {
            let (g1, g2) = toy(&grid(50, 0.1), 0.3, 1.0);
            let s = polarization_scan(&g1, &g2, &[a, a + d]).unwrap();
            prop_assert!(s[1].1 > s[0].1);
        }
    }
}
