//! Quantum-jump unravelling with exact picosecond jump times.
//!
//! Between jumps the unnormalised state evolves under
//! `H_eff = H - i/2 Σ J†J`; a jump happens at the first time quantum where
//! the squared norm drops below a uniform threshold. The crossing is found
//! by greedy descent over precomputed propagators `exp(-i H_eff δ 2^k)`.

use num_complex::Complex64;
use rand::Rng;

use super::{rng_for, Origin, PhotonRecord, PS_PER_NS};
use crate::dynamics::{normalized_weights, steady_state};
use crate::ion_model::{
    build_dephasing_operators, build_hamiltonian, build_jump_operators, Liouvillian, SystemConfig, Term,
    SPHERICAL_COMPONENTS,
};
use crate::linalg::{trace, CMatrix};
use crate::montecarlo::TrajectoryConfig;
use crate::{Error, Result};

/// Small dense row-major matrix for the inner loop.
#[derive(Clone, Debug)]
struct Dense {
    d: usize,
    a: Vec<Complex64>,
}

impl Dense {
    fn from(m: &CMatrix) -> Self {
        let d = m.nrows();
        let mut a = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                a.push(m[(i, j)]);
            }
        }
        Dense { d, a }
    }

    #[inline]
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let row = &self.a[i * self.d..(i + 1) * self.d];
            *yi = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
}

fn norm_sqr(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum()
}

/// Unitary whose first row is `u`, completed by Gram-Schmidt.
fn completing_unitary(u: [Complex64; 3]) -> [[Complex64; 3]; 3] {
    let mut rows: Vec<[Complex64; 3]> = vec![u];
    for e in 0..3 {
        let mut v = [Complex64::new(0.0, 0.0); 3];
        v[e] = Complex64::new(1.0, 0.0);
        for r in &rows {
            let overlap: Complex64 = (0..3).map(|k| r[k].conj() * v[k]).sum();
            for k in 0..3 {
                v[k] -= overlap * r[k];
            }
        }
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-6 && rows.len() < 3 {
            rows.push(v.map(|z| z / n));
        }
    }
    [rows[0], rows[1], rows[2]]
}

struct Unravelling {
    ladder: Vec<Dense>,
    /// Jump operators; entry 0 is the collected mode.
    jumps: Vec<Dense>,
    dim: usize,
    ground: usize,
}

impl Unravelling {
    fn new(config: &SystemConfig, weights: &[Complex64; 3], quantum_ps: u64, levels: usize) -> Result<Self> {
        let h = build_hamiltonian(config)?;
        let ops = build_jump_operators(config)?;
        let d = h.nrows();
        let u = normalized_weights(weights)?;
        let w = completing_unitary(u);

        let mut green = vec![CMatrix::zeros(d, d); 3];
        let mut others = Vec::new();
        for op in ops {
            if op.channel.1 == Term::S12 {
                let slot = SPHERICAL_COMPONENTS.iter().position(|&q| q == op.q).unwrap();
                green[slot] = op.matrix;
            } else {
                others.push(op.matrix);
            }
        }
        let mut all: Vec<CMatrix> = (0..3)
            .map(|i| (0..3).fold(CMatrix::zeros(d, d), |acc, q| acc + &green[q] * w[i][q]))
            .collect();
        all.extend(others);
        all.extend(build_dephasing_operators(config)?);

        let mut h_eff = h;
        for j in &all {
            h_eff -= (j.adjoint() * j) * Complex64::new(0.0, 0.5);
        }
        let dt_us = quantum_ps as f64 / PS_PER_NS / 1e3;
        let ladder = (0..=levels)
            .map(|k| {
                let step = dt_us * (1u64 << k) as f64;
                Dense::from(&(&h_eff * Complex64::new(0.0, -step)).exp())
            })
            .collect();
        let ground = config
            .scheme
            .levels()
            .iter()
            .position(|l| l.term == Term::S12)
            .expect("scheme has an S level");
        Ok(Unravelling {
            ladder,
            jumps: all.iter().map(Dense::from).collect(),
            dim: d,
            ground,
        })
    }
}

/// Highest ladder level: about half the mean spacing of jumps of any kind.
fn ladder_levels(config: &SystemConfig, quantum_ps: u64) -> Result<usize> {
    let l = Liouvillian::from_config(config)?;
    let rate = match steady_state(&l) {
        Ok(rho) => {
            let jumps = build_jump_operators(config)?;
            jumps
                .iter()
                .map(|j| trace(&(j.matrix.adjoint() * &j.matrix * rho.matrix())).re)
                .sum::<f64>()
        }
        Err(Error::DegenerateSteadyState { .. }) => 0.0,
        Err(e) => return Err(e),
    };
    let mean_ps = if rate > 0.0 { 1e6 / rate } else { f64::INFINITY };
    let quanta = (0.5 * mean_ps / quantum_ps as f64).max(1.0);
    Ok((quanta.log2().floor() as usize).min(40))
}

/// Collected-mode photon emissions of one ion over the recorded run.
///
/// The state starts in the lowest S sublevel and evolves for the burn-in
/// time before recording. `ion` selects the random stream and the input
/// port (I1 for ion 1, I2 otherwise).
pub fn mcwf_photon_stream(
    config: &SystemConfig,
    weights: &[Complex64; 3],
    traj: &TrajectoryConfig,
    ion: Origin,
) -> Result<Vec<PhotonRecord>> {
    config.validate()?;
    let q = traj.time_quantum_ps;
    let levels = ladder_levels(config, q)?;
    let un = Unravelling::new(config, weights, q, levels)?;
    let stream = if ion == Origin::Ion2 { 2 } else { 1 };
    let mut rng = rng_for(traj.seed, stream);
    let channel = ion.input_channel();

    let burn = (traj.burn_in_ns * PS_PER_NS / q as f64).round() as u64;
    let end = burn + traj.duration_ps() / q;
    let d = un.dim;

    let mut psi = vec![Complex64::new(0.0, 0.0); d];
    psi[un.ground] = Complex64::new(1.0, 0.0);
    let mut trial = psi.clone();
    let mut probs = vec![0.0; un.jumps.len()];
    let mut out = Vec::new();

    let mut t: u64 = 0;
    let mut threshold: f64 = rng.random();
    let mut k = levels;
    let mut norm = 1.0;
    loop {
        let span = 1u64 << k;
        if t + span > end {
            if k == 0 {
                break;
            }
            k -= 1;
            continue;
        }
        un.ladder[k].apply(&psi, &mut trial);
        let n = norm_sqr(&trial);
        if !n.is_finite() || n > norm * (1.0 + 1e-9) {
            return Err(Error::IntegrationFailure {
                time_ps: t * q,
                message: format!("norm grew from {norm} to {n}"),
            });
        }
        if n >= threshold {
            std::mem::swap(&mut psi, &mut trial);
            norm = n;
            t += span;
            continue;
        }
        if k > 0 {
            k -= 1;
            continue;
        }

        // crossing inside this quantum: jump at its end
        std::mem::swap(&mut psi, &mut trial);
        t += 1;
        for (p, j) in probs.iter_mut().zip(&un.jumps) {
            j.apply(&psi, &mut trial);
            *p = norm_sqr(&trial);
        }
        let total: f64 = probs.iter().sum();
        if !(total > 0.0) {
            return Err(Error::IntegrationFailure {
                time_ps: t * q,
                message: "threshold crossed with no jump probability".into(),
            });
        }
        let mut pick = rng.random::<f64>() * total;
        let mut which = probs.len() - 1;
        for (i, p) in probs.iter().enumerate() {
            if pick < *p {
                which = i;
                break;
            }
            pick -= p;
        }
        un.jumps[which].apply(&psi, &mut trial);
        let scale = 1.0 / norm_sqr(&trial).sqrt();
        for (a, b) in psi.iter_mut().zip(&trial) {
            *a = b * scale;
        }
        if which == 0 && t >= burn {
            out.push(PhotonRecord {
                time_ps: (t - burn) * q,
                channel,
                origin: ion,
            });
        }
        norm = 1.0;
        threshold = rng.random();
        k = levels;
    }
    Ok(out)
}
