//! Single-ion model: eight Zeeman sublevels of an S1/2, P1/2, D3/2 lambda
//! system driven by two lasers in a static magnetic field.
//!
//! All frequencies and rates are angular and expressed in rad/µs, which is
//! numerically 2π × MHz. Time is in µs internally.

pub mod angular;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg::{any_nan, c, is_hermitian, CMatrix, ZERO};
use crate::{Error, Result};

use self::angular::clebsch_gordan;

/// Bohr magneton over Planck's constant, 1.39962449 MHz/G, as rad/µs per gauss.
pub const BOHR_ZEEMAN_UNIT: f64 = 2.0 * std::f64::consts::PI * 1.399_624_49;

/// Polarisation components are ordered (σ⁻, π, σ⁺), i.e. q = -1, 0, +1.
pub const SPHERICAL_COMPONENTS: [i32; 3] = [-1, 0, 1];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Term {
    S12,
    P12,
    D32,
}

impl Term {
    pub fn two_j(self) -> i32 {
        match self {
            Term::S12 | Term::P12 => 1,
            Term::D32 => 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Level {
    pub term: Term,
    /// Twice the magnetic quantum number.
    pub two_m: i32,
}

impl Level {
    pub const fn new(term: Term, two_m: i32) -> Self {
        Level { term, two_m }
    }

    pub fn m(self) -> f64 {
        self.two_m as f64 / 2.0
    }
}

pub const EIGHT_LEVELS: [Level; 8] = [
    Level::new(Term::S12, -1),
    Level::new(Term::S12, 1),
    Level::new(Term::P12, -1),
    Level::new(Term::P12, 1),
    Level::new(Term::D32, -3),
    Level::new(Term::D32, -1),
    Level::new(Term::D32, 1),
    Level::new(Term::D32, 3),
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayChannel {
    pub upper: Term,
    pub lower: Term,
    /// Total decay rate of the upper term, 1/µs.
    pub rate: f64,
    pub branching: f64,
}

impl DecayChannel {
    pub fn partial_rate(&self) -> f64 {
        self.rate * self.branching
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandeFactors {
    #[serde(rename = "S12")]
    pub s: f64,
    #[serde(rename = "P12")]
    pub p: f64,
    #[serde(rename = "D32")]
    pub d: f64,
}

impl LandeFactors {
    /// LS-coupling values for a single valence electron.
    pub const LS_COUPLING: LandeFactors = LandeFactors {
        s: 2.0,
        p: 2.0 / 3.0,
        d: 0.8,
    };

    pub fn of(&self, term: Term) -> f64 {
        match term {
            Term::S12 => self.s,
            Term::P12 => self.p,
            Term::D32 => self.d,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelScheme {
    levels: Vec<Level>,
    decay_channels: Vec<DecayChannel>,
    lande_g: LandeFactors,
    reduced: bool,
}

impl LevelScheme {
    /// The eight-level S1/2, P1/2, D3/2 scheme.
    pub fn new(decay_channels: Vec<DecayChannel>, lande_g: LandeFactors) -> Result<Self> {
        Self::with_levels(EIGHT_LEVELS.to_vec(), decay_channels, lande_g)
    }

    pub fn with_levels(
        levels: Vec<Level>,
        decay_channels: Vec<DecayChannel>,
        lande_g: LandeFactors,
    ) -> Result<Self> {
        let mut sorted = levels.clone();
        sorted.sort_by_key(|l| (l.term as u8, l.two_m));
        let mut expected = EIGHT_LEVELS.to_vec();
        expected.sort_by_key(|l| (l.term as u8, l.two_m));
        if sorted != expected {
            return Err(Error::config(
                "scheme.levels: expected exactly the 8 sublevels S1/2 (2), P1/2 (2), D3/2 (4)",
            ));
        }
        let scheme = LevelScheme {
            levels,
            decay_channels,
            lande_g,
            reduced: false,
        };
        scheme.validate()?;
        Ok(scheme)
    }

    /// Closed two-level transition `|S,+1/2> <-> |P,+1/2>` with unit angular
    /// factor. Only intended for checking against textbook two-level results.
    pub fn two_level(gamma: f64) -> Self {
        LevelScheme {
            levels: vec![Level::new(Term::S12, 1), Level::new(Term::P12, 1)],
            decay_channels: vec![DecayChannel {
                upper: Term::P12,
                lower: Term::S12,
                rate: gamma,
                branching: 1.0,
            }],
            lande_g: LandeFactors::LS_COUPLING,
            reduced: true,
        }
    }

    fn validate(&self) -> Result<()> {
        let g = &self.lande_g;
        if ![g.s, g.p, g.d].iter().all(|x| x.is_finite()) {
            return Err(Error::config("scheme.lande_g: non-finite g-factor"));
        }
        if self.decay_channels.is_empty() {
            return Err(Error::config("scheme.decay_channels: empty"));
        }
        let mut p_rate = None;
        let mut p_branching = 0.0;
        for (i, ch) in self.decay_channels.iter().enumerate() {
            if ch.upper != Term::P12 || ch.lower == Term::P12 {
                return Err(Error::config(format!(
                    "scheme.decay_channels[{i}]: only P12 -> S12 and P12 -> D32 are dipole channels"
                )));
            }
            if !(ch.rate.is_finite() && ch.rate > 0.0) {
                return Err(Error::config(format!(
                    "scheme.decay_channels[{i}].rate must be positive, got {}",
                    ch.rate
                )));
            }
            if !(ch.branching.is_finite() && ch.branching > 0.0 && ch.branching <= 1.0) {
                return Err(Error::config(format!(
                    "scheme.decay_channels[{i}].branching must lie in (0, 1], got {}",
                    ch.branching
                )));
            }
            match p_rate {
                None => p_rate = Some(ch.rate),
                Some(r) if (r - ch.rate).abs() > 1e-9 * r => {
                    return Err(Error::config(format!(
                        "scheme.decay_channels[{i}].rate: channels of one term must share the total rate ({r} vs {})",
                        ch.rate
                    )))
                }
                _ => {}
            }
            p_branching += ch.branching;
        }
        if (p_branching - 1.0).abs() > 1e-12 {
            return Err(Error::config(format!(
                "scheme.decay_channels: P12 branching fractions sum to {p_branching}, not 1"
            )));
        }
        Ok(())
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn dim(&self) -> usize {
        self.levels.len()
    }

    pub fn index_of(&self, level: Level) -> Option<usize> {
        self.levels.iter().position(|&l| l == level)
    }

    pub fn indices_of(&self, term: Term) -> impl Iterator<Item = usize> + '_ {
        self.levels
            .iter()
            .enumerate()
            .filter(move |(_, l)| l.term == term)
            .map(|(i, _)| i)
    }

    pub fn decay_channels(&self) -> &[DecayChannel] {
        &self.decay_channels
    }

    pub fn lande_g(&self) -> &LandeFactors {
        &self.lande_g
    }

    pub fn is_reduced(&self) -> bool {
        self.reduced
    }

    pub fn channel(&self, lower: Term) -> Option<&DecayChannel> {
        self.decay_channels.iter().find(|ch| ch.lower == lower)
    }

    /// Angular coupling `<J_l m_l; 1 q | J_u m_u>` between a lower and an
    /// upper sublevel, q = m_u - m_l.
    pub fn angular_factor(&self, lower: Level, upper: Level) -> f64 {
        if self.reduced {
            return if lower.two_m == upper.two_m { 1.0 } else { 0.0 };
        }
        let two_q = upper.two_m - lower.two_m;
        clebsch_gordan(
            lower.term.two_j(),
            lower.two_m,
            2,
            two_q,
            upper.term.two_j(),
            upper.two_m,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaserDrive {
    /// (lower term, upper term)
    pub transition: (Term, Term),
    /// Peak Rabi frequency before angular factors, rad/µs.
    pub rabi_frequency: f64,
    /// Laser minus zero-field transition frequency, rad/µs.
    pub detuning: f64,
    /// Spherical amplitudes (σ⁻, π, σ⁺); must have unit norm.
    pub polarization: [Complex64; 3],
}

impl LaserDrive {
    pub fn lower(&self) -> Term {
        self.transition.0
    }

    fn validate(&self, path: &str) -> Result<()> {
        let (lower, upper) = self.transition;
        if upper != Term::P12 || lower == Term::P12 {
            return Err(Error::config(format!(
                "{path}.transition: must be [S12, P12] or [D32, P12]"
            )));
        }
        if !self.rabi_frequency.is_finite() || !self.detuning.is_finite() {
            return Err(Error::config(format!("{path}: non-finite rabi_frequency or detuning")));
        }
        if self.rabi_frequency < 0.0 {
            return Err(Error::config(format!("{path}.rabi_frequency must be >= 0")));
        }
        if self.polarization.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::config(format!("{path}.polarization: non-finite component")));
        }
        let norm: f64 = self.polarization.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::config(format!(
                "{path}.polarization: norm is {norm}, expected 1"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MagneticField {
    /// Gauss.
    pub magnitude: f64,
    #[serde(default = "default_zeeman_unit")]
    pub zeeman_unit: f64,
}

fn default_zeeman_unit() -> f64 {
    BOHR_ZEEMAN_UNIT
}

impl MagneticField {
    pub fn new(magnitude: f64) -> Self {
        MagneticField {
            magnitude,
            zeeman_unit: BOHR_ZEEMAN_UNIT,
        }
    }

    /// Linear Zeeman shift of a sublevel, rad/µs.
    pub fn shift(&self, g: f64, level: Level) -> f64 {
        g * level.m() * self.zeeman_unit * self.magnitude
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SystemConfig {
    pub scheme: LevelScheme,
    pub lasers: Vec<LaserDrive>,
    pub field: MagneticField,
    /// Lorentzian FWHM per laser, rad/µs; pure dephasing of the driven coherences.
    pub laser_linewidths: Option<Vec<f64>>,
}

impl SystemConfig {
    pub fn new(
        scheme: LevelScheme,
        lasers: Vec<LaserDrive>,
        field: MagneticField,
        laser_linewidths: Option<Vec<f64>>,
    ) -> Result<Self> {
        let cfg = SystemConfig {
            scheme,
            lasers,
            field,
            laser_linewidths,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Resonantly or off-resonantly driven two-level atom (test hook).
    pub fn two_level(gamma: f64, rabi: f64, detuning: f64) -> Self {
        let pi = [ZERO, c(1.0), ZERO];
        SystemConfig {
            scheme: LevelScheme::two_level(gamma),
            lasers: vec![
                LaserDrive {
                    transition: (Term::S12, Term::P12),
                    rabi_frequency: rabi,
                    detuning,
                    polarization: pi,
                },
                LaserDrive {
                    transition: (Term::D32, Term::P12),
                    rabi_frequency: 0.0,
                    detuning: 0.0,
                    polarization: pi,
                },
            ],
            field: MagneticField::new(0.0),
            laser_linewidths: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lasers.len() != 2 {
            return Err(Error::config(format!(
                "lasers: expected exactly 2 drives, got {}",
                self.lasers.len()
            )));
        }
        for (i, l) in self.lasers.iter().enumerate() {
            l.validate(&format!("lasers[{i}]"))?;
        }
        if self.lasers[0].lower() == self.lasers[1].lower() {
            return Err(Error::config("lasers: need one drive on S12-P12 and one on D32-P12"));
        }
        if !(self.field.magnitude.is_finite() && self.field.magnitude >= 0.0) {
            return Err(Error::config(format!(
                "field.magnitude must be finite and >= 0, got {}",
                self.field.magnitude
            )));
        }
        if !self.field.zeeman_unit.is_finite() {
            return Err(Error::config("field.zeeman_unit: non-finite"));
        }
        if let Some(lw) = &self.laser_linewidths {
            if lw.len() != self.lasers.len() {
                return Err(Error::config("laser_linewidths: one entry per laser required"));
            }
            if lw.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(Error::config("laser_linewidths: entries must be finite and >= 0"));
            }
        }
        Ok(())
    }

    pub fn laser(&self, lower: Term) -> &LaserDrive {
        self.lasers
            .iter()
            .find(|l| l.lower() == lower)
            .expect("validated config has a drive on each transition")
    }

    fn linewidth(&self, lower: Term) -> f64 {
        match &self.laser_linewidths {
            None => 0.0,
            Some(lw) => self
                .lasers
                .iter()
                .zip(lw)
                .find(|(l, _)| l.lower() == lower)
                .map(|(_, w)| *w)
                .unwrap_or(0.0),
        }
    }

    /// Total decay rate of P1/2 into the S1/2 manifold, 1/µs.
    pub fn green_decay_rate(&self) -> f64 {
        self.scheme.channel(Term::S12).map_or(0.0, |ch| ch.partial_rate())
    }
}

/// One Zeeman-resolved dipole jump operator.
#[derive(Clone, Debug)]
pub struct TransitionOperator {
    pub matrix: CMatrix,
    /// (upper term, lower term)
    pub channel: (Term, Term),
    pub q: i32,
    /// Γ · branching of the channel, 1/µs.
    pub rate_weight: f64,
}

/// Rotating-frame Hamiltonian, rad/µs.
///
/// The frame rotates with both lasers, so S sits at zero, P at -Δ_green and
/// D at Δ_red - Δ_green before Zeeman shifts.
pub fn build_hamiltonian(config: &SystemConfig) -> Result<CMatrix> {
    config.validate()?;
    let scheme = &config.scheme;
    let d = scheme.dim();
    let green = config.laser(Term::S12);
    let red = config.laser(Term::D32);

    let mut h = DMatrix::from_element(d, d, ZERO);
    for (i, &level) in scheme.levels().iter().enumerate() {
        let frame = match level.term {
            Term::S12 => 0.0,
            Term::P12 => -green.detuning,
            Term::D32 => red.detuning - green.detuning,
        };
        let zeeman = config.field.shift(scheme.lande_g().of(level.term), level);
        h[(i, i)] = c(frame + zeeman);
    }

    for laser in [green, red] {
        for (l, &lower) in scheme.levels().iter().enumerate() {
            if lower.term != laser.lower() {
                continue;
            }
            for (u, &upper) in scheme.levels().iter().enumerate() {
                if upper.term != Term::P12 {
                    continue;
                }
                let two_q = upper.two_m - lower.two_m;
                let Some(slot) = SPHERICAL_COMPONENTS.iter().position(|&q| 2 * q == two_q) else {
                    continue;
                };
                let cg = scheme.angular_factor(lower, upper);
                if cg == 0.0 {
                    continue;
                }
                let coupling = laser.polarization[slot] * (0.5 * laser.rabi_frequency * cg);
                h[(u, l)] += coupling;
                h[(l, u)] += coupling.conj();
            }
        }
    }

    if any_nan(&h) {
        return Err(Error::config("hamiltonian contains non-finite entries"));
    }
    Ok(h)
}

/// Jump operators `sqrt(Γ b) Σ C |lower><upper|`, one per (channel, q).
pub fn build_jump_operators(config: &SystemConfig) -> Result<Vec<TransitionOperator>> {
    config.validate()?;
    let scheme = &config.scheme;
    let d = scheme.dim();
    let mut out = Vec::new();
    for ch in scheme.decay_channels() {
        let amp = ch.partial_rate().sqrt();
        for &q in &SPHERICAL_COMPONENTS {
            let mut a = DMatrix::from_element(d, d, ZERO);
            let mut any = false;
            for (u, &upper) in scheme.levels().iter().enumerate() {
                if upper.term != ch.upper {
                    continue;
                }
                for (l, &lower) in scheme.levels().iter().enumerate() {
                    if lower.term != ch.lower || upper.two_m - lower.two_m != 2 * q {
                        continue;
                    }
                    let cg = scheme.angular_factor(lower, upper);
                    if cg != 0.0 {
                        a[(l, u)] = c(amp * cg);
                        any = true;
                    }
                }
            }
            if any {
                out.push(TransitionOperator {
                    matrix: a,
                    channel: (ch.upper, ch.lower),
                    q,
                    rate_weight: ch.partial_rate(),
                });
            }
        }
    }
    Ok(out)
}

/// Pure-dephasing operators from the laser linewidths.
///
/// Phase diffusion of the green laser dephases every level it shifts in the
/// rotating frame (P and D); the red laser dephases D only. A Lorentzian
/// FWHM γ damps the affected coherences at γ/2.
pub fn build_dephasing_operators(config: &SystemConfig) -> Result<Vec<CMatrix>> {
    config.validate()?;
    let scheme = &config.scheme;
    let d = scheme.dim();
    let mut out = Vec::new();
    let projector = |terms: &[Term]| {
        let mut m = DMatrix::from_element(d, d, ZERO);
        for (i, l) in scheme.levels().iter().enumerate() {
            if terms.contains(&l.term) {
                m[(i, i)] = c(1.0);
            }
        }
        m
    };
    let green = config.linewidth(Term::S12);
    if green > 0.0 {
        out.push(projector(&[Term::P12, Term::D32]) * c(green.sqrt()));
    }
    let red = config.linewidth(Term::D32);
    if red > 0.0 && scheme.indices_of(Term::D32).next().is_some() {
        out.push(projector(&[Term::D32]) * c(red.sqrt()));
    }
    Ok(out)
}

/// Lindblad generator acting on column-stacked density matrices.
#[derive(Clone, Debug)]
pub struct Liouvillian {
    matrix: CMatrix,
    dim: usize,
}

impl Liouvillian {
    pub fn from_config(config: &SystemConfig) -> Result<Self> {
        let h = build_hamiltonian(config)?;
        let jumps = build_jump_operators(config)?;
        let dephasing = build_dephasing_operators(config)?;
        build_liouvillian(&h, &jumps, &dephasing)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Hilbert-space dimension d; the generator itself is d² × d².
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let v = &self.matrix * crate::linalg::vectorize(rho);
        crate::linalg::unvectorize(&v, self.dim)
    }
}

pub fn build_liouvillian(
    h: &CMatrix,
    jumps: &[TransitionOperator],
    dephasing: &[CMatrix],
) -> Result<Liouvillian> {
    let d = h.nrows();
    if !h.is_square() {
        return Err(Error::input("hamiltonian is not square"));
    }
    if !is_hermitian(h, 1e-10) {
        return Err(Error::input("hamiltonian is not Hermitian within 1e-10"));
    }
    let ops = jumps.iter().map(|j| &j.matrix).chain(dephasing.iter());
    let id = CMatrix::identity(d, d);
    let mut l = (id.kronecker(h) - h.transpose().kronecker(&id)) * Complex64::new(0.0, -1.0);
    for a in ops {
        if a.nrows() != d || a.ncols() != d {
            return Err(Error::input(format!(
                "jump operator is {}x{}, hamiltonian is {d}x{d}",
                a.nrows(),
                a.ncols()
            )));
        }
        let ada = a.adjoint() * a;
        l += a.conjugate().kronecker(a);
        l -= id.kronecker(&ada) * c(0.5);
        l -= ada.transpose().kronecker(&id) * c(0.5);
    }
    Ok(Liouvillian { matrix: l, dim: d })
}
