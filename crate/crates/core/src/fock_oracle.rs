//! Brute-force simulation of the Ramsey/kick sequence in a truncated
//! spin ⊗ Fock space.
//!
//! Amplitudes are stored spin-major: index `spin * dim + n` with ↓ = 0 and
//! ↑ = 1. Gates never mutate their input; each returns a new register.
//!
//! Pauli conventions follow the usual atomic-physics choice σ_z|↑⟩ = +|↑⟩,
//! σ₊ = |↑⟩⟨↓|, so a microwave rotation of angle `a` and phase `φ` has
//! ⟨↑|R|↓⟩ = −i e^{−iφ} sin(a/2).

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kinematics::{KickSequence, MotionalSpec, PhaseSpacePoint, TrapConfig};
use crate::special::displacement_diagonal;

/// Largest population tolerated above the trusted band.
pub const LEAKAGE_TOLERANCE: f64 = 1e-6;

/// Cumulative weight kept when a thermal state is expanded into Fock states.
pub const THERMAL_WEIGHT_CUTOFF: f64 = 1.0 - 1e-6;

/// Entries of a displacement matrix below this magnitude are dropped when
/// the matrix is packed for repeated products.
const SPARSE_EPS: f64 = 1e-18;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spin {
    Down = 0,
    Up = 1,
}

/// Pure spin ⊗ motion state.
#[derive(Debug, Clone, PartialEq)]
pub struct PureRegister {
    dim: usize,
    amps: Vec<Complex64>,
}

impl PureRegister {
    /// |spin⟩ ⊗ Σ c_n |n⟩.
    pub fn product(spin: Spin, motion: &[Complex64], dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::invalid("dim", "Fock truncation needs at least 2 levels"));
        }
        if motion.len() > dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: motion.len(),
            });
        }
        let mut amps = vec![ZERO; 2 * dim];
        let off = spin as usize * dim;
        amps[off..off + motion.len()].copy_from_slice(motion);
        Ok(Self { dim, amps })
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() < 4 || !amps.len().is_multiple_of(2) {
            return Err(Error::invalid("amps", "length must be 2·dim with dim >= 2"));
        }
        Ok(Self {
            dim: amps.len() / 2,
            amps,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn motion(&self, spin: Spin) -> &[Complex64] {
        let off = spin as usize * self.dim;
        &self.amps[off..off + self.dim]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn population(&self, spin: Spin) -> f64 {
        self.motion(spin).iter().map(|a| a.norm_sqr()).sum()
    }

    /// Population in the top 10% of Fock levels.
    pub fn leakage(&self) -> f64 {
        let band = trusted_band(self.dim);
        [Spin::Down, Spin::Up]
            .iter()
            .map(|&s| self.motion(s)[band..].iter().map(|a| a.norm_sqr()).sum::<f64>())
            .sum()
    }

    /// |⟨self|other⟩|², insensitive to global phase.
    pub fn fidelity(&self, other: &PureRegister) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            .norm_sqr()
    }
}

/// Pure state or a finite ensemble of pure states.
#[derive(Debug, Clone, PartialEq)]
pub enum QuantumRegister {
    Pure(PureRegister),
    Mixed(Vec<(f64, PureRegister)>),
}

impl QuantumRegister {
    pub fn dim(&self) -> usize {
        match self {
            QuantumRegister::Pure(p) => p.dim,
            QuantumRegister::Mixed(parts) => parts.first().map_or(0, |(_, p)| p.dim),
        }
    }

    /// Checks the norm and weight invariants.
    pub fn validate(&self) -> Result<()> {
        let check_pure = |p: &PureRegister| {
            let n = p.norm_sqr();
            if (n - 1.0).abs() > 1e-9 {
                Err(Error::Unnormalized { norm_sqr: n })
            } else {
                Ok(())
            }
        };
        match self {
            QuantumRegister::Pure(p) => check_pure(p),
            QuantumRegister::Mixed(parts) => {
                if parts.is_empty() {
                    return Err(Error::invalid("mixture", "no components"));
                }
                let dim = parts[0].1.dim;
                let mut total = 0.0;
                for (w, p) in parts {
                    if *w < 0.0 {
                        return Err(Error::invalid("mixture", "negative weight"));
                    }
                    if p.dim != dim {
                        return Err(Error::DimensionMismatch {
                            expected: dim,
                            found: p.dim,
                        });
                    }
                    check_pure(p)?;
                    total += w;
                }
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::invalid("mixture", format!("weights sum to {total}")));
                }
                Ok(())
            }
        }
    }

    fn components(&self) -> Vec<(f64, &PureRegister)> {
        match self {
            QuantumRegister::Pure(p) => vec![(1.0, p)],
            QuantumRegister::Mixed(parts) => parts.iter().map(|(w, p)| (*w, p)).collect(),
        }
    }

    fn map(&self, f: impl Fn(&PureRegister) -> Result<PureRegister>) -> Result<Self> {
        Ok(match self {
            QuantumRegister::Pure(p) => QuantumRegister::Pure(f(p)?),
            QuantumRegister::Mixed(parts) => QuantumRegister::Mixed(
                parts
                    .iter()
                    .map(|(w, p)| Ok((*w, f(p)?)))
                    .collect::<Result<_>>()?,
            ),
        })
    }

    pub fn population(&self, spin: Spin) -> f64 {
        self.components().iter().map(|(w, p)| w * p.population(spin)).sum()
    }

    pub fn leakage(&self) -> f64 {
        self.components().iter().map(|(w, p)| w * p.leakage()).sum()
    }

    /// Reduced motional density matrix, row-major dim × dim.
    pub fn motional_density(&self) -> Vec<Complex64> {
        let dim = self.dim();
        let mut rho = vec![ZERO; dim * dim];
        for (w, p) in self.components() {
            for s in [Spin::Down, Spin::Up] {
                let v = p.motion(s);
                for m in 0..dim {
                    if v[m] == ZERO {
                        continue;
                    }
                    for n in 0..dim {
                        rho[m * dim + n] += w * v[m] * v[n].conj();
                    }
                }
            }
        }
        rho
    }
}

fn trusted_band(dim: usize) -> usize {
    (dim * 9) / 10
}

/// Dense truncated matrix of D(α) = exp(α a† − α* a).
#[derive(Debug, Clone)]
pub struct DisplacementMatrix {
    dim: usize,
    data: Vec<Complex64>,
    // per-row [lo, hi) column window holding every entry above SPARSE_EPS
    rows: Vec<(usize, usize)>,
}

impl DisplacementMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// ⟨m|D|n⟩
    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.data[m * self.dim + n]
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![ZERO; self.dim];
        self.apply_into(v, &mut out);
        out
    }

    fn apply_into(&self, v: &[Complex64], out: &mut [Complex64]) {
        for (m, o) in out.iter_mut().enumerate() {
            let (lo, hi) = self.rows[m];
            let row = &self.data[m * self.dim + lo..m * self.dim + hi];
            *o = row.iter().zip(&v[lo..hi]).map(|(a, b)| a * b).sum();
        }
    }
}

/// Matrix of D(α) in the lowest `dim` Fock states from the closed-form
/// Laguerre matrix elements.
///
/// Rejects |α|² > dim/4, where truncation would visibly corrupt the result.
pub fn displacement_matrix(alpha: Complex64, dim: usize) -> Result<DisplacementMatrix> {
    if dim < 2 {
        return Err(Error::invalid("dim", "Fock truncation needs at least 2 levels"));
    }
    let limit = dim as f64 / 4.0;
    if alpha.norm_sqr() > limit {
        return Err(Error::DisplacementTooLarge {
            alpha_sqr: alpha.norm_sqr(),
            limit,
        });
    }
    let mut data = vec![ZERO; dim * dim];
    let upper_alpha = -alpha;
    for k in 0..dim {
        let lower = displacement_diagonal(alpha, k, dim - k);
        for (n, v) in lower.into_iter().enumerate() {
            data[(n + k) * dim + n] = v;
        }
        if k > 0 {
            // D(α)† = D(−α): ⟨n|D(α)|n+k⟩ = conj(⟨n+k|D(−α)|n⟩)
            let upper = displacement_diagonal(upper_alpha, k, dim - k);
            for (n, v) in upper.into_iter().enumerate() {
                data[n * dim + n + k] = v.conj();
            }
        }
    }
    let rows = (0..dim)
        .map(|m| {
            let row = &data[m * dim..(m + 1) * dim];
            let lo = row.iter().position(|z| z.norm() > SPARSE_EPS).unwrap_or(m);
            let hi = row.iter().rposition(|z| z.norm() > SPARSE_EPS).map_or(m + 1, |i| i + 1);
            (lo.min(m), hi.max(m + 1))
        })
        .collect();
    Ok(DisplacementMatrix { dim, data, rows })
}

/// Kick operators for one trap, cached for repeated use.
#[derive(Debug, Clone)]
pub struct Kicker {
    plus: DisplacementMatrix,
    minus: DisplacementMatrix,
}

impl Kicker {
    /// D(+iη) and D(−iη) for the given truncation.
    pub fn new(eta: f64, dim: usize) -> Result<Self> {
        Ok(Self {
            plus: displacement_matrix(Complex64::new(0.0, eta), dim)?,
            minus: displacement_matrix(Complex64::new(0.0, -eta), dim)?,
        })
    }

    fn kick(&self, p: &PureRegister, direction: i32) -> Result<PureRegister> {
        if p.dim != self.plus.dim {
            return Err(Error::DimensionMismatch {
                expected: self.plus.dim,
                found: p.dim,
            });
        }
        let dim = p.dim;
        let (raise, lower) = if direction >= 0 {
            (&self.plus, &self.minus)
        } else {
            (&self.minus, &self.plus)
        };
        let mut amps = vec![ZERO; 2 * dim];
        let (down, up) = amps.split_at_mut(dim);
        // σ₊ branch: ↓ → ↑ with D(±iη); σ₋ branch: ↑ → ↓ with D(∓iη)
        raise.apply_into(p.motion(Spin::Down), up);
        lower.apply_into(p.motion(Spin::Up), down);
        let out = PureRegister { dim, amps };
        let leak = out.leakage();
        if leak > LEAKAGE_TOLERANCE {
            return Err(Error::TruncationLeak { leakage: leak, dim });
        }
        Ok(out)
    }
}

/// One spin-dependent kick, D(iη)σ₊ + D(−iη)σ₋ for `direction = +1` and the
/// reversed kick for `direction = −1`.
pub fn apply_sdk(reg: &QuantumRegister, cfg: &TrapConfig<f64>, direction: i32) -> Result<QuantumRegister> {
    if direction != 1 && direction != -1 {
        return Err(Error::invalid("direction", "must be +1 or -1"));
    }
    let kicker = Kicker::new(cfg.eta, reg.dim())?;
    reg.map(|p| kicker.kick(p, direction))
}

fn evolve_pure(p: &PureRegister, theta: f64) -> PureRegister {
    let dim = p.dim;
    let phases: Vec<Complex64> = (0..dim)
        .map(|n| Complex64::from_polar(1.0, -(n as f64) * theta))
        .collect();
    let amps = p
        .amps
        .iter()
        .enumerate()
        .map(|(i, a)| a * phases[i % dim])
        .collect();
    PureRegister { dim, amps }
}

/// Free harmonic evolution through trap phase θ: |n⟩ → e^{−inθ}|n⟩.
pub fn evolve_free(reg: &QuantumRegister, theta: f64) -> QuantumRegister {
    reg.map(|p| Ok(evolve_pure(p, theta)))
        .expect("free evolution is infallible")
}

fn pulse_pure(p: &PureRegister, phase: f64, angle: f64) -> PureRegister {
    let dim = p.dim;
    let c = Complex64::new((angle / 2.0).cos(), 0.0);
    let s = (angle / 2.0).sin();
    let mi = Complex64::new(0.0, -1.0);
    let up_from_down = mi * Complex64::from_polar(s, -phase);
    let down_from_up = mi * Complex64::from_polar(s, phase);
    let mut amps = vec![ZERO; 2 * dim];
    for n in 0..dim {
        let d = p.amps[n];
        let u = p.amps[dim + n];
        amps[n] = c * d + down_from_up * u;
        amps[dim + n] = up_from_down * d + c * u;
    }
    PureRegister { dim, amps }
}

/// Resonant spin rotation by `angle` about the equatorial axis at `phase`;
/// identity on the motion.
pub fn microwave_pulse(reg: &QuantumRegister, phase: f64, angle: f64) -> QuantumRegister {
    reg.map(|p| Ok(pulse_pure(p, phase, angle)))
        .expect("spin rotation is infallible")
}

/// Outcome of one oracle run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleReport {
    pub spin_up_probability: f64,
    /// Weighted population left above the trusted band at the end.
    pub leakage: f64,
}

/// Geometric Fock weights of a thermal state, truncated once the cumulative
/// weight exceeds [`THERMAL_WEIGHT_CUTOFF`] and renormalized.
pub fn thermal_weights(nbar: f64) -> Vec<f64> {
    if nbar <= 0.0 {
        return vec![1.0];
    }
    let ratio = nbar / (1.0 + nbar);
    let mut w = 1.0 / (1.0 + nbar);
    let mut out = Vec::new();
    let mut total = 0.0;
    while total <= THERMAL_WEIGHT_CUTOFF {
        out.push(w);
        total += w;
        w *= ratio;
    }
    out.iter_mut().for_each(|x| *x /= total);
    out
}

fn coherent_amplitudes(alpha: Complex64, dim: usize) -> Vec<Complex64> {
    let mut amps = Vec::with_capacity(dim);
    let mut c = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for n in 0..dim {
        if n > 0 {
            c = c * alpha / (n as f64).sqrt();
        }
        amps.push(c);
    }
    amps
}

/// Register for |↓⟩ ⊗ (motional state of `spec`).
pub fn prepare(spec: &MotionalSpec<f64>, dim: usize) -> Result<QuantumRegister> {
    spec.validate()?;
    let reg = match spec {
        MotionalSpec::Thermal { nbar } => {
            let weights = thermal_weights(*nbar);
            if weights.len() > trusted_band(dim) {
                return Err(Error::TruncationLeak {
                    leakage: weights[trusted_band(dim).min(weights.len())..].iter().sum(),
                    dim,
                });
            }
            let parts = weights
                .into_iter()
                .enumerate()
                .map(|(n, w)| Ok((w, fock_register(n, dim)?)))
                .collect::<Result<_>>()?;
            QuantumRegister::Mixed(parts)
        }
        MotionalSpec::Coherent { alpha } => {
            let limit = dim as f64 / 4.0;
            if alpha.norm_sqr() > limit {
                return Err(Error::DisplacementTooLarge {
                    alpha_sqr: alpha.norm_sqr(),
                    limit,
                });
            }
            QuantumRegister::Pure(PureRegister::product(
                Spin::Down,
                &coherent_amplitudes(*alpha, dim),
                dim,
            )?)
        }
        MotionalSpec::Fock { n } => QuantumRegister::Pure(fock_register(*n, dim)?),
        MotionalSpec::Custom { amps } => QuantumRegister::Pure(PureRegister::product(Spin::Down, amps, dim)?),
    };
    let leak = reg.leakage();
    if leak > LEAKAGE_TOLERANCE {
        return Err(Error::TruncationLeak { leakage: leak, dim });
    }
    Ok(reg)
}

fn fock_register(n: usize, dim: usize) -> Result<PureRegister> {
    if n >= dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: n + 1,
        });
    }
    let mut motion = vec![ZERO; n + 1];
    motion[n] = Complex64::new(1.0, 0.0);
    PureRegister::product(Spin::Down, &motion, dim)
}

/// Truncation that comfortably holds `spec` through an experiment with
/// `|n_kicks|` kicks per set.
///
/// The motional amplitude never exceeds |α| + 2|N|η; the highest Fock level
/// reached by a Fock component n is then about (√n + r)², padded by a few
/// standard deviations of the displaced number distribution.
pub fn recommended_dim(spec: &MotionalSpec<f64>, n_kicks: i32, eta: f64) -> usize {
    let reach = 2.0 * f64::from(n_kicks.unsigned_abs()) * eta;
    let (n_top, amplitude) = match spec {
        MotionalSpec::Thermal { nbar } => (thermal_weights(*nbar).len() - 1, 0.0),
        MotionalSpec::Coherent { alpha } => (0, alpha.norm()),
        MotionalSpec::Fock { n } => (*n, 0.0),
        MotionalSpec::Custom { amps } => (amps.len().saturating_sub(1), 0.0),
    };
    let r = (n_top as f64).sqrt() + amplitude + reach + 6.0;
    let by_reach = (r * r).ceil() as usize;
    // trusted band must also hold the initial state
    let by_band = (n_top + 1) * 10 / 9 + 2;
    by_reach.max(by_band).max(16)
}

/// Runs π/2 → N kicks → θ → N kicks → π/2(φ) and reports the spin-up
/// probability. Kicks inside one set are spaced by half a trap period.
pub fn run_ramsey(
    spec: &MotionalSpec<f64>,
    cfg: &TrapConfig<f64>,
    seq: &KickSequence<f64>,
    dim: usize,
) -> Result<OracleReport> {
    seq.validate()?;
    let reg = prepare(spec, dim)?;
    let kicker = Kicker::new(cfg.eta, dim)?;
    let parts: Vec<(f64, &PureRegister)> = reg.components();
    let results: Vec<Result<(f64, f64)>> = parts
        .par_iter()
        .map(|(w, p)| {
            let out = ramsey_pure(p, &kicker, seq)?;
            Ok((w * out.population(Spin::Up), w * out.leakage()))
        })
        .collect();
    let mut prob = 0.0;
    let mut leakage = 0.0;
    for r in results {
        let (p, l) = r?;
        prob += p;
        leakage += l;
    }
    if leakage > LEAKAGE_TOLERANCE {
        return Err(Error::TruncationLeak { leakage, dim });
    }
    Ok(OracleReport {
        spin_up_probability: prob.clamp(0.0, 1.0),
        leakage,
    })
}

fn kick_set(p: PureRegister, kicker: &Kicker, n_kicks: i32) -> Result<PureRegister> {
    let direction = n_kicks.signum();
    let mut state = p;
    for k in 0..n_kicks.unsigned_abs() {
        if k > 0 {
            state = evolve_pure(&state, std::f64::consts::PI);
        }
        state = kicker.kick(&state, direction)?;
    }
    Ok(state)
}

fn ramsey_pure(p: &PureRegister, kicker: &Kicker, seq: &KickSequence<f64>) -> Result<PureRegister> {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut state = pulse_pure(p, 0.0, half_pi);
    state = kick_set(state, kicker, seq.n_kicks)?;
    state = evolve_pure(&state, seq.theta);
    state = kick_set(state, kicker, seq.n_kicks)?;
    Ok(pulse_pure(&state, seq.phi, half_pi))
}

/// Tr[ρ_motion D(α)] of the reduced motional state.
pub fn char_function(reg: &QuantumRegister, alpha: PhaseSpacePoint<f64>) -> Result<Complex64> {
    let d = displacement_matrix(alpha.alpha(), reg.dim())?;
    let mut total = ZERO;
    for (w, p) in reg.components() {
        for s in [Spin::Down, Spin::Up] {
            let v = p.motion(s);
            let dv = d.apply(v);
            let expect: Complex64 = v.iter().zip(&dv).map(|(a, b)| a.conj() * b).sum();
            total += w * expect;
        }
    }
    Ok(total)
}
