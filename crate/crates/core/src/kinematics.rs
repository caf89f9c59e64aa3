//! Trap parameters, motional state descriptors and the phase-space geometry
//! of kick sequences.
//!
//! Phase-space amplitudes are dimensionless, in units of the zero-point
//! spread. Only [`momentum_per_kick`] converts back to SI.

use num_complex::Complex;

use crate::constants::{
    DEFAULT_DETECTION_FIDELITY, DEFAULT_SDK_FIDELITY, HBAR, YB171_ION_MASS,
};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Single-mode trap and laser parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapConfig<T> {
    /// Angular secular frequency ω_t, rad/s.
    pub omega_t: T,
    /// Lamb-Dicke parameter of one kick.
    pub eta: T,
    /// Pulsed-laser repetition rate, Hz.
    pub f_rep: T,
    /// Ion mass, kg.
    pub mass: T,
    /// Probability of reading the qubit state correctly.
    pub detection_fidelity: T,
    /// Spin-flip fidelity of a single kick.
    pub sdk_fidelity: T,
}

impl<T: Real> TrapConfig<T> {
    pub fn new(omega_t: T, eta: T, f_rep: T, mass: T) -> Result<Self> {
        let cfg = Self {
            omega_t,
            eta,
            f_rep,
            mass,
            detection_fidelity: T::lit(DEFAULT_DETECTION_FIDELITY),
            sdk_fidelity: T::lit(DEFAULT_SDK_FIDELITY),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Same trap with ideal detection and ideal kicks.
    pub fn ideal(mut self) -> Self {
        self.detection_fidelity = T::one();
        self.sdk_fidelity = T::one();
        self
    }

    pub fn with_fidelities(mut self, detection: T, sdk: T) -> Result<Self> {
        self.detection_fidelity = detection;
        self.sdk_fidelity = sdk;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        fn positive<T: Real>(name: &'static str, v: T) -> Result<()> {
            if v.is_finite() && v > T::zero() {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("must be finite and > 0, got {v:?}")))
            }
        }
        fn probability<T: Real>(name: &'static str, v: T) -> Result<()> {
            if v >= T::zero() && v <= T::one() {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("must lie in [0, 1], got {v:?}")))
            }
        }
        positive("omega_t", self.omega_t)?;
        positive("f_rep", self.f_rep)?;
        positive("mass", self.mass)?;
        if !(self.eta > T::zero() && self.eta < T::one()) {
            return Err(Error::invalid("eta", format!("must lie in (0, 1), got {:?}", self.eta)));
        }
        probability("detection_fidelity", self.detection_fidelity)?;
        probability("sdk_fidelity", self.sdk_fidelity)
    }

    /// Zero-point momentum spread p₀ = √(2 M ħ ω_t), kg·m/s.
    pub fn zero_point_momentum(&self) -> T {
        (T::lit(2.0) * self.mass * T::lit(HBAR) * self.omega_t).sqrt()
    }
}

impl<T: Real> Default for TrapConfig<T> {
    /// ¹⁷¹Yb⁺ at ω_t/2π = 1 MHz, η = 0.2, 118 MHz repetition rate.
    fn default() -> Self {
        Self {
            omega_t: T::TAU() * T::lit(1.0e6),
            eta: T::lit(0.2),
            f_rep: T::lit(118.0e6),
            mass: T::lit(YB171_ION_MASS),
            detection_fidelity: T::lit(DEFAULT_DETECTION_FIDELITY),
            sdk_fidelity: T::lit(DEFAULT_SDK_FIDELITY),
        }
    }
}

/// Initial state of the motional mode.
#[derive(Debug, Clone, PartialEq)]
pub enum MotionalSpec<T> {
    Thermal { nbar: T },
    Coherent { alpha: Complex<T> },
    Fock { n: usize },
    /// Fock-basis amplitudes c_n, n = 0, 1, ...
    Custom { amps: Vec<Complex<T>> },
}

impl<T: Real> MotionalSpec<T> {
    pub fn vacuum() -> Self {
        MotionalSpec::Fock { n: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MotionalSpec::Thermal { nbar } => {
                if nbar.is_finite() && *nbar >= T::zero() {
                    Ok(())
                } else {
                    Err(Error::invalid("nbar", format!("must be finite and >= 0, got {nbar:?}")))
                }
            }
            MotionalSpec::Coherent { alpha } => {
                if alpha.re.is_finite() && alpha.im.is_finite() {
                    Ok(())
                } else {
                    Err(Error::invalid("alpha", "must be finite"))
                }
            }
            MotionalSpec::Fock { .. } => Ok(()),
            MotionalSpec::Custom { amps } => {
                if amps.is_empty() {
                    return Err(Error::invalid("amps", "empty amplitude vector"));
                }
                let norm_sqr = amps
                    .iter()
                    .fold(0.0, |acc, c| acc + c.norm_sqr().to_f64_lossy());
                if (norm_sqr - 1.0).abs() > 1e-10 {
                    Err(Error::Unnormalized { norm_sqr })
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// One interferometer setting: N kicks per set, delay θ between the sets and
/// the Ramsey analysis phase φ.
///
/// A negative `n_kicks` means every kick of the experiment is reversed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KickSequence<T> {
    pub n_kicks: i32,
    pub theta: T,
    pub phi: T,
}

impl<T: Real> KickSequence<T> {
    pub fn new(n_kicks: i32, theta: T, phi: T) -> Result<Self> {
        let seq = Self { n_kicks, theta, phi };
        seq.validate()?;
        Ok(seq)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_kicks == 0 {
            return Err(Error::ZeroKicks);
        }
        if !self.theta.is_finite() || !self.phi.is_finite() {
            return Err(Error::invalid("theta/phi", "must be finite"));
        }
        Ok(())
    }

    /// Kick direction, ±1.
    pub fn direction(&self) -> i32 {
        self.n_kicks.signum()
    }
}

/// A point of the phase plane, in zero-point units.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhaseSpacePoint<T>(pub Complex<T>);

impl<T: Real> PhaseSpacePoint<T> {
    pub fn new(re: T, im: T) -> Self {
        Self(Complex::new(re, im))
    }

    pub fn alpha(&self) -> Complex<T> {
        self.0
    }

    pub fn norm_sqr(&self) -> T {
        self.0.norm_sqr()
    }
}

impl<T> From<Complex<T>> for PhaseSpacePoint<T> {
    fn from(c: Complex<T>) -> Self {
        Self(c)
    }
}

/// Phase-space point probed by an interferometer with `n_kicks` kicks per set
/// and delay `theta`: α = 2Nη[sin θ + i(1 − cos θ)].
///
/// For fixed N the points lie on a circle of radius 2|N|η centred at 2iNη.
pub fn ring_alpha<T: Real>(cfg: &TrapConfig<T>, n_kicks: i32, theta: T) -> Result<PhaseSpacePoint<T>> {
    if n_kicks == 0 {
        return Err(Error::ZeroKicks);
    }
    let scale = T::lit(2.0) * T::from_int(n_kicks.into()) * cfg.eta;
    // 1 − cos θ = 2 sin²(θ/2) keeps precision near θ = 0
    let half = (theta / T::lit(2.0)).sin();
    Ok(PhaseSpacePoint::new(
        scale * theta.sin(),
        scale * T::lit(2.0) * half * half,
    ))
}

/// θ advanced per laser pulse slot, ω_t / f_rep.
pub fn theta_resolution<T: Real>(cfg: &TrapConfig<T>) -> T {
    cfg.omega_t / cfg.f_rep
}

/// Momentum delivered by a set of kicks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Momentum<T> {
    /// kg·m/s
    pub si: T,
    /// In units of p₀.
    pub zero_point_units: T,
}

/// Δp = N η p₀, signed.
pub fn momentum_per_kick<T: Real>(cfg: &TrapConfig<T>, n_kicks: i32) -> Momentum<T> {
    let units = T::from_int(n_kicks.into()) * cfg.eta;
    Momentum {
        si: units * cfg.zero_point_momentum(),
        zero_point_units: units,
    }
}
