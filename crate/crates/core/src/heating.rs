//! Motional heating from white electric-field noise, and the static-offset
//! calibration of the effective electrode distance.

use crate::constants::{ELEMENTARY_CHARGE, HBAR};
use crate::error::{Error, Result};
use crate::kinematics::TrapConfig;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseDrive<T> {
    /// Voltage noise spectral density at the trap frequency, V²/Hz.
    pub s_v: T,
    /// Effective electrode distance, m.
    pub d_eff: T,
    /// Heating time, s.
    pub duration: T,
    pub nbar0: T,
}

impl<T: Real> NoiseDrive<T> {
    pub fn validate(&self) -> Result<()> {
        let check = |name: &'static str, v: T, strict: bool| {
            let ok = v.is_finite() && if strict { v > T::zero() } else { v >= T::zero() };
            if ok {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("got {}", v.to_f64_lossy())))
            }
        };
        check("s_v", self.s_v, false)?;
        check("d_eff", self.d_eff, true)?;
        check("duration", self.duration, false)?;
        check("nbar0", self.nbar0, false)
    }
}

/// ṅ = e² S_V / (4 M ħ ω_t d²), quanta per second.
pub fn heating_rate<T: Real>(cfg: &TrapConfig<T>, drive: &NoiseDrive<T>) -> Result<T> {
    cfg.validate()?;
    drive.validate()?;
    // grouped so that no intermediate leaves the f32 range
    let e_over_hbar = T::lit(ELEMENTARY_CHARGE / HBAR);
    let denom = T::lit(4.0) * (cfg.mass * cfg.omega_t) * (drive.d_eff * drive.d_eff);
    Ok(e_over_hbar * (T::lit(ELEMENTARY_CHARGE) * drive.s_v) / denom)
}

/// Mean occupation after `drive.duration`, n̄₀ + ṅ t.
pub fn predict_nbar<T: Real>(cfg: &TrapConfig<T>, drive: &NoiseDrive<T>) -> Result<T> {
    Ok(drive.nbar0 + heating_rate(cfg, drive)? * drive.duration)
}

/// Static displacement x = eV / (M ω_t² d) for a potential offset V.
pub fn displacement_for_offset<T: Real>(cfg: &TrapConfig<T>, offset_volts: T, d_eff: T) -> T {
    T::lit(ELEMENTARY_CHARGE) * offset_volts / (cfg.mass * cfg.omega_t * cfg.omega_t * d_eff)
}

/// Effective distance that reproduces an observed static displacement.
pub fn d_eff_from_displacement<T: Real>(cfg: &TrapConfig<T>, offset_volts: T, displacement: T) -> Result<T> {
    if displacement == T::zero() || !displacement.is_finite() {
        return Err(Error::invalid("displacement", "must be finite and nonzero"));
    }
    Ok(T::lit(ELEMENTARY_CHARGE) * offset_volts / (cfg.mass * cfg.omega_t * cfg.omega_t * displacement))
}
