//! CODATA 2018 constants (SI).

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// Unified atomic mass unit, kg.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// Electron mass, kg.
pub const ELECTRON_MASS: f64 = 9.109_383_701_5e-31;

/// Atomic mass of ¹⁷¹Yb in u.
pub const YB171_ATOMIC_MASS_U: f64 = 170.936_330_2;

/// Mass of the singly charged ¹⁷¹Yb⁺ ion, kg.
pub const YB171_ION_MASS: f64 = YB171_ATOMIC_MASS_U * ATOMIC_MASS_UNIT - ELECTRON_MASS;

/// Fine θ step reachable by tuning the trap drive voltage, rad.
pub const FINE_THETA_RESOLUTION: f64 = 1e-4;

/// Measured qubit detection fidelity.
pub const DEFAULT_DETECTION_FIDELITY: f64 = 0.997;

/// Measured single-SDK spin-flip fidelity.
pub const DEFAULT_SDK_FIDELITY: f64 = 0.993;
