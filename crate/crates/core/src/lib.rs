//! Spin-dependent-kick interferometry on a single trapped ion.
//!
//! Two sets of N impulsive spin-dependent kicks, separated by a trap phase θ
//! and wrapped in a microwave Ramsey sequence, make the spin-up probability a
//! direct readout of the motional characteristic function
//! χ(α) = Tr[ρ D(α)] at α = 2Nη[sin θ + i(1 − cos θ)].
//!
//! * [`kinematics`]: trap parameters, state descriptors, ring geometry.
//! * [`fock_oracle`]: exact truncated spin ⊗ Fock simulation.
//! * [`analytic`]: closed-form fringes and characteristic functions.
//! * [`synth`]: seeded shot-noise records with kick and detection infidelity.
//! * [`thermometry`]: fringe contrast extraction and revival lineshape fits.
//! * [`tomography`]: ring planning, χ samples and phase-space reconstruction.
//! * [`heating`]: predicted occupation under applied voltage noise.
//!
//! The closed-form layers are generic over [`Real`] (`f32`/`f64`); the
//! simulation and fitting layers run in `f64`. The `*F64`/`*F32` aliases
//! below name the concrete types.

pub mod analytic;
pub mod constants;
pub mod error;
pub mod fock_oracle;
pub mod heating;
pub mod kinematics;
pub mod scalar;
pub mod special;
pub mod synth;
pub mod thermometry;
pub mod tomography;

pub use error::{Error, Result};
pub use heating::NoiseDrive;
pub use kinematics::{KickSequence, MotionalSpec, PhaseSpacePoint, TrapConfig};
pub use scalar::Real;

pub type TrapConfigF64 = TrapConfig<f64>;
pub type TrapConfigF32 = TrapConfig<f32>;
pub type MotionalSpecF64 = MotionalSpec<f64>;
pub type MotionalSpecF32 = MotionalSpec<f32>;
pub type KickSequenceF64 = KickSequence<f64>;
pub type KickSequenceF32 = KickSequence<f32>;
pub type PhaseSpacePointF64 = PhaseSpacePoint<f64>;
pub type PhaseSpacePointF32 = PhaseSpacePoint<f32>;
pub type NoiseDriveF64 = NoiseDrive<f64>;
pub type NoiseDriveF32 = NoiseDrive<f32>;
