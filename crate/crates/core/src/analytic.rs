//! Closed-form fringe and characteristic-function expressions.
//!
//! These are the fast path used by the synthesizer, the thermometry fit and
//! tomography. Every expression here is checked against
//! [`fock_oracle`](crate::fock_oracle) in the test suites.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::kinematics::{KickSequence, MotionalSpec, TrapConfig};
use crate::scalar::Real;
use crate::special::laguerre;

/// Which quadrature of χ a Ramsey analysis phase reads out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quadrature {
    /// φ = 0
    Re,
    /// φ = π/2
    Im,
}

impl Quadrature {
    pub fn phi<T: Real>(self) -> T {
        match self {
            Quadrature::Re => T::zero(),
            Quadrature::Im => T::FRAC_PI_2(),
        }
    }

    /// Maps φ ∈ {0, π/2} (within `tol`) to a quadrature.
    pub fn from_phi<T: Real>(phi: T, tol: T) -> Option<Self> {
        if phi.abs() <= tol {
            Some(Quadrature::Re)
        } else if (phi - T::FRAC_PI_2()).abs() <= tol {
            Some(Quadrature::Im)
        } else {
            None
        }
    }
}

/// Spin-up probability S(φ) = ½ + (A/2)·C·cos(φ − φ₀).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringeModel<T> {
    pub amplitude: T,
    pub envelope: T,
    pub phase_offset: T,
}

impl<T: Real> FringeModel<T> {
    pub fn probability(&self, phi: T) -> T {
        let half = T::lit(0.5);
        half + half * self.amplitude * self.envelope * (phi - self.phase_offset).cos()
    }

    pub fn contrast(&self) -> T {
        self.amplitude * self.envelope
    }
}

/// γ = Nη[Re α (1 − cos θ) − Im α sin θ]
pub fn gamma<T: Real>(alpha: Complex<T>, n_kicks: i32, eta: T, theta: T) -> T {
    let n = T::from_int(n_kicks.into());
    n * eta * (alpha.re * one_minus_cos(theta) - alpha.im * theta.sin())
}

#[inline]
fn one_minus_cos<T: Real>(theta: T) -> T {
    let s = (theta / T::lit(2.0)).sin();
    T::lit(2.0) * s * s
}

/// Exponent of the contrast envelope, −4(Nη)²(2n̄+1)(1 − cos θ).
pub fn envelope_exponent<T: Real>(nbar: T, n_kicks: i32, eta: T, theta: T) -> T {
    let ne = T::from_int(n_kicks.into()) * eta;
    -T::lit(4.0) * ne * ne * (T::lit(2.0) * nbar + T::one()) * one_minus_cos(theta)
}

/// Thermal contrast envelope C(θ) = e^{−4(Nη)²(2n̄+1)(1−cos θ)}.
///
/// Evaluated from its logarithm; exponents below the smallest normal number
/// return exactly zero.
pub fn thermal_envelope<T: Real>(nbar: T, n_kicks: i32, eta: T, theta: T) -> T {
    let x = envelope_exponent(nbar, n_kicks, eta, theta);
    if x < T::min_positive_value().ln() {
        T::zero()
    } else {
        x.exp()
    }
}

/// Spin-up probability for an initial coherent state |α⟩.
pub fn s_coherent<T: Real>(alpha: Complex<T>, cfg: &TrapConfig<T>, seq: &KickSequence<T>) -> T {
    let half = T::lit(0.5);
    let env = thermal_envelope(T::zero(), seq.n_kicks, cfg.eta, seq.theta);
    let g = gamma(alpha, seq.n_kicks, cfg.eta, seq.theta);
    half + half * env * (T::lit(4.0) * g - seq.phi).cos()
}

/// Spin-up probability for a thermal state of mean occupation `nbar`.
pub fn s_thermal<T: Real>(nbar: T, cfg: &TrapConfig<T>, seq: &KickSequence<T>) -> T {
    thermal_fringe(nbar, cfg, seq.n_kicks, seq.theta).probability(seq.phi)
}

/// Unit-amplitude thermal fringe at fixed (N, θ).
pub fn thermal_fringe<T: Real>(nbar: T, cfg: &TrapConfig<T>, n_kicks: i32, theta: T) -> FringeModel<T> {
    FringeModel {
        amplitude: T::one(),
        envelope: thermal_envelope(nbar, n_kicks, cfg.eta, theta),
        phase_offset: T::zero(),
    }
}

/// Revival width estimate for a hot ion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FwhmEstimate<T> {
    /// 0.83 / (|N| η √n̄)
    pub value: T,
    /// Whether n̄ ≫ 1/(Nη)² holds (taken as n̄ ≥ 2/(Nη)²).
    pub hot_ion: bool,
}

/// Gaussian-limit FWHM of a contrast revival, 0.83/(|N|η√n̄).
pub fn fwhm_hot<T: Real>(nbar: T, n_kicks: i32, eta: T) -> FwhmEstimate<T> {
    let ne = T::from_int(n_kicks.abs().into()) * eta;
    FwhmEstimate {
        value: T::lit(0.83) / (ne * nbar.sqrt()),
        hot_ion: nbar * ne * ne >= T::lit(2.0),
    }
}

/// Full width at half maximum of the exact thermal envelope around a revival,
/// or `None` when the envelope never falls to one half.
pub fn fwhm_exact<T: Real>(nbar: T, n_kicks: i32, eta: T) -> Option<T> {
    let ne = T::from_int(n_kicks.into()) * eta;
    // 8(Nη)²(2n̄+1) sin²(h/2) = ln 2 at the half-width h
    let s2 = T::LN_2() / (T::lit(8.0) * ne * ne * (T::lit(2.0) * nbar + T::one()));
    if s2 > T::one() {
        return None;
    }
    Some(T::lit(4.0) * s2.sqrt().asin())
}

/// χ of a thermal state, e^{−(2n̄+1)|α|²/2}.
pub fn chi_thermal<T: Real>(nbar: T, alpha: Complex<T>) -> Complex<T> {
    let x = -(T::lit(2.0) * nbar + T::one()) * alpha.norm_sqr() / T::lit(2.0);
    Complex::new(x.exp(), T::zero())
}

/// χ of the Fock state |n⟩, e^{−|α|²/2} L_n(|α|²).
pub fn chi_fock<T: Real>(n: usize, alpha: Complex<T>) -> Complex<T> {
    let x = alpha.norm_sqr();
    Complex::new((-x / T::lit(2.0)).exp() * laguerre(n, 0, x), T::zero())
}

/// χ of a coherent state |β⟩, e^{−|α|²/2} e^{2i Im(αβ*)}.
pub fn chi_coherent<T: Real>(beta: Complex<T>, alpha: Complex<T>) -> Complex<T> {
    let x = alpha.norm_sqr();
    let phase = T::lit(2.0) * (alpha * beta.conj()).im;
    Complex::from_polar((-x / T::lit(2.0)).exp(), phase)
}

/// Closed-form χ for the specs that have one; `None` for custom states.
pub fn chi_of_spec<T: Real>(spec: &MotionalSpec<T>, alpha: Complex<T>) -> Option<Complex<T>> {
    match spec {
        MotionalSpec::Thermal { nbar } => Some(chi_thermal(*nbar, alpha)),
        MotionalSpec::Coherent { alpha: beta } => Some(chi_coherent(*beta, alpha)),
        MotionalSpec::Fock { n } => Some(chi_fock(*n, alpha)),
        MotionalSpec::Custom { .. } => None,
    }
}

/// S(φ) = ½ + ½ Re[χ e^{−iφ}] for any analysis phase.
pub fn s_from_chi_general<T: Real>(chi: Complex<T>, phi: T) -> T {
    let half = T::lit(0.5);
    half + half * (chi * Complex::from_polar(T::one(), -phi)).re
}

/// Spin-up probability that reads out one quadrature of χ:
/// S = (1 + Re χ)/2 at φ = 0, S = (1 + Im χ)/2 at φ = π/2.
pub fn s_from_chi<T: Real>(chi: Complex<T>, quadrature: Quadrature) -> Result<T> {
    let modulus = chi.norm();
    if modulus > T::one() + T::lit(1e-12) {
        return Err(Error::Unphysical {
            modulus: modulus.to_f64_lossy(),
        });
    }
    let half = T::lit(0.5);
    Ok(match quadrature {
        Quadrature::Re => half * (T::one() + chi.re),
        Quadrature::Im => half * (T::one() + chi.im),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::ring_alpha;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn cfg() -> TrapConfig<f64> {
        TrapConfig::default()
    }

    fn seq(n: i32, theta: f64, phi: f64) -> KickSequence<f64> {
        KickSequence::new(n, theta, phi).unwrap()
    }

    #[test]
    fn gamma_examples() {
        assert_eq!(gamma(Complex64::new(0.0, 0.0), 3, 0.2, 1.0), 0.0);
        assert_eq!(gamma(Complex64::new(1.3, -0.2), 3, 0.2, 0.0), 0.0);
        assert_abs_diff_eq!(gamma(Complex64::new(1.0, 0.0), 1, 0.2, PI), 0.4, epsilon = 1e-15);
    }

    #[test]
    fn coherent_fringe_examples() {
        let c = cfg();
        for &phi in &[0.0, 1.0, 2.0] {
            let s = s_coherent(Complex64::new(0.7, 0.1), &c, &seq(2, 0.0, phi));
            assert_abs_diff_eq!(s, (1.0 + phi.cos()) / 2.0, epsilon = 1e-15);
        }
        let s = s_coherent(Complex64::new(0.0, 0.0), &c, &seq(1, PI, 0.0));
        assert_abs_diff_eq!(s, 0.5 + 0.5 * (-0.32f64).exp(), epsilon = 1e-15);
        assert!((s - 0.8631).abs() < 5e-5);
    }

    #[test]
    fn thermal_fringe_examples() {
        let c = cfg();
        for m in 1..4 {
            let s = s_thermal(1e5, &c, &seq(1, 2.0 * PI * m as f64, 0.4));
            assert_abs_diff_eq!(s, (1.0 + 0.4f64.cos()) / 2.0, epsilon = 1e-9);
        }
        let s = s_thermal(0.0, &c, &seq(1, PI, 0.0));
        assert!((s - 0.8631).abs() < 5e-5);
        let s = s_thermal(1e6, &c, &seq(1, 0.01, 0.0));
        assert!((s - 0.5).abs() < 1e-7);
        // giant occupation underflows cleanly
        let s = s_thermal(1e9, &c, &seq(1, 1.0, 0.0));
        assert_eq!(s, 0.5);
    }

    #[test]
    fn vacuum_thermal_equals_vacuum_coherent() {
        let c = cfg();
        for n in [-3, -1, 1, 2, 5] {
            for i in 0..40 {
                let theta = 0.17 * i as f64;
                let phi = 0.05 * i as f64;
                let a = s_thermal(0.0, &c, &seq(n, theta, phi));
                let b = s_coherent(Complex64::new(0.0, 0.0), &c, &seq(n, theta, phi));
                assert_eq!(a, b);
            }
        }
    }

    // bisection on C(θ) = ½, independent of the closed-form half-width
    fn fwhm_bisect(nbar: f64, n: i32, eta: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, PI);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if thermal_envelope(nbar, n, eta, mid) > 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        2.0 * lo
    }

    #[test]
    fn fwhm_examples() {
        let w = fwhm_hot(100.0, 1, 0.2);
        assert_abs_diff_eq!(w.value, 0.415, epsilon = 1e-12);
        assert!(w.hot_ion);
        assert_abs_diff_eq!(fwhm_hot(1e4, 1, 0.2).value, 0.0415, epsilon = 1e-12);
        assert_abs_diff_eq!(fwhm_hot(4e4, 1, 0.2).value, 0.0415 / 2.0, epsilon = 1e-12);
        assert!(!fwhm_hot(1.0, 1, 0.2).hot_ion);

        for &nbar in &[100.0, 1e4] {
            let exact = fwhm_exact(nbar, 1, 0.2).unwrap();
            assert!((exact - fwhm_bisect(nbar, 1, 0.2)).abs() < 1e-12);
            // Gaussian limit √(ln 2)/(Nη√n̄) ≈ 0.8326/(Nη√n̄)
            let hot = fwhm_hot(nbar, 1, 0.2).value;
            assert!((exact - hot).abs() / hot < 0.01, "{exact} vs {hot}");
        }
        assert!((fwhm_exact(1.0f64, 1, 0.2).unwrap() - 4.06).abs() < 0.01);
        assert!(fwhm_exact(0.5, 1, 0.2).is_none());
    }

    #[test]
    fn chi_examples() {
        let one = Complex64::new(1.0, 0.0);
        assert_eq!(chi_thermal(3.0, Complex64::new(0.0, 0.0)), one);
        let c = chi_thermal(1.0, Complex64::new(0.6, 0.8));
        assert_abs_diff_eq!(c.re, (-1.5f64).exp(), epsilon = 1e-15);
        assert!((c.re - 0.2231).abs() < 1e-4);
        let a = Complex64::new(0.3, -1.2);
        assert_abs_diff_eq!(chi_thermal(0.0, a).re, (-a.norm_sqr() / 2.0).exp(), epsilon = 1e-15);

        assert_eq!(chi_fock(1, Complex64::new(0.0, 0.0)), one);
        assert_abs_diff_eq!(chi_fock(1, Complex64::new(0.0, 1.0)).re, 0.0, epsilon = 1e-15);
        let m = chi_fock(1, Complex64::from_polar(3f64.sqrt(), 1.0)).re;
        assert_abs_diff_eq!(m, -2.0 * (-1.5f64).exp(), epsilon = 1e-14);
        assert!((m + 0.4463).abs() < 1e-4);
        // global minimum along the radial direction
        for i in 0..400 {
            let r = 0.01 * i as f64;
            assert!(chi_fock(1, Complex64::new(r, 0.0)).re >= m - 1e-15);
        }
    }

    #[test]
    fn s_from_chi_examples() {
        assert_eq!(s_from_chi(Complex64::new(1.0, 0.0), Quadrature::Re).unwrap(), 1.0);
        let s = s_from_chi(Complex64::new(-0.4463, 0.0), Quadrature::Re).unwrap();
        assert_abs_diff_eq!(s, 0.27685, epsilon = 1e-12);
        assert_eq!(s_from_chi(Complex64::new(0.3, 0.0), Quadrature::Im).unwrap(), 0.5);
        assert!(s_from_chi(Complex64::new(0.9, 0.9), Quadrature::Re).is_err());
    }

    #[test]
    fn chi_round_trip_through_rings() {
        let c = cfg();
        for n in [1, 2, -3, 5] {
            for i in 0..50 {
                let theta = 0.13 * i as f64;
                let a = ring_alpha(&c, n, theta).unwrap().alpha();
                for &nbar in &[0.0, 0.7, 12.0] {
                    let s = s_from_chi(chi_thermal(nbar, a), Quadrature::Re).unwrap();
                    let t = s_thermal(nbar, &c, &seq(n, theta, 0.0));
                    assert!((s - t).abs() < 1e-14, "{s} vs {t}");
                }
                // the coherent-state fringe is the same map applied to χ_coherent
                let beta = Complex64::new(0.4, -0.9);
                for &phi in &[0.0, PI / 2.0, 1.1] {
                    let s = s_from_chi_general(chi_coherent(beta, a), phi);
                    let t = s_coherent(beta, &c, &seq(n, theta, phi));
                    assert!((s - t).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn envelope_is_monotone_to_half_period() {
        for &nbar in &[0.0, 0.5, 10.0, 1e4] {
            let mut last = f64::INFINITY;
            for i in 0..=200 {
                let v = thermal_envelope(nbar, 1, 0.2, PI * i as f64 / 200.0);
                assert!(v <= last);
                last = v;
            }
        }
    }

    #[test]
    fn single_precision_agrees() {
        let c32: TrapConfig<f32> = TrapConfig::default();
        let s32 = s_thermal(3.0f32, &c32, &KickSequence::new(2, 1.1f32, 0.3f32).unwrap());
        let s64 = s_thermal(3.0, &cfg(), &seq(2, 1.1, 0.3));
        assert!((s32 as f64 - s64).abs() < 1e-5);
        let f32v = chi_fock(3, Complex::new(0.5f32, 0.4f32)).re;
        let f64v = chi_fock(3, Complex64::new(0.5, 0.4)).re;
        assert!((f32v as f64 - f64v).abs() < 1e-5);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn outputs_are_physical(
                nbar in 0.0f64..1e6, n in prop_oneof![-10i32..=-1, 1i32..=10],
                theta in -10.0f64..10.0, phi in -4.0f64..4.0,
                are in -5.0f64..5.0, aim in -5.0f64..5.0,
            ) {
                let c = cfg();
                let s = seq(n, theta, phi);
                let st = s_thermal(nbar, &c, &s);
                prop_assert!((0.0..=1.0).contains(&st));
                let sc = s_coherent(Complex64::new(are, aim), &c, &s);
                prop_assert!((0.0..=1.0).contains(&sc));
                let a = Complex64::new(are, aim);
                prop_assert!(chi_thermal(nbar, a).norm() <= 1.0);
                prop_assert!(chi_fock((nbar as usize) % 12, a).norm() <= 1.0 + 1e-12);
            }
        }
    }
}
