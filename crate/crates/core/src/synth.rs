//! Synthetic experimental records: Ramsey fringe scans and ring samples with
//! finite shots, kick infidelity and detection error.
//!
//! Randomness is always seeded. Every measured point draws from its own
//! ChaCha stream selected by its index, so results do not depend on the order
//! or parallelism with which points are generated.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::analytic::{self, Quadrature};
use crate::error::{Error, Result};
use crate::fock_oracle;
use crate::kinematics::{ring_alpha, KickSequence, MotionalSpec, TrapConfig};

/// Contrast multiplier as a function of n̄, applied on top of the per-kick
/// fidelity loss.
pub type AmplitudeHook = fn(f64) -> f64;

/// Maps an ideal spin-up probability onto what the detector reports.
#[derive(Debug, Clone, Copy)]
pub struct LiftModel {
    pub detection_fidelity: f64,
    pub sdk_fidelity: f64,
    /// Optional n̄-dependent contrast loss; off by default.
    pub amplitude_hook: Option<AmplitudeHook>,
}

impl LiftModel {
    pub fn from_config(cfg: &TrapConfig<f64>) -> Self {
        Self {
            detection_fidelity: cfg.detection_fidelity,
            sdk_fidelity: cfg.sdk_fidelity,
            amplitude_hook: None,
        }
    }

    pub fn with_hook(mut self, hook: AmplitudeHook) -> Self {
        self.amplitude_hook = Some(hook);
        self
    }

    /// A = F_sdk^(2|N|), times the hook when one is set and n̄ is known.
    pub fn amplitude(&self, n_kicks: i32, nbar: Option<f64>) -> f64 {
        let kicks = 2 * n_kicks.unsigned_abs() as i32;
        let base = self.sdk_fidelity.powi(kicks);
        match (self.amplitude_hook, nbar) {
            (Some(hook), Some(nbar)) => base * hook(nbar).clamp(0.0, 1.0),
            _ => base,
        }
    }

    /// p' = f·p_A + (1 − f)(1 − p_A) with p_A = ½ + A(p − ½).
    pub fn lift(&self, p: f64, amplitude: f64) -> f64 {
        let f = self.detection_fidelity;
        let pa = 0.5 + amplitude * (p - 0.5);
        (f * pa + (1.0 - f) * (1.0 - pa)).clamp(0.0, 1.0)
    }
}

/// Ideal spin-up probability for any motional spec.
pub fn model_probability(
    spec: &MotionalSpec<f64>,
    cfg: &TrapConfig<f64>,
    n_kicks: i32,
    theta: f64,
    phi: f64,
) -> Result<f64> {
    let seq = KickSequence::new(n_kicks, theta, phi)?;
    Ok(match spec {
        MotionalSpec::Thermal { nbar } => analytic::s_thermal(*nbar, cfg, &seq),
        MotionalSpec::Coherent { alpha } => analytic::s_coherent(*alpha, cfg, &seq),
        _ => analytic::s_from_chi_general(chi_for_spec(spec, cfg, n_kicks, theta)?, phi),
    })
}

/// χ at the ring point (N, θ), through the Fock oracle for custom states.
pub fn chi_for_spec(spec: &MotionalSpec<f64>, cfg: &TrapConfig<f64>, n_kicks: i32, theta: f64) -> Result<Complex64> {
    let alpha = ring_alpha(cfg, n_kicks, theta)?;
    if let Some(chi) = analytic::chi_of_spec(spec, alpha.alpha()) {
        return Ok(chi);
    }
    let MotionalSpec::Custom { amps } = spec else {
        unreachable!("closed forms cover the other variants")
    };
    let r = (amps.len() as f64).sqrt() + alpha.alpha().norm() + 6.0;
    let dim = ((r * r).ceil() as usize).max(16);
    let reg = fock_oracle::prepare(spec, dim)?;
    fock_oracle::char_function(&reg, alpha)
}

/// Independent sub-seed for item `index` of a seeded campaign (SplitMix64).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x632B_E59B_D9B4_E019);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn draw(p: f64, shots: u64, seed: u64, index: u64, noiseless: bool) -> Result<u64> {
    if noiseless {
        return Ok((p * shots as f64).round() as u64);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let dist = Binomial::new(shots, p).map_err(|e| Error::invalid("probability", e.to_string()))?;
    Ok(dist.sample(&mut rng))
}

/// Evenly spaced detunings whose Ramsey phases δT cover one period.
pub fn fringe_detunings(points: usize, ramsey_time: f64) -> Vec<f64> {
    (0..points)
        .map(|j| std::f64::consts::TAU * j as f64 / (points as f64 * ramsey_time))
        .collect()
}

/// Acquisition settings for one Ramsey fringe scan at fixed (N, θ).
#[derive(Debug, Clone, PartialEq)]
pub struct FringePlan {
    pub n_kicks: i32,
    pub theta: f64,
    /// Microwave detunings δ, rad/s.
    pub detunings: Vec<f64>,
    /// Ramsey interrogation time T, s.
    pub ramsey_time: f64,
    pub shots: u64,
    /// Record expected counts round(p·shots) instead of sampling.
    pub noiseless: bool,
}

/// Spin-up counts of one fringe scan; the phase of point i is δ_i·T.
#[derive(Debug, Clone, PartialEq)]
pub struct FringeScan {
    pub n_kicks: i32,
    pub theta: f64,
    pub ramsey_time: f64,
    pub detunings: Vec<f64>,
    pub shots: u64,
    pub counts: Vec<u64>,
}

impl FringeScan {
    pub fn phases(&self) -> Vec<f64> {
        self.detunings.iter().map(|d| d * self.ramsey_time).collect()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.shots as f64).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.shots == 0 {
            return Err(Error::invalid("shots", "must be >= 1"));
        }
        if self.detunings.len() != self.counts.len() {
            return Err(Error::invalid("counts", "one count per detuning required"));
        }
        if let Some(c) = self.counts.iter().find(|&&c| c > self.shots) {
            return Err(Error::invalid("counts", format!("count {c} exceeds shots {}", self.shots)));
        }
        Ok(())
    }
}

/// Simulated fringe scan with binomial shot noise.
pub fn synth_fringe(spec: &MotionalSpec<f64>, cfg: &TrapConfig<f64>, plan: &FringePlan, seed: u64) -> Result<FringeScan> {
    synth_fringe_with(spec, cfg, plan, &LiftModel::from_config(cfg), seed)
}

pub fn synth_fringe_with(
    spec: &MotionalSpec<f64>,
    cfg: &TrapConfig<f64>,
    plan: &FringePlan,
    lift: &LiftModel,
    seed: u64,
) -> Result<FringeScan> {
    spec.validate()?;
    if plan.shots == 0 {
        return Err(Error::invalid("shots", "must be >= 1"));
    }
    let amplitude = lift.amplitude(plan.n_kicks, thermal_nbar(spec));
    // the motional part of S is shared by every detuning: only φ changes
    let chi = match spec {
        MotionalSpec::Thermal { .. } | MotionalSpec::Coherent { .. } => None,
        _ => Some(chi_for_spec(spec, cfg, plan.n_kicks, plan.theta)?),
    };
    let counts = plan
        .detunings
        .par_iter()
        .enumerate()
        .map(|(i, delta)| {
            let phi = delta * plan.ramsey_time;
            let p = match chi {
                Some(chi) => analytic::s_from_chi_general(chi, phi),
                None => model_probability(spec, cfg, plan.n_kicks, plan.theta, phi)?,
            };
            draw(lift.lift(p, amplitude), plan.shots, seed, i as u64, plan.noiseless)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FringeScan {
        n_kicks: plan.n_kicks,
        theta: plan.theta,
        ramsey_time: plan.ramsey_time,
        detunings: plan.detunings.clone(),
        shots: plan.shots,
        counts,
    })
}

/// One fringe scan per θ, each drawn from its own derived seed.
pub fn synth_lineshape(
    spec: &MotionalSpec<f64>,
    cfg: &TrapConfig<f64>,
    thetas: &[f64],
    template: &FringePlan,
    lift: &LiftModel,
    seed: u64,
) -> Result<Vec<FringeScan>> {
    thetas
        .par_iter()
        .enumerate()
        .map(|(i, &theta)| {
            let plan = FringePlan {
                theta,
                ..template.clone()
            };
            synth_fringe_with(spec, cfg, &plan, lift, derive_seed(seed, i as u64))
        })
        .collect()
}

fn thermal_nbar(spec: &MotionalSpec<f64>) -> Option<f64> {
    match spec {
        MotionalSpec::Thermal { nbar } => Some(*nbar),
        _ => None,
    }
}

/// Spin-up counts at one ring point and analysis phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingSample {
    pub n_kicks: i32,
    pub theta: f64,
    pub phi: f64,
    pub shots: u64,
    pub count: u64,
}

impl RingSample {
    pub fn estimate(&self) -> f64 {
        self.count as f64 / self.shots as f64
    }

    /// Binomial standard error, evaluated at (count + ½)/(shots + 1) so that
    /// it stays positive for all-bright or all-dark points.
    pub fn std_error(&self) -> f64 {
        let p = (self.count as f64 + 0.5) / (self.shots as f64 + 1.0);
        (p * (1.0 - p) / self.shots as f64).sqrt()
    }
}

/// Settings for sampling χ along rings.
#[derive(Debug, Clone, PartialEq)]
pub struct RingPlan {
    pub rings: Vec<i32>,
    pub thetas: Vec<f64>,
    pub quadratures: Vec<Quadrature>,
    pub shots: u64,
    pub noiseless: bool,
}

/// Samples S at φ ∈ {0, π/2} on every (ring, θ), ordered ring → θ → φ.
pub fn synth_ring_samples(
    spec: &MotionalSpec<f64>,
    cfg: &TrapConfig<f64>,
    plan: &RingPlan,
    seed: u64,
) -> Result<Vec<RingSample>> {
    synth_ring_samples_with(spec, cfg, plan, &LiftModel::from_config(cfg), seed)
}

pub fn synth_ring_samples_with(
    spec: &MotionalSpec<f64>,
    cfg: &TrapConfig<f64>,
    plan: &RingPlan,
    lift: &LiftModel,
    seed: u64,
) -> Result<Vec<RingSample>> {
    spec.validate()?;
    if plan.rings.is_empty() {
        return Err(Error::invalid("rings", "at least one ring required"));
    }
    if plan.shots == 0 {
        return Err(Error::invalid("shots", "must be >= 1"));
    }
    let points: Vec<(i32, f64)> = plan
        .rings
        .iter()
        .flat_map(|&n| plan.thetas.iter().map(move |&t| (n, t)))
        .collect();
    let nq = plan.quadratures.len();
    let nested = points
        .par_iter()
        .enumerate()
        .map(|(i, &(n, theta))| {
            let chi = chi_for_spec(spec, cfg, n, theta)?;
            let amplitude = lift.amplitude(n, thermal_nbar(spec));
            plan.quadratures
                .iter()
                .enumerate()
                .map(|(q, quad)| {
                    let phi = quad.phi::<f64>();
                    let p = analytic::s_from_chi_general(chi, phi);
                    let index = (i * nq + q) as u64;
                    let count = draw(lift.lift(p, amplitude), plan.shots, seed, index, plan.noiseless)?;
                    Ok(RingSample {
                        n_kicks: n,
                        theta,
                        phi,
                        shots: plan.shots,
                        count,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(nested.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn cfg() -> TrapConfig<f64> {
        TrapConfig::default()
    }

    fn plan(theta: f64, shots: u64) -> FringePlan {
        FringePlan {
            n_kicks: 1,
            theta,
            detunings: fringe_detunings(16, 1e-3),
            ramsey_time: 1e-3,
            shots,
            noiseless: false,
        }
    }

    #[test]
    fn lift_is_affine_and_bounded() {
        let lift = LiftModel::from_config(&cfg());
        let f = cfg().detection_fidelity;
        let a = lift.amplitude(1, None);
        assert!((a - 0.993f64.powi(2)).abs() < 1e-15);
        let mut last = -1.0;
        for i in 0..=100 {
            let p = i as f64 / 100.0;
            let q = lift.lift(p, 1.0);
            assert!(q >= 1.0 - f - 1e-15 && q <= f + 1e-15);
            assert!(q > last);
            last = q;
        }
        let mid = lift.lift(0.5, 1.0);
        assert!((lift.lift(0.2, 1.0) + lift.lift(0.8, 1.0) - 2.0 * mid).abs() < 1e-15);
    }

    #[test]
    fn amplitude_hook_is_opt_in() {
        let lift = LiftModel::from_config(&cfg());
        assert_eq!(lift.amplitude(2, Some(1e4)), lift.amplitude(2, None));
        let hooked = lift.with_hook(|nbar| (-nbar / 1e5).exp());
        assert!(hooked.amplitude(2, Some(1e4)) < lift.amplitude(2, Some(1e4)));
    }

    #[test]
    fn revival_fringe_is_full_contrast() {
        let c = cfg().ideal();
        let mut p = plan(2.0 * PI, 1_000_000);
        p.noiseless = true;
        let scan = synth_fringe(&MotionalSpec::Thermal { nbar: 0.0 }, &c, &p, 1).unwrap();
        for (phase, f) in scan.phases().iter().zip(scan.frequencies()) {
            assert!((f - (1.0 + phase.cos()) / 2.0).abs() < 1e-6);
        }
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let spec = MotionalSpec::Thermal { nbar: 3.0 };
        let a = synth_fringe(&spec, &cfg(), &plan(1.0, 500), 42).unwrap();
        let b = synth_fringe(&spec, &cfg(), &plan(1.0, 500), 42).unwrap();
        let c = synth_fringe(&spec, &cfg(), &plan(1.0, 500), 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.counts, c.counts);
    }

    #[test]
    fn large_shot_frequency_converges() {
        let spec = MotionalSpec::Thermal { nbar: 1.0 };
        let c = cfg();
        let shots = 100_000;
        let scan = synth_fringe(&spec, &c, &plan(0.8, shots), 7).unwrap();
        let lift = LiftModel::from_config(&c);
        let amp = lift.amplitude(1, Some(1.0));
        let z: Vec<f64> = scan
            .phases()
            .iter()
            .zip(scan.frequencies())
            .map(|(phase, f)| {
                let p = lift.lift(model_probability(&spec, &c, 1, 0.8, *phase).unwrap(), amp);
                (f - p) / (p * (1.0 - p) / shots as f64).sqrt()
            })
            .collect();
        // 16 points at 3σ: allow one excursion, none beyond 4σ
        assert!(z.iter().filter(|z| z.abs() > 3.0).count() <= 1, "{z:?}");
        assert!(z.iter().all(|z| z.abs() < 4.0), "{z:?}");
    }

    #[test]
    fn estimates_are_unbiased() {
        let spec = MotionalSpec::Fock { n: 1 };
        let c = cfg();
        let plan = RingPlan {
            rings: vec![3],
            thetas: vec![1.2],
            quadratures: vec![Quadrature::Re],
            shots: 200,
            noiseless: false,
        };
        let lift = LiftModel::from_config(&c);
        let p = lift.lift(model_probability(&spec, &c, 3, 1.2, 0.0).unwrap(), lift.amplitude(3, None));
        let mean: f64 = (0..100)
            .map(|seed| synth_ring_samples(&spec, &c, &plan, seed).unwrap()[0].estimate())
            .sum::<f64>()
            / 100.0;
        let sigma = (p * (1.0 - p) / 200.0).sqrt();
        assert!((mean - p).abs() < 3.0 * sigma / 10.0, "{mean} vs {p}");
    }

    #[test]
    fn default_rings_and_vacuum_origin() {
        let c = cfg();
        let plan = RingPlan {
            rings: crate::tomography::DEFAULT_RINGS.to_vec(),
            thetas: vec![0.0],
            quadratures: vec![Quadrature::Re, Quadrature::Im],
            shots: 2000,
            noiseless: false,
        };
        let samples = synth_ring_samples(&MotionalSpec::vacuum(), &c, &plan, 3).unwrap();
        assert_eq!(samples.len(), 32);
        let lift = LiftModel::from_config(&c);
        for s in samples.iter().filter(|s| s.phi == 0.0) {
            let p = lift.lift(1.0, lift.amplitude(s.n_kicks, None));
            assert!((s.estimate() - p).abs() < 4.0 * (p * (1.0 - p) / 2000.0).sqrt() + 1e-3);
        }
    }

    #[test]
    fn fock_rings_show_dip_and_recovery() {
        // On |N| = 5 the fringe dips below ½ and climbs back to ½ within the
        // first half period; on |N| = 2 it falls monotonically to θ = π.
        let c = cfg().ideal();
        let thetas: Vec<f64> = (0..=200).map(|i| PI * i as f64 / 200.0).collect();
        let s = |n: i32| -> Vec<f64> {
            thetas
                .iter()
                .map(|&t| model_probability(&MotionalSpec::Fock { n: 1 }, &c, n, t, 0.0).unwrap())
                .collect()
        };
        let big = s(5);
        let small = s(-2);
        let imin = big
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert!(imin > 0 && imin < 100);
        assert!(big[imin] < 0.3);
        assert!(big[200] > 0.49);
        assert!(small.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn custom_spec_matches_fock_closed_form() {
        let c = cfg();
        let amps = vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
        let custom = MotionalSpec::Custom { amps };
        for &theta in &[0.3, 1.7, 3.0] {
            let a = model_probability(&custom, &c, 4, theta, 0.4).unwrap();
            let b = model_probability(&MotionalSpec::Fock { n: 1 }, &c, 4, theta, 0.4).unwrap();
            assert!((a - b).abs() < 1e-10);
        }
    }
}
