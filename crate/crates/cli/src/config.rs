//! Run configuration, read from a sectioned TOML file.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use ionkick::analytic::Quadrature;
use ionkick::constants::{DEFAULT_DETECTION_FIDELITY, DEFAULT_SDK_FIDELITY, YB171_ION_MASS};
use ionkick::heating::NoiseDrive;
use ionkick::tomography::{Smoothing, DEFAULT_RINGS, DEFAULT_THETA_COUNT};
use ionkick::{MotionalSpec, TrapConfig};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrapSection {
    /// Angular trap frequency, rad/s.
    pub omega_t: f64,
    pub eta: f64,
    /// Pulse repetition rate, Hz.
    pub f_rep: f64,
    /// Ion mass, kg.
    pub mass: f64,
    pub detection_fidelity: f64,
    pub sdk_fidelity: f64,
}

impl Default for TrapSection {
    fn default() -> Self {
        Self {
            omega_t: TAU * 1e6,
            eta: 0.2,
            f_rep: 118e6,
            mass: YB171_ION_MASS,
            detection_fidelity: DEFAULT_DETECTION_FIDELITY,
            sdk_fidelity: DEFAULT_SDK_FIDELITY,
        }
    }
}

impl TrapSection {
    pub fn to_trap(&self) -> CliResult<TrapConfig<f64>> {
        Ok(TrapConfig::new(self.omega_t, self.eta, self.f_rep, self.mass)?
            .with_fidelities(self.detection_fidelity, self.sdk_fidelity)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub seed: u64,
    pub shots: u64,
    /// Write expected counts round(p·shots) instead of sampling.
    pub noiseless: bool,
    pub out: PathBuf,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            seed: 1,
            shots: 500,
            noiseless: false,
            out: PathBuf::from("ionkick-out"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Fringe,
    Thermometry,
    Tomography,
    Heating,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    pub kind: ExperimentKind,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            kind: ExperimentKind::Fringe,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateKind {
    Thermal,
    Coherent,
    Fock,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StateSection {
    pub kind: StateKind,
    pub nbar: f64,
    pub alpha_re: f64,
    pub alpha_im: f64,
    pub n: usize,
    pub amps_re: Vec<f64>,
    pub amps_im: Vec<f64>,
}

impl Default for StateSection {
    fn default() -> Self {
        Self {
            kind: StateKind::Thermal,
            nbar: 0.0,
            alpha_re: 0.0,
            alpha_im: 0.0,
            n: 0,
            amps_re: Vec::new(),
            amps_im: Vec::new(),
        }
    }
}

impl StateSection {
    pub fn to_spec(&self) -> CliResult<MotionalSpec<f64>> {
        let spec = match self.kind {
            StateKind::Thermal => MotionalSpec::Thermal { nbar: self.nbar },
            StateKind::Coherent => MotionalSpec::Coherent {
                alpha: Complex64::new(self.alpha_re, self.alpha_im),
            },
            StateKind::Fock => MotionalSpec::Fock { n: self.n },
            StateKind::Custom => {
                if !self.amps_im.is_empty() && self.amps_im.len() != self.amps_re.len() {
                    return Err(CliError::Validation(
                        "state: amps_im must be empty or as long as amps_re".into(),
                    ));
                }
                let amps = self
                    .amps_re
                    .iter()
                    .enumerate()
                    .map(|(i, &re)| Complex64::new(re, self.amps_im.get(i).copied().unwrap_or(0.0)))
                    .collect();
                MotionalSpec::Custom { amps }
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FringeSection {
    pub n_kicks: i32,
    pub theta: f64,
    pub detuning_points: usize,
    /// Ramsey time T, s.
    pub ramsey_time: f64,
}

impl Default for FringeSection {
    fn default() -> Self {
        Self {
            n_kicks: 1,
            theta: TAU,
            detuning_points: 16,
            ramsey_time: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThetaGridKind {
    /// Evenly spaced over 2πm ± min(2·FWHM, π).
    Uniform,
    /// Quantized to the coarse or fine θ step.
    Planned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThermometrySection {
    pub nbars: Vec<f64>,
    pub n_kicks: i32,
    pub theta_points: usize,
    pub revival: u32,
    pub grid: ThetaGridKind,
    pub detuning_points: usize,
    pub ramsey_time: f64,
}

impl Default for ThermometrySection {
    fn default() -> Self {
        Self {
            nbars: vec![0.5, 10.0, 1e3, 1e4],
            n_kicks: 1,
            theta_points: 41,
            revival: 1,
            grid: ThetaGridKind::Uniform,
            detuning_points: 16,
            ramsey_time: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuadratureName {
    Re,
    Im,
}

impl From<QuadratureName> for Quadrature {
    fn from(q: QuadratureName) -> Self {
        match q {
            QuadratureName::Re => Quadrature::Re,
            QuadratureName::Im => Quadrature::Im,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SmoothingName {
    Interpolate,
    Discrepancy,
}

impl From<SmoothingName> for Smoothing {
    fn from(s: SmoothingName) -> Self {
        match s {
            SmoothingName::Interpolate => Smoothing::Interpolate,
            SmoothingName::Discrepancy => Smoothing::Discrepancy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TomographySection {
    pub rings: Vec<i32>,
    pub theta_count: usize,
    pub quadratures: Vec<QuadratureName>,
    pub grid_resolution: usize,
    pub smoothing: SmoothingName,
    /// Divide out the per-ring contrast loss before reconstruction.
    pub correct_lift: bool,
    /// Compare the samples against the `[state]` section.
    pub reference: bool,
}

impl Default for TomographySection {
    fn default() -> Self {
        Self {
            rings: DEFAULT_RINGS.to_vec(),
            theta_count: DEFAULT_THETA_COUNT,
            quadratures: vec![QuadratureName::Re, QuadratureName::Im],
            grid_resolution: 81,
            smoothing: SmoothingName::Discrepancy,
            correct_lift: true,
            reference: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HeatingSection {
    /// V²/Hz
    pub s_v: f64,
    /// m
    pub d_eff: f64,
    /// s
    pub duration: f64,
    pub nbar0: f64,
    /// Also synthesize and fit a lineshape at the predicted n̄.
    pub synthesize: bool,
    pub n_kicks: i32,
    pub theta_points: usize,
    pub detuning_points: usize,
    pub ramsey_time: f64,
}

impl Default for HeatingSection {
    fn default() -> Self {
        Self {
            s_v: 1e-16,
            d_eff: 1e-3,
            duration: 0.25,
            nbar0: 10.0,
            synthesize: true,
            n_kicks: 1,
            theta_points: 41,
            detuning_points: 16,
            ramsey_time: 1e-3,
        }
    }
}

impl HeatingSection {
    pub fn drive(&self) -> NoiseDrive<f64> {
        NoiseDrive {
            s_v: self.s_v,
            d_eff: self.d_eff,
            duration: self.duration,
            nbar0: self.nbar0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub run: RunSection,
    pub experiment: ExperimentSection,
    pub trap: TrapSection,
    pub state: StateSection,
    pub fringe: FringeSection,
    pub thermometry: ThermometrySection,
    pub tomography: TomographySection,
    pub heating: HeatingSection,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub shots: Option<u64>,
}

impl RunConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(out) = &o.out {
            self.run.out = out.clone();
        }
        if let Some(seed) = o.seed {
            self.run.seed = seed;
        }
        if let Some(shots) = o.shots {
            self.run.shots = shots;
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: &str| Err(CliError::Validation(m.to_string()));
        self.trap.to_trap()?;
        if self.run.shots == 0 {
            return bad("run.shots must be at least 1");
        }
        if self.fringe.n_kicks == 0 || self.thermometry.n_kicks == 0 || self.heating.n_kicks == 0 {
            return bad("n_kicks must be nonzero");
        }
        for (name, points, t) in [
            ("fringe", self.fringe.detuning_points, self.fringe.ramsey_time),
            ("thermometry", self.thermometry.detuning_points, self.thermometry.ramsey_time),
            ("heating", self.heating.detuning_points, self.heating.ramsey_time),
        ] {
            if points < 5 {
                return bad(&format!("{name}.detuning_points must be at least 5"));
            }
            if !(t > 0.0) || !t.is_finite() {
                return bad(&format!("{name}.ramsey_time must be positive"));
            }
        }
        if self.thermometry.theta_points < 4 || self.heating.theta_points < 4 {
            return bad("theta_points must be at least 4");
        }
        if self.thermometry.nbars.iter().any(|n| !(*n > 0.0) || !n.is_finite()) {
            return bad("thermometry.nbars must be positive");
        }
        if self.tomography.rings.is_empty() || self.tomography.rings.contains(&0) {
            return bad("tomography.rings must be nonempty and nonzero");
        }
        if self.tomography.quadratures.is_empty() {
            return bad("tomography.quadratures must not be empty");
        }
        if self.tomography.grid_resolution < 2 {
            return bad("tomography.grid_resolution must be at least 2");
        }
        self.heating.drive().validate()?;
        self.state.to_spec()?;
        Ok(())
    }

    /// Canonical text of the effective configuration.
    pub fn canonical(&self) -> CliResult<String> {
        Ok(toml::to_string(self)?)
    }

    /// SHA-256 of the canonical text, hex encoded. The output directory is
    /// left out so that a run reproduces byte for byte wherever it is written.
    pub fn digest(&self) -> CliResult<String> {
        let mut c = self.clone();
        c.run.out = RunSection::default().out;
        Ok(hex::encode(Sha256::digest(c.canonical()?.as_bytes())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = RunConfig::parse("").unwrap();
        assert_eq!(c, RunConfig::default());
        c.validate().unwrap();
        assert_eq!(c.tomography.rings.len(), 16);
    }

    #[test]
    fn round_trips_through_canonical_text() {
        let mut c = RunConfig::default();
        c.state.kind = StateKind::Fock;
        c.state.n = 1;
        let back = RunConfig::parse(&c.canonical().unwrap()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.digest().unwrap(), c.digest().unwrap());
        let mut moved = c.clone();
        moved.run.out = PathBuf::from("elsewhere");
        assert_eq!(moved.digest().unwrap(), c.digest().unwrap());
        moved.run.seed += 1;
        assert_ne!(moved.digest().unwrap(), c.digest().unwrap());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(RunConfig::parse("[trap]\nomega = 1.0\n"), Err(CliError::Validation(_))));
        assert!(RunConfig::parse("[nonsense]\n").is_err());
    }

    #[test]
    fn overrides_and_validation() {
        let mut c = RunConfig::parse("[run]\nseed = 3\n[trap]\neta = 0.1\n").unwrap();
        assert_eq!(c.trap.eta, 0.1);
        c.apply(&Overrides {
            seed: Some(9),
            shots: Some(0),
            out: None,
        });
        assert_eq!(c.run.seed, 9);
        assert!(c.validate().is_err());
        let c = RunConfig::parse("[state]\nkind = \"custom\"\namps_re = [0.6, 0.6]\n").unwrap();
        assert!(c.validate().is_err());
    }
}
