//! Thermometry from contrast revivals: fringe scans are reduced to one
//! contrast per θ, and the contrast lineshape is fitted for (A, n̄).

pub mod lm;

use std::f64::consts::{LN_2, PI, TAU};

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use crate::analytic;
use crate::constants::FINE_THETA_RESOLUTION;
use crate::error::{Error, Result};
use crate::kinematics::{theta_resolution, TrapConfig};
use crate::synth::FringeScan;

use lm::LeastSquares;

/// Ramsey contrast measured at one θ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContrastPoint {
    pub theta: f64,
    pub contrast: f64,
    pub error: f64,
}

/// Weighted sinusoid fit a + b·cos φ + c·sin φ to one fringe scan.
///
/// Two passes: binomial weights from the observed frequencies, then from the
/// first-pass model, which removes the correlation between a point's value
/// and its weight.
pub fn extract_contrast(scan: &FringeScan) -> Result<ContrastPoint> {
    scan.validate()?;
    let n = scan.counts.len();
    if n < 5 {
        return Err(Error::InsufficientData(format!("{n} fringe points, need at least 5")));
    }
    let phases = scan.phases();
    let lo = phases.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = phases.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let coverage = (hi - lo) * n as f64 / (n - 1) as f64;
    if coverage < TAU * (1.0 - 1e-9) {
        return Err(Error::InsufficientData(format!(
            "fringe phases cover {coverage:.4} rad, need a full period"
        )));
    }

    let shots = scan.shots as f64;
    let freqs = scan.frequencies();
    let floor = 0.5 / (shots + 1.0);
    let variance = |p: f64| {
        let p = p.clamp(floor, 1.0 - floor);
        p * (1.0 - p) / shots
    };

    let first: Vec<f64> = scan
        .counts
        .iter()
        .map(|&c| variance((c as f64 + 0.5) / (shots + 1.0)))
        .collect();
    let (coef, _) = sinusoid_fit(&phases, &freqs, &first)?;
    let second: Vec<f64> = phases
        .iter()
        .map(|&phi| variance(coef[0] + coef[1] * phi.cos() + coef[2] * phi.sin()))
        .collect();
    let (coef, cov) = sinusoid_fit(&phases, &freqs, &second)?;

    let (b, c) = (coef[1], coef[2]);
    let r = b.hypot(c);
    let spread = ((cov[(1, 1)] + cov[(2, 2)]) / 2.0).sqrt();
    let error = if r > 1e-6 * spread.max(1e-300) && r > 0.0 {
        let (gb, gc) = (b / r, c / r);
        (gb * gb * cov[(1, 1)] + 2.0 * gb * gc * cov[(1, 2)] + gc * gc * cov[(2, 2)]).sqrt()
    } else {
        spread
    };
    Ok(ContrastPoint {
        theta: scan.theta,
        contrast: 2.0 * r,
        error: (2.0 * error).max(f64::MIN_POSITIVE),
    })
}

fn sinusoid_fit(phases: &[f64], y: &[f64], var: &[f64]) -> Result<(Vector3<f64>, Matrix3<f64>)> {
    let mut normal = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    for ((&phi, &y), &v) in phases.iter().zip(y).zip(var) {
        let row = Vector3::new(1.0, phi.cos(), phi.sin());
        let w = 1.0 / v;
        normal += row * row.transpose() * w;
        rhs += row * (w * y);
    }
    let cov = normal
        .try_inverse()
        .ok_or_else(|| Error::Singular("fringe phases do not determine a sinusoid".into()))?;
    Ok((cov * rhs, cov))
}

/// How well the lineshape constrains n̄.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitStatus {
    Converged,
    /// Contrast is flat at zero: the revival is narrower than the θ sampling.
    LowerBoundOnly,
    /// Contrast is flat at its peak: the revival is wider than the θ window.
    UpperBoundOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThermometryResult {
    pub nbar: f64,
    pub nbar_err: f64,
    pub amplitude: f64,
    pub amplitude_err: f64,
    pub chi2: f64,
    pub dof: usize,
    /// Exact FWHM of the fitted envelope, if it ever falls to one half.
    pub fwhm: Option<f64>,
    pub status: FitStatus,
}

impl ThermometryResult {
    pub fn reduced_chi2(&self) -> f64 {
        self.chi2 / self.dof.max(1) as f64
    }
}

const MIN_AMPLITUDE: f64 = 1e-6;
const LOG_NBAR_RANGE: (f64, f64) = (-20.0, 30.0);

struct Lineshape<'a> {
    points: &'a [ContrastPoint],
    /// 8(Nη)² sin²(θ/2) per point, so the exponent is −k(2n̄+1).
    k: Vec<f64>,
}

impl Lineshape<'_> {
    fn envelope(&self, i: usize, nbar: f64) -> f64 {
        (-self.k[i] * (2.0 * nbar + 1.0)).exp()
    }
}

impl LeastSquares for Lineshape<'_> {
    fn residuals(&self, p: &DVector<f64>) -> DVector<f64> {
        let nbar = p[1].exp();
        DVector::from_iterator(
            self.points.len(),
            self.points
                .iter()
                .enumerate()
                .map(|(i, pt)| (pt.contrast - p[0] * self.envelope(i, nbar)) / pt.error),
        )
    }

    fn jacobian(&self, p: &DVector<f64>) -> DMatrix<f64> {
        let nbar = p[1].exp();
        DMatrix::from_fn(self.points.len(), 2, |i, j| {
            let e = self.envelope(i, nbar) / self.points[i].error;
            if j == 0 {
                -e
            } else {
                p[0] * e * self.k[i] * 2.0 * nbar
            }
        })
    }

    fn project(&self, p: &mut DVector<f64>) {
        p[0] = p[0].clamp(MIN_AMPLITUDE, 1.0);
        p[1] = p[1].clamp(LOG_NBAR_RANGE.0, LOG_NBAR_RANGE.1);
    }
}

/// Fits contrast(θ) = A·e^{−4(Nη)²(2n̄+1)(1−cos θ)} for (A, n̄).
///
/// n̄ is fitted as e^u. Starts are spread over three decades around a
/// guess from the half-maximum width of the data. Errors come from the
/// unscaled covariance, so they follow the supplied contrast errors.
pub fn fit_lineshape(points: &[ContrastPoint], cfg: &TrapConfig<f64>, n_kicks: i32) -> Result<ThermometryResult> {
    if n_kicks == 0 {
        return Err(Error::ZeroKicks);
    }
    if points.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "{} contrast points, need at least 4",
            points.len()
        )));
    }
    if let Some(p) = points
        .iter()
        .find(|p| !(p.error > 0.0) || !p.error.is_finite() || !p.contrast.is_finite() || !p.theta.is_finite())
    {
        return Err(Error::invalid("contrast", format!("bad point at θ = {}", p.theta)));
    }
    let lo = points.iter().map(|p| p.theta).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.theta).fold(f64::NEG_INFINITY, f64::max);
    if (hi / TAU).floor() < (lo / TAU).ceil() {
        return Err(Error::InsufficientData(format!(
            "θ range [{lo}, {hi}] does not contain a revival at 2πm"
        )));
    }

    let ne = n_kicks as f64 * cfg.eta;
    let problem = Lineshape {
        points,
        k: points
            .iter()
            .map(|p| 8.0 * ne * ne * (p.theta / 2.0).sin().powi(2))
            .collect(),
    };
    let peak = points.iter().map(|p| p.contrast).fold(f64::NEG_INFINITY, f64::max);
    let amp0 = peak.clamp(0.05, 1.0);
    let guess = initial_nbar(points, n_kicks, cfg.eta);

    let settings = lm::Settings::default();
    let best = (-3..=3)
        .map(|j| {
            let u = (guess * 10f64.powf(j as f64 / 2.0)).ln();
            lm::minimize(&problem, DVector::from_vec(vec![amp0, u]), &settings)
        })
        .filter(|s| s.converged && s.chi2.is_finite())
        .min_by(|a, b| a.chi2.total_cmp(&b.chi2));
    let Some(best) = best else {
        return Err(Error::FitFailed {
            starts: 7,
            best_chi2: f64::NAN,
        });
    };

    let nbar = best.params[1].exp();
    let amplitude = best.params[0];
    let (amplitude_err, nbar_err) = match &best.covariance {
        Some(c) => (c[(0, 0)].max(0.0).sqrt(), nbar * c[(1, 1)].max(0.0).sqrt()),
        None => (f64::INFINITY, f64::INFINITY),
    };
    Ok(ThermometryResult {
        nbar,
        nbar_err,
        amplitude,
        amplitude_err,
        chi2: best.chi2,
        dof: points.len() - 2,
        fwhm: analytic::fwhm_exact(nbar, n_kicks, cfg.eta),
        status: classify(points),
    })
}

/// Flat data within three typical errors carries only a one-sided bound.
fn classify(points: &[ContrastPoint]) -> FitStatus {
    let mut errors: Vec<f64> = points.iter().map(|p| p.error).collect();
    errors.sort_by(f64::total_cmp);
    let typical = errors[errors.len() / 2];
    let max = points.iter().map(|p| p.contrast).fold(f64::NEG_INFINITY, f64::max);
    let min = points.iter().map(|p| p.contrast).fold(f64::INFINITY, f64::min);
    if max - min > 3.0 * typical {
        FitStatus::Converged
    } else if max < 3.0 * typical {
        FitStatus::LowerBoundOnly
    } else {
        FitStatus::UpperBoundOnly
    }
}

/// n̄ from the half-maximum crossings nearest the peak, or from the deepest
/// point when the data never drops to half.
fn initial_nbar(points: &[ContrastPoint], n_kicks: i32, eta: f64) -> f64 {
    let ne2 = (n_kicks as f64 * eta).powi(2);
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.theta.total_cmp(&b.theta));
    let (ipk, peak) = sorted
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.contrast.total_cmp(&b.1.contrast))
        .map(|(i, p)| (i, *p))
        .unwrap();
    let half = peak.contrast / 2.0;
    let cross = |a: &ContrastPoint, b: &ContrastPoint| {
        a.theta + (half - a.contrast) * (b.theta - a.theta) / (b.contrast - a.contrast)
    };
    let right = sorted[ipk..]
        .windows(2)
        .find(|w| w[1].contrast <= half)
        .map(|w| cross(&w[0], &w[1]));
    let left = sorted[..=ipk]
        .windows(2)
        .rev()
        .find(|w| w[0].contrast <= half)
        .map(|w| cross(&w[0], &w[1]));
    let half_width = match (left, right) {
        (Some(l), Some(r)) => Some((r - l) / 2.0),
        (Some(l), None) => Some(peak.theta - l),
        (None, Some(r)) => Some(r - peak.theta),
        (None, None) => None,
    };
    let guess = match half_width {
        // 8(Nη)²(2n̄+1) sin²(w/2) = ln 2 at the half width w
        Some(w) if w > 0.0 => (LN_2 / (8.0 * ne2 * (w / 2.0).sin().powi(2)) - 1.0) / 2.0,
        _ => {
            let deepest = sorted
                .iter()
                .min_by(|a, b| a.contrast.total_cmp(&b.contrast))
                .unwrap();
            let ratio = (deepest.contrast / peak.contrast).clamp(1e-3, 0.999);
            let k = 8.0 * ne2 * (deepest.theta / 2.0).sin().powi(2);
            if k > 0.0 {
                (-ratio.ln() / k - 1.0) / 2.0
            } else {
                1.0
            }
        }
    };
    guess.clamp(1e-3, 1e12)
}

/// θ quantization used by a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridMode {
    /// Multiples of the pulse-slot resolution ω_t/f_rep.
    Coarse,
    /// Multiples of the fine 0.1 mrad step.
    Fine,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThetaGrid {
    pub thetas: Vec<f64>,
    pub spacing: f64,
    pub mode: GridMode,
    /// The revival is at least as wide as the finest step.
    pub feasible: bool,
    /// The finest step is coarser than a tenth of the revival width.
    pub undersampled: bool,
}

fn revival_width(nbar: f64, n_kicks: i32, eta: f64) -> f64 {
    analytic::fwhm_exact(nbar, n_kicks, eta).unwrap_or(TAU)
}

/// θ grid around the revival at 2πm with spacing near FWHM/10, quantized to
/// the coarse step when that is fine enough and to 0.1 mrad otherwise.
pub fn plan_theta_grid(nbar_guess: f64, cfg: &TrapConfig<f64>, n_kicks: i32, revival: u32) -> Result<ThetaGrid> {
    if !(nbar_guess > 0.0) || !nbar_guess.is_finite() {
        return Err(Error::invalid("nbar_guess", "must be positive and finite"));
    }
    if n_kicks == 0 {
        return Err(Error::ZeroKicks);
    }
    cfg.validate()?;
    let fwhm = revival_width(nbar_guess, n_kicks, cfg.eta);
    let target = fwhm / 10.0;
    let coarse = theta_resolution(cfg);
    let (mode, step) = if coarse <= target {
        (GridMode::Coarse, coarse)
    } else {
        (GridMode::Fine, FINE_THETA_RESOLUTION)
    };
    let spacing = (target / step).floor().max(1.0) * step;
    let half_span = (2.0 * fwhm).min(PI);
    let half_count = (half_span / spacing).floor() as i64;
    let center = TAU * revival as f64;
    Ok(ThetaGrid {
        thetas: (-half_count..=half_count).map(|j| center + j as f64 * spacing).collect(),
        spacing,
        mode,
        feasible: fwhm >= FINE_THETA_RESOLUTION,
        undersampled: target < FINE_THETA_RESOLUTION,
    })
}

/// `points` evenly spaced θ over 2πm ± min(2·FWHM, π).
pub fn campaign_theta_grid(nbar: f64, cfg: &TrapConfig<f64>, n_kicks: i32, revival: u32, points: usize) -> Vec<f64> {
    let half_span = (2.0 * revival_width(nbar, n_kicks, cfg.eta)).min(PI);
    let center = TAU * revival as f64;
    if points < 2 {
        return vec![center];
    }
    (0..points)
        .map(|j| center - half_span + 2.0 * half_span * j as f64 / (points - 1) as f64)
        .collect()
}

/// Contrast extraction and lineshape fit over a set of scans sharing one N.
pub fn fit_scans(scans: &[FringeScan], cfg: &TrapConfig<f64>) -> Result<(Vec<ContrastPoint>, ThermometryResult)> {
    let Some(first) = scans.first() else {
        return Err(Error::InsufficientData("no fringe scans".into()));
    };
    if let Some(s) = scans.iter().find(|s| s.n_kicks != first.n_kicks) {
        return Err(Error::invalid(
            "n_kicks",
            format!("mixed kick counts {} and {} in one lineshape", first.n_kicks, s.n_kicks),
        ));
    }
    let points = scans.iter().map(extract_contrast).collect::<Result<Vec<_>>>()?;
    let result = fit_lineshape(&points, cfg, first.n_kicks)?;
    Ok((points, result))
}
