//! Phase-space tomography: ring planning, conversion of spin-up
//! probabilities to χ samples, scattered-data reconstruction on a grid and
//! a negativity summary.

pub mod hull;
pub mod spline;

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kinematics::{ring_alpha, PhaseSpacePoint, TrapConfig};
use crate::synth::{LiftModel, RingSample};

use spline::ThinPlateSpline;

/// ±{1, 2, 3, 4, 5, 6, 8, 10}
pub const DEFAULT_RINGS: [i32; 16] = [1, -1, 2, -2, 3, -3, 4, -4, 5, -5, 6, -6, 8, -8, 10, -10];

pub const DEFAULT_THETA_COUNT: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingPoint {
    pub n_kicks: i32,
    pub theta: f64,
    pub alpha: PhaseSpacePoint<f64>,
}

/// `theta_count` evenly spaced θ ∈ [0, 2π) on each ring.
pub fn plan_rings(cfg: &TrapConfig<f64>, ring_set: &[i32], theta_count: usize) -> Result<Vec<RingPoint>> {
    if ring_set.is_empty() {
        return Err(Error::invalid("rings", "at least one ring required"));
    }
    if theta_count < 8 {
        return Err(Error::invalid("theta_count", "need at least 8 points per ring"));
    }
    let mut out = Vec::with_capacity(ring_set.len() * theta_count);
    for &n in ring_set {
        for theta in ring_thetas(theta_count) {
            out.push(RingPoint {
                n_kicks: n,
                theta,
                alpha: ring_alpha(cfg, n, theta)?,
            });
        }
    }
    Ok(out)
}

pub fn ring_thetas(theta_count: usize) -> Vec<f64> {
    (0..theta_count).map(|j| TAU * j as f64 / theta_count as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    /// Outside [−1, 1] by more than three standard errors.
    pub fn unphysical(&self) -> bool {
        self.value.abs() > 1.0 + 3.0 * self.error
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSample {
    pub alpha: PhaseSpacePoint<f64>,
    pub n_kicks: i32,
    pub theta: f64,
    pub re: Estimate,
    /// Missing when no φ = π/2 measurement matched this point.
    pub im: Option<Estimate>,
}

impl ChiSample {
    pub fn re_only(&self) -> bool {
        self.im.is_none()
    }

    pub fn unphysical(&self) -> bool {
        self.re.unphysical() || self.im.is_some_and(|e| e.unphysical())
    }
}

const PHASE_TOL: f64 = 1e-9;

fn theta_key(theta: f64) -> i64 {
    (theta * 1e9).round() as i64
}

#[derive(Default, Clone, Copy)]
struct Pooled {
    shots: u64,
    count: u64,
}

/// χ = 2S − 1 per quadrature, pairing φ = 0 and φ = π/2 samples on (N, θ).
/// Repeated samples of the same point are pooled.
pub fn chi_from_samples(cfg: &TrapConfig<f64>, samples: &[RingSample]) -> Result<Vec<ChiSample>> {
    convert(cfg, samples, None)
}

/// As [`chi_from_samples`], dividing out the known contrast loss of each
/// ring so that the samples estimate χ itself rather than a scaled copy.
pub fn chi_from_samples_corrected(
    cfg: &TrapConfig<f64>,
    samples: &[RingSample],
    lift: &LiftModel,
) -> Result<Vec<ChiSample>> {
    convert(cfg, samples, Some(lift))
}

fn convert(cfg: &TrapConfig<f64>, samples: &[RingSample], lift: Option<&LiftModel>) -> Result<Vec<ChiSample>> {
    let mut table: BTreeMap<(i32, i64), (f64, [Pooled; 2])> = BTreeMap::new();
    for s in samples {
        if s.shots == 0 || s.count > s.shots {
            return Err(Error::invalid("count", format!("{} of {} shots", s.count, s.shots)));
        }
        let q = if s.phi.abs() < PHASE_TOL {
            0
        } else if (s.phi - FRAC_PI_2).abs() < PHASE_TOL {
            1
        } else {
            return Err(Error::invalid("phi", format!("{} is neither 0 nor π/2", s.phi)));
        };
        let entry = table.entry((s.n_kicks, theta_key(s.theta))).or_insert((s.theta, [Pooled::default(); 2]));
        entry.1[q].shots += s.shots;
        entry.1[q].count += s.count;
    }
    table
        .into_iter()
        .map(|((n, _), (theta, pooled))| {
            if pooled[0].shots == 0 {
                return Err(Error::InsufficientData(format!(
                    "no φ = 0 sample at N = {n}, θ = {theta}"
                )));
            }
            let scale = match lift {
                Some(l) => l.amplitude(n, None) * (2.0 * l.detection_fidelity - 1.0),
                None => 1.0,
            };
            if !(scale > 0.0) {
                return Err(Error::invalid("fidelity", "contrast correction must be positive"));
            }
            let estimate = |p: Pooled| {
                let sample = RingSample {
                    n_kicks: n,
                    theta,
                    phi: 0.0,
                    shots: p.shots,
                    count: p.count,
                };
                Estimate {
                    value: (2.0 * sample.estimate() - 1.0) / scale,
                    error: 2.0 * sample.std_error() / scale,
                }
            };
            Ok(ChiSample {
                alpha: ring_alpha(cfg, n, theta)?,
                n_kicks: n,
                theta,
                re: estimate(pooled[0]),
                im: (pooled[1].shots > 0).then(|| estimate(pooled[1])),
            })
        })
        .collect()
}

type Located = ([f64; 2], Estimate);

/// Merges samples that sit at the same α (every ring passes through the
/// origin) by inverse-variance weighting.
fn merge_coincident(points: Vec<Located>) -> Vec<Located> {
    let mut groups: BTreeMap<(i64, i64), Vec<Located>> = BTreeMap::new();
    for (p, e) in points {
        let key = ((p[0] * 1e9).round() as i64, (p[1] * 1e9).round() as i64);
        groups.entry(key).or_default().push((p, e));
    }
    groups
        .into_values()
        .map(|g| {
            let wsum: f64 = g.iter().map(|(_, e)| 1.0 / (e.error * e.error)).sum();
            let value = g.iter().map(|(_, e)| e.value / (e.error * e.error)).sum::<f64>() / wsum;
            (g[0].0, Estimate { value, error: wsum.recip().sqrt() })
        })
        .collect()
}

/// How strongly the reconstruction may depart from the samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Smoothing {
    /// Pass through every sample.
    Interpolate,
    /// Residuals of about one standard error per sample.
    Discrepancy,
    /// Fixed strength in units of the mean sample variance.
    Fixed(f64),
}

#[derive(Debug, Clone)]
struct Channel {
    spline: ThinPlateSpline,
    centers: Vec<[f64; 2]>,
    errors: Vec<f64>,
}

impl Channel {
    fn fit(samples: Vec<Located>, smoothing: Smoothing) -> Result<Self> {
        let merged = merge_coincident(samples);
        let centers: Vec<[f64; 2]> = merged.iter().map(|(p, _)| *p).collect();
        let values: Vec<f64> = merged.iter().map(|(_, e)| e.value).collect();
        let errors: Vec<f64> = merged.iter().map(|(_, e)| e.error.max(1e-12)).collect();
        let variances: Vec<f64> = errors.iter().map(|e| e * e).collect();
        let spline = match smoothing {
            Smoothing::Interpolate => ThinPlateSpline::fit(&centers, &values, &variances, 0.0)?,
            Smoothing::Fixed(l) => ThinPlateSpline::fit(&centers, &values, &variances, l)?,
            Smoothing::Discrepancy => ThinPlateSpline::fit_discrepancy(&centers, &values, &variances)?,
        };
        Ok(Self {
            spline,
            centers,
            errors,
        })
    }

    /// Inverse-square-distance average of the sample errors.
    fn sigma(&self, p: [f64; 2]) -> f64 {
        let mut wsum = 0.0;
        let mut acc = 0.0;
        for (c, e) in self.centers.iter().zip(&self.errors) {
            let d2 = (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2);
            if d2 < 1e-24 {
                return *e;
            }
            wsum += 1.0 / d2;
            acc += e / d2;
        }
        acc / wsum
    }
}

/// Continuous χ estimate over the convex hull of the samples.
#[derive(Debug, Clone)]
pub struct ChiSurface {
    re: Channel,
    im: Option<Channel>,
    hull: Vec<[f64; 2]>,
    hull_tol: f64,
}

impl ChiSurface {
    /// Needs at least three non-collinear sample locations.
    pub fn fit(chis: &[ChiSample], smoothing: Smoothing) -> Result<Self> {
        let at = |c: &ChiSample| [c.alpha.0.re, c.alpha.0.im];
        let locations: Vec<[f64; 2]> = chis.iter().map(at).collect();
        let hull = hull::convex_hull(&locations);
        let extent = locations
            .iter()
            .map(|p| p[0].abs().max(p[1].abs()))
            .fold(0.0, f64::max);
        if hull.len() < 3 || hull::area(&hull) <= 1e-12 * extent.max(1e-12).powi(2) {
            return Err(Error::DegenerateGeometry(format!(
                "{} samples do not span an area",
                chis.len()
            )));
        }
        let re = Channel::fit(chis.iter().map(|c| (at(c), c.re)).collect(), smoothing)?;
        let with_im: Vec<([f64; 2], Estimate)> = chis.iter().filter_map(|c| c.im.map(|e| (at(c), e))).collect();
        let im_locations: Vec<[f64; 2]> = with_im.iter().map(|(p, _)| *p).collect();
        let im = if hull::area(&hull::convex_hull(&im_locations)) > 1e-12 * extent.powi(2) {
            Some(Channel::fit(with_im, smoothing)?)
        } else {
            None
        };
        Ok(Self {
            re,
            im,
            hull,
            hull_tol: 1e-9 * extent.max(1.0),
        })
    }

    pub fn contains(&self, alpha: Complex64) -> bool {
        hull::contains(&self.hull, [alpha.re, alpha.im], self.hull_tol)
    }

    /// Reconstructed Re χ, without checking the hull.
    pub fn re(&self, alpha: Complex64) -> f64 {
        self.re.spline.eval([alpha.re, alpha.im])
    }

    pub fn im(&self, alpha: Complex64) -> Option<f64> {
        self.im.as_ref().map(|c| c.spline.eval([alpha.re, alpha.im]))
    }

    /// Local standard error of Re χ, interpolated from nearby samples.
    pub fn sigma(&self, alpha: Complex64) -> f64 {
        self.re.sigma([alpha.re, alpha.im])
    }

    pub fn smoothing(&self) -> f64 {
        self.re.spline.lambda
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChiGrid {
    pub re_axis: Vec<f64>,
    pub im_axis: Vec<f64>,
    /// Row-major: index = j·re_axis.len() + i for (re_axis[i], im_axis[j]).
    /// NaN outside the hull.
    pub re: Vec<f64>,
    pub im: Option<Vec<f64>>,
    pub sigma: Vec<f64>,
    pub mask: Vec<bool>,
    pub method: String,
}

impl ChiGrid {
    pub fn alpha(&self, index: usize) -> Complex64 {
        let nx = self.re_axis.len();
        Complex64::new(self.re_axis[index % nx], self.im_axis[index / nx])
    }

    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }
}

fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 || hi <= lo {
        return vec![0.5 * (lo + hi)];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Evaluates a thin-plate reconstruction on a `resolution`×`resolution`
/// grid spanning the bounding box of the samples. Cells outside the convex
/// hull of the samples are masked.
pub fn reconstruct_grid(chis: &[ChiSample], resolution: usize, smoothing: Smoothing) -> Result<ChiGrid> {
    if resolution < 2 {
        return Err(Error::invalid("resolution", "need at least 2 points per axis"));
    }
    let surface = ChiSurface::fit(chis, smoothing)?;
    let bounds = |f: fn(&Complex64) -> f64| {
        chis.iter().map(|c| f(&c.alpha.0)).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        })
    };
    let (x0, x1) = bounds(|a| a.re);
    let (y0, y1) = bounds(|a| a.im);
    let re_axis = axis(x0, x1, resolution);
    let im_axis = axis(y0, y1, resolution);
    let mut grid = ChiGrid {
        re: Vec::with_capacity(resolution * resolution),
        im: surface.im.as_ref().map(|_| Vec::with_capacity(resolution * resolution)),
        sigma: Vec::with_capacity(resolution * resolution),
        mask: Vec::with_capacity(resolution * resolution),
        method: format!("thin-plate spline, smoothing {:.3e}", surface.smoothing()),
        re_axis,
        im_axis,
    };
    for &y in &grid.im_axis {
        for &x in &grid.re_axis {
            let a = Complex64::new(x, y);
            let inside = surface.contains(a);
            grid.mask.push(inside);
            if inside {
                grid.re.push(surface.re(a));
                grid.sigma.push(surface.sigma(a));
                if let Some(im) = grid.im.as_mut() {
                    im.push(surface.im(a).unwrap());
                }
            } else {
                grid.re.push(f64::NAN);
                grid.sigma.push(f64::NAN);
                if let Some(im) = grid.im.as_mut() {
                    im.push(f64::NAN);
                }
            }
        }
    }
    Ok(grid)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NegativityReport {
    pub min_value: f64,
    pub min_alpha: Complex64,
    /// Local standard error at the minimum.
    pub min_sigma: f64,
    /// −min / σ at the minimum.
    pub significance: f64,
    /// Fraction of unmasked cells below −3σ.
    pub area_fraction: f64,
    pub significant: bool,
}

/// Minimum of Re χ inside the hull and how far below zero it lies.
pub fn negativity_report(grid: &ChiGrid) -> Result<NegativityReport> {
    let inside: Vec<usize> = (0..grid.len()).filter(|&i| grid.mask[i]).collect();
    let Some(&imin) = inside.iter().min_by(|&&a, &&b| grid.re[a].total_cmp(&grid.re[b])) else {
        return Err(Error::InsufficientData("grid has no unmasked cells".into()));
    };
    let min_value = grid.re[imin];
    let min_sigma = grid.sigma[imin];
    let significance = -min_value / min_sigma;
    let below = inside
        .iter()
        .filter(|&&i| grid.re[i] < -3.0 * grid.sigma[i])
        .count();
    Ok(NegativityReport {
        min_value,
        min_alpha: grid.alpha(imin),
        min_sigma,
        significance,
        area_fraction: below as f64 / inside.len() as f64,
        significant: significance > 3.0,
    })
}
