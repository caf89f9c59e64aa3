//! Thin-plate spline on scattered planar data, optionally smoothed.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

fn kernel(r2: f64) -> f64 {
    if r2 <= 0.0 {
        0.0
    } else {
        0.5 * r2 * r2.ln()
    }
}

/// f(x) = Σ w_i φ(|x − x_i|) + c₀ + c₁x + c₂y with φ(r) = r² ln r.
#[derive(Debug, Clone)]
pub struct ThinPlateSpline {
    centers: Vec<[f64; 2]>,
    weights: Vec<f64>,
    affine: [f64; 3],
    /// Smoothing strength in units of the mean sample variance.
    pub lambda: f64,
}

impl ThinPlateSpline {
    pub fn eval(&self, p: [f64; 2]) -> f64 {
        let radial: f64 = self
            .centers
            .iter()
            .zip(&self.weights)
            .map(|(c, w)| w * kernel((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)))
            .sum();
        radial + self.affine[0] + self.affine[1] * p[0] + self.affine[2] * p[1]
    }

    /// Exact interpolant when `lambda` is zero; otherwise minimizes
    /// bending energy + Σ (y_i − f(x_i))² / (λ σ_i²).
    pub fn fit(points: &[[f64; 2]], values: &[f64], variances: &[f64], lambda: f64) -> Result<Self> {
        let n = points.len();
        let system = Self::system(points, variances, lambda);
        let mut rhs = DVector::zeros(n + 3);
        rhs.rows_mut(0, n).copy_from(&DVector::from_column_slice(values));
        let sol = system
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Singular("thin-plate system".into()))?;
        Ok(Self {
            centers: points.to_vec(),
            weights: sol.rows(0, n).iter().copied().collect(),
            affine: [sol[n], sol[n + 1], sol[n + 2]],
            lambda,
        })
    }

    fn system(points: &[[f64; 2]], variances: &[f64], lambda: f64) -> DMatrix<f64> {
        let n = points.len();
        let mean_var = variances.iter().sum::<f64>() / n as f64;
        let mut a = DMatrix::zeros(n + 3, n + 3);
        for i in 0..n {
            for j in 0..i {
                let (p, q) = (points[i], points[j]);
                let k = kernel((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2));
                a[(i, j)] = k;
                a[(j, i)] = k;
            }
            if mean_var > 0.0 {
                a[(i, i)] = lambda * variances[i] / mean_var;
            }
            let row = [1.0, points[i][0], points[i][1]];
            for (k, v) in row.iter().enumerate() {
                a[(i, n + k)] = *v;
                a[(n + k, i)] = *v;
            }
        }
        a
    }

    /// Weighted residual Σ (y_i − f(x_i))² / σ_i².
    pub fn chi2(&self, values: &[f64], variances: &[f64]) -> f64 {
        self.centers
            .iter()
            .zip(values)
            .zip(variances)
            .map(|((&c, &y), &v)| (y - self.eval(c)).powi(2) / v)
            .sum()
    }

    /// Smoothing chosen so that χ² per sample is close to one.
    pub fn fit_discrepancy(points: &[[f64; 2]], values: &[f64], variances: &[f64]) -> Result<Self> {
        let n = points.len() as f64;
        let target = |s: &Self| s.chi2(values, variances) / n - 1.0;
        let (mut lo, mut hi) = (-10.0f64, 8.0f64);
        let top = Self::fit(points, values, variances, 10f64.powf(hi))?;
        if target(&top) <= 0.0 {
            return Ok(top);
        }
        let mut best = Self::fit(points, values, variances, 10f64.powf(lo))?;
        if target(&best) >= 0.0 {
            return Ok(best);
        }
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            let s = Self::fit(points, values, variances, 10f64.powf(mid))?;
            let t = target(&s);
            if t.abs() < 0.02 {
                return Ok(s);
            }
            if t < 0.0 {
                lo = mid;
                best = s;
            } else {
                hi = mid;
            }
        }
        Ok(best)
    }
}
