//! Levenberg–Marquardt for small weighted least-squares problems.

use nalgebra::{DMatrix, DVector};

/// Weighted residuals r_i(p) = (y_i − model_i(p)) / σ_i and their Jacobian.
pub trait LeastSquares {
    fn residuals(&self, params: &DVector<f64>) -> DVector<f64>;
    /// ∂r_i/∂p_j
    fn jacobian(&self, params: &DVector<f64>) -> DMatrix<f64>;
    /// Projects a trial point back into the feasible box.
    fn project(&self, params: &mut DVector<f64>) {
        let _ = params;
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Settings {
    pub max_iterations: usize,
    /// Stop when the relative decrease of χ² falls below this.
    pub ftol: f64,
    /// Stop when the relative parameter step falls below this.
    pub xtol: f64,
    pub initial_lambda: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            ftol: 1e-14,
            xtol: 1e-12,
            initial_lambda: 1e-3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub params: DVector<f64>,
    pub chi2: f64,
    pub iterations: usize,
    pub converged: bool,
    /// (JᵀJ)⁻¹ at the solution, if invertible.
    pub covariance: Option<DMatrix<f64>>,
}

pub fn minimize<P: LeastSquares>(problem: &P, start: DVector<f64>, settings: &Settings) -> Solution {
    let mut params = start;
    problem.project(&mut params);
    let mut r = problem.residuals(&params);
    let mut chi2 = r.norm_squared();
    let mut lambda = settings.initial_lambda;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < settings.max_iterations && chi2.is_finite() {
        iterations += 1;
        let j = problem.jacobian(&params);
        let jtj = j.transpose() * &j;
        // r = y − f, so the Gauss–Newton step solves JᵀJ δ = −Jᵀr
        let grad = j.transpose() * &r;
        let mut accepted = false;
        for _ in 0..40 {
            let mut a = jtj.clone();
            for d in 0..a.nrows() {
                a[(d, d)] += lambda * jtj[(d, d)].max(1e-300);
            }
            let Some(step) = a.lu().solve(&(-&grad)) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial = &params + &step;
            problem.project(&mut trial);
            let r_trial = problem.residuals(&trial);
            let chi2_trial = r_trial.norm_squared();
            if chi2_trial.is_finite() && chi2_trial <= chi2 {
                let rel_drop = (chi2 - chi2_trial) / chi2.max(1e-300);
                let rel_step = (&trial - &params).norm() / (params.norm() + settings.xtol);
                params = trial;
                r = r_trial;
                chi2 = chi2_trial;
                lambda = (lambda / 10.0).max(1e-15);
                accepted = true;
                if rel_drop < settings.ftol || rel_step < settings.xtol {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // no downhill step exists at any damping: stationary point
            converged = true;
        }
        if converged {
            break;
        }
    }

    let j = problem.jacobian(&params);
    let covariance = (j.transpose() * &j).try_inverse();
    Solution {
        params,
        chi2,
        iterations,
        converged,
        covariance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct ExpDecay {
        x: Vec<f64>,
        y: Vec<f64>,
    }

    impl LeastSquares for ExpDecay {
        fn residuals(&self, p: &DVector<f64>) -> DVector<f64> {
            DVector::from_iterator(
                self.x.len(),
                self.x.iter().zip(&self.y).map(|(x, y)| y - p[0] * (-p[1] * x).exp()),
            )
        }

        fn jacobian(&self, p: &DVector<f64>) -> DMatrix<f64> {
            DMatrix::from_fn(self.x.len(), 2, |i, j| {
                let e = (-p[1] * self.x[i]).exp();
                if j == 0 {
                    -e
                } else {
                    p[0] * self.x[i] * e
                }
            })
        }
    }

    #[test]
    fn recovers_exponential() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.25).collect();
        let y = x.iter().map(|x| 2.5 * (-0.7 * x).exp()).collect();
        let sol = minimize(&ExpDecay { x, y }, DVector::from_vec(vec![1.0, 2.0]), &Settings::default());
        assert!(sol.converged);
        assert!((sol.params[0] - 2.5).abs() < 1e-9);
        assert!((sol.params[1] - 0.7).abs() < 1e-9);
        assert!(sol.covariance.is_some());
    }
}
