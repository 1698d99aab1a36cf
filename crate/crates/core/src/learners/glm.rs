//! Main-terms generalized linear model: weighted least squares for
//! continuous targets, logistic regression by iteratively reweighted least
//! squares for probability targets.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::linalg::{cholesky_solve, normal_equations};
use super::{LearnError, Learner, Matrix, Predictor, Target};
use crate::num;

/// Ridge penalty used when the normal equations are singular.
pub const FALLBACK_RIDGE: f64 = 1e-6;

#[derive(Debug, Clone, Copy)]
pub struct GlmLearner {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for GlmLearner {
    fn default() -> Self {
        GlmLearner {
            max_iter: 100,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlmModel {
    pub intercept: f64,
    pub coef: Vec<f64>,
    pub logistic: bool,
    /// The unpenalized system was singular and a `1e-6` ridge was used.
    pub ridge_fallback: bool,
    pub converged: bool,
}

impl Predictor for GlmModel {
    fn predict(&self, x: &Matrix) -> Vec<f64> {
        (0..x.rows())
            .map(|i| {
                let eta = self.intercept + x.row(i).iter().zip(&self.coef).map(|(a, b)| a * b).sum::<f64>();
                if self.logistic {
                    num::logistic(eta)
                } else {
                    eta
                }
            })
            .collect()
    }

    fn flags(&self) -> Vec<String> {
        let mut f = Vec::new();
        if self.ridge_fallback {
            f.push("glm: singular design, ridge fallback".to_string());
        }
        if !self.converged {
            f.push("glm: IRLS did not converge".to_string());
        }
        f
    }
}

/// Solves the weighted normal equations, retrying with a small ridge on the
/// slopes if they are singular. Returns the solution and whether the
/// fallback was used.
fn solve_wls(x: &Matrix, y: &[f64], w: &[f64]) -> Result<(Vec<f64>, bool), LearnError> {
    let (mut xtx, xty) = normal_equations(x, y, w);
    let p = x.cols() + 1;
    if let Some(b) = cholesky_solve(&xtx, &xty, p) {
        return Ok((b, false));
    }
    let sw: f64 = w.iter().sum();
    for j in 1..p {
        xtx[j * p + j] += FALLBACK_RIDGE * sw;
    }
    // Tiny ridge on the intercept too, in case every weight sits on one row.
    xtx[0] += 1e-12 * sw;
    cholesky_solve(&xtx, &xty, p)
        .map(|b| (b, true))
        .ok_or(LearnError::SingularDesign)
}

impl GlmLearner {
    pub fn fit_model(&self, x: &Matrix, y: &[f64], w: &[f64], target: Target) -> Result<GlmModel, LearnError> {
        match target {
            Target::Continuous => {
                let (b, fallback) = solve_wls(x, y, w)?;
                Ok(GlmModel {
                    intercept: b[0],
                    coef: b[1..].to_vec(),
                    logistic: false,
                    ridge_fallback: fallback,
                    converged: true,
                })
            }
            Target::Probability => self.irls(x, y, w),
        }
    }

    fn irls(&self, x: &Matrix, y: &[f64], w: &[f64]) -> Result<GlmModel, LearnError> {
        let n = y.len();
        let p = x.cols() + 1;
        let mut beta = vec![0.0; p];
        beta[0] = num::logit(num::weighted_mean(y, w));
        let mut fallback = false;
        let mut converged = false;
        let mut ww = vec![0.0; n];
        let mut z = vec![0.0; n];
        for _ in 0..self.max_iter {
            for i in 0..n {
                let eta = beta[0] + x.row(i).iter().zip(&beta[1..]).map(|(a, b)| a * b).sum::<f64>();
                let mu = num::logistic(eta);
                let var = (mu * (1.0 - mu)).max(1e-10);
                ww[i] = w[i] * var;
                z[i] = eta + (y[i] - mu) / var;
            }
            let (next, fb) = solve_wls(x, &z, &ww)?;
            fallback |= fb;
            let delta = next
                .iter()
                .zip(&beta)
                .map(|(a, b)| num::abs(a - b))
                .fold(0.0, f64::max);
            beta = next;
            if delta < self.tol {
                converged = true;
                break;
            }
        }
        Ok(GlmModel {
            intercept: beta[0],
            coef: beta[1..].to_vec(),
            logistic: true,
            ridge_fallback: fallback,
            converged,
        })
    }
}

impl Learner for GlmLearner {
    fn id(&self) -> &str {
        "glm"
    }

    fn fit_unchecked(
        &self,
        x: &Matrix,
        y: &[f64],
        w: &[f64],
        target: Target,
        _seed: u64,
    ) -> Result<Box<dyn Predictor>, LearnError> {
        Ok(Box::new(self.fit_model(x, y, w, target)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(name: &str, v: &[f64]) -> Matrix {
        Matrix::from_columns(vec![name.to_string()], &[v.to_vec()])
    }

    #[test]
    fn recovers_exact_line() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64 * 0.7 - 2.0).collect();
        let y: Vec<f64> = xs.iter().map(|x| 2.0 * x).collect();
        let m = GlmLearner::default()
            .fit_model(&col("x", &xs), &y, &[1.0; 10], Target::Continuous)
            .unwrap();
        assert!((m.coef[0] - 2.0).abs() < 1e-6);
        assert!(m.intercept.abs() < 1e-6);
        assert!(!m.ridge_fallback);
    }

    #[test]
    fn collinear_features_fall_back_to_ridge() {
        let a = [0.0, 1.0, 2.0, 3.0, 4.0];
        let x = Matrix::from_columns(vec!["a".into(), "b".into()], &[a.to_vec(), a.to_vec()]);
        let y = [1.0, 3.0, 5.0, 7.0, 9.0];
        let m = GlmLearner::default().fit_model(&x, &y, &[1.0; 5], Target::Continuous).unwrap();
        assert!(m.ridge_fallback);
        assert!(!m.flags().is_empty());
        let p = m.predict(&x);
        for (pi, yi) in p.iter().zip(y) {
            assert!((pi - yi).abs() < 1e-4);
        }
    }

    #[test]
    fn logistic_matches_cell_frequencies() {
        // One binary feature: the MLE reproduces the two group means.
        let x = col("x", &[0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0]);
        let y = [0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0];
        let m = GlmLearner::default().fit_model(&x, &y, &[1.0; 8], Target::Probability).unwrap();
        assert!(m.converged);
        let p = m.predict(&col("x", &[0.0, 1.0]));
        assert!((p[0] - 0.25).abs() < 1e-9);
        assert!((p[1] - 0.75).abs() < 1e-9);
    }
}
