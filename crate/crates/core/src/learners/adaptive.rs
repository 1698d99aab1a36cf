//! Adaptive lasso: a ridge fit supplies per-coefficient penalty weights
//! `1 / |β̂_ridge,j|` (standardized scale) for a second-stage lasso. Both
//! penalty levels are chosen by 5-fold cross-validation. Coefficients whose
//! first-stage magnitude is zero get an infinite weight and stay exactly 0.

use alloc::string::String;
use alloc::vec::Vec;

use super::penalized::{fit_penalized, standardize, LambdaChoice, LambdaRule, Penalty};
use super::{check_inputs, LearnError, Matrix, Predictor, Target};
use crate::num;

const FOLDS: usize = 5;
const N_LAMBDA: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveLassoModel {
    pub names: Vec<String>,
    /// `|β̂_ridge,j|` on the standardized scale.
    pub first_stage: Vec<f64>,
    /// `1 / first_stage`; infinite where the first stage is zero.
    pub penalty_weights: Vec<f64>,
    /// Final coefficients on the original feature scale.
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub lambda: f64,
}

impl AdaptiveLassoModel {
    /// Names and values of the nonzero coefficients.
    pub fn selected(&self) -> Vec<(&str, f64)> {
        self.names
            .iter()
            .zip(&self.coefficients)
            .filter(|(_, c)| **c != 0.0)
            .map(|(n, c)| (n.as_str(), *c))
            .collect()
    }
}

impl Predictor for AdaptiveLassoModel {
    fn predict(&self, x: &Matrix) -> Vec<f64> {
        (0..x.rows())
            .map(|i| {
                self.intercept
                    + x.row(i)
                        .iter()
                        .zip(&self.coefficients)
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
            })
            .collect()
    }
}

/// Fits a continuous-outcome adaptive lasso.
pub fn fit_adaptive_lasso(x: &Matrix, y: &[f64], w: &[f64], seed: u64) -> Result<AdaptiveLassoModel, LearnError> {
    fit_adaptive_lasso_with(x, y, w, seed, LambdaRule::OneSe)
}

pub fn fit_adaptive_lasso_with(
    x: &Matrix,
    y: &[f64],
    w: &[f64],
    seed: u64,
    rule: LambdaRule,
) -> Result<AdaptiveLassoModel, LearnError> {
    check_inputs(x, y, w, Target::Continuous)?;
    let p = x.cols();
    let ones = alloc::vec![1.0; p];
    let (ridge, _) = fit_penalized(
        x,
        y,
        w,
        Target::Continuous,
        Penalty::Ridge,
        &ones,
        LambdaChoice::Cv {
            folds: FOLDS,
            n_lambda: N_LAMBDA,
            rule: LambdaRule::Min,
        },
        num::derive_seed(seed, 1),
    );
    let sw: f64 = w.iter().sum();
    let wn: Vec<f64> = w.iter().map(|v| v / sw).collect();
    let xs = standardize(x, &wn);
    let first_stage: Vec<f64> = ridge
        .coef
        .iter()
        .zip(&xs.scale)
        .map(|(b, s)| num::abs(b * s))
        .collect();
    let penalty_weights: Vec<f64> = first_stage
        .iter()
        .map(|b| if *b > 0.0 { 1.0 / b } else { f64::INFINITY })
        .collect();
    let (lasso, _) = fit_penalized(
        x,
        y,
        w,
        Target::Continuous,
        Penalty::Lasso,
        &penalty_weights,
        LambdaChoice::Cv {
            folds: FOLDS,
            n_lambda: N_LAMBDA,
            rule,
        },
        num::derive_seed(seed, 2),
    );
    let mut coefficients = lasso.coef;
    for (c, pw) in coefficients.iter_mut().zip(&penalty_weights) {
        if !pw.is_finite() {
            *c = 0.0;
        }
    }
    Ok(AdaptiveLassoModel {
        names: x.names().to_vec(),
        first_stage,
        penalty_weights,
        coefficients,
        intercept: lasso.intercept,
        lambda: lasso.lambda,
    })
}
