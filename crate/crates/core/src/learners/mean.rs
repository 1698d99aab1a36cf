//! Weighted-mean learner.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use super::{LearnError, Learner, Matrix, Predictor, Target};
use crate::num;

#[derive(Debug, Clone, Copy, Default)]
pub struct MeanLearner;

/// Predicts the same value for every row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant(pub f64);

impl Predictor for Constant {
    fn predict(&self, x: &Matrix) -> Vec<f64> {
        vec![self.0; x.rows()]
    }
}

impl Learner for MeanLearner {
    fn id(&self) -> &str {
        "mean"
    }

    fn fit_unchecked(
        &self,
        _x: &Matrix,
        y: &[f64],
        w: &[f64],
        _target: Target,
        _seed: u64,
    ) -> Result<Box<dyn Predictor>, LearnError> {
        Ok(Box::new(Constant(num::weighted_mean(y, w))))
    }
}
