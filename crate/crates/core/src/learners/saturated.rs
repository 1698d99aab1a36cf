//! Saturated model over discrete features: one free parameter per distinct
//! feature vector. For a logistic link the maximum-likelihood fit of the
//! fully interacted GLM is exactly the weighted cell mean, so that is what
//! is computed.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::{LearnError, Learner, Matrix, Predictor, Target};
use crate::num;

#[derive(Debug, Clone, Copy, Default)]
pub struct SaturatedLearner;

#[derive(Debug, Clone, PartialEq)]
pub struct CellMeans {
    cells: BTreeMap<Vec<u64>, f64>,
    /// Used for feature vectors not seen in training.
    fallback: f64,
}

fn key(row: &[f64]) -> Vec<u64> {
    // +0.0 and -0.0 must share a cell.
    row.iter().map(|v| (v + 0.0).to_bits()).collect()
}

impl Predictor for CellMeans {
    fn predict(&self, x: &Matrix) -> Vec<f64> {
        (0..x.rows())
            .map(|i| *self.cells.get(&key(x.row(i))).unwrap_or(&self.fallback))
            .collect()
    }
}

impl Learner for SaturatedLearner {
    fn id(&self) -> &str {
        "saturated"
    }

    fn fit_unchecked(
        &self,
        x: &Matrix,
        y: &[f64],
        w: &[f64],
        _target: Target,
        _seed: u64,
    ) -> Result<Box<dyn Predictor>, LearnError> {
        let mut sums: BTreeMap<Vec<u64>, (f64, f64)> = BTreeMap::new();
        for i in 0..x.rows() {
            let e = sums.entry(key(x.row(i))).or_insert((0.0, 0.0));
            e.0 += w[i] * y[i];
            e.1 += w[i];
        }
        let n = x.rows();
        // At least ten rows per cell on average, or it is not a discrete design.
        if sums.len() * 10 > n.max(10) {
            return Err(LearnError::TooManyCells {
                cells: sums.len(),
                rows: n,
            });
        }
        let fallback = num::weighted_mean(y, w);
        let cells = sums
            .into_iter()
            .map(|(k, (s, sw))| (k, if sw > 0.0 { s / sw } else { fallback }))
            .collect();
        Ok(Box::new(CellMeans { cells, fallback }))
    }
}
