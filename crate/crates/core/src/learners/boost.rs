//! Gradient-boosted depth-one trees (stumps).
//!
//! Squared-error loss for continuous targets, logistic loss for probability
//! targets, Newton leaf values, shrinkage 0.1. The number of rounds (at most
//! 200) is picked by K-fold cross-validation of the weighted squared error
//! on the response scale.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use super::linalg::{collapse, Collapsed};
use super::{fold_ids, LearnError, Learner, Matrix, Predictor, Target};
use crate::num;

#[derive(Debug, Clone, Copy)]
pub struct GbStumpLearner {
    pub max_rounds: usize,
    pub learning_rate: f64,
    pub folds: usize,
}

impl Default for GbStumpLearner {
    fn default() -> Self {
        GbStumpLearner {
            max_rounds: 200,
            learning_rate: 0.1,
            folds: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Stump {
    feature: usize,
    threshold: f64,
    left: f64,
    right: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StumpEnsemble {
    base: f64,
    stumps: Vec<Stump>,
    logistic: bool,
}

impl StumpEnsemble {
    fn raw(&self, row: &[f64]) -> f64 {
        let mut f = self.base;
        for s in &self.stumps {
            f += s.value(row);
        }
        f
    }

    pub fn rounds(&self) -> usize {
        self.stumps.len()
    }
}

impl Predictor for StumpEnsemble {
    fn predict(&self, x: &Matrix) -> Vec<f64> {
        (0..x.rows())
            .map(|i| {
                let f = self.raw(x.row(i));
                if self.logistic {
                    num::logistic(f)
                } else {
                    f
                }
            })
            .collect()
    }
}

impl Stump {
    fn value(&self, row: &[f64]) -> f64 {
        if row.is_empty() || row[self.feature] <= self.threshold {
            self.left
        } else {
            self.right
        }
    }
}

/// Boosts on every row of `d` for exactly `rounds` rounds.
fn boost(d: &Collapsed, logistic: bool, rounds: usize, lr: f64) -> StumpEnsemble {
    let (x, y, w) = (&d.x, &d.y, &d.w);
    let n = x.rows();
    let p = x.cols();
    let sw: f64 = w.iter().sum();
    let ybar = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let base = if logistic { num::logit(ybar) } else { ybar };
    let mut score = vec![base; n];
    let sorted: Vec<Vec<usize>> = (0..p)
        .map(|j| {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| x.get(a, j).total_cmp(&x.get(b, j)).then(a.cmp(&b)));
            idx
        })
        .collect();
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut stumps = Vec::with_capacity(rounds);
    for _ in 0..rounds {
        let (mut g_tot, mut h_tot) = (0.0, 0.0);
        for i in 0..n {
            let (g, h) = if logistic {
                let mu = num::logistic(score[i]);
                (y[i] - mu, (mu * (1.0 - mu)).max(1e-12))
            } else {
                (y[i] - score[i], 1.0)
            };
            grad[i] = w[i] * g;
            hess[i] = w[i] * h;
            g_tot += grad[i];
            h_tot += hess[i];
        }
        let mut best: Option<(f64, Stump)> = None;
        for (j, order) in sorted.iter().enumerate() {
            let (mut gl, mut hl) = (0.0, 0.0);
            for t in 0..order.len().saturating_sub(1) {
                let i = order[t];
                gl += grad[i];
                hl += hess[i];
                let (xv, xn) = (x.get(i, j), x.get(order[t + 1], j));
                if xv == xn {
                    continue;
                }
                let (gr, hr) = (g_tot - gl, h_tot - hl);
                if hl <= 1e-12 || hr <= 1e-12 {
                    continue;
                }
                let gain = gl * gl / hl + gr * gr / hr;
                if best.as_ref().map_or(true, |(b, _)| gain > *b) {
                    best = Some((
                        gain,
                        Stump {
                            feature: j,
                            threshold: 0.5 * (xv + xn),
                            left: lr * gl / hl,
                            right: lr * gr / hr,
                        },
                    ));
                }
            }
        }
        let stump = match best {
            Some((_, s)) => s,
            None => {
                // No split available: shift the constant.
                let v = if h_tot > 0.0 { lr * g_tot / h_tot } else { 0.0 };
                Stump {
                    feature: 0,
                    threshold: f64::INFINITY,
                    left: v,
                    right: v,
                }
            }
        };
        for i in 0..n {
            score[i] += stump.value(x.row(i));
        }
        stumps.push(stump);
    }
    StumpEnsemble {
        base,
        stumps,
        logistic,
    }
}

impl GbStumpLearner {
    pub fn fit_model(&self, x: &Matrix, y: &[f64], w: &[f64], target: Target, seed: u64) -> StumpEnsemble {
        let logistic = target == Target::Probability;
        let n = y.len();
        let folds = self.folds.min(n).max(2);
        let fold = fold_ids(n, folds, seed);
        let mut risk = vec![0.0; self.max_rounds + 1];
        for k in 0..folds {
            let train: Vec<usize> = (0..n).filter(|&i| fold[i] != k).collect();
            let test: Vec<usize> = (0..n).filter(|&i| fold[i] == k).collect();
            let d = collapse(x, y, w, &train);
            if d.w.is_empty() {
                continue;
            }
            let m = boost(&d, logistic, self.max_rounds, self.learning_rate);
            let v = collapse(x, y, w, &test);
            let mut score = vec![m.base; v.w.len()];
            let mut pred = vec![0.0; v.w.len()];
            for r in 0..=self.max_rounds {
                if r > 0 {
                    let s = &m.stumps[r - 1];
                    for (t, sc) in score.iter_mut().enumerate() {
                        *sc += s.value(v.x.row(t));
                    }
                }
                for (p, sc) in pred.iter_mut().zip(&score) {
                    *p = if logistic { num::logistic(*sc) } else { *sc };
                }
                risk[r] += v.squared_error(&pred);
            }
        }
        let best = (0..risk.len()).fold(0, |b, r| if risk[r] < risk[b] { r } else { b });
        let all: Vec<usize> = (0..n).collect();
        boost(&collapse(x, y, w, &all), logistic, best, self.learning_rate)
    }
}

impl Learner for GbStumpLearner {
    fn id(&self) -> &str {
        "gbstump"
    }

    fn fit_unchecked(
        &self,
        x: &Matrix,
        y: &[f64],
        w: &[f64],
        target: Target,
        seed: u64,
    ) -> Result<Box<dyn Predictor>, LearnError> {
        Ok(Box::new(self.fit_model(x, y, w, target, seed)))
    }
}
