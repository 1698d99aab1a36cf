//! Blip regression and the predicted-harm subgroup.
//!
//! The pseudo-outcome `D` is regressed on the rule covariates `V`. Rows
//! with `B̂(v) > 0` are flagged as at risk of a harmful indirect effect; the
//! rule is `d̂(v) = 1{B̂(v) ≤ 0}`, so ties count as non-harmful.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crossfit::CrossFitPlan;
use crate::exec::Executor;
use crate::learners::{fit_adaptive_lasso, fit_learner, AdaptiveLassoModel, LearnError, Learner, Model, Predictor, Target};
use crate::model::{Dataset, Role, Setting};
use crate::num;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SubgroupError {
    #[error("blip regression on fold {fold}: {source}")]
    Learner { fold: usize, source: LearnError },
    #[error("pseudo-outcomes cover {got} rows, dataset has {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("rule covariates {found:?} do not match the fitted model's {expected:?}")]
    SchemaMismatch { found: Vec<String>, expected: Vec<String> },
    #[error("dataset declares no rule covariates")]
    NoRuleCovariates,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlipMethod {
    /// Cross-fitted regression with the configured learner stack.
    Stack,
    /// A single sparse linear fit, readable as a rule.
    AdaptiveLasso,
}

impl BlipMethod {
    pub fn label(self) -> &'static str {
        match self {
            BlipMethod::Stack => "stack",
            BlipMethod::AdaptiveLasso => "adaptive-lasso",
        }
    }
}

impl core::str::FromStr for BlipMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "stack" => Ok(BlipMethod::Stack),
            "adaptive-lasso" => Ok(BlipMethod::AdaptiveLasso),
            other => Err(format!("unknown blip method `{other}`")),
        }
    }
}

#[derive(Debug)]
enum Fitted {
    /// One model per cross-fitting fold.
    Folds(Vec<Model>),
    Lasso(AdaptiveLassoModel),
}

/// A fitted regression of the pseudo-outcome on `V`.
#[derive(Debug)]
pub struct BlipModel {
    method: BlipMethod,
    names: Vec<String>,
    fitted: Fitted,
    /// `B̂(v_i)` for the rows used in fitting: out-of-fold for the stack,
    /// in-sample for the adaptive lasso.
    fitted_values: Vec<f64>,
}

fn rule_design(ds: &Dataset, rows: &[usize]) -> Result<crate::learners::Matrix, SubgroupError> {
    if ds.schema().rule_covariates.is_empty() {
        return Err(SubgroupError::NoRuleCovariates);
    }
    Ok(ds.design(&[Role::RuleCovariates], rows, Setting::default()))
}

/// Regresses `pseudo` on the rule covariates.
pub fn fit_blip(
    pseudo: &[f64],
    ds: &Dataset,
    plan: &CrossFitPlan,
    method: BlipMethod,
    learner: &dyn Learner,
    seed: u64,
    exec: &impl Executor,
) -> Result<BlipModel, SubgroupError> {
    if pseudo.len() != ds.n() || plan.n() != ds.n() {
        return Err(SubgroupError::LengthMismatch {
            got: pseudo.len(),
            expected: ds.n(),
        });
    }
    let all: Vec<usize> = (0..ds.n()).collect();
    let x = rule_design(ds, &all)?;
    let names = x.names().to_vec();
    match method {
        BlipMethod::Stack => {
            let fits = exec.map(plan.folds(), |j| {
                let train = plan.training(j);
                let y: Vec<f64> = train.iter().map(|&i| pseudo[i]).collect();
                let w: Vec<f64> = train.iter().map(|&i| ds.weights()[i]).collect();
                fit_learner(
                    learner,
                    &x.select_rows(train),
                    &y,
                    &w,
                    Target::Continuous,
                    num::derive_seed(seed, j as u64),
                )
                .map_err(|source| SubgroupError::Learner { fold: j, source })
            });
            let models = fits.into_iter().collect::<Result<Vec<_>, _>>()?;
            let mut fitted_values = vec![0.0; ds.n()];
            for (j, m) in models.iter().enumerate() {
                let rows = plan.validation(j);
                for (&i, p) in rows.iter().zip(m.predict(&x.select_rows(rows))) {
                    fitted_values[i] = p;
                }
            }
            Ok(BlipModel {
                method,
                names,
                fitted: Fitted::Folds(models),
                fitted_values,
            })
        }
        BlipMethod::AdaptiveLasso => {
            let m = fit_adaptive_lasso(&x, pseudo, ds.weights(), seed)
                .map_err(|source| SubgroupError::Learner { fold: 0, source })?;
            let fitted_values = m.predict(&x);
            Ok(BlipModel {
                method,
                names,
                fitted: Fitted::Lasso(m),
                fitted_values,
            })
        }
    }
}

impl BlipModel {
    pub fn method(&self) -> BlipMethod {
        self.method
    }

    pub fn feature_names(&self) -> &[String] {
        &self.names
    }

    /// `B̂(v_i)` on the fitting data.
    pub fn fitted_values(&self) -> &[f64] {
        &self.fitted_values
    }

    /// The adaptive-lasso fit, when that is the method.
    pub fn lasso(&self) -> Option<&AdaptiveLassoModel> {
        match &self.fitted {
            Fitted::Lasso(m) => Some(m),
            Fitted::Folds(_) => None,
        }
    }

    /// Stack weights of every fold model, when they are stacks.
    pub fn fold_models(&self) -> &[Model] {
        match &self.fitted {
            Fitted::Folds(m) => m,
            Fitted::Lasso(_) => &[],
        }
    }

    /// Deployment prediction on new data: the average of the fold models
    /// for the stack, the linear predictor for the adaptive lasso.
    pub fn predict(&self, ds: &Dataset) -> Result<Vec<f64>, SubgroupError> {
        let rows: Vec<usize> = (0..ds.n()).collect();
        let x = rule_design(ds, &rows)?;
        if x.names() != self.names.as_slice() {
            return Err(SubgroupError::SchemaMismatch {
                found: x.names().to_vec(),
                expected: self.names.clone(),
            });
        }
        Ok(match &self.fitted {
            Fitted::Lasso(m) => m.predict(&x),
            Fitted::Folds(models) => {
                let mut out = vec![0.0; ds.n()];
                for m in models {
                    for (o, p) in out.iter_mut().zip(m.predict(&x)) {
                        *o += p;
                    }
                }
                let k = models.len() as f64;
                out.iter().map(|v| v / k).collect()
            }
        })
    }

    /// Human-readable rule from the adaptive-lasso coefficients.
    pub fn rule_description(&self) -> Option<String> {
        self.lasso().map(describe_rule)
    }
}

fn describe_rule(m: &AdaptiveLassoModel) -> String {
    let mut s = format!("{:.6}", m.intercept);
    for (name, c) in m.selected() {
        let sign = if c < 0.0 { '-' } else { '+' };
        s.push_str(&format!(" {sign} {:.6}*{name}", num::abs(c)));
    }
    format!("harm predicted when {s} > 0")
}

/// Per-row harm flags and rule values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgroupAssignment {
    pub method: BlipMethod,
    pub blip: Vec<f64>,
    /// `1{B̂ > 0}`.
    pub harm: Vec<bool>,
}

impl SubgroupAssignment {
    pub fn from_blip(method: BlipMethod, blip: Vec<f64>) -> Self {
        let harm = blip.iter().map(|b| *b > 0.0).collect();
        SubgroupAssignment { method, blip, harm }
    }

    /// `d̂(v_i) = 1{B̂(v_i) ≤ 0}`.
    pub fn rule(&self) -> Vec<u8> {
        self.harm.iter().map(|h| u8::from(!h)).collect()
    }

    pub fn n(&self) -> usize {
        self.harm.len()
    }
}

/// Flags each fitting row from its cross-fitted `B̂`.
pub fn assign_subgroup(blip: &BlipModel) -> SubgroupAssignment {
    SubgroupAssignment::from_blip(blip.method, blip.fitted_values.clone())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgroupSummary {
    pub method: BlipMethod,
    /// Weighted share of rows flagged as harmed.
    pub harm_prevalence: f64,
    pub harm_rows: usize,
    pub blip_min: f64,
    pub blip_max: f64,
    /// Adaptive lasso only: intercept and every coefficient (zeros kept).
    pub intercept: Option<f64>,
    pub coefficients: Option<Vec<Coefficient>>,
    pub rule: Option<String>,
}

pub fn subgroup_summary(assign: &SubgroupAssignment, weights: &[f64], blip: Option<&BlipModel>) -> SubgroupSummary {
    let flag: Vec<f64> = assign.harm.iter().map(|h| if *h { 1.0 } else { 0.0 }).collect();
    let harm_prevalence = if flag.is_empty() { 0.0 } else { num::weighted_mean(&flag, weights) };
    let lasso = blip.and_then(BlipModel::lasso);
    SubgroupSummary {
        method: assign.method,
        harm_prevalence,
        harm_rows: assign.harm.iter().filter(|h| **h).count(),
        blip_min: assign.blip.iter().copied().fold(f64::INFINITY, f64::min),
        blip_max: assign.blip.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        intercept: lasso.map(|m| m.intercept),
        coefficients: lasso.map(|m| {
            m.names
                .iter()
                .zip(&m.coefficients)
                .map(|(n, c)| Coefficient {
                    name: n.to_string(),
                    value: *c,
                })
                .collect()
        }),
        rule: blip.and_then(BlipModel::rule_description),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_rule_and_ties() {
        let a = SubgroupAssignment::from_blip(BlipMethod::Stack, vec![-0.1, 0.0, 0.2]);
        assert_eq!(a.harm, vec![false, false, true]);
        assert_eq!(a.rule(), vec![1, 1, 0]);
    }

    #[test]
    fn prevalence_is_weighted() {
        let a = SubgroupAssignment::from_blip(BlipMethod::Stack, vec![0.1, 0.1, -0.1, -0.1]);
        let s = subgroup_summary(&a, &[1.0; 4], None);
        assert_eq!(s.harm_prevalence, 0.5);
        // Doubling the weight of the harmed rows: 4 / 6.
        let s = subgroup_summary(&a, &[2.0, 2.0, 1.0, 1.0], None);
        assert!((s.harm_prevalence - 4.0 / 6.0).abs() < 1e-15);
        let none = SubgroupAssignment::from_blip(BlipMethod::Stack, vec![-1.0; 3]);
        assert_eq!(subgroup_summary(&none, &[1.0; 3], None).harm_prevalence, 0.0);
    }

    #[test]
    fn method_names_round_trip() {
        for m in [BlipMethod::Stack, BlipMethod::AdaptiveLasso] {
            assert_eq!(m.label().parse::<BlipMethod>().unwrap(), m);
        }
    }
}
