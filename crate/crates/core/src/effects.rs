//! One-step estimates of population interventional effects under a rule.
//!
//! For a rule `d`, each row contributes influence function values at the
//! arms `(d_i, d_i)`, `(d_i, 0)` and `(0, 0)`. Since `d_i ∈ {0, 1}` these
//! are drawn from `D^{(1,1)}`, `D^{(1,0)}` and `D^{(0,0)}`:
//!
//! ```text
//! indirect_i = D^{(d,d)} − D^{(d,0)}
//! direct_i   = D^{(d,0)} − D^{(0,0)}
//! total_i    = D^{(d,d)} − D^{(0,0)}
//! ```
//!
//! The estimate is the weighted mean of the row values; the standard error
//! is their weighted standard deviation over `√n`.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eif::{ArmContrast, PseudoOutcomes};
use crate::num;

/// Normal quantile for 95% intervals.
pub const Z_95: f64 = 1.96;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EffectError {
    #[error("pseudo-outcomes for arm {0} were not computed")]
    MissingArm(ArmContrast),
    #[error("rule covers {got} rows, pseudo-outcomes {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("rule values must be 0 or 1")]
    NonBinaryRule,
    #[error("no rows")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Contrast {
    Indirect,
    Direct,
    Total,
}

impl Contrast {
    pub const ALL: [Contrast; 3] = [Contrast::Indirect, Contrast::Direct, Contrast::Total];

    pub fn label(self) -> &'static str {
        match self {
            Contrast::Indirect => "indirect",
            Contrast::Direct => "direct",
            Contrast::Total => "total",
        }
    }

    /// The arm pair subtracted, written in terms of the rule `d`.
    pub fn arms(self) -> &'static str {
        match self {
            Contrast::Indirect => "(d,d)-(d,0)",
            Contrast::Direct => "(d,0)-(0,0)",
            Contrast::Total => "(d,d)-(0,0)",
        }
    }
}

impl core::str::FromStr for Contrast {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Contrast::ALL
            .into_iter()
            .find(|c| c.label() == s)
            .ok_or_else(|| alloc::format!("unknown contrast `{s}`"))
    }
}

/// A treatment rule evaluated on every row.
#[derive(Debug, Clone, PartialEq)]
pub enum RuleSpec {
    /// Everyone gets the same level: `1` is no individualization.
    Constant(u8),
    /// A data-dependent rule `d̂(v_i)`.
    Estimated { label: String, values: Vec<u8> },
}

impl RuleSpec {
    pub fn label(&self) -> String {
        match self {
            RuleSpec::Constant(1) => "no individualization".to_string(),
            RuleSpec::Constant(a) => alloc::format!("constant {a}"),
            RuleSpec::Estimated { label, .. } => label.clone(),
        }
    }

    fn value(&self, i: usize) -> u8 {
        match self {
            RuleSpec::Constant(a) => *a,
            RuleSpec::Estimated { values, .. } => values[i],
        }
    }

    fn check(&self, n: usize) -> Result<(), EffectError> {
        match self {
            RuleSpec::Constant(a) if *a > 1 => Err(EffectError::NonBinaryRule),
            RuleSpec::Estimated { values, .. } if values.len() != n => Err(EffectError::LengthMismatch {
                got: values.len(),
                expected: n,
            }),
            RuleSpec::Estimated { values, .. } if values.iter().any(|v| *v > 1) => Err(EffectError::NonBinaryRule),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectEstimate {
    pub contrast: Contrast,
    pub rule: String,
    pub arms: String,
    pub estimate: f64,
    pub se: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n: usize,
    pub folds: usize,
}

/// Weighted mean and standard error of `x`. Weights are rescaled to mean
/// one; the variance carries the `n/(n−1)` correction.
pub fn mean_and_se(x: &[f64], w: &[f64]) -> (f64, f64) {
    let n = x.len();
    let sw = num::pairwise_sum(w);
    let scale = n as f64 / sw;
    let wx: Vec<f64> = x.iter().zip(w).map(|(x, w)| w * scale * x).collect();
    let mean = num::pairwise_sum(&wx) / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = x
        .iter()
        .zip(w)
        .map(|(x, w)| w * scale * (x - mean) * (x - mean))
        .collect();
    let var = num::pairwise_sum(&sq) / (n as f64 - 1.0);
    (mean, num::sqrt(var / n as f64))
}

/// Per-row contributions of `contrast` under `rule`.
pub fn row_values(pseudo: &PseudoOutcomes, rule: &RuleSpec, contrast: Contrast) -> Result<Vec<f64>, EffectError> {
    let n = pseudo.n();
    rule.check(n)?;
    let arm = |a: ArmContrast| pseudo.arm(a).ok_or(EffectError::MissingArm(a));
    let d00 = arm(ArmContrast::ZERO_ZERO)?;
    let uses_one = match rule {
        RuleSpec::Constant(a) => *a == 1,
        RuleSpec::Estimated { values, .. } => values.contains(&1),
    };
    // Arms with a′ = 1 are only needed when the rule treats someone.
    let (d11, d10) = if uses_one {
        (Some(arm(ArmContrast::ONE_ONE)?), Some(arm(ArmContrast::ONE_ZERO)?))
    } else {
        (None, None)
    };
    Ok((0..n)
        .map(|i| {
            let treat = rule.value(i) == 1;
            let dd = if treat { d11.unwrap()[i] } else { d00[i] };
            let d0 = if treat { d10.unwrap()[i] } else { d00[i] };
            match contrast {
                Contrast::Indirect => dd - d0,
                Contrast::Direct => d0 - d00[i],
                Contrast::Total => dd - d00[i],
            }
        })
        .collect())
}

/// One-step estimate of `contrast` under `rule` with a Wald interval at
/// quantile `z`.
pub fn estimate_effect(
    pseudo: &PseudoOutcomes,
    weights: &[f64],
    rule: &RuleSpec,
    contrast: Contrast,
    z: f64,
) -> Result<EffectEstimate, EffectError> {
    if pseudo.n() == 0 {
        return Err(EffectError::Empty);
    }
    if weights.len() != pseudo.n() {
        return Err(EffectError::LengthMismatch {
            got: weights.len(),
            expected: pseudo.n(),
        });
    }
    let x = row_values(pseudo, rule, contrast)?;
    let (estimate, se) = mean_and_se(&x, weights);
    let folds = pseudo.folds.iter().copied().max().map_or(0, |m| m + 1);
    Ok(EffectEstimate {
        contrast,
        rule: rule.label(),
        arms: contrast.arms().to_string(),
        estimate,
        se,
        ci_low: estimate - z * se,
        ci_high: estimate + z * se,
        n: x.len(),
        folds,
    })
}

/// Every `(rule, contrast)` combination, rules outermost.
pub fn effect_table(
    pseudo: &PseudoOutcomes,
    weights: &[f64],
    rules: &[RuleSpec],
    contrasts: &[Contrast],
    z: f64,
) -> Result<Vec<EffectEstimate>, EffectError> {
    let mut out = Vec::with_capacity(rules.len() * contrasts.len());
    for rule in rules {
        for &c in contrasts {
            out.push(estimate_effect(pseudo, weights, rule, c, z)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn pseudo(d11: Vec<f64>, d10: Vec<f64>, d00: Vec<f64>) -> PseudoOutcomes {
        let n = d11.len();
        PseudoOutcomes {
            folds: (0..n).map(|i| i % 2).collect(),
            arms: vec![ArmContrast::ONE_ONE, ArmContrast::ONE_ZERO, ArmContrast::ZERO_ZERO],
            values: vec![d11, d10, d00],
            ratio: vec![],
            clipping: vec![],
            warnings: vec![],
        }
    }

    #[test]
    fn hand_computed_rows() {
        let p = pseudo(vec![1.0, 2.0], vec![0.5, 1.0], vec![0.25, 0.0]);
        let rule = RuleSpec::Estimated {
            label: "r".into(),
            values: vec![1, 0],
        };
        assert_eq!(row_values(&p, &rule, Contrast::Indirect).unwrap(), vec![0.5, 0.0]);
        assert_eq!(row_values(&p, &rule, Contrast::Direct).unwrap(), vec![0.25, 0.0]);
        assert_eq!(row_values(&p, &rule, Contrast::Total).unwrap(), vec![0.75, 0.0]);
    }

    #[test]
    fn rule_zero_is_exactly_null() {
        let p = pseudo(vec![1.0, 2.0, 7.0], vec![0.5, 1.0, -3.0], vec![0.25, 0.0, 9.0]);
        for c in Contrast::ALL {
            let e = estimate_effect(&p, &[1.0; 3], &RuleSpec::Constant(0), c, Z_95).unwrap();
            assert_eq!((e.estimate, e.se), (0.0, 0.0));
        }
    }

    #[test]
    fn mean_and_se_by_hand() {
        // Values 1, 2, 3: mean 2, sample variance 1, se 1/√3.
        let (m, se) = mean_and_se(&[1.0, 2.0, 3.0], &[1.0; 3]);
        assert_eq!(m, 2.0);
        assert!((se - 1.0 / libm::sqrt(3.0)).abs() < 1e-15);
    }

    #[test]
    fn interval_uses_z() {
        let p = pseudo(vec![1.0, 2.0, 3.0], vec![0.0; 3], vec![0.0; 3]);
        let e = estimate_effect(&p, &[1.0; 3], &RuleSpec::Constant(1), Contrast::Indirect, 2.0).unwrap();
        assert!((e.ci_high - e.estimate - 2.0 * e.se).abs() < 1e-15);
        assert_eq!(e.rule, "no individualization");
    }

    #[test]
    fn missing_arm_is_reported() {
        let mut p = pseudo(vec![1.0], vec![1.0], vec![1.0]);
        p.arms.truncate(2);
        p.values.truncate(2);
        let e = estimate_effect(&p, &[1.0], &RuleSpec::Constant(1), Contrast::Indirect, Z_95);
        assert_eq!(e, Err(EffectError::MissingArm(ArmContrast::ZERO_ZERO)));
    }
}
