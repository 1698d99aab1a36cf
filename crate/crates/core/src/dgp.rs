//! Finite-support structural equation models and exact enumeration of every
//! identified quantity.
//!
//! A [`DiscreteDgp`] gives the observed-data law as conditional probability
//! tables over `W → A → Z → M → Y` with binary `A`, `Z`, `Y` and finite
//! product spaces for `W` and `M`. Counterfactual means, conditional
//! indirect effects ("blips"), population effects under a rule, and the true
//! nuisance functions are computed by summing over the joint support, so
//! they are exact up to floating-point rounding.
//!
//! # Table layout
//!
//! `W` and `M` configurations are indexed row-major over their variables
//! (last variable fastest). With `nw = |W|`, `nm = |M|`:
//!
//! | field  | meaning              | index                          |
//! |--------|----------------------|--------------------------------|
//! | `p_w`  | `P(W = w)`           | `w`                            |
//! | `g1`   | `P(A = 1 ∣ w)`       | `w`                            |
//! | `q1`   | `P(Z = 1 ∣ a, w)`    | `a·nw + w`                     |
//! | `p_m`  | `P(M = m ∣ z, a, w)` | `((z·2 + a)·nw + w)·nm + m`    |
//! | `p_y1` | `P(Y = 1 ∣ m,z,a,w)` | `((a·2 + z)·nw + w)·nm + m`    |

use alloc::borrow::ToOwned;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eif::NuisanceValues;
use crate::model::{ColumnSchema, ColumnSpec, DataError, Dataset};
use crate::num;

/// Column names used for `A`, `Z` and `Y` in simulated datasets.
pub const TREATMENT: &str = "a";
pub const POST_TREATMENT: &str = "z";
pub const OUTCOME: &str = "y";

const SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DgpError {
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("positivity violation at {0}")]
    PositivityViolation(String),
    #[error("unknown rule-covariate stratum {0:?}")]
    UnknownStratum(Vec<f64>),
    #[error("rule covers {found} strata, the model has {expected}")]
    RuleSupportMismatch { found: usize, expected: usize },
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteVar {
    pub name: String,
    pub levels: Vec<f64>,
}

impl DiscreteVar {
    pub fn new(name: &str, levels: &[f64]) -> Self {
        DiscreteVar {
            name: name.to_owned(),
            levels: levels.to_vec(),
        }
    }

    pub fn binary(name: &str) -> Self {
        Self::new(name, &[0.0, 1.0])
    }
}

/// On-disk form; converted into [`DiscreteDgp`] through validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DgpSpec {
    pub covariates: Vec<DiscreteVar>,
    pub rule_covariates: Vec<String>,
    pub mediators: Vec<DiscreteVar>,
    pub p_w: Vec<f64>,
    pub g1: Vec<f64>,
    pub q1: Vec<f64>,
    pub p_m: Vec<f64>,
    pub p_y1: Vec<f64>,
}

/// A validated discrete data-generating process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DgpSpec", into = "DgpSpec")]
pub struct DiscreteDgp {
    spec: DgpSpec,
    nw: usize,
    nm: usize,
    /// Positions of the rule covariates within `covariates`.
    v_pos: Vec<usize>,
}

impl TryFrom<DgpSpec> for DiscreteDgp {
    type Error = DgpError;
    fn try_from(spec: DgpSpec) -> Result<Self, DgpError> {
        DiscreteDgp::new(spec)
    }
}

impl From<DiscreteDgp> for DgpSpec {
    fn from(d: DiscreteDgp) -> DgpSpec {
        d.spec
    }
}

/// One cell of the joint support with its probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub w: usize,
    pub a: u8,
    pub z: u8,
    pub m: usize,
    pub y: u8,
    pub prob: f64,
}

/// Indirect, direct and total population effects of a rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationEffects {
    pub indirect: f64,
    pub direct: f64,
    pub total: f64,
}

fn check_prob(name: &str, v: &[f64]) -> Result<(), DgpError> {
    if let Some(i) = v.iter().position(|p| !(*p >= 0.0 && *p <= 1.0)) {
        return Err(DgpError::Invalid(format!("{name}[{i}] = {} is not a probability", v[i])));
    }
    Ok(())
}

fn check_rows(name: &str, v: &[f64], width: usize) -> Result<(), DgpError> {
    for (r, row) in v.chunks(width).enumerate() {
        let s: f64 = row.iter().sum();
        if num::abs(s - 1.0) > SUM_TOL {
            return Err(DgpError::Invalid(format!("{name} row {r} sums to {s}")));
        }
    }
    Ok(())
}

impl DiscreteDgp {
    pub fn new(spec: DgpSpec) -> Result<Self, DgpError> {
        let bad = |m: String| Err(DgpError::Invalid(m));
        if spec.covariates.is_empty() || spec.mediators.is_empty() {
            return bad("need at least one covariate and one mediator".into());
        }
        let mut names: Vec<&str> = vec![TREATMENT, POST_TREATMENT, OUTCOME];
        for var in spec.covariates.iter().chain(&spec.mediators) {
            if names.contains(&var.name.as_str()) {
                return bad(format!("variable name `{}` is reserved or repeated", var.name));
            }
            names.push(&var.name);
            if var.levels.is_empty() || var.levels.iter().any(|l| !l.is_finite()) {
                return bad(format!("variable `{}` needs finite levels", var.name));
            }
            for (i, l) in var.levels.iter().enumerate() {
                if var.levels[..i].contains(l) {
                    return bad(format!("variable `{}` repeats level {l}", var.name));
                }
            }
        }
        let nw: usize = spec.covariates.iter().map(|v| v.levels.len()).product();
        let nm: usize = spec.mediators.iter().map(|v| v.levels.len()).product();
        if nw > 4096 || nm > 4096 {
            return bad("support too large for enumeration".into());
        }
        let mut v_pos = Vec::new();
        if spec.rule_covariates.is_empty() {
            return bad("need at least one rule covariate".into());
        }
        for v in &spec.rule_covariates {
            match spec.covariates.iter().position(|c| &c.name == v) {
                Some(p) if !v_pos.contains(&p) => v_pos.push(p),
                _ => return bad(format!("rule covariate `{v}` is not a distinct covariate")),
            }
        }
        let sizes = [
            ("p_w", spec.p_w.len(), nw),
            ("g1", spec.g1.len(), nw),
            ("q1", spec.q1.len(), 2 * nw),
            ("p_m", spec.p_m.len(), 4 * nw * nm),
            ("p_y1", spec.p_y1.len(), 4 * nw * nm),
        ];
        for (name, got, want) in sizes {
            if got != want {
                return bad(format!("{name} has {got} entries, expected {want}"));
            }
        }
        check_prob("p_w", &spec.p_w)?;
        check_prob("g1", &spec.g1)?;
        check_prob("q1", &spec.q1)?;
        check_prob("p_m", &spec.p_m)?;
        check_prob("p_y1", &spec.p_y1)?;
        check_rows("p_w", &spec.p_w, nw)?;
        check_rows("p_m", &spec.p_m, nm)?;
        Ok(DiscreteDgp { spec, nw, nm, v_pos })
    }

    pub fn spec(&self) -> &DgpSpec {
        &self.spec
    }

    pub fn n_w(&self) -> usize {
        self.nw
    }

    pub fn n_m(&self) -> usize {
        self.nm
    }

    fn decode(vars: &[DiscreteVar], mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; vars.len()];
        for (k, v) in vars.iter().enumerate().rev() {
            out[k] = idx % v.levels.len();
            idx /= v.levels.len();
        }
        out
    }

    /// Level values of the covariates at configuration `w`.
    pub fn w_values(&self, w: usize) -> Vec<f64> {
        Self::decode(&self.spec.covariates, w)
            .iter()
            .zip(&self.spec.covariates)
            .map(|(&k, v)| v.levels[k])
            .collect()
    }

    /// Level values of the mediators at configuration `m`.
    pub fn m_values(&self, m: usize) -> Vec<f64> {
        Self::decode(&self.spec.mediators, m)
            .iter()
            .zip(&self.spec.mediators)
            .map(|(&k, v)| v.levels[k])
            .collect()
    }

    /// Finds the covariate configuration with the given level values.
    pub fn locate_w(&self, values: &[f64]) -> Option<usize> {
        (0..self.nw).find(|&w| self.w_values(w) == values)
    }

    pub fn locate_m(&self, values: &[f64]) -> Option<usize> {
        (0..self.nm).find(|&m| self.m_values(m) == values)
    }

    /// Number of rule-covariate strata (product of the `V` level counts).
    pub fn n_strata(&self) -> usize {
        self.v_pos
            .iter()
            .map(|&p| self.spec.covariates[p].levels.len())
            .product()
    }

    /// Stratum index of covariate configuration `w`.
    pub fn stratum_of(&self, w: usize) -> usize {
        let idx = Self::decode(&self.spec.covariates, w);
        self.v_pos.iter().fold(0, |acc, &p| {
            acc * self.spec.covariates[p].levels.len() + idx[p]
        })
    }

    /// Level values of the rule covariates in stratum `s`.
    pub fn stratum_values(&self, s: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.v_pos.len()];
        let mut s = s;
        for (k, &p) in self.v_pos.iter().enumerate().rev() {
            let levels = &self.spec.covariates[p].levels;
            out[k] = levels[s % levels.len()];
            s /= levels.len();
        }
        out
    }

    pub fn locate_stratum(&self, values: &[f64]) -> Option<usize> {
        (0..self.n_strata()).find(|&s| self.stratum_values(s) == values)
    }

    /// `P(V = v)` for every stratum.
    pub fn stratum_probs(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.n_strata()];
        for w in 0..self.nw {
            p[self.stratum_of(w)] += self.spec.p_w[w];
        }
        p
    }

    #[inline]
    pub fn p_w(&self, w: usize) -> f64 {
        self.spec.p_w[w]
    }

    /// `P(A = a ∣ w)`.
    #[inline]
    pub fn g(&self, a: u8, w: usize) -> f64 {
        let g1 = self.spec.g1[w];
        if a == 1 {
            g1
        } else {
            1.0 - g1
        }
    }

    /// `P(Z = z ∣ a, w)`.
    #[inline]
    pub fn q(&self, z: u8, a: u8, w: usize) -> f64 {
        let q1 = self.spec.q1[a as usize * self.nw + w];
        if z == 1 {
            q1
        } else {
            1.0 - q1
        }
    }

    /// `P(M = m ∣ z, a, w)`.
    #[inline]
    pub fn p_m(&self, m: usize, z: u8, a: u8, w: usize) -> f64 {
        self.spec.p_m[((z as usize * 2 + a as usize) * self.nw + w) * self.nm + m]
    }

    /// `E(Y ∣ a, z, m, w) = P(Y = 1 ∣ m, z, a, w)`.
    #[inline]
    pub fn b(&self, a: u8, z: u8, m: usize, w: usize) -> f64 {
        self.spec.p_y1[((a as usize * 2 + z as usize) * self.nw + w) * self.nm + m]
    }

    /// `P(M = m ∣ a, w) = Σ_z P(m ∣ z, a, w) q(z ∣ a, w)`.
    pub fn p_m_given_a(&self, m: usize, a: u8, w: usize) -> f64 {
        self.p_m(m, 0, a, w) * self.q(0, a, w) + self.p_m(m, 1, a, w) * self.q(1, a, w)
    }

    /// Calls `f` on every cell of the joint support with positive
    /// probability.
    pub fn for_each_cell(&self, mut f: impl FnMut(&Cell)) {
        for w in 0..self.nw {
            let pw = self.p_w(w);
            if pw == 0.0 {
                continue;
            }
            for a in 0..2u8 {
                let pa = pw * self.g(a, w);
                if pa == 0.0 {
                    continue;
                }
                for z in 0..2u8 {
                    let pz = pa * self.q(z, a, w);
                    if pz == 0.0 {
                        continue;
                    }
                    for m in 0..self.nm {
                        let pm = pz * self.p_m(m, z, a, w);
                        if pm == 0.0 {
                            continue;
                        }
                        let b = self.b(a, z, m, w);
                        for (y, py) in [(0u8, 1.0 - b), (1u8, b)] {
                            let prob = pm * py;
                            if prob > 0.0 {
                                f(&Cell {
                                    w,
                                    a,
                                    z,
                                    m,
                                    y,
                                    prob,
                                });
                            }
                        }
                    }
                }
            }
        }
    }

    /// `E[f(O) ∣ V = v]` for every stratum, by enumeration. Strata with zero
    /// probability yield `NaN`.
    pub fn expect_by_stratum(&self, mut f: impl FnMut(&Cell) -> f64) -> Vec<f64> {
        let mut num = vec![0.0; self.n_strata()];
        let pv = self.stratum_probs();
        self.for_each_cell(|c| num[self.stratum_of(c.w)] += c.prob * f(c));
        num.iter().zip(&pv).map(|(n, p)| n / p).collect()
    }

    /// `E[f(O)]` by enumeration.
    pub fn expect(&self, mut f: impl FnMut(&Cell) -> f64) -> f64 {
        let mut s = 0.0;
        self.for_each_cell(|c| s += c.prob * f(c));
        s
    }

    /// `E(Y_{a', G_{a*}} ∣ W = w) = Σ_{z,m} b(a', z, m, w) q(z ∣ a', w) p(m ∣ a*, w)`.
    pub fn counterfactual_mean_at(&self, a_prime: u8, a_star: u8, w: usize) -> f64 {
        let mut s = 0.0;
        for m in 0..self.nm {
            let pm = self.p_m_given_a(m, a_star, w);
            for z in 0..2u8 {
                s += self.b(a_prime, z, m, w) * self.q(z, a_prime, w) * pm;
            }
        }
        s
    }

    /// `E(Y_{a', G_{a*}})`.
    pub fn counterfactual_mean(&self, a_prime: u8, a_star: u8) -> f64 {
        (0..self.nw)
            .map(|w| self.p_w(w) * self.counterfactual_mean_at(a_prime, a_star, w))
            .sum()
    }

    /// Conditional indirect effect `B(v) = E(Y_{1,G_1} − Y_{1,G_0} ∣ V = v)`
    /// for the stratum with the given rule-covariate values.
    pub fn true_blip(&self, v: &[f64]) -> Result<f64, DgpError> {
        let s = self
            .locate_stratum(v)
            .ok_or_else(|| DgpError::UnknownStratum(v.to_vec()))?;
        let blips = self.true_blips();
        if blips[s].is_nan() {
            return Err(DgpError::UnknownStratum(v.to_vec()));
        }
        Ok(blips[s])
    }

    /// `B(v)` for every stratum (`NaN` where `P(V = v) = 0`).
    pub fn true_blips(&self) -> Vec<f64> {
        let mut num = vec![0.0; self.n_strata()];
        let pv = self.stratum_probs();
        for w in 0..self.nw {
            let pw = self.p_w(w);
            if pw == 0.0 {
                continue;
            }
            let mut s = 0.0;
            for m in 0..self.nm {
                let diff = self.p_m_given_a(m, 1, w) - self.p_m_given_a(m, 0, w);
                for z in 0..2u8 {
                    s += self.b(1, z, m, w) * self.q(z, 1, w) * diff;
                }
            }
            num[self.stratum_of(w)] += pw * s;
        }
        num.iter()
            .zip(&pv)
            .map(|(n, p)| if *p > 0.0 { n / p } else { f64::NAN })
            .collect()
    }

    fn check_rule(&self, rule: &[u8]) -> Result<(), DgpError> {
        if rule.len() != self.n_strata() || rule.iter().any(|&d| d > 1) {
            return Err(DgpError::RuleSupportMismatch {
                found: rule.len(),
                expected: self.n_strata(),
            });
        }
        Ok(())
    }

    /// `E(Y_{d, G_{d*}})` for rules given per stratum.
    pub fn rule_mean(&self, rule_prime: &[u8], rule_star: &[u8]) -> Result<f64, DgpError> {
        self.check_rule(rule_prime)?;
        self.check_rule(rule_star)?;
        Ok((0..self.nw)
            .map(|w| {
                let s = self.stratum_of(w);
                self.p_w(w) * self.counterfactual_mean_at(rule_prime[s], rule_star[s], w)
            })
            .sum())
    }

    /// Population indirect, direct and total effects of implementing `rule`
    /// (one treatment decision per stratum) against treating no one.
    ///
    /// `total` is `indirect + direct`.
    pub fn true_population_effects(&self, rule: &[u8]) -> Result<PopulationEffects, DgpError> {
        self.check_rule(rule)?;
        let zero = vec![0u8; rule.len()];
        let dd = self.rule_mean(rule, rule)?;
        let d0 = self.rule_mean(rule, &zero)?;
        let z0 = self.rule_mean(&zero, &zero)?;
        let indirect = dd - d0;
        let direct = d0 - z0;
        Ok(PopulationEffects {
            indirect,
            direct,
            total: indirect + direct,
        })
    }

    /// The rule `d(v) = 1{B(v) ≤ 0}`. Strata with zero probability get 1.
    pub fn sign_rule(&self) -> Vec<u8> {
        self.true_blips()
            .iter()
            .map(|b| if b.is_nan() || *b <= 0.0 { 1 } else { 0 })
            .collect()
    }

    /// Smallest of the positivity quantities the efficient influence
    /// function divides by for contrast `(a', a*)`: `g(a'|w)`, `g(a*|w)`,
    /// `e(a'|m,w)` where `p(m|a*,w) > 0`, and `r(z|a',m,w)` where also
    /// `q(z|a',w) > 0`. Returns the value and the cell attaining it.
    pub fn positivity_margin(&self, a_prime: u8, a_star: u8) -> (f64, String) {
        let mut best = (f64::INFINITY, String::new());
        let mut consider = |v: f64, cell: &dyn Fn() -> String| {
            if v < best.0 {
                best = (v, cell());
            }
        };
        for w in 0..self.nw {
            if self.p_w(w) == 0.0 {
                continue;
            }
            consider(self.g(a_prime, w), &|| format!("g({a_prime}|w={w})"));
            consider(self.g(a_star, w), &|| format!("g({a_star}|w={w})"));
            for m in 0..self.nm {
                if self.p_m_given_a(m, a_star, w) == 0.0 {
                    continue;
                }
                consider(self.true_e(a_prime, m, w), &|| format!("e({a_prime}|m={m},w={w})"));
                for z in 0..2u8 {
                    if self.q(z, a_prime, w) == 0.0 {
                        continue;
                    }
                    consider(self.true_r(z, a_prime, m, w), &|| {
                        format!("r({z}|a={a_prime},m={m},w={w})")
                    });
                }
            }
        }
        best
    }

    /// `e(a ∣ m, w)` by Bayes' rule; falls back to `g(a ∣ w)` where
    /// `p(m ∣ w) = 0`.
    pub fn true_e(&self, a: u8, m: usize, w: usize) -> f64 {
        let num = self.p_m_given_a(m, a, w) * self.g(a, w);
        let den = num + self.p_m_given_a(m, 1 - a, w) * self.g(1 - a, w);
        if den > 0.0 {
            num / den
        } else {
            self.g(a, w)
        }
    }

    /// `r(z ∣ a, m, w)` by Bayes' rule; falls back to `q(z ∣ a, w)` where
    /// `p(m ∣ a, w) = 0`.
    pub fn true_r(&self, z: u8, a: u8, m: usize, w: usize) -> f64 {
        let den = self.p_m_given_a(m, a, w);
        if den > 0.0 {
            self.p_m(m, z, a, w) * self.q(z, a, w) / den
        } else {
            self.q(z, a, w)
        }
    }

    /// Exact nuisance tables for contrast `(a', a*)`.
    pub fn derive_true_nuisances(&self, a_prime: u8, a_star: u8) -> Result<TrueNuisances, DgpError> {
        let (margin, cell) = self.positivity_margin(a_prime, a_star);
        if !(margin > 0.0) {
            return Err(DgpError::PositivityViolation(cell));
        }
        let (nw, nm) = (self.nw, self.nm);
        let mut t = TrueNuisances {
            a_prime,
            a_star,
            nw,
            nm,
            b: vec![0.0; 4 * nw * nm],
            g1: vec![0.0; nw],
            e1: vec![0.0; nw * nm],
            q1: vec![0.0; 2 * nw],
            r1: vec![0.0; 2 * nw * nm],
            u: vec![0.0; 2 * nw],
            v: vec![0.0; nw],
            h: vec![0.0; 2 * nw * nm],
        };
        for w in 0..nw {
            t.g1[w] = self.g(1, w);
            for a in 0..2u8 {
                t.q1[a as usize * nw + w] = self.q(1, a, w);
                for m in 0..nm {
                    t.r1[(a as usize * nw + w) * nm + m] = self.true_r(1, a, m, w);
                    for z in 0..2u8 {
                        t.b[((a as usize * 2 + z as usize) * nw + w) * nm + m] = self.b(a, z, m, w);
                    }
                }
            }
            for m in 0..nm {
                t.e1[w * nm + m] = self.true_e(1, m, w);
            }
        }
        for w in 0..nw {
            for m in 0..nm {
                for z in 0..2u8 {
                    t.h[(z as usize * nw + w) * nm + m] = t.h_at(z, m, w);
                }
            }
            // u(z, w) = E{b(a', Z, M, W) h(Z, M, W) | Z = z, A = a', W = w}
            for z in 0..2u8 {
                let mut s = 0.0;
                for m in 0..nm {
                    let pm = self.p_m(m, z, a_prime, w);
                    if pm > 0.0 {
                        s += pm * self.b(a_prime, z, m, w) * t.h_at(z, m, w);
                    }
                }
                t.u[z as usize * nw + w] = s;
            }
            // v(w) = E{Σ_z b(a', z, M, W) q(z | a', W) | A = a*, W = w}
            t.v[w] = self.counterfactual_mean_at(a_prime, a_star, w);
        }
        Ok(t)
    }

    /// Draws `n` i.i.d. rows by ancestral sampling `W → A → Z → M → Y`.
    /// Deterministic given `seed`.
    pub fn simulate(&self, n: usize, seed: u64) -> Result<Dataset, DgpError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |probs: &mut dyn Iterator<Item = f64>| -> usize {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut last = 0;
            for (k, p) in probs.enumerate() {
                acc += p;
                if p > 0.0 {
                    last = k;
                }
                if u < acc {
                    return k;
                }
            }
            last
        };
        let nw = self.nw;
        let nm = self.nm;
        let mut wcols = vec![Vec::with_capacity(n); self.spec.covariates.len()];
        let mut mcols = vec![Vec::with_capacity(n); self.spec.mediators.len()];
        let mut a_col = Vec::with_capacity(n);
        let mut z_col = Vec::with_capacity(n);
        let mut y_col = Vec::with_capacity(n);
        let w_table: Vec<Vec<f64>> = (0..nw).map(|w| self.w_values(w)).collect();
        let m_table: Vec<Vec<f64>> = (0..nm).map(|m| self.m_values(m)).collect();
        for _ in 0..n {
            let w = draw(&mut self.spec.p_w.iter().copied());
            let a = draw(&mut [1.0 - self.g(1, w), self.g(1, w)].into_iter()) as u8;
            let z = draw(&mut [self.q(0, a, w), self.q(1, a, w)].into_iter()) as u8;
            let m = draw(&mut (0..nm).map(|m| self.p_m(m, z, a, w)));
            let b = self.b(a, z, m, w);
            let y = draw(&mut [1.0 - b, b].into_iter());
            for (col, v) in wcols.iter_mut().zip(&w_table[w]) {
                col.push(*v);
            }
            for (col, v) in mcols.iter_mut().zip(&m_table[m]) {
                col.push(*v);
            }
            a_col.push(a);
            z_col.push(z);
            y_col.push(y as f64);
        }
        Ok(Dataset::from_numeric(
            self.schema(),
            wcols,
            a_col,
            z_col,
            mcols,
            y_col,
            None,
        )?)
    }

    /// Schema of simulated datasets.
    pub fn schema(&self) -> ColumnSchema {
        ColumnSchema {
            covariates: self.spec.covariates.iter().map(|v| ColumnSpec::real(&v.name)).collect(),
            rule_covariates: self.spec.rule_covariates.clone(),
            treatment: TREATMENT.to_owned(),
            post_treatment: POST_TREATMENT.to_owned(),
            mediators: self.spec.mediators.iter().map(|v| ColumnSpec::real(&v.name)).collect(),
            outcome: OUTCOME.to_owned(),
            outcome_range: (0.0, 1.0),
            weight: None,
        }
    }
}

/// Exact nuisance tables for a fixed contrast `(a', a*)`.
///
/// Fields are public so robustness checks can substitute deliberately wrong
/// tables. Layouts (with `nw = |W|`, `nm = |M|`): `b` is `[a][z][w][m]`,
/// `g1` is `[w]`, `e1` is `[w][m]`, `q1` is `[a][w]`, `r1` is `[a][w][m]`,
/// `u` is `[z][w]`, `v` is `[w]`, `h` is `[z][w][m]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrueNuisances {
    pub a_prime: u8,
    pub a_star: u8,
    nw: usize,
    nm: usize,
    pub b: Vec<f64>,
    pub g1: Vec<f64>,
    pub e1: Vec<f64>,
    pub q1: Vec<f64>,
    pub r1: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub h: Vec<f64>,
}

impl TrueNuisances {
    fn pick(p1: f64, x: u8) -> f64 {
        if x == 1 {
            p1
        } else {
            1.0 - p1
        }
    }

    /// `h(z, m, w)` evaluated from the current `g1`, `q1`, `r1`, `e1`.
    pub fn h_at(&self, z: u8, m: usize, w: usize) -> f64 {
        let (ap, ast) = (self.a_prime, self.a_star);
        let g = |a| Self::pick(self.g1[w], a);
        let e = |a| Self::pick(self.e1[w * self.nm + m], a);
        let q = Self::pick(self.q1[ap as usize * self.nw + w], z);
        let r = Self::pick(self.r1[(ap as usize * self.nw + w) * self.nm + m], z);
        g(ap) / g(ast) * (q / r) * (e(ast) / e(ap))
    }

    /// Nuisance values at covariates `w` and mediator `m`, in the form the
    /// influence-function evaluator consumes.
    pub fn values(&self, w: usize, m: usize) -> NuisanceValues {
        let (nw, nm) = (self.nw, self.nm);
        let b = |a: usize, z: usize| self.b[((a * 2 + z) * nw + w) * nm + m];
        NuisanceValues {
            g1: self.g1[w],
            e1: self.e1[w * nm + m],
            q1: [self.q1[w], self.q1[nw + w]],
            r1: [self.r1[w * nm + m], self.r1[(nw + w) * nm + m]],
            b: [[b(0, 0), b(0, 1)], [b(1, 0), b(1, 1)]],
            u: [self.u[w], self.u[nw + w]],
            v: self.v[w],
        }
    }
}

/// Models used throughout the tests and the acceptance suite.
pub mod presets {
    use super::*;

    fn bern(p: f64, x: u8) -> f64 {
        if x == 1 {
            p
        } else {
            1.0 - p
        }
    }

    fn build(
        covariates: Vec<DiscreteVar>,
        rule_covariates: &[&str],
        mediators: Vec<DiscreteVar>,
        p_w: impl Fn(&[f64]) -> f64,
        g1: impl Fn(&[f64]) -> f64,
        q1: impl Fn(u8, &[f64]) -> f64,
        p_m: impl Fn(&[f64], u8, u8, &[f64]) -> f64,
        p_y1: impl Fn(&[f64], u8, u8, &[f64]) -> f64,
    ) -> DiscreteDgp {
        let nw: usize = covariates.iter().map(|v| v.levels.len()).product();
        let nm: usize = mediators.iter().map(|v| v.levels.len()).product();
        let wv: Vec<Vec<f64>> = (0..nw).map(|w| {
            DiscreteDgp::decode(&covariates, w)
                .iter()
                .zip(&covariates)
                .map(|(&k, v)| v.levels[k])
                .collect()
        }).collect();
        let mv: Vec<Vec<f64>> = (0..nm).map(|m| {
            DiscreteDgp::decode(&mediators, m)
                .iter()
                .zip(&mediators)
                .map(|(&k, v)| v.levels[k])
                .collect()
        }).collect();
        let mut spec = DgpSpec {
            covariates,
            rule_covariates: rule_covariates.iter().map(|s| (*s).to_owned()).collect(),
            mediators,
            p_w: wv.iter().map(|w| p_w(w)).collect(),
            g1: wv.iter().map(|w| g1(w)).collect(),
            q1: vec![0.0; 2 * nw],
            p_m: vec![0.0; 4 * nw * nm],
            p_y1: vec![0.0; 4 * nw * nm],
        };
        for a in 0..2u8 {
            for w in 0..nw {
                spec.q1[a as usize * nw + w] = q1(a, &wv[w]);
                for z in 0..2u8 {
                    for m in 0..nm {
                        spec.p_m[((z as usize * 2 + a as usize) * nw + w) * nm + m] =
                            p_m(&mv[m], z, a, &wv[w]);
                        spec.p_y1[((a as usize * 2 + z as usize) * nw + w) * nm + m] =
                            p_y1(&mv[m], z, a, &wv[w]);
                    }
                }
            }
        }
        DiscreteDgp::new(spec).expect("preset model is valid")
    }

    /// Binary `W = V`, binary `M`; the indirect effect is harmful at `w = 0`
    /// and beneficial at `w = 1`.
    ///
    /// `p(W=1) = 0.5`, `g(1|w) = 0.5`, `q(1|a,w) = 0.3 + 0.4a`,
    /// `p(M=1|z,a,w) = 0.2 + 0.5z + 0.1a(1−z)`,
    /// `p(Y=1|m,z,a,w) = 0.3 + 0.2m(1−2w) − 0.05a`.
    pub fn dgp_a() -> DiscreteDgp {
        build(
            vec![DiscreteVar::binary("w")],
            &["w"],
            vec![DiscreteVar::binary("m")],
            |_| 0.5,
            |_| 0.5,
            |a, _| 0.3 + 0.4 * a as f64,
            |m, z, a, _| {
                let (z, a) = (z as f64, a as f64);
                bern(0.2 + 0.5 * z + 0.1 * a * (1.0 - z), m[0] as u8)
            },
            |m, _z, a, w| 0.3 + 0.2 * m[0] * (1.0 - 2.0 * w[0]) - 0.05 * a as f64,
        )
    }

    /// Confounded treatment, eight covariate cells (`w1 ∈ {0..3}`,
    /// `w2 ∈ {0,1}`, both rule covariates) and two binary mediators whose
    /// effect on `Y` changes sign across strata.
    pub fn confounded() -> DiscreteDgp {
        build(
            vec![DiscreteVar::new("w1", &[0.0, 1.0, 2.0, 3.0]), DiscreteVar::binary("w2")],
            &["w1", "w2"],
            vec![DiscreteVar::binary("m1"), DiscreteVar::binary("m2")],
            |w| [0.3, 0.3, 0.2, 0.2][w[0] as usize] * if w[1] == 1.0 { 0.4 } else { 0.6 },
            |w| 0.3 + 0.1 * w[0] + 0.1 * w[1],
            |a, w| 0.2 + 0.5 * a as f64 + 0.05 * w[0],
            |m, z, a, w| {
                let (z, a) = (z as f64, a as f64);
                let p1 = 0.2 + 0.3 * z + 0.1 * a + 0.05 * w[1] - 0.02 * w[0];
                let p2 = 0.3 + 0.2 * m[0] + 0.15 * a * (1.0 - w[1]) - 0.05 * w[0];
                bern(p1, m[0] as u8) * bern(p2, m[1] as u8)
            },
            |m, z, a, w| {
                0.45 + 0.15 * m[0] * (w[0] - 1.5) / 1.5 + 0.2 * m[1] * (1.0 - 2.0 * w[1])
                    + 0.1 * z as f64
                    - 0.05 * a as f64
                    + 0.05 * w[1]
            },
        )
    }

    /// `dgp_a` with `junk` extra binary covariates, all of them rule
    /// covariates. The junk covariates shift the outcome but not the blip,
    /// which depends on `w1` alone.
    pub fn sparse_rule(junk: usize) -> DiscreteDgp {
        let mut covs = vec![DiscreteVar::binary("w1")];
        covs.extend((0..junk).map(|k| DiscreteVar::binary(&format!("w{}", k + 2))));
        let names: Vec<String> = covs.iter().map(|v| v.name.clone()).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        build(
            covs,
            &refs,
            vec![DiscreteVar::binary("m")],
            move |_| 1.0 / (1u64 << (1 + junk)) as f64,
            |_| 0.5,
            |a, _| 0.3 + 0.4 * a as f64,
            |m, z, a, _| {
                let (z, a) = (z as f64, a as f64);
                bern(0.2 + 0.5 * z + 0.1 * a * (1.0 - z), m[0] as u8)
            },
            |m, _z, a, w| {
                let shift: f64 = w[1..].iter().map(|v| 0.02 * v).sum();
                0.3 + 0.2 * m[0] * (1.0 - 2.0 * w[0]) - 0.05 * a as f64 + shift
            },
        )
    }

    /// Mediator independent of treatment and of `Z` given `W`: every
    /// indirect effect is zero.
    pub fn null_mediation() -> DiscreteDgp {
        build(
            vec![DiscreteVar::new("w", &[0.0, 1.0, 2.0])],
            &["w"],
            vec![DiscreteVar::binary("m")],
            |_| 1.0 / 3.0,
            |_| 0.5,
            |a, _| 0.3 + 0.4 * a as f64,
            |m, _z, _a, w| bern(0.3 + 0.1 * w[0], m[0] as u8),
            |m, z, a, w| 0.3 + 0.2 * m[0] * (1.0 - w[0]) + 0.1 * z as f64 - 0.05 * a as f64,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::presets::*;
    use super::*;

    #[test]
    fn dgp_a_cells_match_hand_computation() {
        let d = dgp_a();
        // p(M=1|a=1) = 0.7·0.7 + 0.3·0.3 = 0.58, p(M=1|a=0) = 0.3·0.7 + 0.7·0.2 = 0.35
        assert!((d.p_m_given_a(1, 1, 0) - 0.58).abs() < 1e-15);
        assert!((d.p_m_given_a(1, 0, 0) - 0.35).abs() < 1e-15);
        // e(1|m=1,w) = 0.58 / (0.58 + 0.35)
        assert!((d.true_e(1, 1, 0) - 0.58 / 0.93).abs() < 1e-15);
        // r(1|a=1,m=1,w) = 0.7·0.7 / 0.58
        assert!((d.true_r(1, 1, 1, 0) - 0.49 / 0.58).abs() < 1e-15);
    }

    #[test]
    fn dgp_a_blips_have_opposite_signs() {
        let d = dgp_a();
        // B(w) = 0.2(1−2w)·(0.58−0.35) = ±0.046
        assert!((d.true_blip(&[0.0]).unwrap() - 0.046).abs() < 1e-12);
        assert!((d.true_blip(&[1.0]).unwrap() + 0.046).abs() < 1e-12);
        assert!(matches!(d.true_blip(&[2.0]), Err(DgpError::UnknownStratum(_))));
    }

    #[test]
    fn dgp_a_population_effects() {
        let d = dgp_a();
        let zero = d.true_population_effects(&[0, 0]).unwrap();
        assert_eq!(zero, PopulationEffects { indirect: 0.0, direct: 0.0, total: 0.0 });
        let one = d.true_population_effects(&[1, 1]).unwrap();
        assert!(one.indirect.abs() < 1e-12);
        assert!((one.direct + 0.05).abs() < 1e-12);
        let sign = d.sign_rule();
        assert_eq!(sign, vec![0, 1]);
        let eff = d.true_population_effects(&sign).unwrap();
        assert!((eff.indirect + 0.023).abs() < 1e-12);
        assert!((eff.direct + 0.025).abs() < 1e-12);
        assert!(d.true_population_effects(&[1]).is_err());
    }

    #[test]
    fn uninformative_mediator_gives_propensity() {
        let d = null_mediation();
        for w in 0..d.n_w() {
            for m in 0..d.n_m() {
                assert!((d.true_e(1, m, w) - d.g(1, w)).abs() < 1e-14);
            }
        }
        for b in d.true_blips() {
            assert!(b.abs() < 1e-14);
        }
    }

    #[test]
    fn degenerate_z_gives_unit_r() {
        let mut spec = dgp_a().spec().clone();
        spec.q1 = vec![1.0; 4];
        let d = DiscreteDgp::new(spec).unwrap();
        let t = d.derive_true_nuisances(1, 0).unwrap();
        assert!(t.r1.iter().all(|r| (*r - 1.0).abs() < 1e-15));
    }

    #[test]
    fn positivity_violation_names_cell() {
        let mut spec = dgp_a().spec().clone();
        spec.g1 = vec![1.0, 0.5];
        let d = DiscreteDgp::new(spec).unwrap();
        match d.derive_true_nuisances(1, 0) {
            Err(DgpError::PositivityViolation(cell)) => assert_eq!(cell, "g(0|w=0)"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_tables_are_rejected() {
        let mut spec = dgp_a().spec().clone();
        spec.p_m[0] = 0.9;
        assert!(matches!(DiscreteDgp::new(spec), Err(DgpError::Invalid(_))));
        let mut spec = dgp_a().spec().clone();
        spec.g1[0] = 1.2;
        assert!(matches!(DiscreteDgp::new(spec), Err(DgpError::Invalid(_))));
    }

    #[test]
    fn strata_round_trip() {
        let d = confounded();
        assert_eq!(d.n_w(), 8);
        assert_eq!(d.n_strata(), 8);
        for w in 0..d.n_w() {
            let vals = d.w_values(w);
            assert_eq!(d.locate_w(&vals), Some(w));
            assert_eq!(d.stratum_values(d.stratum_of(w)), vals);
        }
        let p: f64 = d.stratum_probs().iter().sum();
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn simulate_is_deterministic_and_respects_degenerate_treatment() {
        let d = dgp_a();
        assert_eq!(d.simulate(200, 5).unwrap(), d.simulate(200, 5).unwrap());
        assert_ne!(d.simulate(200, 5).unwrap(), d.simulate(200, 6).unwrap());
        let mut spec = d.spec().clone();
        spec.g1 = vec![1.0, 1.0];
        let all_treated = DiscreteDgp::new(spec).unwrap().simulate(500, 1).unwrap();
        assert!(all_treated.treatment().iter().all(|&a| a == 1));
    }
}
