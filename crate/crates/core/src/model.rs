//! Observed-data model: column roles, validated datasets and survey weights.
//!
//! A [`Dataset`] holds `O = (W, A, Z, M, Y)` plus per-row weights. It is
//! immutable once built. Categorical columns keep their level codes here and
//! are expanded to indicator features only when a design matrix is requested.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::learners::linalg::Matrix;
use crate::num;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DataError {
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("missing value at row {row}, column `{column}`")]
    MissingValue { row: usize, column: String },
    #[error("non-numeric value `{value}` at row {row}, column `{column}`")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },
    #[error("value `{value}` at row {row} is not a declared level of `{column}`")]
    UnknownLevel {
        row: usize,
        column: String,
        value: String,
    },
    #[error("treatment is not 0/1 at row {0}")]
    NonBinaryTreatment(usize),
    #[error("post-treatment variable is not 0/1 at row {0}")]
    NonBinaryPostTreatment(usize),
    #[error("outcome outside the declared range at row {0}")]
    OutOfRangeOutcome(usize),
    #[error("negative or non-finite weight at row {0}")]
    NegativeWeight(usize),
    #[error("all weights are zero")]
    AllZeroWeights,
    #[error("row {row} has {found} fields, expected {expected}")]
    RaggedRow {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("dataset has no rows")]
    Empty,
}

/// Value type of a covariate or mediator column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Real,
    Categorical { levels: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
}

impl ColumnSpec {
    pub fn real(name: &str) -> Self {
        ColumnSpec {
            name: name.to_owned(),
            kind: ColumnKind::Real,
        }
    }

    pub fn categorical(name: &str, levels: &[&str]) -> Self {
        ColumnSpec {
            name: name.to_owned(),
            kind: ColumnKind::Categorical {
                levels: levels.iter().map(|s| (*s).to_owned()).collect(),
            },
        }
    }
}

/// Assignment of table columns to the roles of `O = (W, A, Z, M, Y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSchema {
    /// Baseline covariates `W`, in order.
    pub covariates: Vec<ColumnSpec>,
    /// Rule covariates `V`, a subset of `W` by name.
    pub rule_covariates: Vec<String>,
    /// Binary treatment `A`.
    pub treatment: String,
    /// Binary post-treatment confounder `Z`.
    pub post_treatment: String,
    /// Mediators `M`, in order.
    pub mediators: Vec<ColumnSpec>,
    /// Outcome `Y`.
    pub outcome: String,
    /// Closed interval the outcome must lie in.
    pub outcome_range: (f64, f64),
    /// Optional survey-weight column.
    pub weight: Option<String>,
}

impl ColumnSchema {
    pub fn check(&self) -> Result<(), DataError> {
        let bad = |m: String| Err(DataError::InvalidSchema(m));
        if self.covariates.is_empty() {
            return bad("at least one baseline covariate is required".into());
        }
        if self.mediators.is_empty() {
            return bad("at least one mediator is required".into());
        }
        if self.rule_covariates.is_empty() {
            return bad("at least one rule covariate is required".into());
        }
        let mut seen = BTreeSet::new();
        let mut names: Vec<&str> = Vec::new();
        names.extend(self.covariates.iter().map(|c| c.name.as_str()));
        names.push(&self.treatment);
        names.push(&self.post_treatment);
        names.extend(self.mediators.iter().map(|c| c.name.as_str()));
        names.push(&self.outcome);
        if let Some(w) = &self.weight {
            names.push(w);
        }
        for n in names {
            if !seen.insert(n) {
                return bad(format!("column `{n}` appears in more than one role"));
            }
        }
        for v in &self.rule_covariates {
            if !self.covariates.iter().any(|c| &c.name == v) {
                return bad(format!("rule covariate `{v}` is not a baseline covariate"));
            }
        }
        let (lo, hi) = self.outcome_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return bad("outcome range must be a finite interval with lo < hi".into());
        }
        for c in self.covariates.iter().chain(&self.mediators) {
            if let ColumnKind::Categorical { levels } = &c.kind {
                let set: BTreeSet<&String> = levels.iter().collect();
                if levels.is_empty() || set.len() != levels.len() {
                    return bad(format!("column `{}` needs distinct, nonempty levels", c.name));
                }
            }
        }
        Ok(())
    }
}

/// Per-row nonnegative weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    values: Vec<f64>,
    normalized: bool,
}

impl WeightVector {
    pub fn new(values: Vec<f64>) -> Result<Self, DataError> {
        if let Some(i) = values.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(DataError::NegativeWeight(i));
        }
        Ok(WeightVector {
            values,
            normalized: false,
        })
    }

    pub fn unit(n: usize) -> Self {
        WeightVector {
            values: vec![1.0; n],
            normalized: true,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Rescales weights to mean one: `w_i · n / Σw`.
///
/// Weights whose mean is already within `1e-12` of one are returned
/// unchanged, which makes normalization idempotent bit-for-bit.
pub fn normalize_weights(w: &WeightVector) -> Result<WeightVector, DataError> {
    let n = w.values.len();
    let total = num::pairwise_sum(&w.values);
    if n == 0 || !(total > 0.0) {
        return Err(DataError::AllZeroWeights);
    }
    let mean = total / n as f64;
    if num::abs(mean - 1.0) <= 1e-12 {
        return Ok(WeightVector {
            values: w.values.clone(),
            normalized: true,
        });
    }
    let scale = n as f64 / total;
    Ok(WeightVector {
        values: w.values.iter().map(|v| v * scale).collect(),
        normalized: true,
    })
}

/// Typed column values.
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Real(Vec<f64>),
    Categorical { levels: Vec<String>, codes: Vec<u32> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub data: ColumnData,
}

impl Column {
    fn width(&self) -> usize {
        match &self.data {
            ColumnData::Real(_) => 1,
            ColumnData::Categorical { levels, .. } => levels.len().saturating_sub(1),
        }
    }

    fn feature_names(&self, out: &mut Vec<String>) {
        match &self.data {
            ColumnData::Real(_) => out.push(self.name.clone()),
            ColumnData::Categorical { levels, .. } => {
                for l in levels.iter().skip(1) {
                    out.push(format!("{}={}", self.name, l));
                }
            }
        }
    }

    fn push_features(&self, row: usize, out: &mut Vec<f64>) {
        match &self.data {
            ColumnData::Real(v) => out.push(v[row]),
            ColumnData::Categorical { levels, codes } => {
                for k in 1..levels.len() {
                    out.push(if codes[row] as usize == k { 1.0 } else { 0.0 });
                }
            }
        }
    }

    fn render(&self, row: usize) -> String {
        match &self.data {
            ColumnData::Real(v) => format!("{}", v[row]),
            ColumnData::Categorical { levels, codes } => levels[codes[row] as usize].clone(),
        }
    }

    /// Numeric view: real values, or level codes for categorical columns.
    pub fn numeric(&self, row: usize) -> f64 {
        match &self.data {
            ColumnData::Real(v) => v[row],
            ColumnData::Categorical { codes, .. } => codes[row] as f64,
        }
    }
}

/// Untyped table as read from a delimited file: a header and string cells.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Variable groups that can be laid out in a design matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Treatment,
    PostTreatment,
    Mediators,
    Covariates,
    RuleCovariates,
}

/// Optional overrides of `A` and `Z` when building a design matrix, used to
/// evaluate regressions at counterfactual treatment levels.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Setting {
    pub treatment: Option<u8>,
    pub post_treatment: Option<u8>,
}

impl Setting {
    pub fn treatment(a: u8) -> Self {
        Setting {
            treatment: Some(a),
            post_treatment: None,
        }
    }

    pub fn both(a: u8, z: u8) -> Self {
        Setting {
            treatment: Some(a),
            post_treatment: Some(z),
        }
    }
}

/// Validated, immutable observed data.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: ColumnSchema,
    covariates: Vec<Column>,
    treatment: Vec<u8>,
    post_treatment: Vec<u8>,
    mediators: Vec<Column>,
    outcome: Vec<f64>,
    weights: WeightVector,
}

/// Per-column type summary reported after validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSummary {
    pub name: String,
    pub role: String,
    pub kind: String,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub n: usize,
    pub weighted: bool,
    pub treated: usize,
    pub columns: Vec<ColumnSummary>,
}

const MISSING_TOKENS: [&str; 6] = ["", "NA", "NaN", "nan", "null", "."];

fn is_missing(cell: &str) -> bool {
    MISSING_TOKENS.contains(&cell.trim())
}

fn parse_real(raw: &RawTable, col: usize, row: usize) -> Result<f64, DataError> {
    let cell = raw.rows[row][col].trim();
    if is_missing(cell) {
        return Err(DataError::MissingValue {
            row,
            column: raw.header[col].clone(),
        });
    }
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(DataError::NonNumeric {
            row,
            column: raw.header[col].clone(),
            value: cell.to_owned(),
        }),
    }
}

fn column_index(raw: &RawTable, name: &str) -> Result<usize, DataError> {
    raw.header
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| DataError::MissingColumn(name.to_owned()))
}

fn read_column(raw: &RawTable, spec: &ColumnSpec) -> Result<Column, DataError> {
    let col = column_index(raw, &spec.name)?;
    let n = raw.rows.len();
    let data = match &spec.kind {
        ColumnKind::Real => {
            let mut v = Vec::with_capacity(n);
            for row in 0..n {
                v.push(parse_real(raw, col, row)?);
            }
            ColumnData::Real(v)
        }
        ColumnKind::Categorical { levels } => {
            let mut codes = Vec::with_capacity(n);
            for row in 0..n {
                let cell = raw.rows[row][col].trim();
                if is_missing(cell) {
                    return Err(DataError::MissingValue {
                        row,
                        column: spec.name.clone(),
                    });
                }
                let code = levels.iter().position(|l| l == cell).ok_or_else(|| {
                    DataError::UnknownLevel {
                        row,
                        column: spec.name.clone(),
                        value: cell.to_owned(),
                    }
                })?;
                codes.push(code as u32);
            }
            ColumnData::Categorical {
                levels: levels.clone(),
                codes,
            }
        }
    };
    Ok(Column {
        name: spec.name.clone(),
        data,
    })
}

fn read_binary(
    raw: &RawTable,
    name: &str,
    err: fn(usize) -> DataError,
) -> Result<Vec<u8>, DataError> {
    let col = column_index(raw, name)?;
    let mut out = Vec::with_capacity(raw.rows.len());
    for row in 0..raw.rows.len() {
        let v = match parse_real(raw, col, row) {
            Ok(v) => v,
            Err(DataError::NonNumeric { .. }) => return Err(err(row)),
            Err(e) => return Err(e),
        };
        if v == 0.0 {
            out.push(0);
        } else if v == 1.0 {
            out.push(1);
        } else {
            return Err(err(row));
        }
    }
    Ok(out)
}

/// Checks a raw table against `schema` and builds a [`Dataset`].
///
/// Missing values are rejected. Weights, when a weight column is named, are
/// normalized to mean one.
pub fn validate_dataset(raw: &RawTable, schema: &ColumnSchema) -> Result<Dataset, DataError> {
    schema.check()?;
    if raw.rows.is_empty() {
        return Err(DataError::Empty);
    }
    for (row, r) in raw.rows.iter().enumerate() {
        if r.len() != raw.header.len() {
            return Err(DataError::RaggedRow {
                row,
                found: r.len(),
                expected: raw.header.len(),
            });
        }
    }
    // Report missing columns before any value-level problem.
    let mut all = Vec::new();
    all.extend(schema.covariates.iter().map(|c| c.name.as_str()));
    all.push(schema.treatment.as_str());
    all.push(schema.post_treatment.as_str());
    all.extend(schema.mediators.iter().map(|c| c.name.as_str()));
    all.push(schema.outcome.as_str());
    if let Some(w) = &schema.weight {
        all.push(w.as_str());
    }
    for name in all {
        column_index(raw, name)?;
    }

    let covariates = schema
        .covariates
        .iter()
        .map(|c| read_column(raw, c))
        .collect::<Result<Vec<_>, _>>()?;
    let treatment = read_binary(raw, &schema.treatment, DataError::NonBinaryTreatment)?;
    let post_treatment = read_binary(raw, &schema.post_treatment, DataError::NonBinaryPostTreatment)?;
    let mediators = schema
        .mediators
        .iter()
        .map(|c| read_column(raw, c))
        .collect::<Result<Vec<_>, _>>()?;
    let ycol = column_index(raw, &schema.outcome)?;
    let (lo, hi) = schema.outcome_range;
    let mut outcome = Vec::with_capacity(raw.rows.len());
    for row in 0..raw.rows.len() {
        let y = parse_real(raw, ycol, row)?;
        if y < lo || y > hi {
            return Err(DataError::OutOfRangeOutcome(row));
        }
        outcome.push(y);
    }
    let weights = match &schema.weight {
        None => WeightVector::unit(raw.rows.len()),
        Some(name) => {
            let col = column_index(raw, name)?;
            let mut w = Vec::with_capacity(raw.rows.len());
            for row in 0..raw.rows.len() {
                let v = match parse_real(raw, col, row) {
                    Ok(v) => v,
                    Err(DataError::NonNumeric { .. }) => return Err(DataError::NegativeWeight(row)),
                    Err(e) => return Err(e),
                };
                if v < 0.0 {
                    return Err(DataError::NegativeWeight(row));
                }
                w.push(v);
            }
            normalize_weights(&WeightVector::new(w)?)?
        }
    };
    Ok(Dataset {
        schema: schema.clone(),
        covariates,
        treatment,
        post_treatment,
        mediators,
        outcome,
        weights,
    })
}

impl Dataset {
    /// Assembles a dataset from numeric columns (all covariates and
    /// mediators real-valued), validating it like [`validate_dataset`].
    pub fn from_numeric(
        schema: ColumnSchema,
        covariates: Vec<Vec<f64>>,
        treatment: Vec<u8>,
        post_treatment: Vec<u8>,
        mediators: Vec<Vec<f64>>,
        outcome: Vec<f64>,
        weights: Option<Vec<f64>>,
    ) -> Result<Dataset, DataError> {
        schema.check()?;
        let n = treatment.len();
        if n == 0 {
            return Err(DataError::Empty);
        }
        if covariates.len() != schema.covariates.len() || mediators.len() != schema.mediators.len() {
            return Err(DataError::InvalidSchema("column count does not match schema".into()));
        }
        let wrap = |specs: &[ColumnSpec], cols: Vec<Vec<f64>>| -> Result<Vec<Column>, DataError> {
            specs
                .iter()
                .zip(cols)
                .map(|(s, c)| {
                    if s.kind != ColumnKind::Real {
                        return Err(DataError::InvalidSchema(format!("`{}` must be real", s.name)));
                    }
                    if c.len() != n {
                        return Err(DataError::InvalidSchema(format!("`{}` has wrong length", s.name)));
                    }
                    if let Some(row) = c.iter().position(|v| !v.is_finite()) {
                        return Err(DataError::MissingValue {
                            row,
                            column: s.name.clone(),
                        });
                    }
                    Ok(Column {
                        name: s.name.clone(),
                        data: ColumnData::Real(c),
                    })
                })
                .collect()
        };
        let covariates = wrap(&schema.covariates, covariates)?;
        let mediators = wrap(&schema.mediators, mediators)?;
        if let Some(row) = treatment.iter().position(|&a| a > 1) {
            return Err(DataError::NonBinaryTreatment(row));
        }
        if let Some(row) = post_treatment.iter().position(|&z| z > 1) {
            return Err(DataError::NonBinaryPostTreatment(row));
        }
        if post_treatment.len() != n || outcome.len() != n {
            return Err(DataError::InvalidSchema("column lengths differ".into()));
        }
        let (lo, hi) = schema.outcome_range;
        if let Some(row) = outcome.iter().position(|y| !(*y >= lo && *y <= hi)) {
            return Err(DataError::OutOfRangeOutcome(row));
        }
        let weights = match weights {
            None => WeightVector::unit(n),
            Some(w) => {
                if w.len() != n {
                    return Err(DataError::InvalidSchema("weight length differs".into()));
                }
                normalize_weights(&WeightVector::new(w)?)?
            }
        };
        Ok(Dataset {
            schema,
            covariates,
            treatment,
            post_treatment,
            mediators,
            outcome,
            weights,
        })
    }

    pub fn n(&self) -> usize {
        self.treatment.len()
    }

    pub fn schema(&self) -> &ColumnSchema {
        &self.schema
    }

    pub fn treatment(&self) -> &[u8] {
        &self.treatment
    }

    pub fn post_treatment(&self) -> &[u8] {
        &self.post_treatment
    }

    pub fn outcome(&self) -> &[f64] {
        &self.outcome
    }

    /// Mean-one weights.
    pub fn weights(&self) -> &[f64] {
        self.weights.values()
    }

    pub fn covariates(&self) -> &[Column] {
        &self.covariates
    }

    pub fn mediators(&self) -> &[Column] {
        &self.mediators
    }

    pub fn covariate(&self, name: &str) -> Option<&Column> {
        self.covariates.iter().find(|c| c.name == name)
    }

    /// Outcome mapped to `[0, 1]` by the declared range.
    pub fn scaled_outcome(&self) -> Vec<f64> {
        let (lo, hi) = self.schema.outcome_range;
        self.outcome.iter().map(|y| (y - lo) / (hi - lo)).collect()
    }

    fn rule_columns(&self) -> Vec<&Column> {
        self.schema
            .rule_covariates
            .iter()
            .filter_map(|v| self.covariate(v))
            .collect()
    }

    /// Raw values of the rule covariates for one row (level codes for
    /// categorical columns).
    pub fn rule_profile(&self, row: usize) -> Vec<f64> {
        self.rule_columns().iter().map(|c| c.numeric(row)).collect()
    }

    /// Builds a design matrix for `rows` with the roles laid out in order.
    /// Categorical columns expand to indicators for every level but the
    /// first.
    pub fn design(&self, roles: &[Role], rows: &[usize], setting: Setting) -> Matrix {
        let rule_cols = self.rule_columns();
        let mut names = Vec::new();
        for role in roles {
            match role {
                Role::Treatment => names.push(self.schema.treatment.clone()),
                Role::PostTreatment => names.push(self.schema.post_treatment.clone()),
                Role::Mediators => self.mediators.iter().for_each(|c| c.feature_names(&mut names)),
                Role::Covariates => self.covariates.iter().for_each(|c| c.feature_names(&mut names)),
                Role::RuleCovariates => rule_cols.iter().for_each(|c| c.feature_names(&mut names)),
            }
        }
        let width: usize = names.len();
        debug_assert_eq!(
            width,
            roles
                .iter()
                .map(|r| match r {
                    Role::Treatment | Role::PostTreatment => 1,
                    Role::Mediators => self.mediators.iter().map(Column::width).sum(),
                    Role::Covariates => self.covariates.iter().map(Column::width).sum(),
                    Role::RuleCovariates => rule_cols.iter().map(|c| c.width()).sum(),
                })
                .sum::<usize>()
        );
        let mut data = Vec::with_capacity(rows.len() * width);
        for &i in rows {
            for role in roles {
                match role {
                    Role::Treatment => {
                        data.push(setting.treatment.unwrap_or(self.treatment[i]) as f64)
                    }
                    Role::PostTreatment => data.push(
                        setting.post_treatment.unwrap_or(self.post_treatment[i]) as f64,
                    ),
                    Role::Mediators => self.mediators.iter().for_each(|c| c.push_features(i, &mut data)),
                    Role::Covariates => self.covariates.iter().for_each(|c| c.push_features(i, &mut data)),
                    Role::RuleCovariates => rule_cols.iter().for_each(|c| c.push_features(i, &mut data)),
                }
            }
        }
        Matrix::new(rows.len(), names, data)
    }

    /// Renders the dataset back into a raw table (schema column order,
    /// shortest round-trip float formatting).
    pub fn to_raw_table(&self) -> RawTable {
        let mut header = Vec::new();
        header.extend(self.covariates.iter().map(|c| c.name.clone()));
        header.push(self.schema.treatment.clone());
        header.push(self.schema.post_treatment.clone());
        header.extend(self.mediators.iter().map(|c| c.name.clone()));
        header.push(self.schema.outcome.clone());
        if let Some(w) = &self.schema.weight {
            header.push(w.clone());
        }
        let rows = (0..self.n())
            .map(|i| {
                let mut r = Vec::with_capacity(header.len());
                r.extend(self.covariates.iter().map(|c| c.render(i)));
                r.push(self.treatment[i].to_string());
                r.push(self.post_treatment[i].to_string());
                r.extend(self.mediators.iter().map(|c| c.render(i)));
                r.push(format!("{}", self.outcome[i]));
                if self.schema.weight.is_some() {
                    r.push(format!("{}", self.weights.values()[i]));
                }
                r
            })
            .collect();
        RawTable { header, rows }
    }

    pub fn summary(&self) -> DatasetSummary {
        let mut columns = Vec::new();
        let range = |v: &mut dyn Iterator<Item = f64>| {
            v.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
        };
        let push_col = |columns: &mut Vec<ColumnSummary>, c: &Column, role: &str| {
            let (kind, (min, max)) = match &c.data {
                ColumnData::Real(v) => ("real".to_string(), range(&mut v.iter().copied())),
                ColumnData::Categorical { levels, codes } => (
                    format!("categorical({})", levels.len()),
                    range(&mut codes.iter().map(|&k| k as f64)),
                ),
            };
            columns.push(ColumnSummary {
                name: c.name.clone(),
                role: role.to_string(),
                kind,
                min,
                max,
            });
        };
        for c in &self.covariates {
            let role = if self.schema.rule_covariates.contains(&c.name) {
                "rule_covariate"
            } else {
                "covariate"
            };
            push_col(&mut columns, c, role);
        }
        let bin = |name: &str, role: &str, v: &[u8]| {
            let (min, max) = range(&mut v.iter().map(|&x| x as f64));
            ColumnSummary {
                name: name.to_string(),
                role: role.to_string(),
                kind: "binary".to_string(),
                min,
                max,
            }
        };
        columns.push(bin(&self.schema.treatment, "treatment", &self.treatment));
        columns.push(bin(&self.schema.post_treatment, "post_treatment", &self.post_treatment));
        for c in &self.mediators {
            push_col(&mut columns, c, "mediator");
        }
        let (min, max) = range(&mut self.outcome.iter().copied());
        columns.push(ColumnSummary {
            name: self.schema.outcome.clone(),
            role: "outcome".to_string(),
            kind: "real".to_string(),
            min,
            max,
        });
        DatasetSummary {
            n: self.n(),
            weighted: self.schema.weight.is_some(),
            treated: self.treatment.iter().filter(|&&a| a == 1).count(),
            columns,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn schema() -> ColumnSchema {
        ColumnSchema {
            covariates: vec![ColumnSpec::real("w"), ColumnSpec::categorical("site", &["a", "b", "c"])],
            rule_covariates: vec!["w".into()],
            treatment: "a".into(),
            post_treatment: "z".into(),
            mediators: vec![ColumnSpec::real("m")],
            outcome: "y".into(),
            outcome_range: (0.0, 1.0),
            weight: None,
        }
    }

    fn table(rows: &[[&str; 6]]) -> RawTable {
        RawTable {
            header: ["w", "site", "a", "z", "m", "y"].iter().map(|s| s.to_string()).collect(),
            rows: rows.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect(),
        }
    }

    #[test]
    fn well_formed_table_validates() {
        let t = table(&[
            ["0", "a", "0", "0", "1", "0"],
            ["1", "b", "1", "1", "0", "1"],
            ["0", "c", "1", "0", "1", "1"],
            ["1", "a", "0", "1", "0", "0"],
        ]);
        let ds = validate_dataset(&t, &schema()).unwrap();
        assert_eq!(ds.n(), 4);
        assert_eq!(ds.summary().treated, 2);
        let x = ds.design(&[Role::Treatment, Role::Covariates], &[0, 1, 2], Setting::default());
        assert_eq!(x.names(), &["a", "w", "site=b", "site=c"]);
        assert_eq!(x.row(1), &[1.0, 1.0, 1.0, 0.0]);
        assert_eq!(x.row(2), &[1.0, 0.0, 0.0, 1.0]);
        let x = ds.design(&[Role::Treatment], &[0], Setting::treatment(1));
        assert_eq!(x.row(0), &[1.0]);
    }

    #[test]
    fn non_binary_treatment_is_rejected() {
        let t = table(&[["0", "a", "2", "0", "1", "0"], ["1", "b", "1", "1", "0", "1"]]);
        assert_eq!(validate_dataset(&t, &schema()), Err(DataError::NonBinaryTreatment(0)));
    }

    #[test]
    fn value_errors_name_the_cell() {
        let t = table(&[["0", "a", "0", "0", "", "0"]]);
        assert_eq!(
            validate_dataset(&t, &schema()),
            Err(DataError::MissingValue {
                row: 0,
                column: "m".into()
            })
        );
        let t = table(&[["0", "a", "0", "0", "1", "1.5"]]);
        assert_eq!(validate_dataset(&t, &schema()), Err(DataError::OutOfRangeOutcome(0)));
        let t = table(&[["0", "zz", "0", "0", "1", "1"]]);
        assert!(matches!(
            validate_dataset(&t, &schema()),
            Err(DataError::UnknownLevel { row: 0, .. })
        ));
        let mut s = schema();
        s.mediators.push(ColumnSpec::real("m2"));
        let t = table(&[["0", "a", "0", "0", "1", "1"]]);
        assert_eq!(validate_dataset(&t, &s), Err(DataError::MissingColumn("m2".into())));
    }

    #[test]
    fn schema_rejects_bad_roles() {
        let mut s = schema();
        s.rule_covariates = vec!["m".into()];
        assert!(matches!(s.check(), Err(DataError::InvalidSchema(_))));
        let mut s = schema();
        s.outcome = "a".into();
        assert!(matches!(s.check(), Err(DataError::InvalidSchema(_))));
    }

    #[test]
    fn weight_column_is_normalized() {
        let mut s = schema();
        s.weight = Some("wt".into());
        let mut t = table(&[
            ["0", "a", "0", "0", "1", "0"],
            ["1", "b", "1", "1", "0", "1"],
            ["0", "c", "1", "0", "1", "1"],
            ["1", "a", "0", "1", "0", "0"],
        ]);
        t.header.push("wt".into());
        for (r, w) in t.rows.iter_mut().zip(["2", "2", "0", "0"]) {
            r.push(w.into());
        }
        let ds = validate_dataset(&t, &s).unwrap();
        // mean of {2,2,0,0} is already 1
        assert_eq!(ds.weights(), &[2.0, 2.0, 0.0, 0.0]);
        t.rows[0][6] = "-1".into();
        assert_eq!(validate_dataset(&t, &s), Err(DataError::NegativeWeight(0)));
    }

    #[test]
    fn normalize_examples() {
        let w = normalize_weights(&WeightVector::new(vec![1.0, 1.0, 1.0]).unwrap()).unwrap();
        assert_eq!(w.values(), &[1.0, 1.0, 1.0]);
        let w = normalize_weights(&WeightVector::new(vec![2.0, 4.0]).unwrap()).unwrap();
        assert!((w.values()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((w.values()[1] - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(
            normalize_weights(&WeightVector::new(vec![0.0, 0.0]).unwrap()),
            Err(DataError::AllZeroWeights)
        );
    }

    #[test]
    fn validation_is_idempotent() {
        let t = table(&[
            ["0.125", "a", "0", "0", "0.3", "0"],
            ["1e-3", "b", "1", "1", "0", "1"],
            ["0.1", "c", "1", "0", "1", "0.7"],
        ]);
        let ds = validate_dataset(&t, &schema()).unwrap();
        let again = validate_dataset(&ds.to_raw_table(), &schema()).unwrap();
        assert_eq!(ds, again);
    }
}
