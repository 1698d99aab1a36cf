//! CSV and JSON reading and writing.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use medrule_core::crossfit::CrossFitPlan;
use medrule_core::effects::EffectEstimate;
use medrule_core::eif::{ArmContrast, PseudoOutcomes};
use medrule_core::model::RawTable;
use medrule_core::subgroup::SubgroupAssignment;
use serde::Serialize;

use crate::CliError;

/// Reads a headed CSV file into a raw string table.
pub fn read_table(path: &Path) -> Result<RawTable, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    read_table_from(file).map_err(|e| CliError::Csv(path.display().to_string(), e))
}

pub fn read_table_from(r: impl std::io::Read) -> Result<RawTable, csv::Error> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let header = rdr.headers()?.iter().map(str::to_owned).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        rows.push(rec?.iter().map(str::to_owned).collect());
    }
    Ok(RawTable { header, rows })
}

pub fn write_table(path: &Path, table: &RawTable) -> Result<(), CliError> {
    let mut rows = vec![table.header.clone()];
    rows.extend(table.rows.iter().cloned());
    write_rows(path, rows)
}

fn write_rows(path: &Path, rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let tag = |e| CliError::Csv(path.display().to_string(), e);
    for r in rows {
        w.write_record(&r).map_err(tag)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Json(path.display().to_string(), e))?;
    w.write_all(b"\n").map_err(|e| CliError::io(path, e))?;
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Json(path.display().to_string(), e))
}

fn num(x: f64) -> String {
    x.to_string()
}

pub fn write_folds(path: &Path, plan: &CrossFitPlan) -> Result<(), CliError> {
    let header = vec!["row".to_owned(), "fold".to_owned()];
    let rows = plan.assignment().iter().enumerate().map(|(i, j)| vec![i.to_string(), j.to_string()]);
    write_rows(path, std::iter::once(header).chain(rows))
}

/// Columns: row, fold, one per arm (`d11`, `d10`, `d00`), and `d` (the
/// blip transformation) when both of its arms are present.
pub fn write_pseudo_outcomes(path: &Path, p: &PseudoOutcomes) -> Result<(), CliError> {
    let contrast = p.contrast().ok();
    let mut header = vec!["row".to_owned(), "fold".to_owned()];
    header.extend(arm_names(&p.arms));
    if contrast.is_some() {
        header.push("d".to_owned());
    }
    let rows = (0..p.n()).map(|i| {
        let mut r = vec![i.to_string(), p.folds[i].to_string()];
        r.extend(p.values.iter().map(|col| num(col[i])));
        if let Some(c) = &contrast {
            r.push(num(c[i]));
        }
        r
    });
    write_rows(path, std::iter::once(header).chain(rows))
}

fn arm_names(arms: &[ArmContrast]) -> Vec<String> {
    arms.iter().map(|a| format!("d{}{}", a.a_prime, a.a_star)).collect()
}

pub fn write_subgroups(path: &Path, s: &SubgroupAssignment) -> Result<(), CliError> {
    let header = ["row", "blip", "harm", "rule", "method"].map(str::to_owned).to_vec();
    let method = s.method.label();
    let rule = s.rule();
    let rows = (0..s.n()).map(|i| {
        vec![
            i.to_string(),
            num(s.blip[i]),
            u8::from(s.harm[i]).to_string(),
            rule[i].to_string(),
            method.to_owned(),
        ]
    });
    write_rows(path, std::iter::once(header).chain(rows))
}

pub fn write_effects_csv(path: &Path, effects: &[EffectEstimate]) -> Result<(), CliError> {
    let header = ["contrast", "rule", "arms", "estimate", "se", "ci_low", "ci_high", "n", "folds"]
        .map(str::to_owned)
        .to_vec();
    let rows = effects.iter().map(|e| {
        vec![
            e.contrast.label().to_owned(),
            e.rule.clone(),
            e.arms.clone(),
            num(e.estimate),
            num(e.se),
            num(e.ci_low),
            num(e.ci_high),
            e.n.to_string(),
            e.folds.to_string(),
        ]
    });
    write_rows(path, std::iter::once(header).chain(rows))
}
