//! Console summary of a run directory.

use std::fmt::Write;
use std::path::Path;

use crate::artifacts::SUMMARY_HEADER;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    /// Summary fields in header order; `None` for empty cells.
    pub summary: Vec<(String, Option<f64>)>,
    /// RMSE and max abs error recomputed from `solution.csv`.
    pub recomputed: Option<(f64, f64)>,
    /// `file:row:column` of every non-finite entry.
    pub non_finite: Vec<String>,
}

fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::Reader::from_path(path).map_err(CliError::csv(path))?;
    let header = r.headers().map_err(CliError::csv(path))?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec.map_err(CliError::csv(path))?.iter().map(String::from).collect());
    }
    Ok((header, rows))
}

fn parse_cell(cell: &str, at: String, flags: &mut Vec<String>) -> Result<Option<f64>> {
    if cell.is_empty() {
        return Ok(None);
    }
    let v: f64 = cell.parse().map_err(|_| CliError::Report(format!("{at}: not a number: {cell:?}")))?;
    if !v.is_finite() {
        flags.push(at);
    }
    Ok(Some(v))
}

pub fn load(dir: &Path) -> Result<Report> {
    let mut non_finite = Vec::new();
    let (header, rows) = read_table(&dir.join("summary.csv"))?;
    if header != SUMMARY_HEADER {
        return Err(CliError::Report(format!("summary.csv: unexpected header {header:?}")));
    }
    let row = rows.first().ok_or_else(|| CliError::Report("summary.csv: no data row".into()))?;
    let mut summary = Vec::new();
    for (name, cell) in header.iter().zip(row) {
        summary.push((name.clone(), parse_cell(cell, format!("summary.csv:1:{name}"), &mut non_finite)?));
    }

    let (header, rows) = read_table(&dir.join("solution.csv"))?;
    let col = header
        .iter()
        .position(|h| h == "abs_error")
        .ok_or_else(|| CliError::Report("solution.csv: missing abs_error column".into()))?;
    let mut errs = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        for (name, cell) in header.iter().zip(r) {
            parse_cell(cell, format!("solution.csv:{}:{name}", i + 1), &mut non_finite)?;
        }
        if let Some(e) = parse_cell(&r[col], String::new(), &mut Vec::new())? {
            errs.push(e);
        }
    }
    let recomputed = (!errs.is_empty()).then(|| {
        let rmse = (errs.iter().map(|e| e * e).sum::<f64>() / errs.len() as f64).sqrt();
        (rmse, errs.iter().cloned().fold(0.0, f64::max))
    });
    Ok(Report { summary, recomputed, non_finite })
}

impl Report {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.summary.iter().find(|(n, _)| n == name).and_then(|(_, v)| *v)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<18} {:>22}", "metric", "value");
        for (name, v) in &self.summary {
            let shown = match v {
                None => "-".to_string(),
                Some(v) if name == "epochs_used" || name == "seed" => format!("{v}"),
                Some(v) => format!("{v:.6e}"),
            };
            let _ = writeln!(out, "{name:<18} {shown:>22}");
        }
        if let Some((rmse, max)) = self.recomputed {
            let _ = writeln!(out, "{:<18} {:>22}", "rmse (grid)", format!("{rmse:.6e}"));
            let _ = writeln!(out, "{:<18} {:>22}", "max_abs (grid)", format!("{max:.6e}"));
        }
        for at in &self.non_finite {
            let _ = writeln!(out, "non-finite value at {at}");
        }
        out
    }
}
