//! CSV artifacts of a run.

use std::path::Path;

use qlatent::problem::ProblemSpec;
use qlatent::training::grid;

use crate::error::{CliError, Result};
use crate::plot;
use crate::run::RunOutcome;

pub const LOSS_HEADER: [&str; 5] = ["epoch", "l_de", "l_init", "l_bc", "total"];
pub const SUMMARY_HEADER: [&str; 6] = ["rmse", "max_abs_error", "final_loss", "epochs_used", "seed", "wall_clock_secs"];
pub const GRID_POINTS: usize = 101;

/// Scientific notation with 15 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.14e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Coordinate column names: `x`, `y` for up to two dimensions, `x0, x1, ...` beyond.
pub fn coordinate_names(dims: usize) -> Vec<String> {
    match dims {
        1 => vec!["x".into()],
        2 => vec!["x".into(), "y".into()],
        _ => (0..dims).map(|d| format!("x{d}")).collect(),
    }
}

pub fn solution_header(dims: usize) -> Vec<String> {
    let mut h = coordinate_names(dims);
    h.extend(["f_model", "f_truth", "df_model", "df_truth", "abs_error"].map(String::from));
    h
}

/// One row of the solution table.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionRow {
    pub point: Vec<f64>,
    pub f_model: f64,
    pub f_truth: Option<f64>,
    pub df_model: f64,
    pub df_truth: Option<f64>,
}

impl SolutionRow {
    pub fn abs_error(&self) -> Option<f64> {
        self.f_truth.map(|t| (self.f_model - t).abs())
    }
}

/// Model and reference on the evaluation grid; derivatives along the last dimension.
pub fn solution_rows(problem: &ProblemSpec, outcome: &RunOutcome) -> Result<Vec<SolutionRow>> {
    let dims = problem.dimensions.len();
    let dsol = outcome.solution.derivative_solution(dims - 1)?;
    let mut rows = Vec::new();
    for p in grid(&problem.plot_domain()?, GRID_POINTS) {
        rows.push(SolutionRow {
            f_model: outcome.solution.eval(&p)?.re,
            f_truth: problem.analytic.as_ref().map(|t| t.eval(&p)),
            df_model: dsol.eval(&p)?.re,
            df_truth: problem.analytic.as_ref().map(|t| t.derivative(&p, dims - 1)),
            point: p,
        });
    }
    Ok(rows)
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(CliError::csv(path))
}

fn finish(mut w: csv::Writer<std::fs::File>, path: &Path) -> Result<()> {
    w.flush().map_err(CliError::io(path))
}

pub fn write_loss_history(path: &Path, outcome: &RunOutcome) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(LOSS_HEADER).map_err(CliError::csv(path))?;
    for l in &outcome.history {
        let rec = [l.epoch.to_string(), fmt_f64(l.l_de), fmt_f64(l.l_init), fmt_f64(l.l_bc), fmt_f64(l.total)];
        w.write_record(&rec).map_err(CliError::csv(path))?;
    }
    finish(w, path)
}

pub fn write_solution(path: &Path, dims: usize, rows: &[SolutionRow]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(solution_header(dims)).map_err(CliError::csv(path))?;
    for r in rows {
        let mut rec: Vec<String> = r.point.iter().map(|&x| fmt_f64(x)).collect();
        rec.extend([fmt_f64(r.f_model), opt(r.f_truth), fmt_f64(r.df_model), opt(r.df_truth), opt(r.abs_error())]);
        w.write_record(&rec).map_err(CliError::csv(path))?;
    }
    finish(w, path)
}

/// RMSE and max abs error over rows with a reference value.
pub fn error_stats(rows: &[SolutionRow]) -> Option<(f64, f64)> {
    let errs: Vec<f64> = rows.iter().filter_map(SolutionRow::abs_error).collect();
    if errs.is_empty() {
        return None;
    }
    let rmse = (errs.iter().map(|e| e * e).sum::<f64>() / errs.len() as f64).sqrt();
    Some((rmse, errs.iter().cloned().fold(0.0, f64::max)))
}

pub fn write_summary(path: &Path, outcome: &RunOutcome, rows: &[SolutionRow]) -> Result<()> {
    let stats = error_stats(rows);
    let mut w = writer(path)?;
    w.write_record(SUMMARY_HEADER).map_err(CliError::csv(path))?;
    let rec = [
        opt(stats.map(|s| s.0)),
        opt(stats.map(|s| s.1)),
        fmt_f64(outcome.final_loss),
        outcome.epochs_used.to_string(),
        outcome.seed.to_string(),
        fmt_f64(outcome.wall_clock_secs),
    ];
    w.write_record(&rec).map_err(CliError::csv(path))?;
    finish(w, path)
}

/// Writes every artifact of `outcome` into `dir` (created if missing).
pub fn write_all(dir: &Path, problem: &ProblemSpec, outcome: &RunOutcome) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    let rows = solution_rows(problem, outcome)?;
    write_loss_history(&dir.join("loss_history.csv"), outcome)?;
    write_solution(&dir.join("solution.csv"), problem.dimensions.len(), &rows)?;
    write_summary(&dir.join("summary.csv"), outcome, &rows)?;
    let svg = plot::render(problem, &rows, &outcome.history);
    let path = dir.join("plot.svg");
    std::fs::write(&path, svg).map_err(CliError::io(&path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_keeps_precision() {
        let s = fmt_f64(std::f64::consts::PI);
        assert_eq!(s, "3.14159265358979e0");
        assert_eq!(s.parse::<f64>().unwrap(), 3.14159265358979);
        assert_eq!(fmt_f64(-1.0e-20), "-1.00000000000000e-20");
    }

    #[test]
    fn headers() {
        assert_eq!(solution_header(1).join(","), "x,f_model,f_truth,df_model,df_truth,abs_error");
        assert_eq!(solution_header(2)[..2], ["x".to_string(), "y".to_string()]);
    }

    #[test]
    fn stats_of_perfect_solution() {
        let row = |x: f64| SolutionRow { point: vec![x], f_model: x, f_truth: Some(x), df_model: 1.0, df_truth: Some(1.0) };
        assert_eq!(error_stats(&[row(0.0), row(0.5)]), Some((0.0, 0.0)));
        let mut off = row(0.0);
        off.f_truth = None;
        assert_eq!(error_stats(&[off]), None);
    }
}
