//! Minimal SVG line charts: solution vs reference and the loss curve.

use std::fmt::Write;

use qlatent::problem::ProblemSpec;
use qlatent::training::LossBreakdown;

use crate::artifacts::{SolutionRow, GRID_POINTS};

const W: f64 = 420.0;
const H: f64 = 300.0;
const PAD: f64 = 40.0;

struct Series<'a> {
    points: Vec<(f64, f64)>,
    color: &'a str,
    dashed: bool,
}

fn bounds(series: &[Series]) -> Option<(f64, f64, f64, f64)> {
    let mut it = series.iter().flat_map(|s| s.points.iter()).filter(|(x, y)| x.is_finite() && y.is_finite());
    let &(x0, y0) = it.next()?;
    let (mut a, mut b, mut c, mut d) = (x0, x0, y0, y0);
    for &(x, y) in it {
        a = a.min(x);
        b = b.max(x);
        c = c.min(y);
        d = d.max(y);
    }
    if b - a < 1e-12 {
        b = a + 1.0;
    }
    if d - c < 1e-12 {
        c -= 0.5;
        d += 0.5;
    }
    Some((a, b, c, d))
}

fn panel(out: &mut String, offset: f64, title: &str, series: &[Series]) {
    let _ = write!(
        out,
        r#"<g transform="translate({offset},0)"><rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/><text x="{}" y="{}" text-anchor="middle" font-size="14">{title}</text>"#,
        W - 2.0 * PAD,
        H - 2.0 * PAD,
        W / 2.0,
        PAD - 10.0
    );
    if let Some((x0, x1, y0, y1)) = bounds(series) {
        let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
        let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
        for s in series {
            let pts: Vec<String> = s
                .points
                .iter()
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let dash = if s.dashed { r#" stroke-dasharray="6,4""# } else { "" };
            let _ = write!(out, r#"<polyline fill="none" stroke="{}" stroke-width="1.5"{dash} points="{}"/>"#, s.color, pts.join(" "));
        }
        let _ = write!(
            out,
            r#"<text x="{PAD}" y="{}" font-size="11">{x0:.3}</text><text x="{}" y="{}" font-size="11" text-anchor="end">{x1:.3}</text><text x="{}" y="{}" font-size="11" text-anchor="end">{y0:.3}</text><text x="{}" y="{}" font-size="11" text-anchor="end">{y1:.3}</text>"#,
            H - PAD + 15.0,
            W - PAD,
            H - PAD + 15.0,
            PAD - 3.0,
            H - PAD,
            PAD - 3.0,
            PAD + 10.0
        );
    }
    out.push_str("</g>");
}

/// Rows along the last dimension with the leading coordinates at the grid midpoint.
fn slice(rows: &[SolutionRow], dims: usize) -> Vec<&SolutionRow> {
    if dims == 1 {
        return rows.iter().collect();
    }
    let mid = GRID_POINTS / 2;
    let start: usize = (1..dims).map(|k| mid * GRID_POINTS.pow(k as u32)).sum();
    rows.iter().skip(start).take(GRID_POINTS).collect()
}

pub fn render(problem: &ProblemSpec, rows: &[SolutionRow], history: &[LossBreakdown]) -> String {
    let dims = problem.dimensions.len();
    let s = slice(rows, dims);
    let last = |r: &SolutionRow| r.point[dims - 1];
    let mut solution = vec![Series { points: s.iter().map(|r| (last(r), r.f_model)).collect(), color: "#1f77b4", dashed: true }];
    if problem.analytic.is_some() {
        solution.insert(
            0,
            Series { points: s.iter().filter_map(|r| r.f_truth.map(|t| (last(r), t))).collect(), color: "black", dashed: false },
        );
    }
    let loss = vec![Series {
        points: history.iter().filter(|l| l.total > 0.0).map(|l| (l.epoch as f64, l.total.log10())).collect(),
        color: "#d62728",
        dashed: false,
    }];
    let mut out = format!(
        r#"<?xml version="1.0" encoding="UTF-8"?><svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{H}">"#,
        2.0 * W
    );
    panel(&mut out, 0.0, &format!("{}: model (dashed) vs reference", problem.name), &solution);
    panel(&mut out, W, "log10 total loss vs epoch", &loss);
    out.push_str("</svg>\n");
    out
}
