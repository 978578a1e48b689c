//! Variationless path: the linear DE as a dense system `D f = g` on the
//! latent coefficients, solved by least squares.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::encoding::Encoding;
use crate::error::{Error, Result};
use crate::mixture::MixtureState;
use crate::model::{MultiplierBackend, Solution, TermContext};
use crate::problem::ProblemSpec;

/// Where a row of the system came from.
#[derive(Debug, Clone, PartialEq)]
pub enum RowLabel {
    /// Row `index` of the DE operator block.
    Operator(usize),
    /// Point constraint `f(point) = value`.
    Constraint { point: Vec<f64>, value: f64 },
}

#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub encodings: Vec<Encoding>,
    pub d: DMatrix<Complex64>,
    pub g: DVector<Complex64>,
    pub labels: Vec<RowLabel>,
}

#[derive(Debug, Clone)]
pub struct LseSolution {
    pub coefficients: Vec<Complex64>,
    /// `||D f - g||`.
    pub residual: f64,
    /// Set when `D` has a nontrivial null space and the minimum-norm
    /// minimizer was returned.
    pub rank_deficient: bool,
    pub rank: usize,
}

impl LseSolution {
    pub fn solution(&self, encodings: &[Encoding]) -> Result<Solution> {
        Solution::from_coefficients(encodings.to_vec(), self.coefficients.clone())
    }
}

fn basis_mixture(n: usize, i: usize) -> Result<MixtureState> {
    let mut v = vec![Complex64::new(0.0, 0.0); 1 << n];
    v[i] = Complex64::new(1.0, 0.0);
    MixtureState::from_vector(v, "basis")
}

/// DE operator block and right-hand side of a linear problem, without
/// constraint rows. Each model term contributes its latent operator applied
/// to the basis vectors; sources move to the right-hand side with flipped
/// sign.
pub fn assemble_operator(problem: &ProblemSpec) -> Result<LinearSystem> {
    if !problem.is_linear() {
        return Err(Error::Unsupported("nonlinear problem unsupported in lse mode".into()));
    }
    let encodings = problem.encodings()?;
    let ctx = TermContext::new(&encodings, &problem.terms, MultiplierBackend::Oracle)?;
    let n = problem.num_qubits();
    let cols = 1usize << n;
    let rows = 1usize << ctx.working_encodings().iter().map(|e| e.num_qubits()).sum::<usize>();
    let mut d = DMatrix::zeros(rows, cols);
    let mut g = DVector::zeros(rows);
    let empty = MixtureState::new(n);
    for (k, spec) in problem.terms.iter().enumerate() {
        if spec.power == 0 {
            let v = ctx.build_term(k, &empty)?.state.to_vector();
            for (r, a) in v.iter().enumerate() {
                g[r] -= a;
            }
            continue;
        }
        for i in 0..cols {
            let col = ctx.build_term(k, &basis_mixture(n, i)?)?.state.to_vector();
            for (r, a) in col.iter().enumerate() {
                d[(r, i)] += a;
            }
        }
    }
    Ok(LinearSystem { encodings, d, g, labels: (0..rows).map(RowLabel::Operator).collect() })
}

/// Operator block plus one weighted row per initial, boundary and data
/// condition, each weighted by the problem's constraint weight.
pub fn assemble_lse(problem: &ProblemSpec) -> Result<LinearSystem> {
    let mut sys = assemble_operator(problem)?;
    let w = problem.lse.constraint_weight;
    let conditions = problem.initial.iter().cloned().chain(problem.boundary_points()).chain(problem.data.iter().cloned());
    for c in conditions {
        sys = append_initial_row(sys, &c.point, c.value, w)?;
    }
    Ok(sys)
}

/// Bra of the encoding at `point` with prefactors, so that `row . f = f(point)`.
pub fn evaluation_row(encodings: &[Encoding], point: &[f64]) -> Result<Vec<Complex64>> {
    if point.len() != encodings.len() {
        return Err(Error::Usage(format!("point has {} coordinates, expected {}", point.len(), encodings.len())));
    }
    let mut row = vec![Complex64::new(1.0, 0.0)];
    for (e, x) in encodings.iter().zip(point) {
        let v = e.amplitudes(*x);
        row = row.iter().flat_map(|a| v.iter().map(move |b| a * b.conj())).collect();
    }
    Ok(row)
}

/// Appends `weight * <x0|` to `D` and `weight * f0` to `g`.
pub fn append_initial_row(sys: LinearSystem, point: &[f64], value: f64, weight: f64) -> Result<LinearSystem> {
    let row = evaluation_row(&sys.encodings, point)?;
    let LinearSystem { encodings, d, g, mut labels } = sys;
    let r = d.nrows();
    let mut d = d.insert_row(r, Complex64::new(0.0, 0.0));
    for (j, a) in row.iter().enumerate() {
        d[(r, j)] = a * weight;
    }
    let g = g.insert_row(r, Complex64::new(value * weight, 0.0));
    labels.push(RowLabel::Constraint { point: point.to_vec(), value });
    Ok(LinearSystem { encodings, d, g, labels })
}

/// Minimum-norm least-squares solution via SVD.
pub fn solve_lse(sys: &LinearSystem) -> Result<LseSolution> {
    let svd = sys.d.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let tol = smax * 1e-12 * sys.d.nrows().max(sys.d.ncols()) as f64;
    let rank = svd.rank(tol);
    let x = svd.solve(&sys.g, tol).map_err(|e| Error::NonFinite(e.to_string()))?;
    if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("LSE solution is not finite".into()));
    }
    let residual = (&sys.d * &x - &sys.g).norm();
    Ok(LseSolution { coefficients: x.iter().cloned().collect(), residual, rank_deficient: rank < sys.d.ncols(), rank })
}

/// Assembles and solves `problem`.
pub fn solve_problem(problem: &ProblemSpec) -> Result<(LseSolution, Solution)> {
    let sys = assemble_lse(problem)?;
    let sol = solve_lse(&sys)?;
    let decoded = sol.solution(&sys.encodings)?;
    Ok((sol, decoded))
}
