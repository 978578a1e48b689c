//! Chebyshev and Fourier feature-map encodings.
//!
//! Every encoding exposes the *amplitude vector* `v(x)`: the encoding state with
//! its normalization prefactor multiplied back in, so that a latent coefficient
//! vector `c` decodes to the function `f(x) = sum_j conj(v_j(x)) c_j`.
//!
//! * Chebyshev, `N` qubits: `v_0 = 2^{-N/2} T_0(x)`, `v_k = 2^{-(N-1)/2} T_k(x)`.
//!   The normalized state is `v(x) / norm_N(x)`.
//! * Fourier, `N` qubits: `v_j = 2^{-N/2} exp(2 pi i j x / P)` with period
//!   `P = 2^N` for the base encoding. The product basis of an `N`-qubit
//!   Fourier encoding lives on `N + 1` qubits but keeps `P = 2^N`; that
//!   offset is tracked as the encoding's `extension`.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{Circuit, Gate, Statevector, MAX_QUBITS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Chebyshev,
    Fourier,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Family::Chebyshev => write!(f, "chebyshev"),
            Family::Fourier => write!(f, "fourier"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Encoding {
    family: Family,
    num_qubits: usize,
    extension: usize,
}

/// `T_k(x)`. Inside `[-1, 1]` this is `cos(k arccos x)`; outside it is the
/// hyperbolic continuation `sign(x)^k cosh(k arccosh |x|)`.
pub fn chebyshev_t(k: usize, x: f64) -> f64 {
    if x.abs() <= 1.0 {
        (k as f64 * x.acos()).cos()
    } else {
        let sign = if x < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 };
        sign * (k as f64 * x.abs().acosh()).cosh()
    }
}

/// `T_0(x) .. T_{count-1}(x)` by the three-term recurrence.
pub fn chebyshev_table(count: usize, x: f64) -> Vec<f64> {
    let mut t = Vec::with_capacity(count);
    for k in 0..count {
        let v = match k {
            0 => 1.0,
            1 => x,
            _ => 2.0 * x * t[k - 1] - t[k - 2],
        };
        t.push(v);
    }
    t
}

/// Roots of `T_{2^N}`, `x_j = cos((2j + 1) pi / 2^{N+1})`, decreasing in `j`.
pub fn chebyshev_nodes(num_qubits: usize) -> Vec<f64> {
    let m = 1usize << num_qubits;
    (0..m).map(|j| ((2 * j + 1) as f64 * PI / (2 * m) as f64).cos()).collect()
}

/// Normalization of the Chebyshev state; equals 1 at every node.
pub fn chebyshev_norm(num_qubits: usize, x: f64) -> f64 {
    let t = chebyshev_table(1 << num_qubits, x);
    let sum: f64 = 0.5 + t[1..].iter().map(|v| v * v).sum::<f64>();
    2f64.powf(-((num_qubits as f64) - 1.0) / 2.0) * sum.sqrt()
}

pub fn chebyshev_state(num_qubits: usize, x: f64) -> Result<Statevector> {
    Encoding::new(Family::Chebyshev, num_qubits)?.state(x)
}

/// Coefficients `w` with `T_n'(x) = sum_j w_j T_j(x)`, padded to `size`.
pub fn chebyshev_derivative_coeffs(degree: usize, size: usize) -> Vec<f64> {
    let mut w = vec![0.0; size.max(degree)];
    if degree == 0 {
        w.truncate(size);
        return w;
    }
    let half = degree / 2;
    if degree % 2 == 0 {
        for m in 1..=half {
            w[2 * m - 1] = 4.0 * half as f64;
        }
    } else {
        for m in 1..=half {
            w[2 * m] = (4 * half + 2) as f64;
        }
        w[0] = (2 * half + 1) as f64;
    }
    w.truncate(size);
    w
}

pub fn chebyshev_generator(num_qubits: usize) -> Result<DMatrix<Complex64>> {
    Ok(Encoding::new(Family::Chebyshev, num_qubits)?.generator())
}

pub fn chebyshev_transform(num_qubits: usize) -> Result<DMatrix<Complex64>> {
    Ok(Encoding::new(Family::Chebyshev, num_qubits)?.transform())
}

pub fn fourier_state(num_qubits: usize, x: f64) -> Result<Statevector> {
    Encoding::new(Family::Fourier, num_qubits)?.state(x)
}

pub fn fourier_generator(num_qubits: usize) -> Result<DMatrix<Complex64>> {
    Ok(Encoding::new(Family::Fourier, num_qubits)?.generator())
}

/// Encoding state of the product basis `|xx>` for an `N`-qubit encoding.
pub fn product_basis_state(encoding: &Encoding, x: f64) -> Result<Statevector> {
    encoding.product()?.state(x)
}

/// `c_0 = sqrt(2)`, `c_j = 1` otherwise.
pub(crate) fn c_factor(j: usize) -> f64 {
    if j == 0 {
        SQRT_2
    } else {
        1.0
    }
}

impl Encoding {
    pub fn new(family: Family, num_qubits: usize) -> Result<Self> {
        Self::with_extension(family, num_qubits, 0)
    }

    pub fn chebyshev(num_qubits: usize) -> Result<Self> {
        Self::new(Family::Chebyshev, num_qubits)
    }

    pub fn fourier(num_qubits: usize) -> Result<Self> {
        Self::new(Family::Fourier, num_qubits)
    }

    /// `extension` counts how many product-basis extensions separate this
    /// register from the base encoding. Only Fourier amplitudes depend on it.
    pub fn with_extension(family: Family, num_qubits: usize, extension: usize) -> Result<Self> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            return Err(Error::Config(format!(
                "encoding qubit count {num_qubits} outside 1..={MAX_QUBITS}"
            )));
        }
        if extension >= num_qubits {
            return Err(Error::Config("extension must leave at least one base qubit".into()));
        }
        let extension = if family == Family::Chebyshev { 0 } else { extension };
        Ok(Self { family, num_qubits, extension })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn extension(&self) -> usize {
        self.extension
    }

    pub fn dim(&self) -> usize {
        1 << self.num_qubits
    }

    /// Encoding of the product basis, one qubit wider.
    pub fn product(&self) -> Result<Self> {
        Self::with_extension(self.family, self.num_qubits + 1, self.extension + 1)
    }

    /// Fourier period `2^{N - extension}`.
    fn period(&self) -> f64 {
        (1u64 << (self.num_qubits - self.extension)) as f64
    }

    /// Natural variable domain: `[-1, 1]` (Chebyshev) or `[0, period)` (Fourier).
    pub fn domain(&self) -> (f64, f64) {
        match self.family {
            Family::Chebyshev => (-1.0, 1.0),
            Family::Fourier => (0.0, self.period()),
        }
    }

    /// Basis functions `tau_j(x)` without prefactors.
    pub fn basis_functions(&self, x: f64) -> Vec<Complex64> {
        match self.family {
            Family::Chebyshev => {
                chebyshev_table(self.dim(), x).into_iter().map(|t| Complex64::new(t, 0.0)).collect()
            }
            Family::Fourier => {
                let w = 2.0 * PI * x / self.period();
                (0..self.dim()).map(|j| Complex64::from_polar(1.0, w * j as f64)).collect()
            }
        }
    }

    /// Prefactor-included amplitude vector `v(x)`.
    pub fn amplitudes(&self, x: f64) -> Vec<Complex64> {
        let n = self.num_qubits as f64;
        match self.family {
            Family::Chebyshev => {
                let hi = 2f64.powf(-(n - 1.0) / 2.0);
                self.basis_functions(x)
                    .into_iter()
                    .enumerate()
                    .map(|(k, t)| t * (hi / c_factor(k)))
                    .collect()
            }
            Family::Fourier => {
                let pre = 2f64.powf(-n / 2.0);
                self.basis_functions(x).into_iter().map(|t| t * pre).collect()
            }
        }
    }

    /// `d v / dx`, analytically.
    pub fn amplitude_derivatives(&self, x: f64) -> Vec<Complex64> {
        let g = self.generator();
        let v = nalgebra::DVector::from_vec(self.amplitudes(x));
        (g * v).iter().copied().collect()
    }

    /// Normalization `norm_N(x)` (1 for Fourier).
    pub fn norm(&self, x: f64) -> f64 {
        match self.family {
            Family::Chebyshev => chebyshev_norm(self.num_qubits, x),
            Family::Fourier => 1.0,
        }
    }

    /// Normalized encoding state `|x>`.
    pub fn state(&self, x: f64) -> Result<Statevector> {
        let norm = self.norm(x);
        Statevector::from_amplitudes(self.amplitudes(x).into_iter().map(|a| a / norm).collect())
    }

    /// `sum_j conj(v_j(x)) c_j`.
    pub fn decode(&self, coeffs: &[Complex64], x: f64) -> Complex64 {
        self.amplitudes(x).iter().zip(coeffs).map(|(v, c)| v.conj() * c).sum()
    }

    /// Points at which the encoding states form an orthonormal basis.
    pub fn nodes(&self) -> Vec<f64> {
        match self.family {
            Family::Chebyshev => chebyshev_nodes(self.num_qubits),
            Family::Fourier => {
                let step = 1.0 / (1u64 << self.extension) as f64;
                (0..self.dim()).map(|j| j as f64 * step).collect()
            }
        }
    }

    /// Generator `G` with `d v(x)/dx = G v(x)`.
    ///
    /// Chebyshev: `G_{ij} = w^i_j c_j / c_i`; since `w^0 = 0` the `1/c_i`
    /// only matters on the all-zero row. Fourier: `diag(2 pi i j / period)`.
    pub fn generator(&self) -> DMatrix<Complex64> {
        let dim = self.dim();
        match self.family {
            Family::Chebyshev => {
                let mut g = DMatrix::zeros(dim, dim);
                for i in 0..dim {
                    let w = chebyshev_derivative_coeffs(i, dim);
                    for (j, wj) in w.iter().enumerate() {
                        if *wj != 0.0 {
                            g[(i, j)] = Complex64::new(wj * c_factor(j) / c_factor(i), 0.0);
                        }
                    }
                }
                g
            }
            Family::Fourier => {
                let scale = 2.0 * PI / self.period();
                DMatrix::from_fn(dim, dim, |i, j| {
                    if i == j {
                        Complex64::new(0.0, scale * i as f64)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
            }
        }
    }

    /// Unitary whose column `j` is `v(x_j)` at node `x_j`.
    pub fn transform(&self) -> DMatrix<Complex64> {
        let nodes = self.nodes();
        let dim = self.dim();
        let mut u = DMatrix::zeros(dim, dim);
        for (j, x) in nodes.iter().enumerate() {
            for (k, a) in self.amplitudes(*x).into_iter().enumerate() {
                u[(k, j)] = a;
            }
        }
        u
    }

    /// Phase feature map: Hadamards, then `diag(1, exp(i pi x 2^{q+1} / period))`
    /// on qubit `q` (0-based), i.e. `P_N(x, j)` with the 1-based `j = q + 1`.
    pub fn feature_map_circuit(&self, x: f64) -> Result<Circuit> {
        if self.family != Family::Fourier {
            return Err(Error::Usage(
                "Chebyshev states are assigned in closed form; no feature-map circuit".into(),
            ));
        }
        let mut c = Circuit::new(self.num_qubits);
        for q in 0..self.num_qubits {
            c.gate(Gate::h(q));
        }
        for q in 0..self.num_qubits {
            let angle = PI * x * (1u64 << (q + 1)) as f64 / self.period();
            c.gate(Gate::phase(q, angle));
        }
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn chebyshev_t_values() {
        assert_eq!(chebyshev_t(0, 0.7), 1.0);
        assert!(close(chebyshev_t(1, 0.5), 0.5, 1e-15));
        assert!(close(chebyshev_t(2, 0.5), 2.0 * 0.25 - 1.0, 1e-15));
    }

    #[test]
    fn closed_form_matches_recurrence_inside_and_outside() {
        for &x in &[-1.7, -1.0, -0.3, 0.0, 0.4, 1.0, 1.3] {
            let t = chebyshev_table(12, x);
            for (k, tk) in t.iter().enumerate() {
                let rel = (chebyshev_t(k, x) - tk).abs() / tk.abs().max(1.0);
                assert!(rel < 1e-10, "k={k} x={x}");
            }
        }
    }

    #[test]
    fn nodes() {
        let n1 = chebyshev_nodes(1);
        assert!(close(n1[0], FRAC_1_SQRT_2, 1e-15) && close(n1[1], -FRAC_1_SQRT_2, 1e-15));
        assert!(close(chebyshev_nodes(2)[0], 0.923_879_532_511_286_7, 1e-12));
        for n in 1..=5 {
            let xs = chebyshev_nodes(n);
            assert!(xs.windows(2).all(|w| w[0] > w[1]));
            assert!(xs.iter().all(|x| x.abs() < 1.0));
            for x in xs {
                assert!(chebyshev_t(1 << n, x).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn norm_values() {
        for n in 1..=4 {
            for x in chebyshev_nodes(n) {
                assert!(close(chebyshev_norm(n, x), 1.0, 1e-10));
            }
        }
        assert!(close(chebyshev_norm(2, 0.0), 3f64.sqrt() / 2.0, 1e-12));
        let floor = 2f64.powf(-1.5) * FRAC_1_SQRT_2;
        for i in 0..50 {
            let x = -3.0 + 0.12 * i as f64;
            assert!(chebyshev_norm(3, x) >= floor);
        }
    }

    #[test]
    fn chebyshev_state_examples() {
        let s = chebyshev_state(2, 0.0).unwrap();
        let expect = [1.0 / 3f64.sqrt(), 0.0, -(2.0f64 / 3.0).sqrt(), 0.0];
        for (a, e) in s.amplitudes().iter().zip(expect) {
            assert!(close(a.re, e, 1e-12) && a.im == 0.0);
        }
        assert!(s.is_normalized());
        let s = chebyshev_state(3, 1.0).unwrap();
        let a = s.amplitudes();
        for k in 2..8 {
            assert!(close(a[k].re, a[1].re, 1e-14));
        }
        assert!(close(a[0].re, a[1].re * FRAC_1_SQRT_2, 1e-14));
        assert!(close(s.norm(), 1.0, 1e-12));
    }

    #[test]
    fn derivative_coefficients() {
        assert!(chebyshev_derivative_coeffs(0, 8).iter().all(|w| *w == 0.0));
        assert_eq!(chebyshev_derivative_coeffs(2, 4), vec![0.0, 4.0, 0.0, 0.0]);
        assert_eq!(chebyshev_derivative_coeffs(3, 4), vec![3.0, 0.0, 6.0, 0.0]);
        assert_eq!(chebyshev_derivative_coeffs(4, 8)[..5], [0.0, 8.0, 0.0, 8.0, 0.0]);
    }

    #[test]
    fn derivative_coefficients_match_symbolic_derivative() {
        // d/dx cos(n arccos x) = n sin(n arccos x) / sqrt(1 - x^2)
        for n in 0..16usize {
            let w = chebyshev_derivative_coeffs(n, 16);
            for i in 0..20 {
                let x = -0.95 + 0.1 * i as f64;
                let theta = x.acos();
                let exact = n as f64 * (n as f64 * theta).sin() / theta.sin();
                let series: f64 = w.iter().enumerate().map(|(j, wj)| wj * chebyshev_t(j, x)).sum();
                assert!((exact - series).abs() < 1e-9 * exact.abs().max(1.0), "n={n} x={x}");
            }
        }
    }

    #[test]
    fn fourier_state_examples() {
        let s = fourier_state(1, 0.0).unwrap();
        assert!(s.amplitudes().iter().all(|a| (a - Complex64::new(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15));
        let s = fourier_state(1, 1.0).unwrap();
        assert!((s.amplitudes()[1] - Complex64::new(-FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn fourier_circuit_matches_closed_form() {
        for n in 1..=4 {
            let enc = Encoding::fourier(n).unwrap();
            for i in 0..7 {
                let x = 0.37 * i as f64 + 0.05;
                let circ = enc.feature_map_circuit(x).unwrap().prepare().unwrap();
                let closed = enc.state(x).unwrap();
                for (a, b) in circ.amplitudes().iter().zip(closed.amplitudes()) {
                    assert!((a - b).norm() < 1e-12);
                }
            }
        }
        assert!(Encoding::chebyshev(2).unwrap().feature_map_circuit(0.1).is_err());
    }

    #[test]
    fn fourier_generator_entries() {
        let g = fourier_generator(2).unwrap();
        assert_eq!(g[(0, 0)], Complex64::new(0.0, 0.0));
        assert!((g[(1, 1)] - Complex64::new(0.0, PI / 2.0)).norm() < 1e-15);
    }

    #[test]
    fn product_basis_is_one_qubit_wider() {
        let cheb = Encoding::chebyshev(1).unwrap();
        let a = product_basis_state(&cheb, 0.3).unwrap();
        let b = chebyshev_state(2, 0.3).unwrap();
        assert_eq!(a, b);
        let four = Encoding::fourier(1).unwrap();
        let p = four.product().unwrap();
        assert_eq!(p.num_qubits(), 2);
        assert_eq!(p.domain(), four.domain());
    }

    #[test]
    fn transform_of_node_state_is_basis_vector() {
        for n in 1..=4 {
            let enc = Encoding::chebyshev(n).unwrap();
            let u = enc.transform();
            for (j, x) in enc.nodes().into_iter().enumerate() {
                let v = nalgebra::DVector::from_vec(enc.amplitudes(x));
                let e = u.adjoint() * v;
                for (k, z) in e.iter().enumerate() {
                    let want = if k == j { 1.0 } else { 0.0 };
                    assert!((z - Complex64::new(want, 0.0)).norm() < 1e-10);
                }
            }
        }
        let u = chebyshev_transform(1).unwrap();
        assert!(close(u[(0, 0)].re, FRAC_1_SQRT_2, 1e-15));
        assert!(close(u[(1, 0)].re, FRAC_1_SQRT_2, 1e-15));
        assert!(close(u[(1, 1)].re, -FRAC_1_SQRT_2, 1e-15));
    }
}
