//! Multiplication of functions held as latent coefficient vectors.
//!
//! Two routes produce the same numbers: [`multiply_oracle`] evaluates the
//! coefficient-space convolution directly, while [`apply_multiplier`] runs the
//! gate-level pipeline (QFT adder / subtractor, modulus fix-up, coefficient
//! correction, Hadamard disentanglers with post-selection) and restores the
//! scale from the recorded success probabilities.
//!
//! Gate-level register layout for `n`-qubit inputs, least significant first:
//! result `[0, n+1)`, `h` `[n+1, 2n+1)`, `g` `[2n+1, 3n+1)` and, for
//! Chebyshev only, three correction ancillas `[3n+1, 3n+4)`.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::encoding::{c_factor, Encoding, Family};
use crate::error::{Error, Result};
use crate::mixture::MixtureState;
use crate::sim::{Circuit, DenseOperator, Gate, Statevector};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// One `(j, k) -> l` contribution of the bilinear product rule.
#[derive(Debug, Clone, Copy)]
struct RuleEntry {
    j: usize,
    k: usize,
    l: usize,
    weight: f64,
}

fn product_rule(family: Family, n: usize) -> Vec<RuleEntry> {
    let dim = 1usize << n;
    let mut out = Vec::with_capacity(2 * dim * dim);
    match family {
        Family::Fourier => {
            let w = 2f64.powf(-(n as f64 - 1.0) / 2.0);
            for j in 0..dim {
                for k in 0..dim {
                    out.push(RuleEntry { j, k, l: j + k, weight: w });
                }
            }
        }
        Family::Chebyshev => {
            let pre = 2f64.powf(-(n as f64) / 2.0);
            for j in 0..dim {
                for k in 0..dim {
                    let cc = c_factor(j) * c_factor(k);
                    let sum = j + k;
                    let diff = j.abs_diff(k);
                    out.push(RuleEntry { j, k, l: sum, weight: pre * c_factor(sum) / cc });
                    out.push(RuleEntry { j, k, l: diff, weight: pre * c_factor(diff) / cc });
                }
            }
        }
    }
    out
}

fn check_len(what: &str, v: &[Complex64], dim: usize) -> Result<()> {
    if v.len() != dim {
        return Err(Error::Usage(format!("{what} has {} entries, expected {dim}", v.len())));
    }
    Ok(())
}

/// Coefficients of `g(x) h(x)` in the `(N+1)`-qubit product basis.
pub fn multiply_oracle(family: Family, n: usize, g: &[Complex64], h: &[Complex64]) -> Result<Vec<Complex64>> {
    let enc = Encoding::new(family, n)?;
    multiply_joint(&[enc], g, h)
}

/// Product of two functions on a tensor-product register, one encoding per
/// dimension with dimension 0 in the most significant qubits. The result
/// lives on the product encodings returned by [`product_encodings`].
pub fn multiply_joint(encodings: &[Encoding], g: &[Complex64], h: &[Complex64]) -> Result<Vec<Complex64>> {
    if encodings.is_empty() {
        return Err(Error::Usage("no encodings given".into()));
    }
    let dim_in: usize = encodings.iter().map(|e| e.dim()).product();
    check_len("g", g, dim_in)?;
    check_len("h", h, dim_in)?;
    let rules: Vec<Vec<RuleEntry>> =
        encodings.iter().map(|e| product_rule(e.family(), e.num_qubits())).collect();
    let out_dim: usize = encodings.iter().map(|e| 2 * e.dim()).product();
    let mut out = vec![ZERO; out_dim];

    // Strides of each dimension in the input and output joint indices.
    let d = encodings.len();
    let mut in_stride = vec![1usize; d];
    let mut out_stride = vec![1usize; d];
    for i in (0..d.saturating_sub(1)).rev() {
        in_stride[i] = in_stride[i + 1] * encodings[i + 1].dim();
        out_stride[i] = out_stride[i + 1] * 2 * encodings[i + 1].dim();
    }

    // Odometer over one rule entry per dimension.
    let mut pos = vec![0usize; d];
    loop {
        let (mut jj, mut kk, mut ll, mut w) = (0, 0, 0, 1.0);
        for i in 0..d {
            let e = rules[i][pos[i]];
            jj += e.j * in_stride[i];
            kk += e.k * in_stride[i];
            ll += e.l * out_stride[i];
            w *= e.weight;
        }
        out[ll] += g[jj] * h[kk] * w;
        let mut i = d;
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            pos[i] += 1;
            if pos[i] < rules[i].len() {
                break;
            }
            pos[i] = 0;
        }
    }
}

pub fn product_encodings(encodings: &[Encoding]) -> Result<Vec<Encoding>> {
    encodings.iter().map(|e| e.product()).collect()
}

/// Coefficients of the constant function 1: `2^{N/2} e_0` per dimension.
pub fn unity_coefficients(encodings: &[Encoding]) -> Vec<Complex64> {
    let dim: usize = encodings.iter().map(|e| e.dim()).product();
    let total_qubits: usize = encodings.iter().map(|e| e.num_qubits()).sum();
    let mut v = vec![ZERO; dim];
    v[0] = Complex64::new(2f64.powf(total_qubits as f64 / 2.0), 0.0);
    v
}

/// Re-expresses `coeffs` in the product basis without changing the function.
pub fn lift(encodings: &[Encoding], coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    multiply_joint(encodings, coeffs, &unity_coefficients(encodings))
}

/// Evaluates a joint coefficient vector at `point` (one coordinate per dimension).
pub fn decode_joint(encodings: &[Encoding], coeffs: &[Complex64], point: &[f64]) -> Result<Complex64> {
    if point.len() != encodings.len() {
        return Err(Error::Usage(format!(
            "point has {} coordinates for {} dimensions",
            point.len(),
            encodings.len()
        )));
    }
    let mut amps = vec![Complex64::new(1.0, 0.0)];
    for (e, x) in encodings.iter().zip(point) {
        let v = e.amplitudes(*x);
        amps = amps.iter().flat_map(|a| v.iter().map(move |b| a * b)).collect();
    }
    check_len("coefficient vector", coeffs, amps.len())?;
    Ok(amps.iter().zip(coeffs).map(|(v, c)| v.conj() * c).sum())
}

/// Qubit indices of the multiplier registers for `n`-qubit inputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiplierLayout {
    pub result: Vec<usize>,
    pub h: Vec<usize>,
    pub g: Vec<usize>,
    pub ancillas: Vec<usize>,
}

impl MultiplierLayout {
    pub fn new(n: usize, family: Family) -> Self {
        let result = (0..=n).collect();
        let h = (n + 1..2 * n + 1).collect();
        let g = (2 * n + 1..3 * n + 1).collect();
        let ancillas = match family {
            Family::Chebyshev => (3 * n + 1..3 * n + 4).collect(),
            Family::Fourier => Vec::new(),
        };
        Self { result, h, g, ancillas }
    }

    pub fn num_qubits(&self) -> usize {
        self.result.len() + self.h.len() + self.g.len() + self.ancillas.len()
    }
}

/// Controlled phases adding (or subtracting) the register `src` into the
/// Fourier-transformed register `dst`.
fn phase_add(c: &mut Circuit, src: &[usize], dst: &[usize], sign: f64) {
    let m = dst.len();
    for (q, &s) in src.iter().enumerate() {
        for (t, &d) in dst.iter().enumerate() {
            if q + t < m {
                let angle = sign * 2.0 * PI * (1u64 << (q + t)) as f64 / (1u64 << m) as f64;
                c.gate(Gate::cphase(s, d, angle));
            }
        }
    }
}

fn arithmetic(n: usize, sign_h: f64) -> Circuit {
    let lay = MultiplierLayout::new(n, Family::Fourier);
    let mut c = Circuit::new(lay.num_qubits());
    c.qft(&lay.result);
    phase_add(&mut c, &lay.g, &lay.result, 1.0);
    phase_add(&mut c, &lay.h, &lay.result, sign_h);
    c.inverse_qft(&lay.result);
    c
}

/// `|j>_g |k>_h |0>_r -> |j>|k>|j + k>` on `3n + 1` qubits.
/// The result register must start in `|0>`.
pub fn build_adder(n: usize) -> Circuit {
    arithmetic(n, 1.0)
}

/// `|j>_g |k>_h |0>_r -> |j>|k>|(j - k) mod 2^{n+1}>` on `3n + 1` qubits.
pub fn build_subtractor(n: usize) -> Circuit {
    arithmetic(n, -1.0)
}

/// Turns `(j - k) mod 2^{n+1}` in the `(n+1)`-qubit result register into
/// `|j - k|` on the low `n` bits, leaving the sign flag in the top bit.
pub fn build_mod(n: usize) -> Circuit {
    let msb = n;
    let low: Vec<usize> = (0..n).collect();
    let mut c = Circuit::new(n + 1);
    for &q in &low {
        c.gate(Gate::cnot(msb, q));
    }
    c.qft(&low);
    phase_add(&mut c, &[msb], &low, 1.0);
    c.inverse_qft(&low);
    c
}

fn anti_controlled(c: &mut Circuit, controls: &[usize], gate: Gate) {
    for &q in controls {
        c.gate(Gate::x(q));
    }
    c.gate(gate.controlled_by(controls));
    for &q in controls {
        c.gate(Gate::x(q));
    }
}

/// Multiplies each `|j>|k>|l>` component by `c_l / (c_j c_k)` (times a global
/// `1/sqrt 2`) using three ancillas that enter and leave in `|000>`.
/// Spans all `3n + 4` Chebyshev multiplier qubits; ends with the ancilla
/// post-selection.
pub fn build_coeff_correction(n: usize) -> Circuit {
    let lay = MultiplierLayout::new(n, Family::Chebyshev);
    let a = &lay.ancillas;
    let mut c = Circuit::new(lay.num_qubits());
    for &q in a {
        c.gate(Gate::h(q));
    }
    anti_controlled(&mut c, &lay.g, Gate::rz(a[0], -PI / 2.0));
    anti_controlled(&mut c, &lay.h, Gate::rz(a[1], -PI / 2.0));
    anti_controlled(&mut c, &lay.result, Gate::rz(a[2], -PI / 2.0));
    c.gate(Gate::rz(a[2], PI / 2.0));
    for &q in a {
        c.gate(Gate::h(q));
    }
    c.project(a, 0);
    c
}

/// The two gate-level branches: sum (`plus`) and absolute difference (`minus`,
/// Chebyshev only), each ending in the disentangling post-selections.
#[derive(Debug, Clone)]
pub struct MultiplierCircuits {
    pub layout: MultiplierLayout,
    pub plus: Circuit,
    pub minus: Option<Circuit>,
}

pub fn build_multiplier(family: Family, n: usize) -> Result<MultiplierCircuits> {
    let lay = MultiplierLayout::new(n, family);
    let width = lay.num_qubits();
    let inputs: Vec<usize> = lay.h.iter().chain(&lay.g).copied().collect();

    let mut plus = Circuit::new(width);
    plus.append(&build_adder(n))?;
    if family == Family::Chebyshev {
        plus.append(&build_coeff_correction(n))?;
    }
    for &q in &inputs {
        plus.gate(Gate::h(q));
    }
    plus.project(&inputs, 0);

    let minus = match family {
        Family::Fourier => None,
        Family::Chebyshev => {
            let mut m = Circuit::new(width);
            m.append(&build_subtractor(n))?;
            m.append(&build_mod(n))?;
            m.append(&build_coeff_correction(n))?;
            let mut targets = inputs.clone();
            targets.push(lay.result[n]);
            for &q in &targets {
                m.gate(Gate::h(q));
            }
            m.project(&targets, 0);
            Some(m)
        }
    };
    Ok(MultiplierCircuits { layout: lay, plus, minus })
}

/// Output of the gate-level multiplier.
#[derive(Debug, Clone)]
pub struct MultiplierResult {
    /// Normalized product state on `N + 1` qubits.
    pub product_state: Statevector,
    /// `scale * product_state` equals the oracle product of the inputs.
    pub scale: f64,
    pub encoding: Encoding,
    /// Post-selected branch states weighted by their renormalization factors;
    /// their sum is `scale * product_state`.
    pub branches: MixtureState,
    /// Success probabilities of every projection, per branch.
    pub probabilities: Vec<Vec<f64>>,
}

impl MultiplierResult {
    pub fn coefficients(&self) -> Vec<Complex64> {
        self.product_state.amplitudes().iter().map(|a| a * self.scale).collect()
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        self.encoding.decode(&self.product_state.amplitudes().to_vec(), x) * self.scale
    }

    /// Branch mixture with each success probability replaced by the frequency
    /// observed in `shots` Bernoulli trials.
    pub fn estimate_branches(&self, shots: u64, seed: u64) -> Result<MixtureState> {
        if shots == 0 {
            return Err(Error::Usage("shot count must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = MixtureState::new(self.branches.num_qubits());
        for (term, probs) in self.branches.terms().iter().zip(&self.probabilities) {
            let mut ratio = 1.0;
            for &p in probs {
                let hits = (0..shots).filter(|_| rng.random_bool(p.clamp(0.0, 1.0))).count();
                ratio *= (hits as f64 / shots as f64 / p).sqrt();
            }
            out.push(term.coeff * ratio, term.state.clone(), term.label)?;
        }
        Ok(out)
    }
}

/// Multiplies two normalized `N`-qubit latent states with the gate-level circuits.
pub fn apply_multiplier(encoding: &Encoding, g: &Statevector, h: &Statevector) -> Result<MultiplierResult> {
    let n = encoding.num_qubits();
    if g.num_qubits() != n || h.num_qubits() != n {
        return Err(Error::Usage(format!(
            "multiplier inputs have {} and {} qubits, encoding has {n}",
            g.num_qubits(),
            h.num_qubits()
        )));
    }
    if !g.is_normalized() || !h.is_normalized() {
        return Err(Error::Usage("multiplier inputs must be normalized".into()));
    }
    let family = encoding.family();
    let circuits = build_multiplier(family, n)?;
    let mut input = g.tensor(h)?.tensor(&Statevector::zero_state(n + 1)?)?;
    if family == Family::Chebyshev {
        input = Statevector::zero_state(3)?.tensor(&input)?;
    }

    let two_n = 2f64.powi(n as i32);
    let nf = n as f64;
    let mut runs = vec![("plus", &circuits.plus, match family {
        Family::Chebyshev => 2f64.powf(-nf / 2.0) * SQRT_2 * two_n,
        Family::Fourier => 2f64.powf(-(nf - 1.0) / 2.0) * two_n,
    })];
    if let Some(m) = &circuits.minus {
        runs.push(("minus", m, 2f64.powf(-nf / 2.0) * 2.0 * two_n));
    }

    let mut branches = MixtureState::new(n + 1);
    let mut probabilities = Vec::new();
    for (label, circuit, prefactor) in runs {
        let ex = circuit.run(&input)?;
        let weight = prefactor * ex.amplitude_factor();
        branches.push(Complex64::new(weight, 0.0), ex.state.truncate_low(n + 1)?, label)?;
        probabilities.push(ex.probabilities);
    }
    let total = Statevector::from_amplitudes(branches.to_vector())?;
    if total.norm() == 0.0 {
        return Err(Error::ZeroFunction);
    }
    let (product_state, scale) = total.normalize()?;
    Ok(MultiplierResult { product_state, scale, encoding: encoding.product()?, branches, probabilities })
}

/// A function loaded into a latent register: `scale * state` are its coefficients.
#[derive(Debug, Clone)]
pub struct LoadedFunction {
    pub state: Statevector,
    pub scale: f64,
    pub encodings: Vec<Encoding>,
}

impl LoadedFunction {
    pub fn coefficients(&self) -> Vec<Complex64> {
        self.state.amplitudes().iter().map(|a| a * self.scale).collect()
    }

    pub fn eval(&self, point: &[f64]) -> Result<Complex64> {
        decode_joint(&self.encodings, &self.coefficients(), point)
    }
}

/// Loads `g` from its values at the encoding nodes.
pub fn load_function<F: Fn(f64) -> f64>(encoding: &Encoding, g: F) -> Result<LoadedFunction> {
    load_joint(std::slice::from_ref(encoding), |p: &[f64]| Complex64::new(g(p[0]), 0.0))
}

/// Loads a (complex) function of several variables from its values on the
/// tensor grid of nodes.
pub fn load_joint<F: Fn(&[f64]) -> Complex64>(encodings: &[Encoding], g: F) -> Result<LoadedFunction> {
    if encodings.is_empty() {
        return Err(Error::Usage("no encodings given".into()));
    }
    let nodes: Vec<Vec<f64>> = encodings.iter().map(|e| e.nodes()).collect();
    let dim: usize = encodings.iter().map(|e| e.dim()).product();
    let mut values = Vec::with_capacity(dim);
    let mut point = vec![0.0; encodings.len()];
    for idx in 0..dim {
        let mut rest = idx;
        for d in (0..encodings.len()).rev() {
            let m = encodings[d].dim();
            point[d] = nodes[d][rest % m];
            rest /= m;
        }
        let v = g(&point);
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::NonFinite(format!("function value {v} at node {point:?}")));
        }
        values.push(v);
    }
    let mut state = Statevector::from_amplitudes(values)?;
    let mut start = 0;
    for e in encodings.iter().rev() {
        state = state.apply_dense(&DenseOperator::new(e.transform(), start)?)?;
        start += e.num_qubits();
    }
    if state.norm() == 0.0 {
        return Err(Error::ZeroFunction);
    }
    let (state, scale) = state.normalize()?;
    Ok(LoadedFunction { state, scale, encodings: encodings.to_vec() })
}

/// Dense matrix of the linear map `h -> oracle(g, h)`, handy for tests.
pub fn multiplication_matrix(encodings: &[Encoding], g: &[Complex64]) -> Result<DMatrix<Complex64>> {
    let dim: usize = encodings.iter().map(|e| e.dim()).product();
    let out_dim: usize = encodings.iter().map(|e| 2 * e.dim()).product();
    let mut m = DMatrix::zeros(out_dim, dim);
    for k in 0..dim {
        let mut e = vec![ZERO; dim];
        e[k] = Complex64::new(1.0, 0.0);
        for (r, v) in multiply_joint(encodings, g, &e)?.into_iter().enumerate() {
            m[(r, k)] = v;
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::chebyshev_t;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    /// Runs a gate-only circuit on a basis state and returns the single
    /// basis index it maps to.
    fn basis_image(circuit: &Circuit, index: usize) -> usize {
        let s = Statevector::basis_state(circuit.num_qubits(), index).unwrap();
        let out = circuit.run(&s).unwrap().state;
        let (i, a) = out
            .amplitudes()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap();
        assert!((a.norm() - 1.0).abs() < 1e-10, "not a basis state");
        i
    }

    fn pack(n: usize, j: usize, k: usize, r: usize) -> usize {
        (j << (2 * n + 1)) | (k << (n + 1)) | r
    }

    #[test]
    fn adder_examples() {
        let add = build_adder(2);
        assert_eq!(basis_image(&add, pack(2, 1, 2, 0)), pack(2, 1, 2, 3));
        assert_eq!(basis_image(&add, pack(2, 3, 3, 0)), pack(2, 3, 3, 6));
    }

    #[test]
    fn subtractor_examples() {
        assert_eq!(basis_image(&build_subtractor(2), pack(2, 2, 1, 0)), pack(2, 2, 1, 1));
        assert_eq!(basis_image(&build_subtractor(1), pack(1, 0, 1, 0)), pack(1, 0, 1, 3));
    }

    #[test]
    fn mod_examples() {
        let m = build_mod(1);
        assert_eq!(basis_image(&m, 3) & 1, 1);
        assert_eq!(basis_image(&build_mod(2), 1), 1);
    }

    #[test]
    fn integer_arithmetic_exhaustive() {
        for n in 1..=3usize {
            let add = build_adder(n);
            let sub = build_subtractor(n);
            let modc = build_mod(n);
            let modulus = 1usize << (n + 1);
            for j in 0..1usize << n {
                for k in 0..1usize << n {
                    assert_eq!(basis_image(&add, pack(n, j, k, 0)), pack(n, j, k, j + k));
                    let diff = (j + modulus - k) % modulus;
                    assert_eq!(basis_image(&sub, pack(n, j, k, 0)), pack(n, j, k, diff));
                    let flag = usize::from(j < k);
                    assert_eq!(basis_image(&modc, diff), (flag << n) | j.abs_diff(k), "n={n} j={j} k={k}");
                }
            }
        }
    }

    #[test]
    fn coefficient_correction_factors() {
        let n = 1;
        let corr = build_coeff_correction(n);
        let check = |j: usize, k: usize, l: usize, rel: f64| {
            let s = Statevector::basis_state(3 * n + 4, pack(n, j, k, l)).unwrap();
            let ex = corr.run(&s).unwrap();
            let expect = FRAC_1_SQRT_2 * rel;
            assert!((ex.amplitude_factor() - expect).abs() < 1e-12, "{j} {k} {l}");
        };
        check(1, 1, 2, 1.0);
        check(0, 1, 1, FRAC_1_SQRT_2);
        check(0, 0, 0, FRAC_1_SQRT_2);
        check(1, 1, 0, SQRT_2);
    }

    #[test]
    fn fourier_shift_example() {
        let mut g = vec![c(0.0); 4];
        let mut h = vec![c(0.0); 4];
        g[1] = c(1.0);
        h[2] = c(1.0);
        let p = multiply_oracle(Family::Fourier, 2, &g, &h).unwrap();
        for (l, v) in p.iter().enumerate() {
            assert_eq!(v.norm() > 0.0, l == 3);
        }
    }

    #[test]
    fn chebyshev_x_squared() {
        let enc = Encoding::chebyshev(2).unwrap();
        let t1 = load_function(&enc, |x| x).unwrap().coefficients();
        let p = multiply_oracle(Family::Chebyshev, 2, &t1, &t1).unwrap();
        let prod = enc.product().unwrap();
        for x in [-0.9, -0.31, 0.0, 0.42, 0.77] {
            let want = 0.5 * (chebyshev_t(0, x) + chebyshev_t(2, x));
            assert!((prod.decode(&p, x) - c(want)).norm() < 1e-10);
            assert!((want - x * x).abs() < 1e-12);
        }
    }

    #[test]
    fn unity_loads_to_first_basis_vector() {
        for enc in [Encoding::chebyshev(3).unwrap(), Encoding::fourier(3).unwrap()] {
            let f = load_function(&enc, |_| 1.0).unwrap();
            let coeffs = f.coefficients();
            let want = unity_coefficients(&[enc]);
            for (a, b) in coeffs.iter().zip(&want) {
                assert!((a - b).norm() < 1e-10, "{enc:?}");
            }
        }
    }

    #[test]
    fn chebyshev_t2_has_single_component() {
        let enc = Encoding::chebyshev(2).unwrap();
        let f = load_function(&enc, |x| chebyshev_t(2, x)).unwrap();
        for (i, a) in f.state.amplitudes().iter().enumerate() {
            assert_eq!(a.norm() > 1e-10, i == 2);
        }
    }

    #[test]
    fn zero_function_is_rejected() {
        let enc = Encoding::chebyshev(2).unwrap();
        assert_eq!(load_function(&enc, |_| 0.0).unwrap_err(), Error::ZeroFunction);
    }

    #[test]
    fn unity_times_unity_is_one() {
        for enc in [Encoding::chebyshev(2).unwrap(), Encoding::fourier(2).unwrap()] {
            let one = load_function(&enc, |_| 1.0).unwrap();
            let r = apply_multiplier(&enc, &one.state, &one.state).unwrap();
            let (lo, hi) = enc.domain();
            for i in 0..10 {
                let x = lo + (hi - lo) * i as f64 / 10.0;
                let v = r.eval(x) * one.scale * one.scale;
                assert!((v - c(1.0)).norm() < 1e-10, "{enc:?} {x}");
            }
        }
    }

    #[test]
    fn branch_mixture_sums_to_product() {
        let enc = Encoding::chebyshev(2).unwrap();
        let g = Statevector::from_real(&[0.3, -0.5, 0.2, 0.7]).unwrap().normalize().unwrap().0;
        let r = apply_multiplier(&enc, &g, &g).unwrap();
        let total = r.branches.to_vector();
        for (a, b) in total.iter().zip(r.coefficients()) {
            assert!((a - b).norm() < 1e-12);
        }
        assert_eq!(r.probabilities.len(), 2);
        assert_eq!(r.probabilities[0].len(), 2);
        let est = r.estimate_branches(200_000, 7).unwrap().to_vector();
        let dev: f64 = est.iter().zip(&total).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(dev < 0.05 * r.scale, "{dev}");
    }

    #[test]
    fn too_wide_multiplier_is_refused() {
        let enc = Encoding::chebyshev(4).unwrap();
        let g = Statevector::basis_state(4, 0).unwrap();
        assert!(apply_multiplier(&enc, &g, &g).is_err());
    }
}
