use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DenseOperator, Gate, Mat2, MAX_QUBITS};
use crate::error::{Error, Result};

const NORM_TOL: f64 = 1e-12;

/// Dense amplitude vector over `num_qubits` qubits.
///
/// Qubit 0 is the least significant bit of the basis-state index, so the
/// amplitude of `|q_{n-1} ... q_1 q_0>` lives at `sum_i q_i 2^i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
    normalized: bool,
}

fn check_qubits(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::Config(format!(
            "qubit count {n} outside supported range 1..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

impl Statevector {
    /// `|0...0>` on `n` qubits.
    pub fn zero_state(n: usize) -> Result<Self> {
        Self::basis_state(n, 0)
    }

    pub fn basis_state(n: usize, index: usize) -> Result<Self> {
        check_qubits(n)?;
        let dim = 1usize << n;
        if index >= dim {
            return Err(Error::Usage(format!("basis index {index} out of range for {n} qubits")));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self { num_qubits: n, amplitudes, normalized: true })
    }

    /// Wraps raw amplitudes. The normalization flag is derived from the norm.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Usage(format!("amplitude count {len} is not a power of two >= 2")));
        }
        let n = len.trailing_zeros() as usize;
        check_qubits(n)?;
        let norm_sqr: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        Ok(Self { num_qubits: n, amplitudes, normalized: (norm_sqr - 1.0).abs() <= NORM_TOL })
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::from_amplitudes(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Returns the unit-norm copy together with the norm that was divided out.
    pub fn normalize(&self) -> Result<(Self, f64)> {
        let norm = self.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Usage(format!("cannot normalize state with norm {norm}")));
        }
        let amplitudes = self.amplitudes.iter().map(|a| a / norm).collect();
        Ok((Self { num_qubits: self.num_qubits, amplitudes, normalized: true }, norm))
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        let amplitudes: Vec<_> = self.amplitudes.iter().map(|a| a * factor).collect();
        let normalized = self.normalized && (factor.norm() - 1.0).abs() <= NORM_TOL;
        Self { num_qubits: self.num_qubits, amplitudes, normalized }
    }

    pub fn apply_gate(&self, gate: &Gate) -> Result<Self> {
        let mut out = self.clone();
        out.apply_gate_mut(gate)?;
        Ok(out)
    }

    pub fn apply_gate_mut(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.num_qubits)?;
        let cmask = gate.controls.iter().fold(0usize, |acc, &c| acc | (1 << c));
        self.apply_mat2(&gate.matrix(), gate.target, cmask);
        Ok(())
    }

    /// Applies `m` to `target` on the subspace where every bit of `cmask` is
    /// set. Indices are assumed valid.
    pub(crate) fn apply_mat2(&mut self, m: &Mat2, target: usize, cmask: usize) {
        let tbit = 1usize << target;
        let low = tbit - 1;
        for k in 0..self.amplitudes.len() / 2 {
            let i = ((k & !low) << 1) | (k & low);
            if i & cmask != cmask {
                continue;
            }
            let j = i | tbit;
            let a0 = self.amplitudes[i];
            let a1 = self.amplitudes[j];
            self.amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
            self.amplitudes[j] = m[1][0] * a0 + m[1][1] * a1;
        }
    }

    /// Multiplies the operator's matrix onto its qubit span. No renormalization.
    pub fn apply_dense(&self, op: &DenseOperator) -> Result<Self> {
        let width = op.width();
        if op.start() + width > self.num_qubits {
            return Err(Error::Usage(format!(
                "dense operator on qubits {}..{} exceeds {}-qubit state",
                op.start(),
                op.start() + width,
                self.num_qubits
            )));
        }
        let sub = 1usize << width;
        let low_count = 1usize << op.start();
        let high_count = 1usize << (self.num_qubits - op.start() - width);
        let matrix = op.matrix();
        let mut out = vec![Complex64::new(0.0, 0.0); self.amplitudes.len()];
        let mut gathered = vec![Complex64::new(0.0, 0.0); sub];
        for high in 0..high_count {
            for low in 0..low_count {
                let base = (high << (op.start() + width)) | low;
                for (mid, g) in gathered.iter_mut().enumerate() {
                    *g = self.amplitudes[base | (mid << op.start())];
                }
                for row in 0..sub {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (col, g) in gathered.iter().enumerate() {
                        acc += matrix[(row, col)] * g;
                    }
                    out[base | (row << op.start())] = acc;
                }
            }
        }
        Ok(Self { num_qubits: self.num_qubits, amplitudes: out, normalized: false })
    }

    /// Kronecker product with `self` on the more significant qubits.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let n = self.num_qubits + other.num_qubits;
        check_qubits(n)?;
        let mut amplitudes = Vec::with_capacity(1 << n);
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amplitudes.push(a * b);
            }
        }
        Ok(Self { num_qubits: n, amplitudes, normalized: self.normalized && other.normalized })
    }

    /// Projects `qubits` onto `outcome` (bit `i` of `outcome` is the value of
    /// `qubits[i]`). Returns the renormalized state and the success probability.
    pub fn project(&self, qubits: &[usize], outcome: u64) -> Result<(Self, f64)> {
        let mut mask = 0usize;
        let mut want = 0usize;
        for (i, &q) in qubits.iter().enumerate() {
            if q >= self.num_qubits {
                return Err(Error::Usage(format!("qubit {q} out of range")));
            }
            if mask & (1 << q) != 0 {
                return Err(Error::Usage(format!("qubit {q} listed twice in projection")));
            }
            mask |= 1 << q;
            if (outcome >> i) & 1 == 1 {
                want |= 1 << q;
            }
        }
        let total = self.norm_sqr();
        let mut kept: f64 = 0.0;
        let mut amplitudes = self.amplitudes.clone();
        for (i, a) in amplitudes.iter_mut().enumerate() {
            if i & mask == want {
                kept += a.norm_sqr();
            } else {
                *a = Complex64::new(0.0, 0.0);
            }
        }
        let probability = if total > 0.0 { kept / total } else { 0.0 };
        if !(probability > 0.0) || kept.sqrt() == 0.0 {
            return Err(Error::DegenerateProjection { outcome, probability });
        }
        let scale = kept.sqrt();
        for a in amplitudes.iter_mut() {
            *a /= scale;
        }
        Ok((Self { num_qubits: self.num_qubits, amplitudes, normalized: true }, probability))
    }

    /// `<self|other>`, with `self` as the bra.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        if self.num_qubits != other.num_qubits {
            return Err(Error::Usage(format!(
                "inner product of {}- and {}-qubit states",
                self.num_qubits, other.num_qubits
            )));
        }
        Ok(self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum())
    }

    /// Draws `shots` computational-basis outcomes. Deterministic in `seed`.
    pub fn sample(&self, shots: u64, seed: u64) -> Result<BTreeMap<usize, u64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(shots, &mut rng)
    }

    pub fn sample_with<R: Rng>(&self, shots: u64, rng: &mut R) -> Result<BTreeMap<usize, u64>> {
        if !self.normalized {
            return Err(Error::Usage("sampling requires a normalized state".into()));
        }
        let mut cumulative = Vec::with_capacity(self.amplitudes.len());
        let mut acc = 0.0;
        for a in &self.amplitudes {
            acc += a.norm_sqr();
            cumulative.push(acc);
        }
        let mut counts = BTreeMap::new();
        for _ in 0..shots {
            let u: f64 = rng.random::<f64>() * acc;
            let idx = cumulative.partition_point(|&c| c <= u).min(cumulative.len() - 1);
            *counts.entry(idx).or_insert(0) += 1;
        }
        Ok(counts)
    }

    /// Keeps the lowest `k` qubits, requiring every dropped qubit to be `|0>`.
    pub fn truncate_low(&self, k: usize) -> Result<Self> {
        check_qubits(k)?;
        let keep = 1usize << k;
        let leaked: f64 = self.amplitudes[keep.min(self.amplitudes.len())..]
            .iter()
            .map(|a| a.norm_sqr())
            .sum();
        if k > self.num_qubits || leaked > 1e-20 * self.norm_sqr().max(1.0) {
            return Err(Error::Usage(format!(
                "cannot drop upper qubits: residual weight {leaked:e}"
            )));
        }
        Self::from_amplitudes(self.amplitudes[..keep].to_vec())
    }
}

pub fn zero_state(n: usize) -> Result<Statevector> {
    Statevector::zero_state(n)
}

pub fn inner_product(a: &Statevector, b: &Statevector) -> Result<Complex64> {
    a.inner(b)
}

pub fn tensor(a: &Statevector, b: &Statevector) -> Result<Statevector> {
    a.tensor(b)
}
