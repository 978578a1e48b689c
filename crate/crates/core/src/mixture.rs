use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sim::{DenseOperator, Statevector};

/// Below this norm a term is treated as the zero vector and dropped.
const ZERO_NORM: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureTerm {
    pub coeff: Complex64,
    /// Always unit norm.
    pub state: Statevector,
    pub label: &'static str,
}

/// Classically weighted sum of normalized statevectors, `sum_i c_i |psi_i>`.
///
/// States are kept normalized; any norm produced by a non-unitary operator
/// is folded into the coefficient. An empty mixture is the zero vector.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureState {
    num_qubits: usize,
    terms: Vec<MixtureTerm>,
}

impl MixtureState {
    pub fn new(num_qubits: usize) -> Self {
        Self { num_qubits, terms: Vec::new() }
    }

    /// Mixture holding `coeff * state`, with any norm of `state` folded into `coeff`.
    pub fn single(coeff: Complex64, state: Statevector, label: &'static str) -> Result<Self> {
        let mut m = Self::new(state.num_qubits());
        m.push(coeff, state, label)?;
        Ok(m)
    }

    /// Mixture representing a raw coefficient vector.
    pub fn from_vector(amplitudes: Vec<Complex64>, label: &'static str) -> Result<Self> {
        Self::single(Complex64::new(1.0, 0.0), Statevector::from_amplitudes(amplitudes)?, label)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn terms(&self) -> &[MixtureTerm] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn push(&mut self, coeff: Complex64, state: Statevector, label: &'static str) -> Result<()> {
        if state.num_qubits() != self.num_qubits {
            return Err(Error::Usage(format!(
                "{}-qubit term added to {}-qubit mixture",
                state.num_qubits(),
                self.num_qubits
            )));
        }
        let norm = state.norm();
        if norm <= ZERO_NORM || coeff == Complex64::new(0.0, 0.0) {
            return Ok(());
        }
        let state = if state.is_normalized() { state } else { state.normalize()?.0 };
        self.terms.push(MixtureTerm { coeff: coeff * norm, state, label });
        Ok(())
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        let terms = if factor == Complex64::new(0.0, 0.0) {
            Vec::new()
        } else {
            self.terms
                .iter()
                .map(|t| MixtureTerm { coeff: t.coeff * factor, ..t.clone() })
                .collect()
        };
        Self { num_qubits: self.num_qubits, terms }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if other.num_qubits != self.num_qubits {
            return Err(Error::Usage("adding mixtures on different registers".into()));
        }
        let mut out = self.clone();
        out.terms.extend(other.terms.iter().cloned());
        Ok(out)
    }

    /// Applies `op` to every term.
    pub fn apply_dense(&self, op: &DenseOperator) -> Result<Self> {
        self.try_map(|s| s.apply_dense(op))
    }

    /// Applies a linear map to every term state, renormalizing afterwards.
    pub fn try_map<F>(&self, f: F) -> Result<Self>
    where
        F: Fn(&Statevector) -> Result<Statevector>,
    {
        let mut out: Option<Self> = None;
        for t in &self.terms {
            let image = f(&t.state)?;
            let m = out.get_or_insert_with(|| Self::new(image.num_qubits()));
            m.push(t.coeff, image, t.label)?;
        }
        Ok(out.unwrap_or_else(|| Self::new(self.num_qubits)))
    }

    /// `sum_{a,b} conj(c_a) c_b <a|b>`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        if other.num_qubits != self.num_qubits {
            return Err(Error::Usage("inner product of mixtures on different registers".into()));
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for a in &self.terms {
            for b in &other.terms {
                acc += a.coeff.conj() * b.coeff * a.state.inner(&b.state)?;
            }
        }
        Ok(acc)
    }

    /// The summed, unnormalized amplitude vector.
    pub fn to_vector(&self) -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); 1 << self.num_qubits];
        for t in &self.terms {
            for (acc, a) in v.iter_mut().zip(t.state.amplitudes()) {
                *acc += t.coeff * a;
            }
        }
        v
    }
}
