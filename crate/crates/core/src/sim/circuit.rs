use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{Gate, Mat2, Statevector};
use crate::error::{Error, Result};

/// A (possibly non-unitary) matrix acting on the contiguous qubit span
/// `start..start + width`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    matrix: DMatrix<Complex64>,
    start: usize,
    width: usize,
}

impl DenseOperator {
    pub fn new(matrix: DMatrix<Complex64>, start: usize) -> Result<Self> {
        let dim = matrix.nrows();
        if dim != matrix.ncols() || dim < 2 || !dim.is_power_of_two() {
            return Err(Error::Usage(format!(
                "dense operator must be 2^m x 2^m, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { width: dim.trailing_zeros() as usize, matrix, start })
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn width(&self) -> usize {
        self.width
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    Gate(Gate),
    Dense(DenseOperator),
    /// Projective measurement of `qubits` post-selected on `outcome`.
    Project { qubits: Vec<usize>, outcome: u64 },
}

/// Ordered list of elements replayed on a statevector.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Circuit {
    num_qubits: usize,
    elements: Vec<Element>,
}

/// State after replaying a circuit plus the success probability of each projection.
#[derive(Debug, Clone)]
pub struct Execution {
    pub state: Statevector,
    pub probabilities: Vec<f64>,
}

impl Execution {
    /// Product of `sqrt(p)` over all projections: the norm the output would
    /// carry had the projections not been renormalized.
    pub fn amplitude_factor(&self) -> f64 {
        self.probabilities.iter().map(|p| p.sqrt()).product()
    }
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Self { num_qubits, elements: Vec::new() }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn gate(&mut self, gate: Gate) -> &mut Self {
        self.elements.push(Element::Gate(gate));
        self
    }

    pub fn dense(&mut self, op: DenseOperator) -> &mut Self {
        self.elements.push(Element::Dense(op));
        self
    }

    pub fn project(&mut self, qubits: &[usize], outcome: u64) -> &mut Self {
        self.elements.push(Element::Project { qubits: qubits.to_vec(), outcome });
        self
    }

    pub fn append(&mut self, other: &Circuit) -> Result<&mut Self> {
        if other.num_qubits > self.num_qubits {
            return Err(Error::Usage("appended circuit is wider than the host".into()));
        }
        self.elements.extend(other.elements.iter().cloned());
        Ok(self)
    }

    pub fn is_unitary(&self) -> bool {
        self.elements.iter().all(|e| matches!(e, Element::Gate(_)))
    }

    pub fn gates(&self) -> impl Iterator<Item = &Gate> {
        self.elements.iter().filter_map(|e| match e {
            Element::Gate(g) => Some(g),
            _ => None,
        })
    }

    /// Adjoint of a gate-only circuit.
    pub fn inverse(&self) -> Result<Circuit> {
        let mut out = Circuit::new(self.num_qubits);
        for e in self.elements.iter().rev() {
            match e {
                Element::Gate(g) => {
                    out.gate(g.inverse());
                }
                _ => return Err(Error::Usage("only gate circuits can be inverted".into())),
            }
        }
        Ok(out)
    }

    pub fn run(&self, input: &Statevector) -> Result<Execution> {
        if input.num_qubits() != self.num_qubits {
            return Err(Error::Usage(format!(
                "{}-qubit circuit applied to {}-qubit state",
                self.num_qubits,
                input.num_qubits()
            )));
        }
        let mut state = input.clone();
        let mut probabilities = Vec::new();
        for e in &self.elements {
            match e {
                Element::Gate(g) => state.apply_gate_mut(g)?,
                Element::Dense(op) => state = state.apply_dense(op)?,
                Element::Project { qubits, outcome } => {
                    let (s, p) = state.project(qubits, *outcome)?;
                    if p < 1e-14 {
                        return Err(Error::DegenerateProjection { outcome: *outcome, probability: p });
                    }
                    state = s;
                    probabilities.push(p);
                }
            }
        }
        Ok(Execution { state, probabilities })
    }

    /// Gate-only circuits as precomputed `(matrix, target, control mask)`
    /// triples for repeated application.
    pub fn compile(&self) -> Result<CompiledCircuit> {
        let mut ops = Vec::new();
        for e in &self.elements {
            match e {
                Element::Gate(g) => {
                    g.validate(self.num_qubits)?;
                    let cmask = g.controls.iter().fold(0usize, |acc, &c| acc | (1 << c));
                    ops.push((g.matrix(), g.target, cmask));
                }
                _ => return Err(Error::Usage("only gate circuits can be compiled".into())),
            }
        }
        Ok(CompiledCircuit { num_qubits: self.num_qubits, ops })
    }

    /// Runs the circuit from `|0...0>`.
    pub fn prepare(&self) -> Result<Statevector> {
        Ok(self.run(&Statevector::zero_state(self.num_qubits)?)?.state)
    }

    /// Full matrix of a gate-only circuit, column `k` being the image of `|k>`.
    pub fn matrix(&self) -> Result<DMatrix<Complex64>> {
        if !self.is_unitary() {
            return Err(Error::Usage("matrix() needs a gate-only circuit".into()));
        }
        let dim = 1usize << self.num_qubits;
        let mut m = DMatrix::zeros(dim, dim);
        for k in 0..dim {
            let out = self.run(&Statevector::basis_state(self.num_qubits, k)?)?.state;
            for (r, a) in out.amplitudes().iter().enumerate() {
                m[(r, k)] = *a;
            }
        }
        Ok(m)
    }

    pub fn swap(&mut self, a: usize, b: usize) -> &mut Self {
        self.gate(Gate::cnot(a, b)).gate(Gate::cnot(b, a)).gate(Gate::cnot(a, b))
    }

    /// Appends the QFT on `qubits` (listed least significant first).
    ///
    /// Convention: `|k> -> 2^{-m/2} sum_j exp(2 pi i j k / 2^m) |j>` with the
    /// output in the same bit order as the input; the trailing swaps undo the
    /// bit reversal of the textbook circuit.
    pub fn qft(&mut self, qubits: &[usize]) -> &mut Self {
        let m = qubits.len();
        for i in (0..m).rev() {
            self.gate(Gate::h(qubits[i]));
            for l in (0..i).rev() {
                let angle = std::f64::consts::PI / (1u64 << (i - l)) as f64;
                self.gate(Gate::cphase(qubits[l], qubits[i], angle));
            }
        }
        for i in 0..m / 2 {
            self.swap(qubits[i], qubits[m - 1 - i]);
        }
        self
    }

    pub fn inverse_qft(&mut self, qubits: &[usize]) -> &mut Self {
        let mut fwd = Circuit::new(self.num_qubits);
        fwd.qft(qubits);
        for g in fwd.elements.iter().rev() {
            if let Element::Gate(g) = g {
                self.gate(g.inverse());
            }
        }
        self
    }
}

/// QFT over all `n` qubits.
pub fn qft_circuit(n: usize) -> Circuit {
    let mut c = Circuit::new(n);
    let qubits: Vec<usize> = (0..n).collect();
    c.qft(&qubits);
    c
}


/// Gate sequence with matrices evaluated once.
#[derive(Debug, Clone)]
pub struct CompiledCircuit {
    num_qubits: usize,
    ops: Vec<(Mat2, usize, usize)>,
}

impl CompiledCircuit {
    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Applies gates `range` in order to `state`.
    pub fn apply_range(&self, state: &mut Statevector, range: std::ops::Range<usize>) -> Result<()> {
        if state.num_qubits() != self.num_qubits {
            return Err(Error::Usage("compiled circuit applied to a different register".into()));
        }
        for (m, t, c) in &self.ops[range] {
            state.apply_mat2(m, *t, *c);
        }
        Ok(())
    }
}
