//! Variational models and the latent states of differential-equation terms.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::arith::{apply_multiplier, decode_joint, load_joint, multiply_joint, product_encodings};
use crate::encoding::Encoding;
use crate::error::{Error, Result};
use crate::functions::FunctionSpec;
use crate::mixture::MixtureState;
use crate::sim::{Circuit, DenseOperator, Gate, GateKind, Statevector, MAX_QUBITS};

/// Hardware-efficient ansatz: `rotation_layers` full RY layers separated by
/// CNOT chains `q -> q + 1`. Parameter `l * n + q` is the RY angle of qubit
/// `q` in layer `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ansatz {
    num_qubits: usize,
    rotation_layers: usize,
    params: Vec<f64>,
}

impl Ansatz {
    pub fn new(num_qubits: usize, rotation_layers: usize, params: Vec<f64>) -> Result<Self> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            return Err(Error::Config(format!("ansatz qubit count {num_qubits} outside 1..={MAX_QUBITS}")));
        }
        if rotation_layers == 0 {
            return Err(Error::Config("ansatz needs at least one rotation layer".into()));
        }
        if params.len() != num_qubits * rotation_layers {
            return Err(Error::Usage(format!(
                "ansatz expects {} angles, got {}",
                num_qubits * rotation_layers,
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("ansatz angle".into()));
        }
        Ok(Self { num_qubits, rotation_layers, params })
    }

    pub fn zeros(num_qubits: usize, rotation_layers: usize) -> Result<Self> {
        Self::new(num_qubits, rotation_layers, vec![0.0; num_qubits * rotation_layers])
    }

    /// Angles drawn uniformly from `[-pi, pi]`.
    pub fn random<R: Rng>(num_qubits: usize, rotation_layers: usize, rng: &mut R) -> Result<Self> {
        let params = (0..num_qubits * rotation_layers).map(|_| rng.random_range(-PI..=PI)).collect();
        Self::new(num_qubits, rotation_layers, params)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn rotation_layers(&self) -> usize {
        self.rotation_layers
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn with_params(&self, params: Vec<f64>) -> Result<Self> {
        Self::new(self.num_qubits, self.rotation_layers, params)
    }

    pub fn circuit(&self) -> Circuit {
        let n = self.num_qubits;
        let mut c = Circuit::new(n);
        for l in 0..self.rotation_layers {
            for q in 0..n {
                c.gate(Gate::ry(q, self.params[l * n + q]));
            }
            if l + 1 < self.rotation_layers {
                for q in 0..n.saturating_sub(1) {
                    c.gate(Gate::cnot(q, q + 1));
                }
            }
        }
        c
    }

    pub fn prepare(&self) -> Result<Statevector> {
        self.circuit().prepare()
    }

    /// Every [`Ansatz::tangent`] in one sweep: the prefix state is carried
    /// forward and each shifted branch is completed with the remaining gates.
    pub fn tangents(&self) -> Result<Vec<Statevector>> {
        let circuit = self.circuit();
        let compiled = circuit.compile()?;
        let total = compiled.len();
        let mut state = Statevector::zero_state(self.num_qubits)?;
        let mut out = Vec::with_capacity(self.params.len());
        for (i, g) in circuit.gates().enumerate() {
            compiled.apply_range(&mut state, i..i + 1)?;
            if !matches!(g.kind, GateKind::RY(_)) {
                continue;
            }
            let mut plus = state.apply_gate(&Gate::ry(g.target, PI / 2.0))?;
            let mut minus = state.apply_gate(&Gate::ry(g.target, -PI / 2.0))?;
            compiled.apply_range(&mut plus, i + 1..total)?;
            compiled.apply_range(&mut minus, i + 1..total)?;
            let amps = plus
                .amplitudes()
                .iter()
                .zip(minus.amplitudes())
                .map(|(a, b)| (a - b) / (2.0 * SQRT_2))
                .collect();
            out.push(Statevector::from_amplitudes(amps)?);
        }
        Ok(out)
    }

    /// `d psi / d theta_i` from the two-point shift rule on the state:
    /// `(psi(theta_i + pi/2) - psi(theta_i - pi/2)) / (2 sqrt 2)`.
    pub fn tangent(&self, i: usize) -> Result<Statevector> {
        if i >= self.params.len() {
            return Err(Error::Usage(format!("parameter index {i} out of range")));
        }
        let shifted = |delta: f64| -> Result<Statevector> {
            let mut p = self.params.clone();
            p[i] += delta;
            self.with_params(p)?.prepare()
        };
        let plus = shifted(PI / 2.0)?;
        let minus = shifted(-PI / 2.0)?;
        let amps = plus
            .amplitudes()
            .iter()
            .zip(minus.amplitudes())
            .map(|(a, b)| (a - b) / (2.0 * SQRT_2))
            .collect();
        Statevector::from_amplitudes(amps)
    }
}

pub fn prepare_ansatz(a: &Ansatz) -> Result<Statevector> {
    a.prepare()
}

/// `f(x) = theta_s <x|U(theta)|0> + theta_sh`, one encoding per dimension on
/// a joint register (dimension 0 in the most significant qubits).
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    encodings: Vec<Encoding>,
    ansatz: Ansatz,
    scale: f64,
    shift: Option<f64>,
}

impl Model {
    pub fn new(encodings: Vec<Encoding>, ansatz: Ansatz, scale: f64, shift: Option<f64>) -> Result<Self> {
        if encodings.is_empty() {
            return Err(Error::Config("model needs at least one dimension".into()));
        }
        let total: usize = encodings.iter().map(|e| e.num_qubits()).sum();
        if total != ansatz.num_qubits() {
            return Err(Error::Config(format!(
                "ansatz acts on {} qubits but the encodings need {total}",
                ansatz.num_qubits()
            )));
        }
        if !scale.is_finite() || shift.is_some_and(|s| !s.is_finite()) {
            return Err(Error::NonFinite("model scale or shift".into()));
        }
        Ok(Self { encodings, ansatz, scale, shift })
    }

    pub fn encodings(&self) -> &[Encoding] {
        &self.encodings
    }

    pub fn ansatz(&self) -> &Ansatz {
        &self.ansatz
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn shift(&self) -> Option<f64> {
        self.shift
    }

    pub fn is_shifted(&self) -> bool {
        self.shift.is_some()
    }

    /// Trainable parameters: ansatz angles, then scale, then shift if present.
    pub fn params(&self) -> Vec<f64> {
        let mut p = self.ansatz.params().to_vec();
        p.push(self.scale);
        if let Some(s) = self.shift {
            p.push(s);
        }
        p
    }

    pub fn num_params(&self) -> usize {
        self.ansatz.params().len() + 1 + usize::from(self.is_shifted())
    }

    pub fn with_params(&self, params: &[f64]) -> Result<Self> {
        if params.len() != self.num_params() {
            return Err(Error::Usage(format!(
                "model expects {} parameters, got {}",
                self.num_params(),
                params.len()
            )));
        }
        let k = self.ansatz.params().len();
        let ansatz = self.ansatz.with_params(params[..k].to_vec())?;
        let shift = self.shift.map(|_| params[k + 1]);
        Self::new(self.encodings.clone(), ansatz, params[k], shift)
    }

    pub fn state(&self) -> Result<MixtureState> {
        model_state(self)
    }

    pub fn eval(&self, point: &[f64]) -> Result<Complex64> {
        model_eval(self, point)
    }

    /// [`Model::tangent`] for every parameter, in [`Model::params`] order.
    pub fn tangents(&self) -> Result<Vec<MixtureState>> {
        let scale = Complex64::new(self.scale, 0.0);
        let mut out = Vec::with_capacity(self.num_params());
        for t in self.ansatz.tangents()? {
            out.push(MixtureState::single(scale, t, "d_ansatz")?);
        }
        for i in self.ansatz.params().len()..self.num_params() {
            out.push(self.tangent(i)?);
        }
        Ok(out)
    }

    /// `d F / d param_i` as a mixture, where `F` is the model mixture.
    pub fn tangent(&self, i: usize) -> Result<MixtureState> {
        let k = self.ansatz.params().len();
        let one = Complex64::new(1.0, 0.0);
        if i < k {
            MixtureState::single(Complex64::new(self.scale, 0.0), self.ansatz.tangent(i)?, "d_ansatz")
        } else if i == k {
            MixtureState::single(one, self.ansatz.prepare()?, "ansatz")
        } else if i == k + 1 && self.is_shifted() {
            let (state, c) = unity_state(&self.encodings)?;
            MixtureState::single(Complex64::new(c, 0.0), state, "unity")
        } else {
            Err(Error::Usage(format!("parameter index {i} out of range")))
        }
    }
}

/// Computational `|0>` plus the coefficient `2^{N/2}` under which it decodes to 1.
pub fn unity_state(encodings: &[Encoding]) -> Result<(Statevector, f64)> {
    let n: usize = encodings.iter().map(|e| e.num_qubits()).sum();
    Ok((Statevector::zero_state(n)?, 2f64.powf(n as f64 / 2.0)))
}

pub fn unity_mixture(encodings: &[Encoding]) -> Result<MixtureState> {
    let (s, c) = unity_state(encodings)?;
    MixtureState::single(Complex64::new(c, 0.0), s, "unity")
}

pub fn model_state(m: &Model) -> Result<MixtureState> {
    let mut ms = MixtureState::single(Complex64::new(m.scale, 0.0), m.ansatz.prepare()?, "ansatz")?;
    if let Some(shift) = m.shift {
        let (s, c) = unity_state(&m.encodings)?;
        ms.push(Complex64::new(shift * c, 0.0), s, "unity")?;
    }
    Ok(ms)
}

pub fn model_eval(m: &Model, point: &[f64]) -> Result<Complex64> {
    eval_mixture(&m.encodings, &model_state(m)?, point)
}

/// Decodes a mixture on the joint register of `encodings` at `point`.
pub fn eval_mixture(encodings: &[Encoding], ms: &MixtureState, point: &[f64]) -> Result<Complex64> {
    let n: usize = encodings.iter().map(|e| e.num_qubits()).sum();
    if ms.num_qubits() != n {
        return Err(Error::Usage(format!("{}-qubit mixture decoded on {n} qubits", ms.num_qubits())));
    }
    decode_joint(encodings, &ms.to_vector(), point)
}

/// `(G^dagger)^order` on the register of dimension `dim`.
pub fn derivative_operator(encodings: &[Encoding], order: usize, dim: usize) -> Result<DenseOperator> {
    let enc = encodings
        .get(dim)
        .ok_or_else(|| Error::Usage(format!("dimension {dim} out of range")))?;
    let gd = enc.generator().adjoint();
    let mut m = DMatrix::identity(enc.dim(), enc.dim());
    for _ in 0..order {
        m = &gd * m;
    }
    let start: usize = encodings[dim + 1..].iter().map(|e| e.num_qubits()).sum();
    DenseOperator::new(m, start)
}

/// Applies the `order`-th derivative along `dim` to every term of `ms`.
pub fn derivative_state(ms: &MixtureState, encodings: &[Encoding], order: usize, dim: usize) -> Result<MixtureState> {
    if order == 0 {
        return Ok(ms.clone());
    }
    ms.apply_dense(&derivative_operator(encodings, order, dim)?)
}

/// A fixed latent function: a mixture decoded on `encodings`.
#[derive(Debug, Clone)]
pub struct Solution {
    pub encodings: Vec<Encoding>,
    pub state: MixtureState,
}

impl Solution {
    pub fn from_model(m: &Model) -> Result<Self> {
        Ok(Self { encodings: m.encodings().to_vec(), state: m.state()? })
    }

    pub fn from_coefficients(encodings: Vec<Encoding>, coeffs: Vec<Complex64>) -> Result<Self> {
        let n: usize = encodings.iter().map(|e| e.num_qubits()).sum();
        let state = if coeffs.iter().all(|c| c.norm() == 0.0) {
            MixtureState::new(n)
        } else {
            MixtureState::from_vector(coeffs, "coefficients")?
        };
        if state.num_qubits() != n {
            return Err(Error::Usage("coefficient count does not match the encodings".into()));
        }
        Ok(Self { encodings, state })
    }

    pub fn eval(&self, point: &[f64]) -> Result<Complex64> {
        eval_mixture(&self.encodings, &self.state, point)
    }

    /// `d/dx_dim` of this solution as a solution on the same register.
    pub fn derivative_solution(&self, dim: usize) -> Result<Solution> {
        let state = derivative_state(&self.state, &self.encodings, 1, dim)?;
        Ok(Solution { encodings: self.encodings.clone(), state })
    }

    /// First partial derivative along `dim`.
    pub fn derivative(&self, point: &[f64], dim: usize) -> Result<Complex64> {
        let d = derivative_state(&self.state, &self.encodings, 1, dim)?;
        eval_mixture(&self.encodings, &d, point)
    }
}

/// How products of latent states are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MultiplierBackend {
    /// Closed-form coefficient convolution.
    #[default]
    Oracle,
    /// Gate-level circuits with post-selection (single dimension only).
    Circuit,
}

/// `weight * g(x) * (D^m f)^power`; `power = 0` gives a model-independent
/// source term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermSpec {
    pub weight: f64,
    /// Derivative order per dimension; missing entries are zero.
    #[serde(default)]
    pub derivative: Vec<usize>,
    #[serde(default = "one")]
    pub power: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<FunctionSpec>,
}

fn one() -> usize {
    1
}

impl TermSpec {
    pub fn model(weight: f64, derivative: Vec<usize>, power: usize) -> Self {
        Self { weight, derivative, power, function: None }
    }

    pub fn source(weight: f64, function: FunctionSpec) -> Self {
        Self { weight, derivative: Vec::new(), power: 0, function: Some(function) }
    }

    pub fn with_function(mut self, function: FunctionSpec) -> Self {
        self.function = Some(function);
        self
    }

    /// Number of latent factors multiplied together.
    pub fn factor_count(&self) -> usize {
        self.power + usize::from(self.function.is_some() && self.power > 0)
    }

    /// Product-basis extensions this term needs on its own.
    pub fn level(&self) -> usize {
        self.factor_count().saturating_sub(1)
    }

    pub fn is_linear(&self) -> bool {
        self.power <= 1
    }

    /// `weight * g(x) * (D^m f)^power` given the needed values at a point.
    pub fn evaluate(&self, point: &[f64], derivative_value: f64) -> f64 {
        let g = self.function.as_ref().map_or(1.0, |f| f.eval(point));
        self.weight * g * derivative_value.powi(self.power as i32)
    }
}

/// Latent state of one DE term on the working register.
#[derive(Debug, Clone)]
pub struct DETermState {
    pub spec: TermSpec,
    pub state: MixtureState,
}

#[derive(Debug, Clone)]
struct PreparedTerm {
    spec: TermSpec,
    function: Option<MixtureState>,
    derivatives: Vec<DenseOperator>,
}

/// Everything about a term list that does not depend on the model
/// parameters: the working level and the loaded independent functions.
#[derive(Debug, Clone)]
pub struct TermContext {
    levels: Vec<Vec<Encoding>>,
    terms: Vec<PreparedTerm>,
    backend: MultiplierBackend,
}

impl TermContext {
    pub fn new(encodings: &[Encoding], specs: &[TermSpec], backend: MultiplierBackend) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::Config("problem has no DE terms".into()));
        }
        let level = specs.iter().map(TermSpec::level).max().unwrap_or(0);
        let mut levels = vec![encodings.to_vec()];
        for _ in 0..level {
            let next = product_encodings(levels.last().unwrap())?;
            let width: usize = next.iter().map(|e| e.num_qubits()).sum();
            if width > MAX_QUBITS {
                return Err(Error::Config(format!(
                    "products need {width} qubits, more than the {MAX_QUBITS}-qubit cap"
                )));
            }
            levels.push(next);
        }
        if backend == MultiplierBackend::Circuit && encodings.len() != 1 && level > 0 {
            return Err(Error::Unsupported("gate-level multiplier handles one dimension only".into()));
        }
        let mut terms = Vec::with_capacity(specs.len());
        for spec in specs {
            if spec.derivative.len() > encodings.len() {
                return Err(Error::Config(format!(
                    "term has derivative orders for {} dimensions, problem has {}",
                    spec.derivative.len(),
                    encodings.len()
                )));
            }
            if spec.power == 0 && spec.function.is_none() {
                return Err(Error::Config("constant term needs a function".into()));
            }
            let function = match &spec.function {
                None => None,
                Some(f) => {
                    f.validate(encodings.len())?;
                    // Sources are loaded straight onto the working register.
                    let encs = if spec.power == 0 { &levels[level] } else { &levels[0] };
                    match load_joint(encs, |p| Complex64::new(f.eval(p), 0.0)) {
                        Ok(l) => Some(MixtureState::single(Complex64::new(l.scale, 0.0), l.state, f.name())?),
                        Err(Error::ZeroFunction) => {
                            let n = encs.iter().map(|e| e.num_qubits()).sum();
                            Some(MixtureState::new(n))
                        }
                        Err(e) => return Err(e),
                    }
                }
            };
            let derivatives = spec
                .derivative
                .iter()
                .enumerate()
                .filter(|(_, &order)| order > 0)
                .map(|(dim, &order)| derivative_operator(encodings, order, dim))
                .collect::<Result<_>>()?;
            terms.push(PreparedTerm { spec: spec.clone(), function, derivatives });
        }
        Ok(Self { levels, terms, backend })
    }

    pub fn base_encodings(&self) -> &[Encoding] {
        &self.levels[0]
    }

    pub fn level(&self) -> usize {
        self.levels.len() - 1
    }

    /// Encodings of the register every term state lives on.
    pub fn working_encodings(&self) -> &[Encoding] {
        self.levels.last().unwrap()
    }

    pub fn specs(&self) -> impl Iterator<Item = &TermSpec> {
        self.terms.iter().map(|t| &t.spec)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn multiply(&self, level: usize, a: &MixtureState, b: &MixtureState) -> Result<MixtureState> {
        let encs = &self.levels[level];
        let width: usize = encs.iter().map(|e| e.num_qubits()).sum::<usize>() + encs.len();
        let mut out = MixtureState::new(width);
        for ta in a.terms() {
            for tb in b.terms() {
                let coeff = ta.coeff * tb.coeff;
                match self.backend {
                    MultiplierBackend::Oracle => {
                        let v = multiply_joint(encs, ta.state.amplitudes(), tb.state.amplitudes())?;
                        out.push(coeff, Statevector::from_amplitudes(v)?, "product")?;
                    }
                    MultiplierBackend::Circuit => {
                        let r = apply_multiplier(&encs[0], &ta.state, &tb.state)?;
                        out.push(coeff * r.scale, r.product_state, "product")?;
                    }
                }
            }
        }
        Ok(out)
    }

    fn lift(&self, ms: &MixtureState, from: usize, to: usize) -> Result<MixtureState> {
        let mut cur = ms.clone();
        for l in from..to {
            cur = self.multiply(l, &cur, &unity_mixture(&self.levels[l])?)?;
        }
        Ok(cur)
    }

    /// Folds base-level factors left to right and lifts the product to the
    /// working level.
    fn compose(&self, factors: &[&MixtureState]) -> Result<MixtureState> {
        let mut acc = factors[0].clone();
        for (i, f) in factors.iter().enumerate().skip(1) {
            let lifted = self.lift(f, 0, i - 1)?;
            acc = self.multiply(i - 1, &acc, &lifted)?;
        }
        let reached = factors.len().saturating_sub(1);
        self.lift(&acc, reached, self.level())
    }

    fn differentiate(&self, idx: usize, ms: &MixtureState) -> Result<MixtureState> {
        let mut out = ms.clone();
        for op in &self.terms[idx].derivatives {
            out = out.apply_dense(op)?;
        }
        Ok(out)
    }

    /// State of term `idx` for the model mixture `model`.
    pub fn build_term(&self, idx: usize, model: &MixtureState) -> Result<DETermState> {
        let t = &self.terms[idx];
        let weight = Complex64::new(t.spec.weight, 0.0);
        let state = if t.spec.power == 0 {
            t.function.as_ref().expect("validated").scaled(weight)
        } else {
            let d = self.differentiate(idx, model)?;
            let mut factors: Vec<&MixtureState> = Vec::new();
            if let Some(g) = &t.function {
                factors.push(g);
            }
            factors.extend(std::iter::repeat_n(&d, t.spec.power));
            self.compose(&factors)?.scaled(weight)
        };
        Ok(DETermState { spec: t.spec.clone(), state })
    }

    pub fn build(&self, model: &MixtureState) -> Result<Vec<DETermState>> {
        (0..self.terms.len()).map(|i| self.build_term(i, model)).collect()
    }

    /// Directional derivative of term `idx` when the model mixture moves
    /// along `tangent`: `p * w * g * D(tangent) * (D f)^{p-1}`.
    pub fn term_tangent(&self, idx: usize, model: &MixtureState, tangent: &MixtureState) -> Result<MixtureState> {
        let t = &self.terms[idx];
        let n: usize = self.working_encodings().iter().map(|e| e.num_qubits()).sum();
        if t.spec.power == 0 {
            return Ok(MixtureState::new(n));
        }
        let dt = self.differentiate(idx, tangent)?;
        let d = if t.spec.power > 1 { Some(self.differentiate(idx, model)?) } else { None };
        let mut factors: Vec<&MixtureState> = Vec::new();
        if let Some(g) = &t.function {
            factors.push(g);
        }
        factors.push(&dt);
        if let Some(d) = &d {
            factors.extend(std::iter::repeat_n(d, t.spec.power - 1));
        }
        let w = t.spec.weight * t.spec.power as f64;
        Ok(self.compose(&factors)?.scaled(Complex64::new(w, 0.0)))
    }
}

/// Builds every term of `specs` for `model` on a common working register.
pub fn build_de_terms(model: &Model, specs: &[TermSpec]) -> Result<Vec<DETermState>> {
    let ctx = TermContext::new(model.encodings(), specs, MultiplierBackend::Oracle)?;
    ctx.build(&model.state()?)
}

/// Builds `spec` alone (lifted only as far as the term itself requires).
pub fn build_de_term(model: &Model, spec: &TermSpec) -> Result<DETermState> {
    Ok(build_de_terms(model, std::slice::from_ref(spec))?.remove(0))
}

/// Model over a tensor-product register with one encoding per dimension.
pub fn multidim_model(encodings: Vec<Encoding>, ansatz: Ansatz, scale: f64, shift: Option<f64>) -> Result<Model> {
    Model::new(encodings, ansatz, scale, shift)
}
