//! Declarative problem description, its text format, and the built-in presets.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoding::{Encoding, Family};
use crate::error::{Error, Result};
use crate::functions::{FunctionSpec, Monomial};
use crate::model::{Ansatz, Model, MultiplierBackend, TermSpec};
use crate::sim::MAX_QUBITS;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Variational,
    Lse,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "variational" => Ok(Mode::Variational),
            "lse" => Ok(Mode::Lse),
            other => Err(Error::Config(format!("mode: unknown value {other:?}"))),
        }
    }
}

/// How overlaps between latent states are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum OverlapMode {
    #[default]
    Exact,
    /// Hadamard tests with the given number of shots per real/imaginary part.
    Shots(u64),
}

impl FromStr for OverlapMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "exact" {
            return Ok(OverlapMode::Exact);
        }
        match s.strip_prefix("shots:").map(str::parse::<u64>) {
            Some(Ok(n)) if n > 0 => Ok(OverlapMode::Shots(n)),
            _ => Err(Error::Config(format!("overlap: expected `exact` or `shots:N`, got {s:?}"))),
        }
    }
}

impl TryFrom<String> for OverlapMode {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<OverlapMode> for String {
    fn from(m: OverlapMode) -> String {
        m.to_string()
    }
}

impl fmt::Display for OverlapMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OverlapMode::Exact => write!(f, "exact"),
            OverlapMode::Shots(n) => write!(f, "shots:{n}"),
        }
    }
}

/// Optimizer and loss settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub epochs: usize,
    /// Exponent applied to the DE loss.
    pub p: f64,
    /// Weight of the initial and boundary losses.
    pub eta: f64,
    /// Weight of the data loss.
    pub zeta: f64,
    pub seed: u64,
    pub overlap: OverlapMode,
    /// Training stops once the total loss falls below this value.
    pub early_stop: Option<f64>,
    pub multiplier: MultiplierBackend,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.005,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            epochs: 5000,
            p: 0.5,
            eta: 10.0,
            zeta: 1.0,
            seed: 0,
            overlap: OverlapMode::Exact,
            early_stop: Some(1e-4),
            multiplier: MultiplierBackend::Oracle,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, why: &str| Err(Error::Config(format!("train.{field}: {why}")));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate", "must be positive");
        }
        if !(0.0..1.0).contains(&self.adam_beta1) {
            return bad("adam_beta1", "must lie in [0, 1)");
        }
        if !(0.0..1.0).contains(&self.adam_beta2) {
            return bad("adam_beta2", "must lie in [0, 1)");
        }
        if !(self.adam_epsilon > 0.0) {
            return bad("adam_epsilon", "must be positive");
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return bad("p", "must lie in (0, 1]");
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return bad("eta", "must be non-negative");
        }
        if !(self.zeta >= 0.0 && self.zeta.is_finite()) {
            return bad("zeta", "must be non-negative");
        }
        if self.early_stop.is_some_and(|t| !(t >= 0.0)) {
            return bad("early_stop", "must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionSpec {
    pub family: Family,
    pub qubits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnsatzSpec {
    pub rotation_layers: usize,
}

impl Default for AnsatzSpec {
    fn default() -> Self {
        Self { rotation_layers: 7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelSpec {
    /// Adds the trainable constant `theta_sh`.
    pub shifted: bool,
    pub scale: f64,
    pub shift: f64,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self { shifted: false, scale: 1.0, shift: 0.0 }
    }
}

/// `f(point) = value`, weighted by `weight` in the LSE path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub point: Vec<f64>,
    pub value: f64,
}

/// `f = target` on the line where dimension `fixed_dimension` equals
/// `fixed_value`, sampled at `count` evenly spaced points from `start` to
/// `end` (inclusive) along every other dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundarySpec {
    pub fixed_dimension: usize,
    pub fixed_value: f64,
    pub start: f64,
    pub end: f64,
    pub count: usize,
    pub target: FunctionSpec,
}

impl BoundarySpec {
    pub fn points(&self, dims: usize) -> Vec<Condition> {
        let free: Vec<usize> = (0..dims).filter(|&d| d != self.fixed_dimension).collect();
        let axis: Vec<f64> = if self.count == 1 {
            vec![self.start]
        } else {
            (0..self.count)
                .map(|i| self.start + (self.end - self.start) * i as f64 / (self.count - 1) as f64)
                .collect()
        };
        let total = axis.len().pow(free.len() as u32);
        (0..total)
            .map(|mut idx| {
                let mut point = vec![self.fixed_value; dims];
                for &d in free.iter().rev() {
                    point[d] = axis[idx % axis.len()];
                    idx /= axis.len();
                }
                let value = self.target.eval(&point);
                Condition { point, value }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LseSpec {
    /// Multiplies each initial/boundary row and its right-hand side.
    pub constraint_weight: f64,
}

impl Default for LseSpec {
    fn default() -> Self {
        Self { constraint_weight: 1.0 }
    }
}

/// A differential equation `sum_k term_k = 0` together with its conditions
/// and solver settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub version: u32,
    pub name: String,
    #[serde(default)]
    pub mode: Mode,
    pub dimensions: Vec<DimensionSpec>,
    #[serde(default)]
    pub ansatz: AnsatzSpec,
    #[serde(default)]
    pub model: ModelSpec,
    pub terms: Vec<TermSpec>,
    #[serde(default)]
    pub initial: Vec<Condition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<BoundarySpec>,
    #[serde(default)]
    pub data: Vec<Condition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analytic: Option<FunctionSpec>,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub lse: LseSpec,
}

impl ProblemSpec {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let spec: Self = toml::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: String, why: &str| Err(Error::Config(format!("{field}: {why}")));
        if self.version != FORMAT_VERSION {
            return bad("version".into(), "unsupported format version (expected 1)");
        }
        if self.dimensions.is_empty() {
            return bad("dimensions".into(), "at least one dimension is required");
        }
        let dims = self.dimensions.len();
        for (i, d) in self.dimensions.iter().enumerate() {
            if d.qubits == 0 || d.qubits > MAX_QUBITS {
                return bad(format!("dimensions[{i}].qubits"), "must be between 1 and 14");
            }
        }
        let total: usize = self.dimensions.iter().map(|d| d.qubits).sum();
        if total > MAX_QUBITS {
            return bad("dimensions".into(), "total qubit count exceeds 14");
        }
        if self.ansatz.rotation_layers == 0 {
            return bad("ansatz.rotation_layers".into(), "must be at least 1");
        }
        if !self.model.scale.is_finite() || !self.model.shift.is_finite() {
            return bad("model".into(), "scale and shift must be finite");
        }
        if self.terms.is_empty() {
            return bad("terms".into(), "at least one term is required");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if !t.weight.is_finite() {
                return bad(format!("terms[{i}].weight"), "must be finite");
            }
            if t.derivative.len() > dims {
                return bad(format!("terms[{i}].derivative"), "more orders than dimensions");
            }
            if t.power == 0 && t.function.is_none() {
                return bad(format!("terms[{i}].function"), "required when power = 0");
            }
            if let Some(f) = &t.function {
                f.validate(dims).map_err(|e| Error::Config(format!("terms[{i}].function: {e}")))?;
            }
        }
        if !self.terms.iter().any(|t| t.power > 0) {
            return bad("terms".into(), "no term depends on the model");
        }
        for (name, list) in [("initial", &self.initial), ("data", &self.data)] {
            for (i, c) in list.iter().enumerate() {
                if c.point.len() != dims {
                    return bad(format!("{name}[{i}].point"), "needs one coordinate per dimension");
                }
                if !c.value.is_finite() || c.point.iter().any(|x| !x.is_finite()) {
                    return bad(format!("{name}[{i}]"), "values must be finite");
                }
            }
        }
        if let Some(b) = &self.boundary {
            if b.fixed_dimension >= dims {
                return bad("boundary.fixed_dimension".into(), "out of range");
            }
            if b.count == 0 {
                return bad("boundary.count".into(), "must be at least 1");
            }
            b.target.validate(dims).map_err(|e| Error::Config(format!("boundary.target: {e}")))?;
        }
        if let Some(a) = &self.analytic {
            a.validate(dims).map_err(|e| Error::Config(format!("analytic: {e}")))?;
        }
        if !(self.lse.constraint_weight > 0.0 && self.lse.constraint_weight.is_finite()) {
            return bad("lse.constraint_weight".into(), "must be positive");
        }
        self.train.validate()
    }

    pub fn encodings(&self) -> Result<Vec<Encoding>> {
        self.dimensions.iter().map(|d| Encoding::new(d.family, d.qubits)).collect()
    }

    pub fn num_qubits(&self) -> usize {
        self.dimensions.iter().map(|d| d.qubits).sum()
    }

    pub fn is_linear(&self) -> bool {
        self.terms.iter().all(TermSpec::is_linear)
    }

    /// Boundary conditions expanded to points.
    pub fn boundary_points(&self) -> Vec<Condition> {
        self.boundary.as_ref().map(|b| b.points(self.dimensions.len())).unwrap_or_default()
    }

    /// Model with seeded random ansatz angles and the configured scale/shift.
    pub fn initial_model(&self, seed: u64) -> Result<Model> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ansatz = Ansatz::random(self.num_qubits(), self.ansatz.rotation_layers, &mut rng)?;
        let shift = self.model.shifted.then_some(self.model.shift);
        Model::new(self.encodings()?, ansatz, self.model.scale, shift)
    }

    /// Domain used for evaluation grids: `[-1, 1]` for Chebyshev, one period for Fourier.
    pub fn plot_domain(&self) -> Result<Vec<(f64, f64)>> {
        Ok(self.encodings()?.iter().map(|e| e.domain()).collect())
    }
}

pub fn preset_names() -> &'static [&'static str] {
    &["linear_damped", "shifted_linear", "nonlinear_riccati", "multidim_2d"]
}

fn cheb(qubits: usize) -> DimensionSpec {
    DimensionSpec { family: Family::Chebyshev, qubits }
}

pub fn preset(name: &str) -> Result<ProblemSpec> {
    let base = |name: &str, dimensions, terms, epochs| ProblemSpec {
        version: FORMAT_VERSION,
        name: name.to_string(),
        mode: Mode::Variational,
        dimensions,
        ansatz: AnsatzSpec::default(),
        model: ModelSpec::default(),
        terms,
        initial: Vec::new(),
        boundary: None,
        data: Vec::new(),
        analytic: None,
        train: TrainConfig { epochs, ..TrainConfig::default() },
        lse: LseSpec::default(),
    };
    let spec = match name {
        "linear_damped" => {
            let (kappa, lambda) = (1.0, 2.0 * PI);
            let mut p = base(
                name,
                vec![cheb(4)],
                vec![
                    TermSpec::model(1.0, vec![1], 1),
                    TermSpec::source(1.0, FunctionSpec::DampedSource { kappa, lambda }),
                ],
                5000,
            );
            p.initial = vec![Condition { point: vec![0.0], value: 1.0 }];
            p.analytic = Some(FunctionSpec::DampedOscillator { kappa, lambda });
            p
        }
        "shifted_linear" => {
            let mut p = base(
                name,
                vec![cheb(4)],
                vec![
                    TermSpec::model(1.0, vec![1], 1),
                    TermSpec::model(-1.0, vec![0], 1),
                    TermSpec::source(1.0, FunctionSpec::Const { value: 15.0 }),
                ],
                20000,
            );
            p.model.shifted = true;
            p.initial = vec![Condition { point: vec![0.0], value: 16.0 }];
            p.analytic = Some(FunctionSpec::ExpShift { amplitude: 1.0, rate: 1.0, offset: 15.0 });
            p
        }
        "nonlinear_riccati" => {
            let mut p = base(
                name,
                vec![cheb(3)],
                vec![TermSpec::model(1.0, vec![1], 1), TermSpec::model(-1.0, vec![0], 2)],
                10000,
            );
            p.initial = vec![Condition { point: vec![0.0], value: 0.5 }];
            p.analytic = Some(FunctionSpec::Reciprocal { pole: 2.0 });
            p
        }
        "multidim_2d" => {
            let source = FunctionSpec::Polynomial {
                monomials: vec![
                    Monomial { coeff: 2.0, powers: vec![0, 1] },
                    Monomial { coeff: 1.0, powers: vec![1, 0] },
                ],
            };
            let mut p = base(
                name,
                vec![cheb(2), cheb(2)],
                vec![TermSpec::model(1.0, vec![0, 1], 1), TermSpec::source(-1.0, source)],
                10000,
            );
            p.boundary = Some(BoundarySpec {
                fixed_dimension: 1,
                fixed_value: 0.0,
                start: -1.0,
                end: 1.0,
                count: 21,
                target: FunctionSpec::Const { value: 1.0 },
            });
            p.analytic = Some(FunctionSpec::Polynomial {
                monomials: vec![
                    Monomial { coeff: 1.0, powers: vec![0, 2] },
                    Monomial { coeff: 1.0, powers: vec![1, 1] },
                    Monomial { coeff: 1.0, powers: vec![0, 0] },
                ],
            });
            p
        }
        other => {
            return Err(Error::Config(format!(
                "preset: unknown name {other:?} (available: {})",
                preset_names().join(", ")
            )))
        }
    };
    spec.validate()?;
    Ok(spec)
}
