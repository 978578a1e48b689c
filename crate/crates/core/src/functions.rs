//! Named closed-form functions used as DE sources and reference solutions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `coeff * prod_d x_d^{powers[d]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coeff: f64,
    pub powers: Vec<u32>,
}

/// A function of one or more variables with an analytic partial derivative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionSpec {
    Const { value: f64 },
    /// `kappa e^{-kappa x} cos(lambda x) + lambda e^{-kappa x} sin(lambda x)`
    DampedSource { kappa: f64, lambda: f64 },
    /// `e^{-kappa x} cos(lambda x)`
    DampedOscillator { kappa: f64, lambda: f64 },
    /// `amplitude e^{rate x} + offset`
    ExpShift { amplitude: f64, rate: f64, offset: f64 },
    /// `1 / (pole - x)`
    Reciprocal { pole: f64 },
    Polynomial { monomials: Vec<Monomial> },
    /// Power series in the first variable, `sum_k coefficients[k] x^k`.
    Series { coefficients: Vec<f64> },
}

impl FunctionSpec {
    pub fn names() -> &'static [&'static str] {
        &["const", "damped_source", "damped_oscillator", "exp_shift", "reciprocal", "polynomial", "series"]
    }

    pub fn name(&self) -> &'static str {
        match self {
            FunctionSpec::Const { .. } => "const",
            FunctionSpec::DampedSource { .. } => "damped_source",
            FunctionSpec::DampedOscillator { .. } => "damped_oscillator",
            FunctionSpec::ExpShift { .. } => "exp_shift",
            FunctionSpec::Reciprocal { .. } => "reciprocal",
            FunctionSpec::Polynomial { .. } => "polynomial",
            FunctionSpec::Series { .. } => "series",
        }
    }

    /// Number of variables the function needs at least (1 for univariate forms).
    pub fn min_arity(&self) -> usize {
        match self {
            FunctionSpec::Polynomial { monomials } => {
                monomials.iter().map(|m| m.powers.len()).max().unwrap_or(0).max(1)
            }
            _ => 1,
        }
    }

    pub fn validate(&self, arity: usize) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("function {}: {name} must be finite", self.name())))
            }
        };
        match self {
            FunctionSpec::Const { value } => finite("value", *value)?,
            FunctionSpec::DampedSource { kappa, lambda } | FunctionSpec::DampedOscillator { kappa, lambda } => {
                finite("kappa", *kappa)?;
                finite("lambda", *lambda)?;
            }
            FunctionSpec::ExpShift { amplitude, rate, offset } => {
                finite("amplitude", *amplitude)?;
                finite("rate", *rate)?;
                finite("offset", *offset)?;
            }
            FunctionSpec::Reciprocal { pole } => finite("pole", *pole)?,
            FunctionSpec::Polynomial { monomials } => {
                for m in monomials {
                    finite("coeff", m.coeff)?;
                }
            }
            FunctionSpec::Series { coefficients } => {
                for c in coefficients {
                    finite("coefficients", *c)?;
                }
            }
        }
        if self.min_arity() > arity {
            return Err(Error::Config(format!(
                "function {} needs {} variables, problem has {arity}",
                self.name(),
                self.min_arity()
            )));
        }
        Ok(())
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        let x = point.first().copied().unwrap_or(0.0);
        match self {
            FunctionSpec::Const { value } => *value,
            FunctionSpec::DampedSource { kappa, lambda } => {
                (-kappa * x).exp() * (kappa * (lambda * x).cos() + lambda * (lambda * x).sin())
            }
            FunctionSpec::DampedOscillator { kappa, lambda } => (-kappa * x).exp() * (lambda * x).cos(),
            FunctionSpec::ExpShift { amplitude, rate, offset } => amplitude * (rate * x).exp() + offset,
            FunctionSpec::Reciprocal { pole } => 1.0 / (pole - x),
            FunctionSpec::Polynomial { monomials } => monomials.iter().map(|m| monomial(m, point, None)).sum(),
            FunctionSpec::Series { coefficients } => coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c),
        }
    }

    /// Partial derivative along `dim`.
    pub fn derivative(&self, point: &[f64], dim: usize) -> f64 {
        if let FunctionSpec::Polynomial { monomials } = self {
            return monomials.iter().map(|m| monomial(m, point, Some(dim))).sum();
        }
        if dim != 0 {
            return 0.0;
        }
        let x = point.first().copied().unwrap_or(0.0);
        match self {
            FunctionSpec::Const { .. } => 0.0,
            FunctionSpec::DampedSource { kappa, lambda } => {
                let (s, c) = (lambda * x).sin_cos();
                (-kappa * x).exp() * ((lambda * lambda - kappa * kappa) * c - 2.0 * kappa * lambda * s)
            }
            FunctionSpec::DampedOscillator { kappa, lambda } => {
                let (s, c) = (lambda * x).sin_cos();
                -(-kappa * x).exp() * (kappa * c + lambda * s)
            }
            FunctionSpec::ExpShift { amplitude, rate, .. } => amplitude * rate * (rate * x).exp(),
            FunctionSpec::Reciprocal { pole } => 1.0 / ((pole - x) * (pole - x)),
            FunctionSpec::Series { coefficients } => coefficients
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, c)| acc * x + k as f64 * c),
            FunctionSpec::Polynomial { .. } => unreachable!(),
        }
    }
}

fn monomial(m: &Monomial, point: &[f64], diff: Option<usize>) -> f64 {
    let mut v = m.coeff;
    for (d, &p) in m.powers.iter().enumerate() {
        let x = point.get(d).copied().unwrap_or(0.0);
        if diff == Some(d) {
            if p == 0 {
                return 0.0;
            }
            v *= p as f64 * x.powi(p as i32 - 1);
        } else {
            v *= x.powi(p as i32);
        }
    }
    if let Some(d) = diff {
        if d >= m.powers.len() {
            return 0.0;
        }
    }
    v
}
