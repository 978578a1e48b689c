use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Mat2 = [[Complex64; 2]; 2];

const UNITARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateKind {
    H,
    X,
    Z,
    S,
    Sdg,
    /// `exp(-i theta Y / 2)`
    RY(f64),
    /// `exp(-i theta Z / 2)`
    RZ(f64),
    /// `diag(1, exp(i phi))`
    Phase(f64),
    /// Arbitrary single-qubit unitary, checked at construction.
    Unitary(Mat2),
}

/// A single-target gate with any number of (positive) controls.
///
/// CNOT, CZ and controlled-phase are `X`, `Z` and `Phase` with one control.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub target: usize,
    pub controls: Vec<usize>,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

impl GateKind {
    pub fn matrix(&self) -> Mat2 {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match *self {
            GateKind::H => [[c(s, 0.0), c(s, 0.0)], [c(s, 0.0), c(-s, 0.0)]],
            GateKind::X => [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]],
            GateKind::Z => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]],
            GateKind::S => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, 1.0)]],
            GateKind::Sdg => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, -1.0)]],
            GateKind::RY(t) => {
                let (sn, cs) = (t / 2.0).sin_cos();
                [[c(cs, 0.0), c(-sn, 0.0)], [c(sn, 0.0), c(cs, 0.0)]]
            }
            GateKind::RZ(t) => [
                [Complex64::from_polar(1.0, -t / 2.0), c(0.0, 0.0)],
                [c(0.0, 0.0), Complex64::from_polar(1.0, t / 2.0)],
            ],
            GateKind::Phase(p) => {
                [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), Complex64::from_polar(1.0, p)]]
            }
            GateKind::Unitary(m) => m,
        }
    }

    pub fn inverse(&self) -> Self {
        match *self {
            GateKind::H | GateKind::X | GateKind::Z => *self,
            GateKind::S => GateKind::Sdg,
            GateKind::Sdg => GateKind::S,
            GateKind::RY(t) => GateKind::RY(-t),
            GateKind::RZ(t) => GateKind::RZ(-t),
            GateKind::Phase(p) => GateKind::Phase(-p),
            GateKind::Unitary(m) => GateKind::Unitary([
                [m[0][0].conj(), m[1][0].conj()],
                [m[0][1].conj(), m[1][1].conj()],
            ]),
        }
    }
}

pub fn is_unitary(m: &Mat2, tol: f64) -> bool {
    for i in 0..2 {
        for j in 0..2 {
            let dot: Complex64 = (0..2).map(|k| m[k][i].conj() * m[k][j]).sum();
            let expect = if i == j { 1.0 } else { 0.0 };
            if (dot - c(expect, 0.0)).norm() > tol {
                return false;
            }
        }
    }
    true
}

impl Gate {
    pub fn new(kind: GateKind, target: usize) -> Self {
        Self { kind, target, controls: Vec::new() }
    }

    pub fn h(target: usize) -> Self {
        Self::new(GateKind::H, target)
    }

    pub fn x(target: usize) -> Self {
        Self::new(GateKind::X, target)
    }

    pub fn ry(target: usize, theta: f64) -> Self {
        Self::new(GateKind::RY(theta), target)
    }

    pub fn rz(target: usize, theta: f64) -> Self {
        Self::new(GateKind::RZ(theta), target)
    }

    pub fn s(target: usize) -> Self {
        Self::new(GateKind::S, target)
    }

    pub fn phase(target: usize, phi: f64) -> Self {
        Self::new(GateKind::Phase(phi), target)
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Self::x(target).controlled_by(&[control])
    }

    pub fn cz(control: usize, target: usize) -> Self {
        Self::new(GateKind::Z, target).controlled_by(&[control])
    }

    pub fn cphase(control: usize, target: usize, phi: f64) -> Self {
        Self::phase(target, phi).controlled_by(&[control])
    }

    pub fn unitary(target: usize, m: Mat2) -> Result<Self> {
        if !is_unitary(&m, UNITARY_TOL) {
            return Err(Error::Usage("2x2 matrix is not unitary".into()));
        }
        Ok(Self::new(GateKind::Unitary(m), target))
    }

    pub fn controlled_by(mut self, controls: &[usize]) -> Self {
        self.controls.extend_from_slice(controls);
        self
    }

    pub fn matrix(&self) -> Mat2 {
        self.kind.matrix()
    }

    pub fn inverse(&self) -> Self {
        Self { kind: self.kind.inverse(), target: self.target, controls: self.controls.clone() }
    }

    pub(crate) fn validate(&self, num_qubits: usize) -> Result<()> {
        if self.target >= num_qubits {
            return Err(Error::Usage(format!(
                "target {} out of range for {num_qubits} qubits",
                self.target
            )));
        }
        let mut seen = 1usize << self.target;
        for &q in &self.controls {
            if q >= num_qubits {
                return Err(Error::Usage(format!("control {q} out of range")));
            }
            if seen & (1 << q) != 0 {
                return Err(Error::Usage(format!("qubit {q} used twice in one gate")));
            }
            seen |= 1 << q;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::Statevector;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    #[test]
    fn hadamard_on_zero() {
        let s = Statevector::zero_state(1).unwrap().apply_gate(&Gate::h(0)).unwrap();
        for a in s.amplitudes() {
            assert!((a - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn cnot_flips_target_when_control_set() {
        // qubit 0 set, qubit 1 clear: index 1
        let s = Statevector::basis_state(2, 1).unwrap();
        let out = s.apply_gate(&Gate::cnot(0, 1)).unwrap();
        assert_eq!(out.amplitudes()[3], c(1.0, 0.0));
        // control clear: nothing happens
        let s = Statevector::basis_state(2, 2).unwrap();
        let out = s.apply_gate(&Gate::cnot(0, 1)).unwrap();
        assert_eq!(out.amplitudes()[2], c(1.0, 0.0));
    }

    #[test]
    fn ry_pi_flips() {
        let s = Statevector::zero_state(1).unwrap().apply_gate(&Gate::ry(0, PI)).unwrap();
        assert!(s.amplitudes()[0].norm() < 1e-15);
        assert!((s.amplitudes()[1].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn index_collisions_rejected() {
        let s = Statevector::zero_state(2).unwrap();
        assert!(matches!(s.apply_gate(&Gate::cnot(1, 1)), Err(Error::Usage(_))));
        assert!(matches!(s.apply_gate(&Gate::h(2)), Err(Error::Usage(_))));
        assert!(Gate::unitary(0, [[c(1.0, 0.0), c(1.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]]).is_err());
    }

    #[test]
    fn all_kinds_unitary() {
        let kinds = [
            GateKind::H,
            GateKind::X,
            GateKind::Z,
            GateKind::S,
            GateKind::Sdg,
            GateKind::RY(0.3),
            GateKind::RZ(-1.1),
            GateKind::Phase(2.2),
        ];
        for k in kinds {
            assert!(is_unitary(&k.matrix(), 1e-12), "{k:?}");
        }
    }
}
