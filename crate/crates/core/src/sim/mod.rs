//! Dense statevector simulator.
//!
//! Bit ordering: qubit 0 is the least significant bit of a basis index, and
//! in a tensor product `a ⊗ b` the state `a` occupies the upper qubits.
//! Global phases are not tracked. States are capped at [`MAX_QUBITS`].

mod circuit;
mod gate;
mod state;

pub use circuit::{qft_circuit, Circuit, CompiledCircuit, DenseOperator, Element, Execution};
pub use gate::{is_unitary, Gate, GateKind, Mat2};
pub use state::{inner_product, tensor, zero_state, Statevector};

pub const MAX_QUBITS: usize = 14;
