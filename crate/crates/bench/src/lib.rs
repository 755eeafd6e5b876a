//! Fixtures shared by the criterion benches.

use ftoffoli::{QubitId, StateVector};

pub const P_RAW: f64 = 1e-2;
pub const TARGET: f64 = 1e-12;

pub fn toffoli_data() -> [QubitId; 3] {
    [QubitId(0), QubitId(1), QubitId(2)]
}

/// `|i>` on the three data qubits of a 4-qubit gadget, ancilla in `|0>`.
pub fn gadget_input(i: usize) -> StateVector {
    StateVector::interleave(
        4,
        &toffoli_data(),
        &StateVector::basis(3, i),
        &StateVector::zero(1),
    )
}
