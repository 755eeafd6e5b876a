//! Fault-tolerant Toffoli constructions over Clifford+T.
//!
//! - [`circuit`]: gate set, circuits with classical feedback, text dump format.
//! - [`sim`]: exact dense state-vector simulation, unitary extraction and gadget checks.
//! - [`constructions`]: Toffoli*, the 4-T Toffoli, control extension, the
//!   error-detecting Toffoli and the Toffoli-state teleportation gadget.
//! - [`error_analysis`]: fault injection at T sites and exact acceptance/posterior polynomials.
//! - [`resources`]: distillation cost recurrence and scheme comparison.

pub mod circuit;
pub mod constructions;
pub mod error_analysis;
pub mod resources;
pub mod sim;

pub use circuit::{Circuit, CircuitError, ClassicalBitId, Gate, InitState, QubitId, TSite};
pub use constructions::{
    build_ancilla_consumption, build_ancilla_prep, build_ancilla_toffoli,
    build_error_detecting_toffoli, build_four_t_toffoli, build_multi_controlled,
    build_standard_seven_t_toffoli, build_toffoli_star, build_toffoli_star_dagger, extend_control,
    reference_toffoli, Construction, ConstructionError, ControlledGate, GadgetReport,
};
pub use error_analysis::{
    classify, enumerate_all, inject, monte_carlo, x_error_survey, AnalysisError, ErrorPattern,
    PatternClass, Pauli, PosteriorReport,
};
pub use resources::{
    compare, min_rounds, pipeline_cost, scheme_cost, DistillationProtocol, Pipeline,
    ResourceConfig, ResourceError, SchemeKind, SchemeReport, ToffoliScheme,
};
pub use sim::{
    extract_unitary, gadget_implements, phase_insensitive_distance, run, Branch, DenseUnitary,
    GadgetOptions, OutcomePolicy, SimError, StateVector,
};

/// Crate version recorded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
