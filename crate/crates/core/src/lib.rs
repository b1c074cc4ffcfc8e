//! Threshold circuits, discretized neural circuits, and exact F2 rank tools.

mod wide;

pub mod analyzer;
pub mod boolmat;
pub mod circuit;
pub mod compiler;
pub mod constructions;
pub mod corpus;
pub mod discretized;

pub use analyzer::{check_bound, tightness_report, verify_decomposition, AnalyzerError, BoundReport, FamilyBound};
pub use boolmat::{BitMatrix, Domain, IntMatrix, MatrixError};
pub use circuit::{Assignment, CircuitError, Measures, ThresholdCircuit, ThresholdGate};
pub use compiler::{compile, CompileError, CompileOptions, CompileReport};
pub use constructions::{build_conj_circuit, build_disj_circuit, build_eq_circuit, Construction, ConstructionError, Target};
pub use discretized::{ActivationKind, DiscretizedActivation, DiscretizedCircuit, DiscretizedError};
