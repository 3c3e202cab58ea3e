//! Statevector simulator and analytic calculator for a quantum
//! recommendation pipeline: superposition encoding of a feature database,
//! k-NN scoring by Hamming-distance phase accumulation with post-selection,
//! and Grover-style amplification of the preferred records — with closed-form
//! predictions for every stage so the simulation can be cross-checked.

pub mod analytic;
pub mod bits;
pub mod circuits;
pub mod database;
pub mod error;
pub mod grover;
pub mod pipeline;
pub mod qknn;
pub mod report;
pub mod statevec;

pub use bits::BitString;
pub use circuits::{CircuitProgram, GateKind, GateOp, StageTag};
pub use database::{DatabaseRecord, DatabaseTable, UserQuery};
pub use error::{Error, Result};
pub use grover::{AmplificationPlan, IterationCount, MarkedSpec};
pub use statevec::{MeasurementRecord, QuantumState, RegisterLayout, Segment};
