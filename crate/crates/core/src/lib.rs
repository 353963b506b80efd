//! Simulation of a single-photon multi-qubit C-PHASE gate in a chain of
//! qubit-loaded cavities.
//!
//! Rates and detunings share one angular-frequency unit and times are its
//! inverse; the library never converts units itself.

pub mod components;
pub mod decoupling;
pub mod error;
pub mod fidelity;
pub mod network;
pub mod optimize;
pub mod pulses;
pub mod quadrature;

pub use components::{CavitySpec, QubitState, ScatterCoefficients, Sidedness};
pub use decoupling::{DiagonalGate, McResult, PhaseExpression, PulseOp, SequenceStep};
pub use error::{Error, Result};
pub use fidelity::{GateReport, TargetGate};
pub use network::{BasisAmplitudeSet, BasisState, ElementModel, NetworkSpec, PathSegment};
pub use pulses::WavePacket;

pub use num_complex::Complex64;
