//! Timeless history states for sequences of instantaneous generalized
//! measurements.
//!
//! A quantum system is coupled to a chain of detectors at fixed clock readings.
//! Between couplings the system evolves unitarily; at each coupling the
//! detector's Kraus set writes an outcome record into its ancilla. The global
//! clock-entangled state is kept as a list of time segments
//! ([`timeline::HistoryState`]), and outcome probabilities at a clock reading
//! `t` follow from the trace rule ([`probability`]).
//!
//! [`wigner`] packages the two-observer Wigner's-friend setup, and [`oracle`]
//! recomputes joint probabilities with plain sequential Kraus updates as an
//! independent check.

pub mod error;
pub mod hilbert;
pub mod instrument;
pub mod oracle;
pub mod probability;
pub mod timeline;
pub mod wigner;

pub use error::{Error, Result};
pub use hilbert::{
    embed, inner, project_outcome, propagator, tensor, DensityMatrix, Operator, StateVector,
    SubsystemLayout, TensorProduct, C64,
};
pub use instrument::{apply_instrument, DetectorModel, Effect, KrausSet};
pub use probability::{Assignment, OutcomeQuery, ProbabilityTable};
pub use timeline::{build_history, Event, EventSchedule, HistoryState};
