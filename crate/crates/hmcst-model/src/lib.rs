//! Executable small-step model of a hierarchical queue lock with timeouts and
//! abandonment, together with the cell-protocol specifications it must conform
//! to, conformance monitors, an exhaustive interleaving explorer with an
//! independent cross-checking traversal, trace replay, and fault-injection
//! mutations for exercising the detectors.

pub mod bfs;
pub mod error;
pub mod explore;
pub mod monitor;
pub mod mutation;
pub mod nfa;
pub mod protocol;
pub mod topology;
pub mod trace;
pub mod values;
pub mod witness;

pub use error::{ModelError, ViolationKind};
