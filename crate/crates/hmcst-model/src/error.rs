//! Error taxonomy for the model: engine misuse, malformed inputs, conformance
//! violations, internal-assertion failures and resource exhaustion.

use thiserror::Error;

use crate::values::{ActionLabel, ThreadId};

/// Why a conformance monitor rejected an action label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// No specification edge connects the observed old value to the new one.
    NoSuchEdge,
    /// An edge with these values exists, but not for the acting role.
    WrongActor,
    /// An edge with these values and role exists, but not with this kind.
    WrongKind,
}

impl std::fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ViolationKind::NoSuchEdge => write!(f, "no-such-edge"),
            ViolationKind::WrongActor => write!(f, "wrong-actor"),
            ViolationKind::WrongKind => write!(f, "wrong-kind"),
        }
    }
}

#[derive(Debug, Clone, Error)]
pub enum ModelError {
    /// A step was requested that is not enabled in the given state.
    #[error("illegal step: thread {thread} cannot take choice {choice} here: {reason}")]
    IllegalStep {
        thread: ThreadId,
        choice: String,
        reason: String,
    },

    /// A thread id outside the configuration was named.
    #[error("unknown thread id {0}")]
    UnknownThread(ThreadId),

    /// A trace file failed to parse or replay.
    #[error("malformed trace: {0}")]
    MalformedTrace(String),

    /// An NFA description violates structural validity.
    #[error("malformed nfa: {0}")]
    MalformedNfa(String),

    /// A specification declares no owner states, so owner-dependent checks
    /// cannot apply to it.
    #[error("nfa {0} declares no owner states")]
    NoOwnerStates(String),

    /// A monitor rejected an observed cell transition.
    #[error("conformance violation ({kind}): {label}")]
    Violation { kind: ViolationKind, label: ActionLabel },

    /// A run invariant (mutual exclusion, ordering, quiescence, ...) failed;
    /// the offending schedule is attached for replay.
    #[error("run assertion violated: {message}")]
    AssertionViolated {
        message: String,
        /// The schedule (thread, choice) prefix that produced the failure.
        trace: String,
    },

    /// State-space exploration hit the configured cap.
    #[error("resource budget exceeded: {visited} states visited at cap {cap}")]
    ResourceBudgetExceeded { visited: u64, cap: u64 },

    /// A replayed trace names a configuration digest this tool disagrees with.
    #[error("config digest mismatch: trace says {expected}, this run computes {actual}")]
    DigestMismatch { expected: String, actual: String },
}
