//! Catalog of seeded protocol faults. Each entry flips exactly one
//! fault-injection switch; the detection suite runs every entry under both
//! presets and requires the checkers to flag it (conformance violation,
//! mutual-exclusion violation, deadlock, or a non-quiescent terminal).

use crate::protocol::EngineOpts;

#[derive(Debug, Clone, Copy)]
pub struct Mutation {
    pub name: &'static str,
    pub opts: EngineOpts,
}

pub fn catalog() -> Vec<Mutation> {
    let base = EngineOpts::default();
    vec![
        Mutation {
            name: "skip-dequeue-cas",
            opts: EngineOpts { skip_dequeue_cas: true, ..base },
        },
        Mutation {
            name: "drop-recycle-write",
            opts: EngineOpts { drop_recycle_write: true, ..base },
        },
        Mutation {
            name: "reorder-release",
            opts: EngineOpts { skip_release_handshake: true, ..base },
        },
        Mutation {
            name: "remove-impatience-mark",
            opts: EngineOpts { skip_impatience_mark: true, ..base },
        },
        Mutation {
            name: "pass-wrong-depth",
            opts: EngineOpts { pass_wrong_depth: true, ..base },
        },
    ]
}
