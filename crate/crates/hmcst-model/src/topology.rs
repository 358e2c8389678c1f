//! Lock topologies the model can exercise: which threads exist, how many
//! acquisition rounds each runs, which queue node they use at every level they
//! traverse, and which queue arbitrates each level.
//!
//! Two shapes are built in:
//!
//! * `flat`  — a single root-level queue with one node per thread. One thread
//!   runs two rounds so re-entry over every posthumous cell value is reachable.
//! * `tree`  — three levels. Two threads enter at level 1 and share the level-2
//!   domain node; two more enter at level 2 with private nodes. Level 3 has no
//!   cells: it is a grant/deny choice point standing in for everything above.

use sha2::{Digest, Sha256};

use crate::values::{Level, NodeId, ThreadId};

pub const DEFAULT_STATE_CAP: u64 = 50_000_000;
pub const DEFAULT_PASSING_THRESHOLD: u8 = 2;

/// Which of the two built-in shapes a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Root,
    NonRoot,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Root => "root",
            Preset::NonRoot => "nonroot",
        }
    }

    pub fn parse(s: &str) -> Option<Preset> {
        match s {
            "root" => Some(Preset::Root),
            "nonroot" => Some(Preset::NonRoot),
            _ => None,
        }
    }
}

/// Behavior of the cell-less top level in the tree shape: always grant, or
/// allow the climber to give up there as well.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootMode {
    Deterministic,
    NondeterministicAbandon,
}

impl RootMode {
    pub fn name(self) -> &'static str {
        match self {
            RootMode::Deterministic => "deterministic",
            RootMode::NondeterministicAbandon => "nondeterministic-abandon",
        }
    }

    pub fn parse(s: &str) -> Option<RootMode> {
        match s {
            "deterministic" => Some(RootMode::Deterministic),
            "nondeterministic-abandon" => Some(RootMode::NondeterministicAbandon),
            _ => None,
        }
    }
}

/// A run configuration: preset shape plus the tunables that change the
/// reachable behavior. The canonical text of this struct is what run digests
/// are computed over.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Config {
    pub preset: Preset,
    /// Acquisition rounds per thread, indexed by thread id. An abandoned
    /// attempt consumes its round.
    pub rounds: Vec<u8>,
    /// Cohort handoffs allowed before a release must cross levels.
    pub passing_threshold: u8,
    /// Tree shape only: whether the top choice point may deny.
    pub root_mode: RootMode,
    pub state_cap: u64,
}

impl Config {
    pub fn preset(preset: Preset) -> Config {
        let rounds = match preset {
            Preset::Root => vec![2, 1, 1],
            Preset::NonRoot => vec![1, 1, 1, 1],
        };
        Config {
            preset,
            rounds,
            passing_threshold: DEFAULT_PASSING_THRESHOLD,
            root_mode: RootMode::NondeterministicAbandon,
            state_cap: DEFAULT_STATE_CAP,
        }
    }

    /// Override the round count of the multi-round thread (thread 0).
    pub fn with_rounds(mut self, rounds: u8) -> Config {
        self.rounds[0] = rounds;
        self
    }

    /// Drop to the given number of threads (prefix of the preset's threads).
    pub fn with_threads(mut self, n: usize) -> Config {
        assert!(n >= 1 && n <= self.rounds.len());
        self.rounds.truncate(n);
        self
    }

    /// One line that pins everything behavior-relevant about a run. Replays
    /// verify their digest against this.
    pub fn canonical_text(&self) -> String {
        let rounds: Vec<String> = self.rounds.iter().map(|r| r.to_string()).collect();
        let mut s = format!(
            "preset={} rounds={} passing-threshold={}",
            self.preset.name(),
            rounds.join(","),
            self.passing_threshold
        );
        if self.preset == Preset::NonRoot {
            s.push_str(&format!(" root-mode={}", self.root_mode.name()));
        }
        s
    }

    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.canonical_text().as_bytes());
        let mut hex = String::with_capacity(16);
        for b in &hash[..8] {
            hex.push_str(&format!("{b:02x}"));
        }
        hex
    }

    pub fn topology(&self) -> Topology {
        Topology::for_config(self)
    }
}

/// One hop of a thread's climb: the level, the node representing it there, and
/// the queue arbitrating that level for its domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hop {
    pub level: Level,
    pub node: NodeId,
    pub queue: usize,
}

#[derive(Debug, Clone)]
pub struct ThreadSpec {
    pub name: &'static str,
    pub rounds: u8,
    /// Levels with real cells, in ascent order.
    pub path: Vec<Hop>,
}

#[derive(Debug, Clone)]
pub struct NodeSpec {
    pub name: &'static str,
    pub level: Level,
    pub queue: usize,
    /// Thread responsible for draining this node once every sharer is done.
    pub janitor: ThreadId,
    /// True when the governing specification is the root one (topmost queue of
    /// the flat shape) rather than the mid-level one.
    pub at_true_root: bool,
}

#[derive(Debug, Clone)]
pub struct QueueSpec {
    pub name: &'static str,
    pub level: Level,
}

#[derive(Debug, Clone)]
pub struct Topology {
    /// Total levels including a cell-less top choice level, if any.
    pub levels: Level,
    /// Levels above this one have no cells (grant/deny choice only).
    pub top_real_level: Level,
    pub threads: Vec<ThreadSpec>,
    pub nodes: Vec<NodeSpec>,
    pub queues: Vec<QueueSpec>,
}

impl Topology {
    fn for_config(config: &Config) -> Topology {
        let mut t = match config.preset {
            Preset::Root => Topology {
                levels: 1,
                top_real_level: 1,
                threads: vec![
                    ThreadSpec { name: "t", rounds: 2, path: vec![Hop { level: 1, node: 0, queue: 0 }] },
                    ThreadSpec { name: "p", rounds: 1, path: vec![Hop { level: 1, node: 1, queue: 0 }] },
                    ThreadSpec { name: "s", rounds: 1, path: vec![Hop { level: 1, node: 2, queue: 0 }] },
                ],
                nodes: vec![
                    NodeSpec { name: "t.1", level: 1, queue: 0, janitor: 0, at_true_root: true },
                    NodeSpec { name: "p.1", level: 1, queue: 0, janitor: 1, at_true_root: true },
                    NodeSpec { name: "s.1", level: 1, queue: 0, janitor: 2, at_true_root: true },
                ],
                queues: vec![QueueSpec { name: "q1", level: 1 }],
            },
            Preset::NonRoot => Topology {
                levels: 3,
                top_real_level: 2,
                threads: vec![
                    ThreadSpec {
                        name: "t1",
                        rounds: 1,
                        path: vec![
                            Hop { level: 1, node: 0, queue: 0 },
                            Hop { level: 2, node: 2, queue: 1 },
                        ],
                    },
                    ThreadSpec {
                        name: "t2",
                        rounds: 1,
                        path: vec![
                            Hop { level: 1, node: 1, queue: 0 },
                            Hop { level: 2, node: 2, queue: 1 },
                        ],
                    },
                    ThreadSpec { name: "s", rounds: 1, path: vec![Hop { level: 2, node: 3, queue: 1 }] },
                    ThreadSpec { name: "p", rounds: 1, path: vec![Hop { level: 2, node: 4, queue: 1 }] },
                ],
                nodes: vec![
                    NodeSpec { name: "t1.1", level: 1, queue: 0, janitor: 0, at_true_root: false },
                    NodeSpec { name: "t2.1", level: 1, queue: 0, janitor: 1, at_true_root: false },
                    NodeSpec { name: "X", level: 2, queue: 1, janitor: 0, at_true_root: false },
                    NodeSpec { name: "s.2", level: 2, queue: 1, janitor: 2, at_true_root: false },
                    NodeSpec { name: "p.2", level: 2, queue: 1, janitor: 3, at_true_root: false },
                ],
                queues: vec![QueueSpec { name: "q1", level: 1 }, QueueSpec { name: "q2", level: 2 }],
            },
        };
        // Apply the config's thread prefix and per-thread round overrides.
        t.threads.truncate(config.rounds.len());
        for (spec, &r) in t.threads.iter_mut().zip(&config.rounds) {
            spec.rounds = r;
        }
        // Reassign janitors for nodes whose sharers were truncated away: a
        // node with no remaining sharer never gets dirtied, but keep the
        // invariant that every janitor id is a live thread.
        let live = t.threads.len() as ThreadId;
        for n in &mut t.nodes {
            if n.janitor >= live {
                n.janitor = 0;
            }
        }
        t
    }

    pub fn node_users(&self, node: NodeId) -> Vec<ThreadId> {
        let mut users = Vec::new();
        for (tid, th) in self.threads.iter().enumerate() {
            if th.path.iter().any(|h| h.node == node) {
                users.push(tid as ThreadId);
            }
        }
        users
    }

    pub fn thread_id(&self, name: &str) -> Option<ThreadId> {
        self.threads.iter().position(|t| t.name == name).map(|i| i as ThreadId)
    }

    pub fn node_id(&self, name: &str) -> Option<NodeId> {
        self.nodes.iter().position(|n| n.name == name).map(|i| i as NodeId)
    }
}
