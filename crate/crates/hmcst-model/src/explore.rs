//! Exhaustive explicit-state exploration: an iterative depth-first search
//! over the engine's step function with an injective-encoding visited set.
//! Scheduling order is fixed (ascending thread id, proceed before timeout) so
//! counts, coverage, and recorded counterexamples are byte-reproducible.
//!
//! Every step re-checks the conformance monitors, the mutual-exclusion
//! witnesses and the usage-discipline bookkeeping; every state with no
//! enabled step is classified as a finished terminal (then also checked for
//! quiescence) or a deadlock. Violating steps are recorded with the
//! scheduling decisions that reach them and are not expanded further.
//! Hitting the state cap aborts with an error — never a silent truncation.

use std::collections::HashSet;

use crate::error::ModelError;
use crate::protocol::{Choice, Engine, GlobalState, NfaKind};
use crate::topology::Preset;
use crate::values::ThreadId;

/// One scheduling decision: which thread moves, and how.
pub type Decision = (ThreadId, Choice);

/// How many violating traces are retained verbatim (all are counted).
const RETAINED_VIOLATIONS: usize = 8;

#[derive(Debug, Clone)]
pub struct ViolationRecord {
    pub error: ModelError,
    /// Scheduling decisions from the initial state up to and including the
    /// violating step (or up to the stuck/non-quiescent state).
    pub decisions: Vec<Decision>,
}

#[derive(Debug, Clone)]
pub struct NfaCoverage {
    pub kind: NfaKind,
    pub nfa_name: &'static str,
    /// Whether the preset promises 100% edge coverage on this table.
    pub required: bool,
    pub covered: u32,
    pub total: u32,
    pub uncovered_idx: Vec<u16>,
    pub uncovered: Vec<String>,
}

impl NfaCoverage {
    pub fn complete(&self) -> bool {
        self.covered == self.total
    }
}

#[derive(Debug, Clone)]
pub struct ExplorationReport {
    pub config_digest: String,
    pub states_visited: u64,
    pub transitions: u64,
    pub max_depth: u64,
    pub terminal_states: u64,
    /// Step-level failures: conformance, exclusion, discipline.
    pub step_violations: u64,
    pub deadlocks: u64,
    pub nonquiescent_terminals: u64,
    /// First few violating traces in deterministic search order.
    pub violations: Vec<ViolationRecord>,
    pub coverage: Vec<NfaCoverage>,
}

impl ExplorationReport {
    pub fn violations_total(&self) -> u64 {
        self.step_violations + self.deadlocks + self.nonquiescent_terminals
    }

    pub fn passed(&self) -> bool {
        self.violations_total() == 0
    }

    pub fn required_coverage_complete(&self) -> bool {
        self.coverage.iter().filter(|c| c.required).all(|c| c.complete())
    }
}

/// Which tables the preset promises to cover completely.
fn required_kinds(preset: Preset) -> &'static [NfaKind] {
    match preset {
        Preset::Root => &[NfaKind::RootStatus, NfaKind::NextCell],
        Preset::NonRoot => &[NfaKind::NonRootStatus],
    }
}

fn kind_slot(kind: NfaKind) -> usize {
    match kind {
        NfaKind::RootStatus => 0,
        NfaKind::NonRootStatus => 1,
        NfaKind::NextCell => 2,
    }
}

/// All enabled decisions of a state in canonical scheduling order.
pub fn decisions(engine: &Engine, st: &GlobalState) -> Vec<Decision> {
    let mut out = Vec::new();
    for tid in 0..st.frames.len() as ThreadId {
        for c in engine.enabled(st, tid) {
            out.push((tid, c));
        }
    }
    out
}

struct Walker<'a> {
    engine: &'a Engine,
    visited: HashSet<Box<[u8]>>,
    covered: [u64; 3],
    report: ExplorationReport,
    path: Vec<Decision>,
}

impl<'a> Walker<'a> {
    fn record(&mut self, error: ModelError, extra: Option<Decision>) {
        let mut decisions = self.path.clone();
        if let Some(d) = extra {
            decisions.push(d);
        }
        let error = match error {
            ModelError::AssertionViolated { message, .. } => {
                let trace = decisions
                    .iter()
                    .map(|(t, c)| format!("{t} {}", c.name()))
                    .collect::<Vec<_>>()
                    .join("; ");
                ModelError::AssertionViolated { message, trace }
            }
            e => e,
        };
        if self.report.violations.len() < RETAINED_VIOLATIONS {
            self.report.violations.push(ViolationRecord { error, decisions });
        }
    }

    /// Classify a state with no enabled decision.
    fn note_leaf(&mut self, st: &GlobalState) {
        if self.engine.is_terminal(st) {
            self.report.terminal_states += 1;
            if let Err(msg) = self.engine.check_quiescent(st) {
                self.report.nonquiescent_terminals += 1;
                let err = ModelError::AssertionViolated {
                    message: format!("non-quiescent terminal state: {msg}"),
                    trace: String::new(),
                };
                self.record(err, None);
            }
        } else {
            self.report.deadlocks += 1;
            let err = self
                .engine
                .assert_no_deadlock(st)
                .expect_err("a non-terminal leaf is a deadlock by definition");
            self.record(err, None);
        }
    }
}

/// Explore every reachable state. `Err` only for the state-cap abort; all
/// property failures are recorded in the report.
pub fn explore(engine: &Engine) -> Result<ExplorationReport, ModelError> {
    let cap = engine.config.state_cap;
    let required = required_kinds(engine.config.preset);
    let mut w = Walker {
        engine,
        visited: HashSet::new(),
        covered: [0; 3],
        report: ExplorationReport {
            config_digest: engine.config.digest(),
            states_visited: 0,
            transitions: 0,
            max_depth: 0,
            terminal_states: 0,
            step_violations: 0,
            deadlocks: 0,
            nonquiescent_terminals: 0,
            violations: Vec::new(),
            coverage: Vec::new(),
        },
        path: Vec::new(),
    };

    struct Entry {
        state: GlobalState,
        moves: Vec<Decision>,
        next: usize,
    }

    let init = engine.initial_state();
    engine
        .assert_mutual_exclusion(&init)
        .expect("the initial state trivially satisfies exclusion");
    w.visited.insert(init.encode());
    w.report.states_visited = 1;
    let moves = decisions(engine, &init);
    if moves.is_empty() {
        w.note_leaf(&init);
    }
    let mut stack = vec![Entry { state: init, moves, next: 0 }];

    while let Some(top) = stack.last_mut() {
        if top.next >= top.moves.len() {
            stack.pop();
            w.path.pop();
            continue;
        }
        let (tid, choice) = top.moves[top.next];
        top.next += 1;
        match engine.step(&top.state, tid, choice) {
            Err(e) => {
                w.report.step_violations += 1;
                w.record(e, Some((tid, choice)));
            }
            Ok((child, out)) => {
                w.report.transitions += 1;
                for (kind, edge) in &out.credits {
                    w.covered[kind_slot(*kind)] |= 1 << *edge;
                }
                let enc = child.encode();
                if !w.visited.insert(enc) {
                    continue;
                }
                w.report.states_visited += 1;
                if w.report.states_visited > cap {
                    return Err(ModelError::ResourceBudgetExceeded {
                        visited: w.report.states_visited,
                        cap,
                    });
                }
                w.path.push((tid, choice));
                w.report.max_depth = w.report.max_depth.max(w.path.len() as u64);
                let moves = decisions(engine, &child);
                if moves.is_empty() {
                    w.note_leaf(&child);
                }
                stack.push(Entry { state: child, moves, next: 0 });
            }
        }
    }

    // Coverage summaries for the tables this topology instantiates.
    let has_root = engine.topo.nodes.iter().any(|n| n.at_true_root);
    let has_nonroot = engine.topo.nodes.iter().any(|n| !n.at_true_root);
    let mut kinds = Vec::new();
    if has_root {
        kinds.push(NfaKind::RootStatus);
    }
    if has_nonroot {
        kinds.push(NfaKind::NonRootStatus);
    }
    kinds.push(NfaKind::NextCell);
    for kind in kinds {
        let nfa = engine.nfas.get(kind);
        let total = nfa.edges.len() as u32;
        let bits = w.covered[kind_slot(kind)];
        let mut uncovered_idx = Vec::new();
        let mut uncovered = Vec::new();
        for i in 0..total {
            if bits & (1 << i) == 0 {
                uncovered_idx.push(i as u16);
                uncovered.push(nfa.describe_edge(i as usize));
            }
        }
        w.report.coverage.push(NfaCoverage {
            kind,
            nfa_name: nfa.name,
            required: required.contains(&kind),
            covered: total - uncovered_idx.len() as u32,
            total,
            uncovered_idx,
            uncovered,
        });
    }
    Ok(w.report)
}
