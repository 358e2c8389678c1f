//! Independent breadth-first traversal of the same step relation, used to
//! cross-check the depth-first explorer. Both traversals expand every visited
//! state exactly once under the same fixed decision order, so states,
//! transitions, per-kind violation counts and terminal counts must agree
//! exactly — any drift indicates a bug in one of them.
//!
//! The frontier expansion is a pure function of the expanded state, which
//! makes it data-parallel: with the `parallel` feature the frontier is
//! expanded with rayon and the partial results are merged sequentially, so
//! the outcome is identical to the sequential traversal.

use std::collections::HashSet;

use crate::error::ModelError;
use crate::explore::decisions;
use crate::protocol::{Engine, GlobalState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BfsOutcome {
    pub states: u64,
    pub transitions: u64,
    pub terminal_states: u64,
    pub step_violations: u64,
    pub deadlocks: u64,
    pub nonquiescent_terminals: u64,
}

/// Everything one state's expansion produces, mergeable in any order.
struct Expansion {
    children: Vec<(Box<[u8]>, GlobalState)>,
    transitions: u64,
    step_violations: u64,
    terminal: bool,
    deadlock: bool,
    nonquiescent: bool,
}

fn expand(engine: &Engine, st: &GlobalState) -> Expansion {
    let moves = decisions(engine, st);
    let mut e = Expansion {
        children: Vec::with_capacity(moves.len()),
        transitions: 0,
        step_violations: 0,
        terminal: false,
        deadlock: false,
        nonquiescent: false,
    };
    if moves.is_empty() {
        if engine.is_terminal(st) {
            e.terminal = true;
            e.nonquiescent = engine.check_quiescent(st).is_err();
        } else {
            e.deadlock = true;
        }
        return e;
    }
    for (tid, choice) in moves {
        match engine.step(st, tid, choice) {
            Err(_) => e.step_violations += 1,
            Ok((child, _)) => {
                e.transitions += 1;
                e.children.push((child.encode(), child));
            }
        }
    }
    e
}

fn traverse<F>(engine: &Engine, expand_frontier: F) -> Result<BfsOutcome, ModelError>
where
    F: Fn(&Engine, &[GlobalState]) -> Vec<Expansion>,
{
    let cap = engine.config.state_cap;
    let mut visited: HashSet<Box<[u8]>> = HashSet::new();
    let init = engine.initial_state();
    visited.insert(init.encode());
    let mut out = BfsOutcome {
        states: 1,
        transitions: 0,
        terminal_states: 0,
        step_violations: 0,
        deadlocks: 0,
        nonquiescent_terminals: 0,
    };
    let mut frontier = vec![init];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for e in expand_frontier(engine, &frontier) {
            out.transitions += e.transitions;
            out.step_violations += e.step_violations;
            out.terminal_states += e.terminal as u64;
            out.deadlocks += e.deadlock as u64;
            out.nonquiescent_terminals += e.nonquiescent as u64;
            for (enc, child) in e.children {
                if visited.insert(enc) {
                    out.states += 1;
                    if out.states > cap {
                        return Err(ModelError::ResourceBudgetExceeded {
                            visited: out.states,
                            cap,
                        });
                    }
                    next.push(child);
                }
            }
        }
        frontier = next;
    }
    Ok(out)
}

/// Sequential frontier traversal (always available).
pub fn bfs_sequential(engine: &Engine) -> Result<BfsOutcome, ModelError> {
    traverse(engine, |eng, frontier| frontier.iter().map(|st| expand(eng, st)).collect())
}

/// Rayon-parallel frontier traversal; merge order does not affect the
/// outcome, so it matches the sequential traversal exactly.
#[cfg(feature = "parallel")]
pub fn bfs_parallel(engine: &Engine) -> Result<BfsOutcome, ModelError> {
    use rayon::prelude::*;
    traverse(engine, |eng, frontier| {
        frontier.par_iter().map(|st| expand(eng, st)).collect()
    })
}

/// The preferred traversal for this build: parallel when compiled in,
/// sequential otherwise.
pub fn bfs(engine: &Engine) -> Result<BfsOutcome, ModelError> {
    #[cfg(feature = "parallel")]
    {
        bfs_parallel(engine)
    }
    #[cfg(not(feature = "parallel"))]
    {
        bfs_sequential(engine)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explore::explore;
    use crate::topology::{Config, Preset};

    #[test]
    fn breadth_and_depth_traversals_agree_on_the_flat_preset() {
        let engine = Engine::new(Config::preset(Preset::Root));
        let report = explore(&engine).expect("within cap");
        let outcome = bfs(&engine).expect("within cap");
        assert_eq!(outcome.states, report.states_visited);
        assert_eq!(outcome.transitions, report.transitions);
        assert_eq!(outcome.terminal_states, report.terminal_states);
        assert_eq!(outcome.step_violations, report.step_violations);
        assert_eq!(outcome.deadlocks, report.deadlocks);
        assert_eq!(outcome.nonquiescent_terminals, report.nonquiescent_terminals);
    }

    #[test]
    fn cap_aborts_match() {
        let mut config = Config::preset(Preset::Root);
        config.state_cap = 100;
        let engine = Engine::new(config);
        assert!(matches!(
            bfs(&engine),
            Err(ModelError::ResourceBudgetExceeded { cap: 100, .. })
        ));
    }
}
