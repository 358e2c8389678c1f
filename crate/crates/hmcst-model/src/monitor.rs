//! Run-set conformance monitors: one per node cell, consuming the action labels
//! the engine emits and tracking every specification state the observed history
//! might be in. An observation no specification edge explains is a violation.
//!
//! Two histories are genuinely ambiguous for a while (a fresh begin does not yet
//! reveal whether a grant will arrive or the thread will serve itself; a
//! mid-effort recycle does not yet reveal whether the re-enqueue will find a
//! predecessor). Coverage crediting for such steps is deferred: the candidate
//! edges are parked on the node and the next label on the same cell, which
//! always collapses the set, retroactively credits the one that really ran.

use crate::error::ViolationKind;
use crate::nfa::Nfa;
use crate::values::ActionLabel;

/// Monitor state for one cell of one node. `support` is a bitmask over the
/// governing specification's states. At most one deferred attribution can be
/// outstanding (collapse always happens at the next label).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CellMonitor {
    pub support: u16,
    pub pending: Option<Pending>,
}

/// A deferred coverage attribution: up to two candidate edges, keyed by the
/// specification state each would have entered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Pending {
    pub candidates: [(u16, u16); 2], // (edge index, target state index)
    pub len: u8,
}

/// Result of feeding one label to a monitor: the new state plus the edge
/// indices that just became creditable (resolved deferrals included).
#[derive(Debug, Clone, Copy)]
pub struct Advance {
    pub monitor: CellMonitor,
    pub credits: [Option<u16>; 2],
}

impl CellMonitor {
    pub fn at_start(nfa: &Nfa) -> CellMonitor {
        CellMonitor { support: 1 << nfa.start(), pending: None }
    }

    pub fn is_singleton_start(&self, nfa: &Nfa) -> bool {
        self.support == 1 << nfa.start() && self.pending.is_none()
    }

    pub fn support_names<'a>(&self, nfa: &'a Nfa) -> Vec<&'a str> {
        (0..nfa.states.len())
            .filter(|i| self.support & (1 << i) != 0)
            .map(|i| nfa.states[i].name)
            .collect()
    }

    /// Consume one label. Violations report the most specific mismatch: no edge
    /// with these values at all, or only edges for another role, or only edges
    /// of another kind.
    pub fn advance(&self, nfa: &Nfa, label: &ActionLabel) -> Result<Advance, ViolationKind> {
        let in_support = |i: usize| self.support & (1 << i) != 0;
        let mut matched: Vec<usize> = Vec::with_capacity(2);
        let mut values_seen = false;
        let mut actor_seen = false;
        for (i, e) in nfa.edges.iter().enumerate() {
            if !in_support(e.from)
                || !nfa.states[e.from].tag.matches(&label.old)
                || !nfa.states[e.to].tag.matches(&label.new)
            {
                continue;
            }
            values_seen = true;
            if e.actor != label.actor {
                continue;
            }
            actor_seen = true;
            if e.kind == label.kind {
                matched.push(i);
            }
        }
        if matched.is_empty() {
            return Err(if !values_seen {
                ViolationKind::NoSuchEdge
            } else if !actor_seen {
                ViolationKind::WrongActor
            } else {
                ViolationKind::WrongKind
            });
        }

        let mut credits = [None, None];
        // Resolve a parked attribution: the states the matched edges depart
        // from are exactly where the cell really was.
        if let Some(p) = &self.pending {
            let mut true_from: Option<usize> = None;
            for &m in &matched {
                let f = nfa.edges[m].from;
                debug_assert!(
                    true_from.is_none() || true_from == Some(f),
                    "collapse must pin a single prior state"
                );
                true_from = Some(f);
            }
            if let Some(f) = true_from {
                for c in &p.candidates[..p.len as usize] {
                    if c.1 as usize == f {
                        credits[0] = Some(c.0);
                    }
                }
            }
        }

        let mut support = 0u16;
        for &m in &matched {
            support |= 1 << nfa.edges[m].to;
        }
        let pending = if matched.len() == 1 {
            credits[1] = Some(matched[0] as u16);
            None
        } else {
            debug_assert!(matched.len() == 2, "ambiguity is at most two-way");
            debug_assert!(credits[0].is_none(), "no chained deferrals");
            let mut candidates = [(0u16, 0u16); 2];
            for (slot, &m) in candidates.iter_mut().zip(&matched) {
                *slot = (m as u16, nfa.edges[m].to as u16);
            }
            Some(Pending { candidates, len: matched.len() as u8 })
        };
        Ok(Advance { monitor: CellMonitor { support, pending }, credits })
    }
}
