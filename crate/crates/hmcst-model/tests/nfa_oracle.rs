//! Independent re-derivation of every specification-table property with
//! petgraph algorithms, checked against frozen expected values, plus one
//! falsification fixture per property proving each checker can actually fail.

use std::collections::HashSet;

use petgraph::algo::{has_path_connecting, is_cyclic_directed};
use petgraph::graph::{DiGraph, NodeIndex};

use hmcst_model::error::ModelError;
use hmcst_model::nfa::{all_nfas, next_cell, nonroot_status, root_status, Nfa, NfaField, StateTag, Verdict};
use hmcst_model::values::{Actor, EdgeKind, NextTag};

/// Build a petgraph view of an NFA keeping only edges that satisfy `keep`.
fn subgraph<F: Fn(&hmcst_model::nfa::NfaEdge) -> bool>(
    nfa: &Nfa,
    keep: F,
) -> (DiGraph<(), ()>, Vec<NodeIndex>) {
    let mut g = DiGraph::new();
    let idx: Vec<NodeIndex> = nfa.states.iter().map(|_| g.add_node(())).collect();
    for e in nfa.edges.iter().filter(|e| keep(e)) {
        g.add_edge(idx[e.from], idx[e.to], ());
    }
    (g, idx)
}

/// Frozen structural expectations, hand-counted from the transition tables.
#[test]
fn frozen_shape() {
    let cases = [
        ("root-status", 10usize, 22usize, 5usize),
        ("nonroot-status", 15, 34, 6),
        ("next-cell", 5, 13, 6),
    ];
    let nfas = all_nfas();
    assert_eq!(nfas.len(), 3);
    for ((name, states, edges, begins), nfa) in cases.iter().zip(&nfas) {
        assert_eq!(nfa.name, *name);
        assert_eq!(nfa.states.len(), *states, "{name} state count");
        assert_eq!(nfa.edges.len(), *edges, "{name} edge count");
        let begin_edges =
            nfa.edges.iter().filter(|e| e.kind == EdgeKind::Begin).count();
        assert_eq!(begin_edges, *begins, "{name} begin edge count");
        assert_eq!(nfa.distinct_roles(), 3, "{name} uses all three roles");
        assert_eq!(
            nfa.states.iter().filter(|s| s.is_accept).count(),
            1,
            "{name} single accept state"
        );
        let start = &nfa.states[nfa.start()];
        assert!(start.is_accept, "{name} start is the accept state");
    }
    // Owner states are frozen by name.
    let owners = |nfa: &Nfa| -> Vec<&str> {
        nfa.owners().into_iter().map(|i| nfa.states[i].name).collect()
    };
    assert_eq!(owners(&nfas[0]), vec!["U1"]);
    assert_eq!(owners(&nfas[1]), vec!["C1", "V1"]);
    assert_eq!(owners(&nfas[2]), Vec::<&str>::new());
}

/// Property 1, independently: the begin-free subgraph of every table is acyclic.
#[test]
fn oracle_livelock_freedom() {
    for nfa in all_nfas() {
        let (g, _) = subgraph(&nfa, |e| e.kind != EdgeKind::Begin);
        assert!(!is_cyclic_directed(&g), "{}: begin-free subgraph must be acyclic", nfa.name);
        assert_eq!(nfa.check_livelock_free().unwrap(), Verdict::Holds, "{}", nfa.name);
    }
}

/// Property 2, independently: from every begin-edge target, an owner state is
/// reachable through non-timeout edges. The next-cell table has no owner
/// states and must report that instead of a verdict.
#[test]
fn oracle_starvation_freedom() {
    for nfa in [root_status(), nonroot_status()] {
        let (g, idx) = subgraph(&nfa, |e| e.kind != EdgeKind::Timeout);
        for sink in nfa.begin_sinks() {
            let served = nfa
                .owners()
                .iter()
                .any(|&o| has_path_connecting(&g, idx[sink], idx[o], None));
            assert!(served, "{}: wait state {} can starve", nfa.name, nfa.states[sink].name);
        }
        assert_eq!(nfa.check_starvation_free().unwrap(), Verdict::Holds, "{}", nfa.name);
    }
    match next_cell().check_starvation_free() {
        Err(ModelError::NoOwnerStates(name)) => assert_eq!(name, "next-cell"),
        other => panic!("expected NoOwnerStates, got {other:?}"),
    }
}

/// Property 3, independently: every owner has a nonempty own-action path to a
/// state with an outgoing begin edge.
#[test]
fn oracle_bounded_release() {
    for nfa in all_nfas() {
        let (g, idx) = subgraph(&nfa, |e| e.actor == Actor::Itself);
        let begin_sources = nfa.begin_sources();
        for o in nfa.owners() {
            let ok = nfa
                .edges
                .iter()
                .filter(|e| e.from == o && e.actor == Actor::Itself)
                .any(|e| {
                    begin_sources
                        .iter()
                        .any(|&b| has_path_connecting(&g, idx[e.to], idx[b], None))
                });
            assert!(ok, "{}: owner {} cannot relinquish alone", nfa.name, nfa.states[o].name);
        }
        assert_eq!(nfa.check_bounded_release().unwrap(), Verdict::Holds, "{}", nfa.name);
    }
}

/// Property 4, independently: every state without an outgoing begin edge can
/// reach (own non-begin actions, zero steps allowed) a state with an
/// own-action timeout.
#[test]
fn oracle_bounded_timeout() {
    for nfa in all_nfas() {
        let (g, idx) =
            subgraph(&nfa, |e| e.actor == Actor::Itself && e.kind != EdgeKind::Begin);
        let begin_sources = nfa.begin_sources();
        let timeout_sources: HashSet<usize> = nfa
            .edges
            .iter()
            .filter(|e| e.kind == EdgeKind::Timeout && e.actor == Actor::Itself)
            .map(|e| e.from)
            .collect();
        for s in 0..nfa.states.len() {
            if begin_sources.contains(&s) {
                continue;
            }
            let ok = timeout_sources
                .iter()
                .any(|&t| has_path_connecting(&g, idx[s], idx[t], None));
            assert!(ok, "{}: state {} is trapped", nfa.name, nfa.states[s].name);
        }
        assert_eq!(nfa.check_bounded_timeout().unwrap(), Verdict::Holds, "{}", nfa.name);
    }
}

/// Property 5, independently: every state can reach (own actions, zero steps
/// allowed) a state with an outgoing begin edge.
#[test]
fn oracle_deadlock_freedom() {
    for nfa in all_nfas() {
        let (g, idx) = subgraph(&nfa, |e| e.actor == Actor::Itself);
        let begin_sources = nfa.begin_sources();
        for s in 0..nfa.states.len() {
            let ok = begin_sources
                .iter()
                .any(|&b| has_path_connecting(&g, idx[s], idx[b], None));
            assert!(ok, "{}: state {} is stranded", nfa.name, nfa.states[s].name);
        }
        assert_eq!(nfa.check_deadlock_free().unwrap(), Verdict::Holds, "{}", nfa.name);
    }
}

/// Structural reachability, independently: build the explicit product graph
/// (state, begins-used ≤ 2) with petgraph and demand every edge appears.
#[test]
fn oracle_edges_within_two_begins() {
    for nfa in all_nfas() {
        let mut g: DiGraph<(), usize> = DiGraph::new();
        let n = nfa.states.len();
        let idx: Vec<NodeIndex> = (0..n * 3).map(|_| g.add_node(())).collect();
        let at = |s: usize, b: usize| idx[s * 3 + b];
        for (i, e) in nfa.edges.iter().enumerate() {
            for b in 0..3 {
                let nb = b + usize::from(e.kind == EdgeKind::Begin);
                if nb <= 2 {
                    g.add_edge(at(e.from, b), at(e.to, nb), i);
                }
            }
        }
        let start = at(nfa.start(), 0);
        let mut hit = vec![false; nfa.edges.len()];
        // Reachable product nodes, then mark their outgoing edge payloads.
        for node in g.node_indices() {
            if has_path_connecting(&g, start, node, None) {
                for edge in g.edges(node) {
                    hit[*edge.weight()] = true;
                }
            }
        }
        for (i, h) in hit.iter().enumerate() {
            assert!(
                h,
                "{}: edge {} -> {} needs more than two efforts",
                nfa.name,
                nfa.states[nfa.edges[i].from].name,
                nfa.states[nfa.edges[i].to].name
            );
        }
        assert_eq!(nfa.check_edges_within_two_begins().unwrap(), Verdict::Holds, "{}", nfa.name);
    }
}

// ---------------------------------------------------------------------------
// Falsification fixtures: one mutated table per property, each detected.
// ---------------------------------------------------------------------------

#[test]
fn fixture_livelock_cycle_detected() {
    // A normal (non-begin) edge back from S1 to M1 closes the begin-free cycle
    // S1 -> M1 -> S1.
    let bad = next_cell().with_edge("S1", "M1", Actor::Itself, EdgeKind::Normal);
    match bad.check_livelock_free().unwrap() {
        Verdict::Fails { witness } => {
            assert!(witness.contains("cycle"), "witness names the cycle: {witness}");
            assert!(witness.contains("S1") && witness.contains("M1"), "{witness}");
        }
        Verdict::Holds => panic!("cycle not detected"),
    }
}

#[test]
fn fixture_starvation_detected() {
    // Without the predecessor's pass into U1, a patient waiter at W1 can only
    // ever time out: no timeout-free path to an owner remains.
    let bad = root_status().without_edge("W1", "U1", Actor::Predecessor, EdgeKind::Normal);
    match bad.check_starvation_free().unwrap() {
        Verdict::Fails { witness } => assert!(witness.contains("W1"), "{witness}"),
        Verdict::Holds => panic!("starvation not detected"),
    }
}

#[test]
fn fixture_unbounded_release_detected() {
    // Removing both own-action exits of the root owner leaves the lock holder
    // no way to relinquish by itself.
    let bad = root_status()
        .without_edge("U1", "R1", Actor::Itself, EdgeKind::Normal)
        .without_edge("U1", "U3", Actor::Itself, EdgeKind::Timeout);
    match bad.check_bounded_release().unwrap() {
        Verdict::Fails { witness } => assert!(witness.contains("U1"), "{witness}"),
        Verdict::Holds => panic!("unbounded release not detected"),
    }
}

#[test]
fn fixture_unbounded_timeout_detected() {
    // A synthetic absorbing detour: Z is reachable, can return to the idle
    // state by itself (so nothing deadlocks), but no own-action timeout is
    // reachable from it.
    use Actor::Itself as SELF;
    use EdgeKind::Normal as NORMAL;
    let base = next_cell();
    let mut states = base.states.clone();
    states.push(hmcst_model::nfa::NfaState {
        name: "Z",
        tag: StateTag::Next(NextTag::Zero),
        is_start: false,
        is_owner: false,
        is_accept: false,
    });
    let mut bad = Nfa::build(
        "next-cell-trapped",
        NfaField::Next,
        states,
        &[("02", "Z", SELF, NORMAL, "detour in"), ("Z", "01", SELF, NORMAL, "detour out")],
    )
    .unwrap();
    bad.edges.extend(base.edges.iter().cloned());
    match bad.check_bounded_timeout().unwrap() {
        Verdict::Fails { witness } => assert!(witness.contains('Z'), "{witness}"),
        Verdict::Holds => panic!("trap not detected"),
    }
    // The same fixture keeps deadlock freedom intact: the two checks differ.
    assert_eq!(bad.check_deadlock_free().unwrap(), Verdict::Holds);
}

#[test]
fn fixture_deadlock_detected() {
    // Stripping the occupied-null state of both its own-action exits strands
    // it: no own-action route back to any begin point.
    let bad = next_cell()
        .without_edge("02", "01", Actor::Itself, EdgeKind::Normal)
        .without_edge("02", "M1", Actor::Itself, EdgeKind::Timeout);
    match bad.check_deadlock_free().unwrap() {
        Verdict::Fails { witness } => assert!(witness.contains("02"), "{witness}"),
        Verdict::Holds => panic!("stranded state not detected"),
    }
}

#[test]
fn fixture_edge_beyond_two_begins_detected() {
    // Cutting the only non-begin route into U2 leaves U2's outgoing edges
    // unreachable no matter how many efforts are spent.
    let bad = root_status().without_edge("A1", "U2", Actor::Predecessor, EdgeKind::Normal);
    match bad.check_edges_within_two_begins().unwrap() {
        Verdict::Fails { witness } => assert!(witness.contains("U2"), "{witness}"),
        Verdict::Holds => panic!("unreachable edge not detected"),
    }
}

// ---------------------------------------------------------------------------
// Structural validation of malformed tables.
// ---------------------------------------------------------------------------

#[test]
fn build_rejects_malformed_tables() {
    use Actor::Itself as SELF;
    use EdgeKind::{Begin as BEGIN, Normal as NORMAL};
    let state = |name, tag, start, accept| hmcst_model::nfa::NfaState {
        name,
        tag,
        is_start: start,
        is_owner: false,
        is_accept: accept,
    };
    let r = StateTag::Status(hmcst_model::values::StatusTag::R);
    let w = StateTag::Status(hmcst_model::values::StatusTag::W);
    let u = StateTag::Status(hmcst_model::values::StatusTag::U);

    // Duplicate state name.
    let err = Nfa::build(
        "dup",
        NfaField::Status,
        vec![state("R1", r, true, true), state("R1", r, false, false)],
        &[],
    )
    .unwrap_err();
    assert!(matches!(err, ModelError::MalformedNfa(_)), "{err}");

    // Unknown state in an edge.
    let err = Nfa::build(
        "unknown",
        NfaField::Status,
        vec![state("R1", r, true, true)],
        &[("R1", "X9", SELF, NORMAL, "")],
    )
    .unwrap_err();
    assert!(matches!(err, ModelError::MalformedNfa(_)), "{err}");

    // Begin edge not targeting a wait state (status tables only).
    let err = Nfa::build(
        "beginsink",
        NfaField::Status,
        vec![state("R1", r, true, true), state("U1", u, false, false)],
        &[("R1", "U1", SELF, BEGIN, "")],
    )
    .unwrap_err();
    assert!(matches!(err, ModelError::MalformedNfa(_)), "{err}");

    // Duplicate edge.
    let err = Nfa::build(
        "dupedge",
        NfaField::Status,
        vec![state("R1", r, true, true), state("W1", w, false, false)],
        &[("R1", "W1", SELF, BEGIN, ""), ("R1", "W1", SELF, BEGIN, "")],
    )
    .unwrap_err();
    assert!(matches!(err, ModelError::MalformedNfa(_)), "{err}");

    // A next-cell tag inside a status table.
    let err = Nfa::build(
        "wrongfield",
        NfaField::Status,
        vec![state("R1", StateTag::Next(NextTag::Zero), true, true)],
        &[],
    )
    .unwrap_err();
    assert!(matches!(err, ModelError::MalformedNfa(_)), "{err}");
}

/// The DOT export is deterministic, versioned, and names every state.
#[test]
fn dot_export_shape() {
    for nfa in all_nfas() {
        let dot = nfa.to_dot();
        assert!(dot.starts_with("// hmcst-nfa-v1\n"), "{}", nfa.name);
        assert_eq!(dot, nfa.to_dot(), "{}: deterministic bytes", nfa.name);
        for s in &nfa.states {
            assert!(dot.contains(&format!("\"{}\"", s.name)), "{}: {}", nfa.name, s.name);
        }
        assert_eq!(dot.matches(" -> ").count(), nfa.edges.len(), "{}", nfa.name);
    }
}
