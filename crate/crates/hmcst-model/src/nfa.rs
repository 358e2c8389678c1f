//! The three cell-protocol specifications as literal transition tables, plus the
//! structural checks and graph properties a healthy specification must satisfy.
//!
//! Each queue-node cell (status, next) is governed by a nondeterministic finite
//! automaton whose states refine the raw cell values with protocol context (e.g.
//! three distinct U states at the root, telling a normal owner from a posthumously
//! granted node from an impatiently released one). Edges carry the acting role
//! (the node's own tenant, a predecessor-side actor, a successor-side actor) and a
//! kind (begin of an acquisition effort, normal progress, timeout-driven).
//!
//! Conformance monitors (see `monitor`) run these tables against the labels the
//! protocol engine emits; the checkers here validate the tables themselves.

use std::collections::HashSet;
use std::fmt::Write as _;

use crate::error::ModelError;
use crate::values::{Actor, CellValue, EdgeKind, NextTag, StatusTag};

/// Which cell a specification governs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NfaField {
    Status,
    Next,
}

/// Value pattern a state matches. States refine cell values, so several states
/// may share a tag; `VOrP` is the wildcard for a posthumous grant that may carry
/// either a pass-all or a parent-prefix value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateTag {
    Status(StatusTag),
    /// Matches both ParentPrefix and PassAll status values.
    StatusVOrP,
    Next(NextTag),
}

impl StateTag {
    pub fn matches(&self, v: &CellValue) -> bool {
        match (self, v) {
            (StateTag::Status(t), CellValue::Status(s)) => s.tag() == *t,
            (StateTag::StatusVOrP, CellValue::Status(s)) => {
                matches!(s.tag(), StatusTag::P | StatusTag::V)
            }
            (StateTag::Next(t), CellValue::Next(n)) => n.tag() == *t,
            _ => false,
        }
    }
}

/// One specification state: a named, tagged refinement of a cell value.
#[derive(Debug, Clone)]
pub struct NfaState {
    pub name: &'static str,
    pub tag: StateTag,
    /// Idle/initial state of a freshly allocated node's cell.
    pub is_start: bool,
    /// Holding the lock of this level (status specifications only).
    pub is_owner: bool,
    /// Legal terminal state for a quiescent node.
    pub is_accept: bool,
}

/// One specification edge. `from`/`to` are indices into `Nfa::states`.
#[derive(Debug, Clone)]
pub struct NfaEdge {
    pub from: usize,
    pub to: usize,
    pub actor: Actor,
    pub kind: EdgeKind,
    /// Behavioral note; also rendered in exports.
    pub note: &'static str,
}

/// A cell-protocol specification: literal states and edges plus derived lookups.
#[derive(Debug, Clone)]
pub struct Nfa {
    pub name: &'static str,
    pub field: NfaField,
    pub states: Vec<NfaState>,
    pub edges: Vec<NfaEdge>,
}

/// Verdict of a single graph-property check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Fails { witness: String },
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds)
    }
}

/// Raw edge tuple used by the literal tables below.
type EdgeRow = (&'static str, &'static str, Actor, EdgeKind, &'static str);

impl Nfa {
    /// Build a specification from literal rows, resolving state names and
    /// validating structural well-formedness.
    pub fn build(
        name: &'static str,
        field: NfaField,
        states: Vec<NfaState>,
        rows: &[EdgeRow],
    ) -> Result<Nfa, ModelError> {
        let mut seen = HashSet::new();
        for s in &states {
            if s.name.is_empty() {
                return Err(ModelError::MalformedNfa(format!("{name}: empty state name")));
            }
            if !seen.insert(s.name) {
                return Err(ModelError::MalformedNfa(format!(
                    "{name}: duplicate state name {}",
                    s.name
                )));
            }
            let tag_field_ok = matches!(
                (field, &s.tag),
                (NfaField::Status, StateTag::Status(_) | StateTag::StatusVOrP)
                    | (NfaField::Next, StateTag::Next(_))
            );
            if !tag_field_ok {
                return Err(ModelError::MalformedNfa(format!(
                    "{name}: state {} tag does not belong to the {field:?} cell",
                    s.name
                )));
            }
        }
        if states.iter().filter(|s| s.is_start).count() != 1 {
            return Err(ModelError::MalformedNfa(format!(
                "{name}: exactly one start state required"
            )));
        }
        if !states.iter().any(|s| s.is_accept) {
            return Err(ModelError::MalformedNfa(format!("{name}: no accept state")));
        }

        let index = |n: &str| -> Result<usize, ModelError> {
            states
                .iter()
                .position(|s| s.name == n)
                .ok_or_else(|| ModelError::MalformedNfa(format!("{name}: unknown state {n}")))
        };
        let mut edges = Vec::with_capacity(rows.len());
        let mut edge_seen = HashSet::new();
        for &(from, to, actor, kind, note) in rows {
            let (f, t) = (index(from)?, index(to)?);
            if !edge_seen.insert((f, t, actor, kind)) {
                return Err(ModelError::MalformedNfa(format!(
                    "{name}: duplicate edge {from} -> {to} [{actor} {kind}]"
                )));
            }
            edges.push(NfaEdge { from: f, to: t, actor, kind, note });
        }

        let nfa = Nfa { name, field, states, edges };
        // Begin edges of a status specification must land on wait states: an
        // acquisition effort always starts by swapping the own status to W.
        if nfa.field == NfaField::Status {
            for e in &nfa.edges {
                if e.kind == EdgeKind::Begin
                    && nfa.states[e.to].tag != StateTag::Status(StatusTag::W)
                {
                    return Err(ModelError::MalformedNfa(format!(
                        "{name}: begin edge {} -> {} does not target a wait state",
                        nfa.states[e.from].name, nfa.states[e.to].name
                    )));
                }
            }
        }
        Ok(nfa)
    }

    pub fn start(&self) -> usize {
        self.states.iter().position(|s| s.is_start).expect("validated: one start")
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s.name == name)
    }

    /// Index of the unique edge with these endpoints, actor and kind.
    pub fn find_edge(&self, from: &str, to: &str, actor: Actor, kind: EdgeKind) -> Option<usize> {
        let f = self.state_index(from)?;
        let t = self.state_index(to)?;
        self.edges
            .iter()
            .position(|e| e.from == f && e.to == t && e.actor == actor && e.kind == kind)
    }

    /// Compact one-line rendering of an edge, for coverage listings.
    pub fn describe_edge(&self, idx: usize) -> String {
        self.edge_desc(&self.edges[idx])
    }

    /// States with an outgoing begin edge: the points where a (re-)acquisition
    /// effort may start.
    pub fn begin_sources(&self) -> HashSet<usize> {
        self.edges
            .iter()
            .filter(|e| e.kind == EdgeKind::Begin)
            .map(|e| e.from)
            .collect()
    }

    /// Targets of begin edges: the wait states an acquisition effort enters.
    pub fn begin_sinks(&self) -> HashSet<usize> {
        self.edges
            .iter()
            .filter(|e| e.kind == EdgeKind::Begin)
            .map(|e| e.to)
            .collect()
    }

    pub fn owners(&self) -> Vec<usize> {
        (0..self.states.len()).filter(|&i| self.states[i].is_owner).collect()
    }

    /// Number of distinct acting roles used by the edges (the protocol admits at
    /// most three: tenant, predecessor side, successor side).
    pub fn distinct_roles(&self) -> usize {
        self.edges.iter().map(|e| e.actor).collect::<HashSet<_>>().len()
    }

    fn edge_desc(&self, e: &NfaEdge) -> String {
        format!(
            "{} -> {} [{} {}]",
            self.states[e.from].name, self.states[e.to].name, e.actor, e.kind
        )
    }

    /// Generic BFS reachability over a filtered edge set.
    fn reach<F: Fn(&NfaEdge) -> bool>(&self, from: usize, keep: F) -> HashSet<usize> {
        let mut seen = HashSet::from([from]);
        let mut stack = vec![from];
        while let Some(s) = stack.pop() {
            for e in self.edges.iter().filter(|e| e.from == s && keep(e)) {
                if seen.insert(e.to) {
                    stack.push(e.to);
                }
            }
        }
        seen
    }

    /// Livelock freedom: the subgraph without begin edges must be acyclic, i.e.
    /// within a single acquisition effort a cell cannot revisit a context, so
    /// every infinite run needs infinitely many fresh efforts.
    pub fn check_livelock_free(&self) -> Result<Verdict, ModelError> {
        // Iterative three-color DFS with an explicit parent chain for the witness.
        #[derive(Clone, Copy, PartialEq)]
        enum Color {
            White,
            Gray,
            Black,
        }
        let keep = |e: &NfaEdge| e.kind != EdgeKind::Begin;
        let n = self.states.len();
        let mut color = vec![Color::White; n];
        let mut parent: Vec<Option<usize>> = vec![None; n];
        for root in 0..n {
            if color[root] != Color::White {
                continue;
            }
            // (state, next edge cursor)
            let mut stack = vec![(root, 0usize)];
            color[root] = Color::Gray;
            while let Some(top) = stack.last_mut() {
                let s = top.0;
                let cursor = top.1;
                top.1 += 1;
                let next_edge =
                    self.edges.iter().filter(|e| e.from == s && keep(e)).nth(cursor);
                match next_edge {
                    Some(e) => match color[e.to] {
                        Color::White => {
                            color[e.to] = Color::Gray;
                            parent[e.to] = Some(s);
                            stack.push((e.to, 0));
                        }
                        Color::Gray => {
                            // Back edge: reconstruct the cycle e.to -> ... -> s -> e.to.
                            let mut chain = vec![self.states[s].name];
                            let mut cur = s;
                            while cur != e.to {
                                cur = parent[cur].expect("gray node has parent chain");
                                chain.push(self.states[cur].name);
                            }
                            chain.reverse();
                            let witness = format!(
                                "begin-free cycle: {} -> {}",
                                chain.join(" -> "),
                                self.states[e.to].name
                            );
                            return Ok(Verdict::Fails { witness });
                        }
                        Color::Black => {}
                    },
                    None => {
                        color[s] = Color::Black;
                        stack.pop();
                    }
                }
            }
        }
        Ok(Verdict::Holds)
    }

    /// Starvation freedom: from every wait state an acquisition enters, some
    /// owner state must be reachable without any timeout edge — patience alone
    /// must suffice to be served.
    pub fn check_starvation_free(&self) -> Result<Verdict, ModelError> {
        let owners: HashSet<usize> = self.owners().into_iter().collect();
        if owners.is_empty() {
            return Err(ModelError::NoOwnerStates(self.name.to_string()));
        }
        for sink in self.begin_sinks() {
            let reach = self.reach(sink, |e| e.kind != EdgeKind::Timeout);
            if reach.is_disjoint(&owners) {
                return Ok(Verdict::Fails {
                    witness: format!(
                        "no timeout-free path from wait state {} to any owner state",
                        self.states[sink].name
                    ),
                });
            }
        }
        Ok(Verdict::Holds)
    }

    /// Bounded release: every owner state can reach a state where a new
    /// acquisition may begin using only the tenant's own actions (any kind) and
    /// at least one step — the holder can always relinquish by itself.
    pub fn check_bounded_release(&self) -> Result<Verdict, ModelError> {
        let begin_sources = self.begin_sources();
        for o in self.owners() {
            // Nonempty self-path: seed from the direct self-successors.
            let mut ok = false;
            for e in self.edges.iter().filter(|e| e.from == o && e.actor == Actor::Itself) {
                let reach = self.reach(e.to, |e| e.actor == Actor::Itself);
                if !reach.is_disjoint(&begin_sources) {
                    ok = true;
                    break;
                }
            }
            if !ok {
                return Ok(Verdict::Fails {
                    witness: format!(
                        "owner state {} has no own-action path that relinquishes",
                        self.states[o].name
                    ),
                });
            }
        }
        Ok(Verdict::Holds)
    }

    /// Bounded timeout: from every state that is not itself a point where a new
    /// acquisition may begin, the tenant alone can reach (possibly in zero
    /// steps) a state offering an own-action timeout edge — no context traps a
    /// thread without an escape hatch. Begin edges don't count toward the
    /// escape: crossing one starts a fresh effort rather than ending this one.
    pub fn check_bounded_timeout(&self) -> Result<Verdict, ModelError> {
        let begin_sources = self.begin_sources();
        let timeout_sources: HashSet<usize> = self
            .edges
            .iter()
            .filter(|e| e.kind == EdgeKind::Timeout && e.actor == Actor::Itself)
            .map(|e| e.from)
            .collect();
        for s in 0..self.states.len() {
            if begin_sources.contains(&s) {
                continue;
            }
            let reach =
                self.reach(s, |e| e.actor == Actor::Itself && e.kind != EdgeKind::Begin);
            if reach.is_disjoint(&timeout_sources) {
                return Ok(Verdict::Fails {
                    witness: format!(
                        "state {} cannot reach an own-action timeout by itself",
                        self.states[s].name
                    ),
                });
            }
        }
        Ok(Verdict::Holds)
    }

    /// Deadlock freedom: every state can reach (possibly in zero steps, by the
    /// tenant's own actions alone) a state where a new acquisition may begin —
    /// no context strands a node so its thread can never try again.
    pub fn check_deadlock_free(&self) -> Result<Verdict, ModelError> {
        let begin_sources = self.begin_sources();
        for s in 0..self.states.len() {
            let reach = self.reach(s, |e| e.actor == Actor::Itself);
            if reach.is_disjoint(&begin_sources) {
                return Ok(Verdict::Fails {
                    witness: format!(
                        "state {} has no own-action path back to a begin point",
                        self.states[s].name
                    ),
                });
            }
        }
        Ok(Verdict::Holds)
    }

    /// Every edge must be exercisable within at most two acquisition efforts:
    /// BFS over (state, begin-edges-used) pairs from the start state, marking
    /// each edge traversed with a budget of two begins.
    pub fn check_edges_within_two_begins(&self) -> Result<Verdict, ModelError> {
        let n = self.states.len();
        let mut seen = vec![[false; 3]; n];
        let mut edge_hit = vec![false; self.edges.len()];
        let mut queue = std::collections::VecDeque::from([(self.start(), 0usize)]);
        seen[self.start()][0] = true;
        while let Some((s, b)) = queue.pop_front() {
            for (i, e) in self.edges.iter().enumerate() {
                if e.from != s {
                    continue;
                }
                let nb = b + usize::from(e.kind == EdgeKind::Begin);
                if nb > 2 {
                    continue;
                }
                edge_hit[i] = true;
                if !seen[e.to][nb] {
                    seen[e.to][nb] = true;
                    queue.push_back((e.to, nb));
                }
            }
        }
        let missed: Vec<String> = edge_hit
            .iter()
            .enumerate()
            .filter(|(_, hit)| !**hit)
            .map(|(i, _)| self.edge_desc(&self.edges[i]))
            .collect();
        if missed.is_empty() {
            Ok(Verdict::Holds)
        } else {
            Ok(Verdict::Fails { witness: format!("edges beyond two efforts: {}", missed.join("; ")) })
        }
    }

    /// Deterministic DOT rendering with the versioned header line.
    pub fn to_dot(&self) -> String {
        let mut out = String::new();
        out.push_str("// hmcst-nfa-v1\n");
        let _ = writeln!(out, "digraph \"{}\" {{", self.name);
        out.push_str("  rankdir=LR;\n");
        for s in &self.states {
            let mut attrs = vec![format!("label=\"{}\"", s.name)];
            attrs.push(format!(
                "shape={}",
                if s.is_accept { "doublecircle" } else { "circle" }
            ));
            if s.is_start {
                attrs.push("penwidth=2".to_string());
            }
            if s.is_owner {
                attrs.push("style=filled".to_string());
                attrs.push("fillcolor=lightgray".to_string());
            }
            let _ = writeln!(out, "  \"{}\" [{}];", s.name, attrs.join(", "));
        }
        for e in &self.edges {
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\" [label=\"{} {}\", tooltip=\"{}\"];",
                self.states[e.from].name,
                self.states[e.to].name,
                e.actor,
                e.kind,
                e.note
            );
        }
        out.push_str("}\n");
        out
    }

    /// Remove one edge (for falsification fixtures in tests). Panics if absent.
    pub fn without_edge(mut self, from: &str, to: &str, actor: Actor, kind: EdgeKind) -> Nfa {
        let f = self.state_index(from).expect("known state");
        let t = self.state_index(to).expect("known state");
        let before = self.edges.len();
        self.edges
            .retain(|e| !(e.from == f && e.to == t && e.actor == actor && e.kind == kind));
        assert_eq!(before - 1, self.edges.len(), "edge {from}->{to} not found exactly once");
        self
    }

    /// Add one edge between existing states (for falsification fixtures).
    pub fn with_edge(mut self, from: &str, to: &str, actor: Actor, kind: EdgeKind) -> Nfa {
        let f = self.state_index(from).expect("known state");
        let t = self.state_index(to).expect("known state");
        self.edges.push(NfaEdge { from: f, to: t, actor, kind, note: "synthetic fixture edge" });
        self
    }
}

fn st(
    name: &'static str,
    tag: StateTag,
    is_start: bool,
    is_owner: bool,
    is_accept: bool,
) -> NfaState {
    NfaState { name, tag, is_start, is_owner, is_accept }
}

use Actor::{Itself as SELF, Predecessor as PRED, Successor as SUCC};
use EdgeKind::{Begin as BEGIN, Normal as NORMAL, Timeout as TIMEOUT};

/// Root-level status specification: 10 states, 22 edges. Values at the root are
/// W/A/R/U only; the U states split by context (normal owner / posthumous grant
/// on an abandoned node / impatiently released with a mark planted).
pub fn root_status() -> Nfa {
    use StateTag::Status as S;
    use StatusTag::*;
    let states = vec![
        st("R1", S(R), true, false, true), // idle, reusable
        st("W1", S(W), false, false, false), // waiting behind a predecessor for the grant
        st("W2", S(W), false, false, false), // begun and bound to serve itself (no grant coming)
        st("W3", S(W), false, false, false), // re-begun over a posthumous grant; walker still active
        st("W4", S(W), false, false, false), // re-begun over an impatiently released node (mark planted)
        st("A1", S(A), false, false, false), // abandoned in queue; a predecessor will dispose
        st("U1", S(U), false, true, false),  // owns the root
        st("U2", S(U), false, false, false), // posthumous grant parked on an abandoned node
        st("U3", S(U), false, false, false), // impatient release: grant parked for a tardy discoverer
        st("R2", S(R), false, false, false), // recycled by another party mid-effort; owner will re-enqueue
    ];
    let rows: &[EdgeRow] = &[
        ("R1", "W1", SELF, BEGIN, "fresh begin that will be served by a predecessor's pass"),
        ("R1", "W2", SELF, BEGIN, "fresh begin that will serve itself (empty queue or discovery)"),
        ("W2", "U1", SELF, NORMAL, "self-serve: take the root"),
        ("U1", "R1", SELF, NORMAL, "release retires the node (after a pass, or with nobody to pass to)"),
        ("U1", "U3", SELF, TIMEOUT, "impatient release: same access as the mark plant; grant stays parked"),
        ("U3", "R1", SUCC, NORMAL, "tardy discoverer collected the parked grant and recycles the node"),
        ("U3", "W4", SELF, BEGIN, "owner re-begins while its impatient release is still pending"),
        ("W4", "U3", SELF, TIMEOUT, "re-beginner gives up the recycle wait and restores the parked grant"),
        ("W4", "R2", SUCC, NORMAL, "tardy discoverer recycles under the re-beginner; it will re-enqueue"),
        ("W1", "U1", PRED, NORMAL, "predecessor passes the root"),
        ("W1", "A1", SELF, TIMEOUT, "waiter gives up and abandons its queue position"),
        ("A1", "U2", PRED, NORMAL, "pass lands on an abandoned node: grant parked posthumously"),
        ("A1", "W1", SELF, BEGIN, "owner re-begins on its abandoned node, inheriting the position"),
        ("U2", "R1", PRED, NORMAL, "walker reclaimed the parked grant and recycles the node"),
        ("U2", "U3", PRED, TIMEOUT, "walker plants the impatience mark; grant rides along, parked"),
        ("U2", "W3", SELF, BEGIN, "owner re-begins over the posthumous grant (stashes it)"),
        ("W3", "U2", SELF, TIMEOUT, "re-beginner gives up the recycle wait and restores the grant"),
        ("W3", "R2", PRED, NORMAL, "walker disposes beneath the re-beginner; it will re-enqueue"),
        ("W3", "R2", SUCC, NORMAL, "tardy discoverer recycles beneath the re-beginner"),
        ("R2", "U1", SELF, NORMAL, "re-enqueued with empty queue: self-serve the root"),
        ("R2", "U1", PRED, NORMAL, "re-enqueued behind a predecessor: receive the pass"),
        ("R2", "A1", SELF, TIMEOUT, "re-enqueued waiter gives up and abandons"),
    ];
    Nfa::build("root-status", NfaField::Status, states, rows).expect("literal table is valid")
}

/// Non-root status specification: 15 states, 34 edges. Adds cohort ownership
/// C(k), pass-all V(d,k) and parent-prefix P grants, and the downgrade states of
/// impatient release.
pub fn nonroot_status() -> Nfa {
    use StateTag::{Status as S, StatusVOrP as VP};
    use StatusTag::*;
    let states = vec![
        st("R1", S(R), true, false, true), // idle, reusable
        st("W1", S(W), false, false, false), // waiting behind a predecessor for a grant
        st("W2", S(W), false, false, false), // begun and bound to serve itself
        st("W3", S(W), false, false, false), // re-begun over a posthumous grant (stash dead on revert)
        st("W4", S(W), false, false, false), // inheritance dance: begin discovered own parked cohort
        st("W5", S(W), false, false, false), // re-begun over a downgraded node; discoverer pending
        st("A1", S(A), false, false, false), // abandoned in queue
        st("C1", S(C), false, true, false),  // owns this level with cohort count k
        st("P1", S(P), false, false, false), // received a parent-prefix grant; will start a fresh cohort
        st("P2", S(P), false, false, false), // downgraded after impatient release; successor recycles
        st("P3", S(P), false, false, false), // downgrade landed under a re-beginner
        st("V1", S(V), false, true, false),  // received a pass-all grant: owns this level and ancestors
        st("VP1", VP, false, false, false),  // posthumous grant (V or P) parked on an abandoned node
        st("R2", S(R), false, false, false), // recycled mid-effort; re-enqueue will find a predecessor
        st("R3", S(R), false, false, false), // recycled mid-effort; owner will serve itself on re-enqueue
    ];
    let rows: &[EdgeRow] = &[
        ("R1", "W1", SELF, BEGIN, "fresh begin that will be served by a predecessor's grant"),
        ("R1", "W2", SELF, BEGIN, "fresh begin that will serve itself (empty queue or discovery)"),
        ("W2", "C1", SELF, NORMAL, "self-serve: own the level with a fresh cohort"),
        ("C1", "R1", SELF, NORMAL, "release retires the node (after a pass, or with nobody to pass to)"),
        ("C1", "P2", SELF, TIMEOUT, "impatient release: downgrade after planting the mark"),
        ("C1", "W4", SELF, BEGIN, "begin discovers its own parked cohort (inherited level)"),
        ("W4", "C1", SELF, NORMAL, "inheritance dance: write the cohort back, level confirmed"),
        ("P2", "R1", SUCC, NORMAL, "discoverer saw the downgrade and recycles the node"),
        ("P2", "W5", SELF, BEGIN, "owner re-begins over the downgraded node"),
        ("W5", "P2", SELF, TIMEOUT, "re-beginner gives up the recycle wait; restores the downgrade"),
        ("W5", "R2", SUCC, NORMAL, "discoverer recycles under the re-beginner; predecessor awaits it"),
        ("W5", "R3", SUCC, NORMAL, "discoverer recycles under the re-beginner; it will serve itself"),
        ("R3", "C1", SELF, NORMAL, "re-enqueued with empty queue: self-serve a fresh cohort"),
        ("W1", "A1", SELF, TIMEOUT, "waiter gives up and abandons its queue position"),
        ("A1", "VP1", PRED, NORMAL, "grant lands on an abandoned node: parked posthumously"),
        ("A1", "W1", SELF, BEGIN, "owner re-begins on its abandoned node, inheriting the position"),
        ("VP1", "R1", PRED, NORMAL, "walker reclaimed the parked grant and recycles the node"),
        ("VP1", "P2", PRED, TIMEOUT, "impatient walker downgrades the parked node and leaves"),
        ("VP1", "W3", SELF, BEGIN, "owner re-begins over the posthumous grant (stashes it)"),
        ("W1", "V1", PRED, NORMAL, "pass-all grant: this level plus ancestors delivered"),
        ("V1", "R1", SELF, NORMAL, "release of a pass-all holder retires the node"),
        ("V1", "P2", SELF, TIMEOUT, "impatient release of a pass-all holder: downgrade"),
        ("W1", "P1", PRED, NORMAL, "parent-prefix grant: ancestors were released by the passer"),
        ("P1", "C1", SELF, NORMAL, "start the fresh cohort the parent-prefix grant promised"),
        ("W3", "P2", SELF, TIMEOUT, "re-beginner reverts in the mark-to-downgrade window"),
        ("W3", "P3", PRED, TIMEOUT, "walker's downgrade lands under the re-beginner"),
        ("P3", "P2", SELF, TIMEOUT, "re-beginner gives up its recycle wait over the downgrade"),
        ("P3", "R2", SUCC, NORMAL, "discoverer recycles the downgraded node; predecessor awaits"),
        ("P3", "R3", SUCC, NORMAL, "discoverer recycles the downgraded node; it will serve itself"),
        ("W3", "R2", PRED, NORMAL, "walker disposes beneath the re-beginner; predecessor awaits"),
        ("W3", "R3", PRED, NORMAL, "walker disposes beneath the re-beginner; it will serve itself"),
        ("R2", "V1", PRED, NORMAL, "re-enqueued behind a predecessor: pass-all grant arrives"),
        ("R2", "P1", PRED, NORMAL, "re-enqueued behind a predecessor: parent-prefix grant arrives"),
        ("R2", "A1", SELF, TIMEOUT, "re-enqueued waiter gives up and abandons"),
    ];
    Nfa::build("nonroot-status", NfaField::Status, states, rows).expect("literal table is valid")
}

/// Next-cell specification: 5 states, 13 edges, shared by root and non-root
/// nodes. The two null states split one occupancy from the gap between
/// occupancies; a same-value begin "ride" marks a stale cell surviving into a
/// new effort.
pub fn next_cell() -> Nfa {
    use NextTag::*;
    use StateTag::Next as N;
    let states = vec![
        st("01", N(Zero), true, false, true), // null between occupancies
        st("02", N(Zero), false, false, false), // null during an occupancy
        st("S1", N(S), false, false, false),  // successor advertised its node
        st("P1", N(P), false, false, false),  // walker parked its mark while moving past
        st("M1", N(M), false, false, false),  // impatience mark planted by a releaser
    ];
    let rows: &[EdgeRow] = &[
        ("01", "02", SELF, BEGIN, "fresh occupancy starts; cell stays null"),
        ("02", "01", SELF, NORMAL, "clean relinquish rides the own recycle write"),
        ("02", "01", PRED, NORMAL, "clean relinquish rides a walker's recycle write"),
        ("02", "S1", SUCC, NORMAL, "successor advertises its node"),
        ("S1", "02", SELF, BEGIN, "stale advertisement cleared at the start of an effort"),
        ("S1", "S1", SELF, BEGIN, "new effort begins while an advertisement is parked"),
        ("S1", "P1", PRED, NORMAL, "walker marks the cell while moving past the node"),
        ("P1", "02", SELF, BEGIN, "stale walker mark cleared at the start of an effort"),
        ("P1", "P1", SELF, BEGIN, "new effort begins while a walker mark is parked"),
        ("02", "M1", SELF, TIMEOUT, "impatient releaser plants the mark on its own node"),
        ("02", "M1", PRED, TIMEOUT, "impatient walker plants the mark on a claimed node"),
        ("M1", "M1", SELF, BEGIN, "new effort begins while the mark is pending (root only)"),
        ("M1", "S1", SUCC, NORMAL, "tardy successor's advertisement consumes the mark"),
    ];
    Nfa::build("next-cell", NfaField::Next, states, rows).expect("literal table is valid")
}

/// All three specifications in reporting order.
pub fn all_nfas() -> Vec<Nfa> {
    vec![root_status(), nonroot_status(), next_cell()]
}
