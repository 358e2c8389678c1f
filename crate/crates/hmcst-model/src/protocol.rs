//! The small-step engine. Each thread owns a control frame and advances one
//! enabled step at a time; a step performs at most one shared-cell access.
//! Every cell write is routed through the conformance monitors, so an
//! execution either produces a stream of specification-edge credits or stops
//! at the first unexplained transition. Frames also carry witness bookkeeping
//! (levels held, acquisition/release order) that is re-checked after every
//! step, and the engine exposes fault-injection switches that break the
//! algorithm in targeted ways the detectors must catch.
//!
//! Conventions:
//! - A *round* is one acquisition attempt; abandoning consumes the round.
//! - Reads and failed compare-and-swaps consume the step's access but emit no
//!   label; only actual writes (including same-value "rides" that close or
//!   reopen a cell's occupancy) are labeled.
//! - A timeout choice is enabled only while the awaited condition is false,
//!   and it is atomic with the access it decorates.
//! - Enabledness predicates may consult monitor state (ghost knowledge); the
//!   one-access budget constrains steps, not guards.

use crate::error::ModelError;
use crate::monitor::CellMonitor;
use crate::nfa::{next_cell, nonroot_status, root_status, Nfa};
use crate::topology::{Config, RootMode, Topology};
use crate::values::{
    ActionLabel, Actor, CellValue, EdgeKind, Field, Level, NextValue, NodeId, StatusTag,
    StatusValue, ThreadId,
};

/// Which specification table a coverage credit belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NfaKind {
    RootStatus,
    NonRootStatus,
    NextCell,
}

/// The three specification tables, owned by the engine.
pub struct NfaSet {
    pub root_status: Nfa,
    pub nonroot_status: Nfa,
    pub next_cell: Nfa,
}

impl NfaSet {
    pub fn new() -> NfaSet {
        NfaSet {
            root_status: root_status(),
            nonroot_status: nonroot_status(),
            next_cell: next_cell(),
        }
    }

    pub fn get(&self, kind: NfaKind) -> &Nfa {
        match kind {
            NfaKind::RootStatus => &self.root_status,
            NfaKind::NonRootStatus => &self.nonroot_status,
            NfaKind::NextCell => &self.next_cell,
        }
    }
}

impl Default for NfaSet {
    fn default() -> Self {
        NfaSet::new()
    }
}

/// Fault injections. Each switch removes or corrupts one protocol obligation;
/// a healthy run has all of them off.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EngineOpts {
    /// Pretend the dequeue compare-and-swap succeeded without clearing the
    /// tail, leaving a dangling pointer to a retiring node.
    pub skip_dequeue_cas: bool,
    /// Drop the store that recycles a node walked over during release.
    pub drop_recycle_write: bool,
    /// Skip the observe step before recycling a discovered node, recycling it
    /// regardless of whether its releaser has finished parking it.
    pub skip_release_handshake: bool,
    /// Give up waiting for a successor without publishing the impatience
    /// mark, so the successor can never learn the grant is gone.
    pub skip_impatience_mark: bool,
    /// Understate the depth when handing a whole tenure to a successor, so
    /// the recipient re-enqueues nodes it already owns.
    pub pass_wrong_depth: bool,
}

impl EngineOpts {
    pub fn any(&self) -> bool {
        self.skip_dequeue_cas
            || self.drop_recycle_write
            || self.skip_release_handshake
            || self.skip_impatience_mark
            || self.pass_wrong_depth
    }
}

/// The scheduler-visible nondeterministic choice for one thread.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Choice {
    Proceed,
    Timeout,
}

impl Choice {
    pub fn name(self) -> &'static str {
        match self {
            Choice::Proceed => "proceed",
            Choice::Timeout => "timeout",
        }
    }

    pub fn parse(s: &str) -> Option<Choice> {
        match s {
            "proceed" => Some(Choice::Proceed),
            "timeout" => Some(Choice::Timeout),
            _ => None,
        }
    }
}

/// Lock-usage events used by the ordering witnesses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Acquire,
    Release,
    /// A release that hands the whole remaining tenure to a successor.
    Delegate,
    Abandon,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WitnessEvent {
    pub thread: ThreadId,
    /// The attempt this event belongs to (0-based).
    pub round: u8,
    pub level: Level,
    pub kind: EventKind,
}

/// Everything one step produced: the labels written (at most two, when a
/// single access also rides a second cell-protocol transition), the coverage
/// credits they earned, and witness events.
#[derive(Debug, Default, Clone)]
pub struct StepOutput {
    pub labels: Vec<ActionLabel>,
    pub credits: Vec<(NfaKind, u16)>,
    pub events: Vec<WitnessEvent>,
}

/// What a release is currently trying to deliver to a successor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gift {
    /// A plain level grant; anything above has already been released.
    Pass,
    /// The whole remaining tenure, as a ready-made pass-all value.
    Delegate(StatusValue),
}

/// Sub-stages of a release. Stages prefixed `Walk` operate on a chain of
/// abandoned successors hanging off the level currently being released.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReleaseStage {
    /// Read the entry-level next pointer to decide whether the whole tenure
    /// can be handed over in place.
    DelegCheck,
    /// Hand the whole tenure to successor `w`.
    DelegSwap { w: NodeId },
    /// Give up the cell-less top level.
    StubRelease,
    /// Read the own next pointer at the current level.
    LevelRead,
    /// Grant the current level to successor `w`.
    PassSwap { w: NodeId },
    /// Null the own next pointer before retiring the node.
    ClearNext,
    /// Retire the own node at the current level.
    OwnRecycle,
    /// Try to dequeue the own node (no successor advertised).
    TailCas,
    /// A successor beat the dequeue; wait for it to advertise, or get
    /// impatient.
    SpinAdvert,
    /// Second half of own impatience below the top queue: downgrade the own
    /// status so a discoverer can finish the disposal.
    OwnImpatience2,
    /// Read the next pointer of walked-over node `c`.
    WalkRead { c: NodeId },
    /// Mark `c`'s next pointer so late observers see the chain was claimed.
    WalkMark { c: NodeId, y: NodeId },
    /// Deliver the gift to `y`, the successor found behind `c`.
    WalkPass { c: NodeId, y: NodeId },
    /// Recycle `c` after its successor took the grant.
    WalkRecycleDelivered { c: NodeId },
    /// Recycle `c` and keep walking: `y` turned out abandoned too.
    WalkRecycleChain { c: NodeId, y: NodeId },
    /// The chain ended at `c`; try to dequeue it.
    WalkTailCas { c: NodeId },
    /// A successor beat the chain dequeue; wait on `c`, or get impatient.
    WalkSpin { c: NodeId },
    /// Recycle `c` after dequeuing the whole chain.
    WalkRecycleDisposed { c: NodeId },
    /// Second half of walker impatience below the top queue.
    WalkImpatience2 { c: NodeId },
}

/// One in-flight release: levels `0..=hop_hi` of the path are held (plus the
/// cell-less top if `stub_pending`) and are given up from the top down.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReleaseState {
    /// Highest held path hop.
    pub hop_hi: u8,
    /// Hop currently being released.
    pub cur: u8,
    /// The cell-less top level is held and not yet released.
    pub stub_pending: bool,
    /// Highest level a whole-tenure handover would cover.
    pub deleg_depth: Level,
    /// Where an interrupted entry-level walk must resume.
    pub pending_walk: Option<NodeId>,
    pub gift: Gift,
    pub stage: ReleaseStage,
}

/// Thread control points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pc {
    /// Swap Wait into the node at the current hop and dispatch on what was
    /// there.
    Begin,
    /// Clean a stale next pointer, then swap the tail to enqueue.
    ResetOrEnqueue,
    /// The queue was empty: take ownership directly.
    SelfOwn,
    /// Tell predecessor `pred` we are behind it.
    Advertise { pred: NodeId },
    /// Wait for a grant value to land in the own status cell.
    AwaitGrant,
    /// Convert a prefix grant into ownership.
    PromoteAfterP,
    /// Re-assert an inherited cohort value after the handover dance.
    DanceBack { cohort: u8 },
    /// Wait for a helper to recycle the node we re-begun over.
    AwaitRecycle,
    /// Observe a predecessor that parked behind an impatience mark before
    /// recycling it.
    DiscoverRead { pred: NodeId },
    /// Recycle the parked predecessor and take over the queue head.
    DiscoverRecycle { pred: NodeId },
    /// The cell-less top level: granted or denied by fiat.
    Stub,
    /// The critical section.
    Cs,
    Release(ReleaseState),
    /// Rounds are over: scrub stale cells on the nodes this thread janitors.
    Drain,
    Done,
}

/// One thread's control frame, including witness bookkeeping for the current
/// round: `held` is a bitmask of levels, acquisitions must ascend, releases
/// must descend, and no acquisition may follow a release.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Frame {
    pub pc: Pc,
    /// Completed rounds (attempts).
    pub round: u8,
    /// Index into the thread's hop path.
    pub hop: u8,
    /// Entry-level chain position, bounding whole-tenure handovers.
    pub cohort: u8,
    /// Highest level covered by a received whole-tenure grant, 0 if none.
    pub gift_depth: Level,
    /// The value a re-begin displaced, for restoring on a revert.
    pub stash: Option<StatusValue>,
    /// Bitmask of levels currently held.
    pub held: u8,
    pub acq_last: Level,
    pub rel_floor: Level,
    pub seen_release: bool,
}

impl Frame {
    fn new(rounds: u8) -> Frame {
        Frame {
            pc: if rounds > 0 { Pc::Begin } else { Pc::Drain },
            round: 0,
            hop: 0,
            cohort: 0,
            gift_depth: 0,
            stash: None,
            held: 0,
            acq_last: 0,
            rel_floor: Level::MAX,
            seen_release: false,
        }
    }

    fn acquire(
        &mut self,
        tid: ThreadId,
        level: Level,
        out: &mut StepOutput,
    ) -> Result<(), ModelError> {
        if self.seen_release {
            return Err(assertion(format!(
                "thread {tid} acquired level {level} after already releasing in this round"
            )));
        }
        if level <= self.acq_last {
            return Err(assertion(format!(
                "thread {tid} acquired level {level} out of ascending order (last {})",
                self.acq_last
            )));
        }
        self.held |= 1 << level;
        self.acq_last = level;
        out.events.push(WitnessEvent { thread: tid, round: self.round, level, kind: EventKind::Acquire });
        Ok(())
    }

    fn release(
        &mut self,
        tid: ThreadId,
        level: Level,
        kind: EventKind,
        out: &mut StepOutput,
    ) -> Result<(), ModelError> {
        if level >= self.rel_floor {
            return Err(assertion(format!(
                "thread {tid} released level {level} out of descending order (floor {})",
                self.rel_floor
            )));
        }
        if self.held & (1 << level) == 0 {
            return Err(assertion(format!(
                "thread {tid} released level {level} it does not hold"
            )));
        }
        self.seen_release = true;
        self.rel_floor = level;
        self.held &= !(1 << level);
        out.events.push(WitnessEvent { thread: tid, round: self.round, level, kind });
        Ok(())
    }

    fn end_round(&mut self, tid: ThreadId, rounds: u8) -> Result<(), ModelError> {
        if self.held != 0 {
            return Err(assertion(format!(
                "thread {tid} ended a round still holding levels (mask {:#x})",
                self.held
            )));
        }
        self.round += 1;
        self.hop = 0;
        self.cohort = 0;
        self.gift_depth = 0;
        self.stash = None;
        self.acq_last = 0;
        self.rel_floor = Level::MAX;
        self.seen_release = false;
        self.pc = if self.round < rounds { Pc::Begin } else { Pc::Drain };
        Ok(())
    }
}

fn assertion(message: String) -> ModelError {
    ModelError::AssertionViolated { message, trace: String::new() }
}

/// The full shared state: cell values, the conformance-monitor state of every
/// cell (embedded so visited-state pruning cannot merge histories with
/// different pending attributions), queue tails and thread frames.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlobalState {
    pub status: Vec<StatusValue>,
    pub next: Vec<NextValue>,
    pub smon: Vec<CellMonitor>,
    pub nmon: Vec<CellMonitor>,
    pub tails: Vec<Option<NodeId>>,
    pub frames: Vec<Frame>,
}

fn push_status_value(buf: &mut Vec<u8>, v: Option<StatusValue>) {
    let (d, b1, b2) = match v {
        None => (0u8, 0u8, 0u8),
        Some(StatusValue::Wait) => (1, 0, 0),
        Some(StatusValue::Abandoned) => (2, 0, 0),
        Some(StatusValue::Recycled) => (3, 0, 0),
        Some(StatusValue::UnlockedRoot) => (4, 0, 0),
        Some(StatusValue::Cohort(k)) => (5, k, 0),
        Some(StatusValue::ParentPrefix) => (6, 0, 0),
        Some(StatusValue::PassAll { depth, count }) => (7, depth, count),
    };
    buf.extend_from_slice(&[d, b1, b2]);
}

impl GlobalState {
    /// Injective fixed-width byte encoding, used as the visited-set key.
    pub fn encode(&self) -> Box<[u8]> {
        let mut buf = Vec::with_capacity(
            self.status.len() * 13 + self.tails.len() + self.frames.len() * 26,
        );
        for v in &self.status {
            push_status_value(&mut buf, Some(*v));
        }
        for v in &self.next {
            let (d, b) = match v {
                NextValue::Null => (0u8, 0u8),
                NextValue::Successor(n) => (1, *n),
                NextValue::PredecessorMark(n) => (2, *n),
                NextValue::ImpatienceMark => (3, 0),
            };
            buf.extend_from_slice(&[d, b]);
        }
        for m in &self.smon {
            buf.extend_from_slice(&m.support.to_le_bytes());
            let mut block = [0u8; 5];
            if let Some(p) = &m.pending {
                block[0] = p.len;
                for (i, (e, t)) in p.candidates[..p.len as usize].iter().enumerate() {
                    block[1 + 2 * i] = *e as u8;
                    block[2 + 2 * i] = *t as u8;
                }
            }
            buf.extend_from_slice(&block);
        }
        for m in &self.nmon {
            debug_assert!(m.pending.is_none(), "next-cell monitoring never defers");
            buf.push(m.support as u8);
        }
        for t in &self.tails {
            buf.push(t.unwrap_or(0xff));
        }
        for f in &self.frames {
            buf.extend_from_slice(&[
                f.round,
                f.hop,
                f.cohort,
                f.gift_depth,
                f.held,
                f.acq_last,
                f.rel_floor,
                f.seen_release as u8,
            ]);
            push_status_value(&mut buf, f.stash);
            let (pc_d, pc_p) = match f.pc {
                Pc::Begin => (0u8, 0u8),
                Pc::ResetOrEnqueue => (1, 0),
                Pc::SelfOwn => (2, 0),
                Pc::Advertise { pred } => (3, pred),
                Pc::AwaitGrant => (4, 0),
                Pc::PromoteAfterP => (5, 0),
                Pc::DanceBack { cohort } => (6, cohort),
                Pc::AwaitRecycle => (7, 0),
                Pc::DiscoverRead { pred } => (8, pred),
                Pc::DiscoverRecycle { pred } => (9, pred),
                Pc::Stub => (10, 0),
                Pc::Cs => (11, 0),
                Pc::Release(_) => (12, 0),
                Pc::Drain => (13, 0),
                Pc::Done => (14, 0),
            };
            buf.extend_from_slice(&[pc_d, pc_p]);
            let mut rel_block = [0u8; 13];
            if let Pc::Release(r) = f.pc {
                rel_block[0] = 1;
                rel_block[1] = r.hop_hi;
                rel_block[2] = r.cur;
                rel_block[3] = r.stub_pending as u8;
                rel_block[4] = r.deleg_depth;
                rel_block[5] = r.pending_walk.map_or(0xff, |n| n);
                match r.gift {
                    Gift::Pass => rel_block[6] = 0,
                    Gift::Delegate(v) => {
                        rel_block[6] = 1;
                        let mut tmp = Vec::with_capacity(3);
                        push_status_value(&mut tmp, Some(v));
                        rel_block[7..10].copy_from_slice(&tmp);
                    }
                }
                let (sd, s1, s2) = match r.stage {
                    ReleaseStage::DelegCheck => (0u8, 0u8, 0u8),
                    ReleaseStage::DelegSwap { w } => (1, w, 0),
                    ReleaseStage::StubRelease => (2, 0, 0),
                    ReleaseStage::LevelRead => (3, 0, 0),
                    ReleaseStage::PassSwap { w } => (4, w, 0),
                    ReleaseStage::ClearNext => (5, 0, 0),
                    ReleaseStage::OwnRecycle => (6, 0, 0),
                    ReleaseStage::TailCas => (7, 0, 0),
                    ReleaseStage::SpinAdvert => (8, 0, 0),
                    ReleaseStage::OwnImpatience2 => (9, 0, 0),
                    ReleaseStage::WalkRead { c } => (10, c, 0),
                    ReleaseStage::WalkMark { c, y } => (11, c, y),
                    ReleaseStage::WalkPass { c, y } => (12, c, y),
                    ReleaseStage::WalkRecycleDelivered { c } => (13, c, 0),
                    ReleaseStage::WalkRecycleChain { c, y } => (14, c, y),
                    ReleaseStage::WalkTailCas { c } => (15, c, 0),
                    ReleaseStage::WalkSpin { c } => (16, c, 0),
                    ReleaseStage::WalkRecycleDisposed { c } => (17, c, 0),
                    ReleaseStage::WalkImpatience2 { c } => (18, c, 0),
                };
                rel_block[10] = sd;
                rel_block[11] = s1;
                rel_block[12] = s2;
            }
            buf.extend_from_slice(&rel_block);
        }
        buf.into_boxed_slice()
    }
}

/// What a draining janitor would do next on its nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum DrainAction {
    /// Null a stale successor/mark left on a retired node.
    Scrub(NodeId),
    /// Close the still-open next-cell occupancy of a retired node.
    Close(NodeId),
    /// Everything is clean: the thread is done.
    Retire,
}

/// Precomputed state bitmasks for the monitor-guided enabledness checks.
struct Masks {
    root_w3: u16,
    root_w4: u16,
    nr_w3: u16,
    nr_w5: u16,
    nr_p2: u16,
    nr_p3: u16,
    nr_vp1: u16,
    next_mid: u16,
}

pub struct Engine {
    pub config: Config,
    pub topo: Topology,
    pub nfas: NfaSet,
    pub opts: EngineOpts,
    masks: Masks,
}

impl Engine {
    pub fn new(config: Config) -> Engine {
        Engine::with_opts(config, EngineOpts::default())
    }

    pub fn with_opts(config: Config, opts: EngineOpts) -> Engine {
        let topo = config.topology();
        let nfas = NfaSet::new();
        let bit = |nfa: &Nfa, name: &str| -> u16 {
            1 << nfa.state_index(name).unwrap_or_else(|| panic!("state {name} missing"))
        };
        let masks = Masks {
            root_w3: bit(&nfas.root_status, "W3"),
            root_w4: bit(&nfas.root_status, "W4"),
            nr_w3: bit(&nfas.nonroot_status, "W3"),
            nr_w5: bit(&nfas.nonroot_status, "W5"),
            nr_p2: bit(&nfas.nonroot_status, "P2"),
            nr_p3: bit(&nfas.nonroot_status, "P3"),
            nr_vp1: bit(&nfas.nonroot_status, "VP1"),
            next_mid: bit(&nfas.next_cell, "02"),
        };
        Engine { config, topo, nfas, opts, masks }
    }

    pub fn initial_state(&self) -> GlobalState {
        let n = self.topo.nodes.len();
        GlobalState {
            status: vec![StatusValue::Recycled; n],
            next: vec![NextValue::Null; n],
            smon: (0..n).map(|i| CellMonitor::at_start(self.status_nfa(i as NodeId).1)).collect(),
            nmon: vec![CellMonitor::at_start(&self.nfas.next_cell); n],
            tails: vec![None; self.topo.queues.len()],
            frames: self.topo.threads.iter().map(|t| Frame::new(t.rounds)).collect(),
        }
    }

    pub fn is_terminal(&self, st: &GlobalState) -> bool {
        st.frames.iter().all(|f| f.pc == Pc::Done)
    }

    /// Full quiescence: every node retired and fully cleaned, every queue
    /// empty, every monitor back at its start state with nothing pending.
    pub fn check_quiescent(&self, st: &GlobalState) -> Result<(), String> {
        for (i, node) in self.topo.nodes.iter().enumerate() {
            if st.status[i] != StatusValue::Recycled {
                return Err(format!("node {} ends with status {}", node.name, st.status[i]));
            }
            if st.next[i] != NextValue::Null {
                return Err(format!("node {} ends with next {}", node.name, st.next[i]));
            }
            if !st.smon[i].is_singleton_start(self.status_nfa(i as NodeId).1) {
                return Err(format!("node {} status monitor not at start", node.name));
            }
            if !st.nmon[i].is_singleton_start(&self.nfas.next_cell) {
                return Err(format!("node {} next monitor not at start", node.name));
            }
        }
        for (qi, t) in st.tails.iter().enumerate() {
            if t.is_some() {
                return Err(format!("queue {} ends non-empty", self.topo.queues[qi].name));
            }
        }
        Ok(())
    }

    fn status_nfa(&self, node: NodeId) -> (NfaKind, &Nfa) {
        if self.topo.nodes[node as usize].at_true_root {
            (NfaKind::RootStatus, &self.nfas.root_status)
        } else {
            (NfaKind::NonRootStatus, &self.nfas.nonroot_status)
        }
    }

    fn at_true_root(&self, node: NodeId) -> bool {
        self.topo.nodes[node as usize].at_true_root
    }

    fn has_stub(&self) -> bool {
        self.topo.levels > self.topo.top_real_level
    }

    /// True while some impatient walker has marked `node` but has not yet
    /// discharged its level ownership into the parked value.
    fn walker_discharging(&self, st: &GlobalState, node: NodeId) -> bool {
        st.frames.iter().any(|f| {
            matches!(f.pc, Pc::Release(rel)
                if matches!(rel.stage, ReleaseStage::WalkImpatience2 { c } if c == node))
        })
    }

    /// The value a plain pass delivers into this queue: full ownership at the
    /// top queue, a prefix grant everywhere else.
    fn grant_value(&self, node: NodeId) -> StatusValue {
        if self.at_true_root(node) {
            StatusValue::UnlockedRoot
        } else {
            StatusValue::ParentPrefix
        }
    }

    /// A write to a node on the writer's own path is always a self action,
    /// whatever queue relationship the control flow believed it had.
    fn actor_for(&self, tid: ThreadId, node: NodeId, role: Actor) -> Actor {
        if self.topo.threads[tid as usize].path.iter().any(|h| h.node == node) {
            Actor::Itself
        } else {
            role
        }
    }

    // The parameters mirror the emitted label's fields one-to-one; grouping
    // them into a struct would just move the same list to every call site.
    #[allow(clippy::too_many_arguments)]
    fn emit_status(
        &self,
        st: &mut GlobalState,
        out: &mut StepOutput,
        tid: ThreadId,
        node: NodeId,
        new: StatusValue,
        role: Actor,
        kind: EdgeKind,
    ) -> Result<(), ModelError> {
        let actor = self.actor_for(tid, node, role);
        let old = st.status[node as usize];
        let label = ActionLabel {
            node,
            field: Field::Status,
            old: CellValue::Status(old),
            new: CellValue::Status(new),
            actor,
            kind,
        };
        let (nk, nfa) = self.status_nfa(node);
        let adv = st.smon[node as usize]
            .advance(nfa, &label)
            .map_err(|kind| ModelError::Violation { kind, label })?;
        st.smon[node as usize] = adv.monitor;
        st.status[node as usize] = new;
        out.labels.push(label);
        out.credits.extend(adv.credits.iter().flatten().map(|&e| (nk, e)));
        Ok(())
    }

    fn ride_status(
        &self,
        st: &mut GlobalState,
        out: &mut StepOutput,
        tid: ThreadId,
        node: NodeId,
        role: Actor,
        kind: EdgeKind,
    ) -> Result<(), ModelError> {
        let v = st.status[node as usize];
        self.emit_status(st, out, tid, node, v, role, kind)
    }

    #[allow(clippy::too_many_arguments)]
    fn emit_next(
        &self,
        st: &mut GlobalState,
        out: &mut StepOutput,
        tid: ThreadId,
        node: NodeId,
        new: NextValue,
        role: Actor,
        kind: EdgeKind,
    ) -> Result<(), ModelError> {
        let actor = self.actor_for(tid, node, role);
        let old = st.next[node as usize];
        let label = ActionLabel {
            node,
            field: Field::Next,
            old: CellValue::Next(old),
            new: CellValue::Next(new),
            actor,
            kind,
        };
        let adv = st.nmon[node as usize]
            .advance(&self.nfas.next_cell, &label)
            .map_err(|kind| ModelError::Violation { kind, label })?;
        st.nmon[node as usize] = adv.monitor;
        st.next[node as usize] = new;
        out.labels.push(label);
        out.credits.extend(adv.credits.iter().flatten().map(|&e| (NfaKind::NextCell, e)));
        Ok(())
    }

    fn ride_next(
        &self,
        st: &mut GlobalState,
        out: &mut StepOutput,
        tid: ThreadId,
        node: NodeId,
        role: Actor,
        kind: EdgeKind,
    ) -> Result<(), ModelError> {
        let v = st.next[node as usize];
        self.emit_next(st, out, tid, node, v, role, kind)
    }

    fn drain_action(&self, st: &GlobalState, tid: ThreadId) -> Option<DrainAction> {
        for (ni, node) in self.topo.nodes.iter().enumerate() {
            if node.janitor != tid {
                continue;
            }
            let rounds_over = |u: &ThreadId| {
                matches!(st.frames[*u as usize].pc, Pc::Drain | Pc::Done)
            };
            if !self.topo.node_users(ni as NodeId).iter().all(rounds_over) {
                return None;
            }
            if st.status[ni] != StatusValue::Recycled {
                return None;
            }
            match st.next[ni] {
                NextValue::Successor(_) | NextValue::PredecessorMark(_) => {
                    return Some(DrainAction::Scrub(ni as NodeId));
                }
                NextValue::ImpatienceMark => return None,
                NextValue::Null => {
                    if st.nmon[ni].support == self.masks.next_mid {
                        return Some(DrainAction::Close(ni as NodeId));
                    }
                }
            }
        }
        Some(DrainAction::Retire)
    }

    /// Whether the revert timeout is available while waiting for a recycle,
    /// based on the monitor context the re-begin left on the own node.
    fn revert_enabled(&self, st: &GlobalState, node: NodeId) -> bool {
        let support = st.smon[node as usize].support;
        if self.at_true_root(node) {
            if support == self.masks.root_w3 {
                st.next[node as usize] == NextValue::Null
            } else {
                support == self.masks.root_w4
            }
        } else if support == self.masks.nr_w3 {
            st.next[node as usize] == NextValue::ImpatienceMark
        } else {
            support == self.masks.nr_w5 || support == self.masks.nr_p3
        }
    }

    /// The choices `tid` can take, proceed before timeout. Empty for a thread
    /// that is done or blocked on a condition only others can change.
    pub fn enabled(&self, st: &GlobalState, tid: ThreadId) -> Vec<Choice> {
        let ti = tid as usize;
        if ti >= st.frames.len() {
            return Vec::new();
        }
        let f = &st.frames[ti];
        let path = &self.topo.threads[ti].path;
        match f.pc {
            Pc::Done => Vec::new(),
            Pc::Begin => {
                let node = path[f.hop as usize].node;
                if !self.at_true_root(node)
                    && st.next[node as usize] == NextValue::ImpatienceMark
                {
                    Vec::new()
                } else {
                    vec![Choice::Proceed]
                }
            }
            Pc::ResetOrEnqueue
            | Pc::SelfOwn
            | Pc::Advertise { .. }
            | Pc::PromoteAfterP
            | Pc::DanceBack { .. }
            | Pc::DiscoverRecycle { .. }
            | Pc::Cs => vec![Choice::Proceed],
            Pc::AwaitGrant => {
                let node = path[f.hop as usize].node;
                match st.status[node as usize].tag() {
                    StatusTag::U | StatusTag::V | StatusTag::P => vec![Choice::Proceed],
                    _ => vec![Choice::Timeout],
                }
            }
            Pc::AwaitRecycle => {
                let node = path[f.hop as usize].node;
                if st.status[node as usize] == StatusValue::Recycled {
                    vec![Choice::Proceed]
                } else if self.revert_enabled(st, node) {
                    vec![Choice::Timeout]
                } else {
                    Vec::new()
                }
            }
            Pc::DiscoverRead { pred } => {
                // The discoverer may withdraw a parked prefix only once the
                // cell shows a prefix value AND the impatient walker that
                // planted the mark has discharged its level into the cell;
                // before that the parked value is not yet backed by
                // ownership.
                let gate = self.opts.skip_release_handshake
                    || (st.smon[pred as usize].support
                        & !(self.masks.nr_p2 | self.masks.nr_p3)
                        == 0
                        && !self.walker_discharging(st, pred));
                if gate {
                    vec![Choice::Proceed]
                } else {
                    Vec::new()
                }
            }
            Pc::Stub => {
                if self.config.root_mode == RootMode::NondeterministicAbandon {
                    vec![Choice::Proceed, Choice::Timeout]
                } else {
                    vec![Choice::Proceed]
                }
            }
            Pc::Release(rel) => match rel.stage {
                ReleaseStage::SpinAdvert => {
                    let own = path[rel.cur as usize].node;
                    if st.next[own as usize] != NextValue::Null {
                        vec![Choice::Proceed]
                    } else {
                        vec![Choice::Timeout]
                    }
                }
                ReleaseStage::WalkSpin { c } => {
                    if st.next[c as usize] != NextValue::Null {
                        vec![Choice::Proceed]
                    } else {
                        vec![Choice::Timeout]
                    }
                }
                _ => vec![Choice::Proceed],
            },
            Pc::Drain => {
                if self.drain_action(st, tid).is_some() {
                    vec![Choice::Proceed]
                } else {
                    Vec::new()
                }
            }
        }
    }

    /// Mutual-exclusion witnesses, re-checked after every step: at most one
    /// holder per queue, at most one holder of the cell-less top level, at
    /// most one thread in the critical section. Violations name the offending
    /// threads and level.
    pub fn assert_mutual_exclusion(&self, st: &GlobalState) -> Result<(), ModelError> {
        let name = |ti: usize| self.topo.threads[ti].name;
        for (qi, q) in self.topo.queues.iter().enumerate() {
            let mut holders: Vec<usize> = Vec::new();
            for (ti, th) in self.topo.threads.iter().enumerate() {
                if let Some(h) = th.path.iter().find(|h| h.queue == qi) {
                    if st.frames[ti].held & (1 << h.level) != 0 {
                        holders.push(ti);
                    }
                }
            }
            if holders.len() > 1 {
                return Err(assertion(format!(
                    "threads {} and {} simultaneously hold queue {} (level {})",
                    name(holders[0]),
                    name(holders[1]),
                    q.name,
                    q.level
                )));
            }
        }
        if self.has_stub() {
            let top = self.topo.levels;
            let holders: Vec<usize> = st
                .frames
                .iter()
                .enumerate()
                .filter(|(_, f)| f.held & (1 << top) != 0)
                .map(|(ti, _)| ti)
                .collect();
            if holders.len() > 1 {
                return Err(assertion(format!(
                    "threads {} and {} simultaneously hold the top level {}",
                    name(holders[0]),
                    name(holders[1]),
                    top
                )));
            }
        }
        let in_cs: Vec<usize> = st
            .frames
            .iter()
            .enumerate()
            .filter(|(_, f)| f.pc == Pc::Cs)
            .map(|(ti, _)| ti)
            .collect();
        if in_cs.len() > 1 {
            return Err(assertion(format!(
                "threads {} and {} simultaneously in the critical section",
                name(in_cs[0]),
                name(in_cs[1])
            )));
        }
        Ok(())
    }

    /// Ok iff the state is finished (all threads done) or some thread still
    /// has an enabled step.
    pub fn assert_no_deadlock(&self, st: &GlobalState) -> Result<(), ModelError> {
        if self.is_terminal(st) {
            return Ok(());
        }
        for tid in 0..st.frames.len() as u8 {
            if !self.enabled(st, tid).is_empty() {
                return Ok(());
            }
        }
        let stuck: Vec<String> = st
            .frames
            .iter()
            .enumerate()
            .filter(|(_, f)| f.pc != Pc::Done)
            .map(|(ti, f)| format!("{} at {:?}", self.topo.threads[ti].name, f.pc))
            .collect();
        Err(assertion(format!("deadlock: no enabled step ({})", stuck.join("; "))))
    }

    fn enter_release(&self, tid: ThreadId, f: &mut Frame, hop_hi: u8) {
        let path = &self.topo.threads[tid as usize].path;
        let stub_pending = self.has_stub() && f.held & (1 << self.topo.levels) != 0;
        let deleg_depth = if stub_pending { self.topo.levels } else { path[hop_hi as usize].level };
        let stage = if !self.at_true_root(path[0].node) {
            ReleaseStage::DelegCheck
        } else if stub_pending {
            ReleaseStage::StubRelease
        } else {
            ReleaseStage::LevelRead
        };
        f.pc = Pc::Release(ReleaseState {
            hop_hi,
            cur: hop_hi,
            stub_pending,
            deleg_depth,
            pending_walk: None,
            gift: Gift::Pass,
            stage,
        });
    }

    fn ascend(
        &self,
        tid: ThreadId,
        f: &mut Frame,
        out: &mut StepOutput,
    ) -> Result<(), ModelError> {
        let path_len = self.topo.threads[tid as usize].path.len() as u8;
        f.hop += 1;
        if f.hop < path_len {
            f.pc = Pc::Begin;
        } else if self.has_stub() {
            if f.gift_depth == self.topo.levels {
                f.acquire(tid, self.topo.levels, out)?;
                f.pc = Pc::Cs;
            } else {
                f.pc = Pc::Stub;
            }
        } else {
            f.pc = Pc::Cs;
        }
        Ok(())
    }

    pub fn step(
        &self,
        st: &GlobalState,
        tid: ThreadId,
        choice: Choice,
    ) -> Result<(GlobalState, StepOutput), ModelError> {
        if tid as usize >= st.frames.len() {
            return Err(ModelError::UnknownThread(tid));
        }
        let en = self.enabled(st, tid);
        if !en.contains(&choice) {
            return Err(ModelError::IllegalStep {
                thread: tid,
                choice: choice.name().to_string(),
                reason: format!(
                    "at {:?} the enabled choices are {:?}",
                    st.frames[tid as usize].pc,
                    en.iter().map(|c| c.name()).collect::<Vec<_>>()
                ),
            });
        }
        let mut st = st.clone();
        let mut out = StepOutput::default();
        self.apply(&mut st, &mut out, tid, choice)?;
        self.assert_mutual_exclusion(&st)?;
        Ok((st, out))
    }

    fn apply(
        &self,
        st: &mut GlobalState,
        out: &mut StepOutput,
        tid: ThreadId,
        choice: Choice,
    ) -> Result<(), ModelError> {
        let ti = tid as usize;
        let thread = &self.topo.threads[ti];
        let rounds = thread.rounds;
        let mut f = st.frames[ti];
        let hop = thread.path.get(f.hop as usize).copied();
        match f.pc {
            Pc::Begin => {
                let h = hop.expect("begin frame always points at a real hop");
                let node = h.node;
                let old = st.status[node as usize];
                if old == StatusValue::Wait {
                    return Err(assertion(format!(
                        "thread {tid} began over a node still marked waiting"
                    )));
                }
                self.emit_status(
                    st, out, tid, node, StatusValue::Wait, Actor::Itself, EdgeKind::Begin,
                )?;
                match st.next[node as usize] {
                    NextValue::Null => {
                        if old == StatusValue::Recycled {
                            self.ride_next(st, out, tid, node, Actor::Itself, EdgeKind::Begin)?;
                        }
                    }
                    _ => {
                        self.ride_next(st, out, tid, node, Actor::Itself, EdgeKind::Begin)?;
                    }
                }
                f.pc = match old {
                    StatusValue::Recycled => Pc::ResetOrEnqueue,
                    StatusValue::Abandoned => Pc::AwaitGrant,
                    StatusValue::Cohort(k) => {
                        if h.level <= f.gift_depth {
                            Pc::DanceBack { cohort: k }
                        } else {
                            // The node sits above any grant this thread
                            // received, so it must be treated as fresh.
                            Pc::ResetOrEnqueue
                        }
                    }
                    StatusValue::UnlockedRoot
                    | StatusValue::PassAll { .. }
                    | StatusValue::ParentPrefix => {
                        f.stash = Some(old);
                        Pc::AwaitRecycle
                    }
                    StatusValue::Wait => unreachable!(),
                };
            }
            Pc::ResetOrEnqueue => {
                let h = hop.expect("enqueue frame always points at a real hop");
                let node = h.node;
                match st.next[node as usize] {
                    NextValue::Successor(_) | NextValue::PredecessorMark(_) => {
                        self.emit_next(
                            st, out, tid, node, NextValue::Null, Actor::Itself, EdgeKind::Begin,
                        )?;
                    }
                    NextValue::Null => {
                        let prev = st.tails[h.queue];
                        st.tails[h.queue] = Some(node);
                        f.pc = match prev {
                            None => Pc::SelfOwn,
                            Some(p) => Pc::Advertise { pred: p },
                        };
                    }
                    NextValue::ImpatienceMark => {
                        return Err(assertion(format!(
                            "thread {tid} tried to enqueue with an impatience mark pending"
                        )));
                    }
                }
            }
            Pc::SelfOwn => {
                let h = hop.expect("self-own frame always points at a real hop");
                let node = h.node;
                let new = if self.at_true_root(node) {
                    StatusValue::UnlockedRoot
                } else {
                    StatusValue::Cohort(1)
                };
                self.emit_status(st, out, tid, node, new, Actor::Itself, EdgeKind::Normal)?;
                if f.hop == 0 {
                    f.cohort = 1;
                }
                f.acquire(tid, h.level, out)?;
                self.ascend(tid, &mut f, out)?;
            }
            Pc::Advertise { pred } => {
                let h = hop.expect("advertise frame always points at a real hop");
                let old = st.next[pred as usize];
                self.emit_next(
                    st,
                    out,
                    tid,
                    pred,
                    NextValue::Successor(h.node),
                    Actor::Successor,
                    EdgeKind::Normal,
                )?;
                f.pc = match old {
                    NextValue::Null => Pc::AwaitGrant,
                    NextValue::ImpatienceMark => {
                        if self.at_true_root(pred) {
                            Pc::DiscoverRecycle { pred }
                        } else {
                            Pc::DiscoverRead { pred }
                        }
                    }
                    _ => unreachable!("the monitor rejects advertising over {old}"),
                };
            }
            Pc::AwaitGrant => {
                let h = hop.expect("awaiting frame always points at a real hop");
                let node = h.node;
                match choice {
                    Choice::Proceed => match st.status[node as usize] {
                        StatusValue::UnlockedRoot => {
                            f.acquire(tid, h.level, out)?;
                            self.ascend(tid, &mut f, out)?;
                        }
                        StatusValue::PassAll { depth, count } => {
                            if f.hop == 0 {
                                f.cohort = count;
                            }
                            f.gift_depth = depth;
                            f.acquire(tid, h.level, out)?;
                            self.ascend(tid, &mut f, out)?;
                        }
                        StatusValue::ParentPrefix => f.pc = Pc::PromoteAfterP,
                        v => unreachable!("proceed gated on a grant value, saw {v}"),
                    },
                    Choice::Timeout => {
                        self.emit_status(
                            st,
                            out,
                            tid,
                            node,
                            StatusValue::Abandoned,
                            Actor::Itself,
                            EdgeKind::Timeout,
                        )?;
                        out.events.push(WitnessEvent {
                            thread: tid,
                            round: f.round,
                            level: h.level,
                            kind: EventKind::Abandon,
                        });
                        if f.hop == 0 {
                            f.end_round(tid, rounds)?;
                        } else {
                            let hi = f.hop - 1;
                            self.enter_release(tid, &mut f, hi);
                        }
                    }
                }
            }
            Pc::PromoteAfterP => {
                let h = hop.expect("promoting frame always points at a real hop");
                self.emit_status(
                    st, out, tid, h.node, StatusValue::Cohort(1), Actor::Itself, EdgeKind::Normal,
                )?;
                if f.hop == 0 {
                    f.cohort = 1;
                }
                f.acquire(tid, h.level, out)?;
                self.ascend(tid, &mut f, out)?;
            }
            Pc::DanceBack { cohort } => {
                let h = hop.expect("dancing frame always points at a real hop");
                debug_assert!(f.hop > 0, "the handover dance only happens above the entry level");
                self.emit_status(
                    st,
                    out,
                    tid,
                    h.node,
                    StatusValue::Cohort(cohort),
                    Actor::Itself,
                    EdgeKind::Normal,
                )?;
                f.acquire(tid, h.level, out)?;
                self.ascend(tid, &mut f, out)?;
            }
            Pc::AwaitRecycle => {
                let h = hop.expect("awaiting frame always points at a real hop");
                let node = h.node;
                match choice {
                    Choice::Proceed => {
                        // The helper came through; resume the original attempt
                        // on the fresh node. If the helper also disposed of
                        // the queue entry (next pointer clean), this read is
                        // what starts the node's new occupancy; otherwise a
                        // stale mark keeps the occupancy open and the reset
                        // path scrubs it.
                        if st.next[node as usize] == NextValue::Null {
                            self.ride_next(st, out, tid, node, Actor::Itself, EdgeKind::Begin)?;
                        }
                        f.pc = Pc::ResetOrEnqueue;
                    }
                    Choice::Timeout => {
                        let revert = if self.at_true_root(node) {
                            f.stash.expect("a re-begin always stashes the displaced value")
                        } else {
                            StatusValue::ParentPrefix
                        };
                        self.emit_status(
                            st, out, tid, node, revert, Actor::Itself, EdgeKind::Timeout,
                        )?;
                        out.events.push(WitnessEvent {
                            thread: tid,
                            round: f.round,
                            level: h.level,
                            kind: EventKind::Abandon,
                        });
                        if f.hop == 0 {
                            f.end_round(tid, rounds)?;
                        } else {
                            let hi = f.hop - 1;
                            self.enter_release(tid, &mut f, hi);
                        }
                    }
                }
            }
            Pc::DiscoverRead { pred } => {
                // One observing read of the parked predecessor.
                let _ = st.status[pred as usize];
                f.pc = Pc::DiscoverRecycle { pred };
            }
            Pc::DiscoverRecycle { pred } => {
                self.emit_status(
                    st,
                    out,
                    tid,
                    pred,
                    StatusValue::Recycled,
                    Actor::Successor,
                    EdgeKind::Normal,
                )?;
                f.pc = Pc::SelfOwn;
            }
            Pc::Stub => match choice {
                Choice::Proceed => {
                    f.acquire(tid, self.topo.levels, out)?;
                    f.pc = Pc::Cs;
                }
                Choice::Timeout => {
                    out.events.push(WitnessEvent {
                        thread: tid,
                        round: f.round,
                        level: self.topo.levels,
                        kind: EventKind::Abandon,
                    });
                    let hi = thread.path.len() as u8 - 1;
                    self.enter_release(tid, &mut f, hi);
                }
            },
            Pc::Cs => {
                let hi = thread.path.len() as u8 - 1;
                self.enter_release(tid, &mut f, hi);
            }
            Pc::Release(rel) => {
                let mut rel = rel;
                let ended = self.apply_release(st, out, tid, &mut f, &mut rel, choice)?;
                if !ended {
                    f.pc = Pc::Release(rel);
                }
            }
            Pc::Drain => match self.drain_action(st, tid) {
                Some(DrainAction::Scrub(node)) => {
                    self.emit_next(
                        st, out, tid, node, NextValue::Null, Actor::Itself, EdgeKind::Begin,
                    )?;
                }
                Some(DrainAction::Close(node)) => {
                    self.ride_next(st, out, tid, node, Actor::Itself, EdgeKind::Normal)?;
                }
                Some(DrainAction::Retire) => f.pc = Pc::Done,
                None => unreachable!("drain steps are gated on an available action"),
            },
            Pc::Done => unreachable!("done threads are never enabled"),
        }
        st.frames[ti] = f;
        Ok(())
    }

    /// Returns true when the round ended (the frame's pc was reset by
    /// `end_round` and must not be overwritten with release state).
    fn apply_release(
        &self,
        st: &mut GlobalState,
        out: &mut StepOutput,
        tid: ThreadId,
        f: &mut Frame,
        rel: &mut ReleaseState,
        choice: Choice,
    ) -> Result<bool, ModelError> {
        let ti = tid as usize;
        let path = self.topo.threads[ti].path.clone();
        let rounds = self.topo.threads[ti].rounds;
        let lo_level = path[0].level;

        // Move down one level, resuming an interrupted entry-level walk if one
        // is pending; finish the round once the entry level is done.
        macro_rules! advance_after_level {
            () => {{
                if rel.cur == 0 {
                    f.end_round(tid, rounds)?;
                    return Ok(true);
                } else {
                    rel.cur -= 1;
                    begin_level_stage(rel);
                }
            }};
        }

        fn begin_level_stage(rel: &mut ReleaseState) {
            if rel.cur == 0 {
                if let Some(c) = rel.pending_walk.take() {
                    rel.stage = ReleaseStage::WalkRead { c };
                    return;
                }
            }
            rel.stage = ReleaseStage::LevelRead;
        }

        match rel.stage {
            ReleaseStage::DelegCheck => {
                let lo = path[0].node;
                let uppers_inheritable = path[1..=rel.hop_hi as usize]
                    .iter()
                    .all(|h| st.status[h.node as usize].tag() == StatusTag::C);
                match st.next[lo as usize] {
                    NextValue::Successor(w)
                        if f.cohort < self.config.passing_threshold && uppers_inheritable =>
                    {
                        rel.stage = ReleaseStage::DelegSwap { w };
                    }
                    _ => {
                        rel.stage = if rel.stub_pending {
                            ReleaseStage::StubRelease
                        } else {
                            ReleaseStage::LevelRead
                        };
                    }
                }
            }
            ReleaseStage::DelegSwap { w } => {
                let depth = if self.opts.pass_wrong_depth {
                    rel.deleg_depth.saturating_sub(1).max(lo_level)
                } else {
                    rel.deleg_depth
                };
                let gift_v = StatusValue::PassAll { depth, count: f.cohort + 1 };
                let old_tag = st.status[w as usize].tag();
                self.emit_status(st, out, tid, w, gift_v, Actor::Predecessor, EdgeKind::Normal)?;
                match old_tag {
                    StatusTag::W | StatusTag::R => {
                        for lvl in (lo_level..=rel.deleg_depth).rev() {
                            f.release(tid, lvl, EventKind::Delegate, out)?;
                        }
                        rel.stub_pending = false;
                        rel.cur = 0;
                        rel.stage = ReleaseStage::ClearNext;
                    }
                    StatusTag::A => {
                        rel.cur = 0;
                        rel.gift = Gift::Delegate(gift_v);
                        rel.stage = ReleaseStage::WalkRead { c: w };
                    }
                    t => unreachable!("the monitor rejects handover onto a node tagged {t:?}"),
                }
            }
            ReleaseStage::StubRelease => {
                f.release(tid, self.topo.levels, EventKind::Release, out)?;
                rel.stub_pending = false;
                rel.cur = rel.hop_hi;
                begin_level_stage(rel);
            }
            ReleaseStage::LevelRead => {
                let own = path[rel.cur as usize].node;
                match st.next[own as usize] {
                    NextValue::Successor(w) => rel.stage = ReleaseStage::PassSwap { w },
                    NextValue::Null => rel.stage = ReleaseStage::TailCas,
                    v => {
                        return Err(assertion(format!(
                            "thread {tid} found {v} on its own next pointer during release"
                        )));
                    }
                }
            }
            ReleaseStage::PassSwap { w } => {
                debug_assert_eq!(rel.gift, Gift::Pass);
                let gv = self.grant_value(w);
                let old_tag = st.status[w as usize].tag();
                self.emit_status(st, out, tid, w, gv, Actor::Predecessor, EdgeKind::Normal)?;
                match old_tag {
                    StatusTag::W | StatusTag::R => {
                        f.release(tid, path[rel.cur as usize].level, EventKind::Release, out)?;
                        rel.stage = ReleaseStage::ClearNext;
                    }
                    StatusTag::A => rel.stage = ReleaseStage::WalkRead { c: w },
                    t => unreachable!("the monitor rejects granting onto a node tagged {t:?}"),
                }
            }
            ReleaseStage::ClearNext => {
                let own = path[rel.cur as usize].node;
                self.emit_next(st, out, tid, own, NextValue::Null, Actor::Itself, EdgeKind::Begin)?;
                rel.stage = ReleaseStage::OwnRecycle;
            }
            ReleaseStage::OwnRecycle => {
                let own = path[rel.cur as usize].node;
                self.emit_status(
                    st, out, tid, own, StatusValue::Recycled, Actor::Itself, EdgeKind::Normal,
                )?;
                if st.next[own as usize] == NextValue::Null {
                    self.ride_next(st, out, tid, own, Actor::Itself, EdgeKind::Normal)?;
                }
                advance_after_level!();
            }
            ReleaseStage::TailCas => {
                let h = path[rel.cur as usize];
                if self.opts.skip_dequeue_cas || st.tails[h.queue] == Some(h.node) {
                    if !self.opts.skip_dequeue_cas {
                        st.tails[h.queue] = None;
                    }
                    f.release(tid, h.level, EventKind::Release, out)?;
                    rel.stage = ReleaseStage::OwnRecycle;
                } else {
                    // Failed compare-and-swap: the access is spent silently.
                    rel.stage = ReleaseStage::SpinAdvert;
                }
            }
            ReleaseStage::SpinAdvert => {
                let h = path[rel.cur as usize];
                let own = h.node;
                match choice {
                    Choice::Proceed => match st.next[own as usize] {
                        NextValue::Successor(w) => rel.stage = ReleaseStage::PassSwap { w },
                        v => unreachable!("proceed gated on an advertised successor, saw {v}"),
                    },
                    Choice::Timeout => {
                        if !self.opts.skip_impatience_mark {
                            self.emit_next(
                                st,
                                out,
                                tid,
                                own,
                                NextValue::ImpatienceMark,
                                Actor::Itself,
                                EdgeKind::Timeout,
                            )?;
                            if self.at_true_root(own)
                                && st.status[own as usize].tag() == StatusTag::U
                            {
                                self.ride_status(
                                    st, out, tid, own, Actor::Itself, EdgeKind::Timeout,
                                )?;
                            }
                        }
                        if self.at_true_root(own) {
                            // The node stays parked; its discoverer will
                            // retire it.
                            f.release(tid, h.level, EventKind::Release, out)?;
                            advance_after_level!();
                        } else {
                            rel.stage = ReleaseStage::OwnImpatience2;
                        }
                    }
                }
            }
            ReleaseStage::OwnImpatience2 => {
                let h = path[rel.cur as usize];
                self.emit_status(
                    st,
                    out,
                    tid,
                    h.node,
                    StatusValue::ParentPrefix,
                    Actor::Itself,
                    EdgeKind::Timeout,
                )?;
                f.release(tid, h.level, EventKind::Release, out)?;
                advance_after_level!();
            }
            ReleaseStage::WalkRead { c } => {
                match st.next[c as usize] {
                    NextValue::Successor(y) => rel.stage = ReleaseStage::WalkMark { c, y },
                    NextValue::Null => match rel.gift {
                        Gift::Delegate(_) => {
                            // Nobody is waiting behind the abandoned chain
                            // yet: shrink the handover to a plain grant,
                            // release the upper levels first, and resume this
                            // walk when the descent returns to the entry
                            // level.
                            rel.pending_walk = Some(c);
                            rel.gift = Gift::Pass;
                            rel.cur = rel.hop_hi;
                            if rel.stub_pending {
                                rel.stage = ReleaseStage::StubRelease;
                            } else {
                                begin_level_stage(rel);
                            }
                        }
                        Gift::Pass => rel.stage = ReleaseStage::WalkTailCas { c },
                    },
                    v => {
                        return Err(assertion(format!(
                            "thread {tid} walked onto a node whose next pointer holds {v}"
                        )));
                    }
                }
            }
            ReleaseStage::WalkMark { c, y } => {
                let own = path[rel.cur as usize].node;
                self.emit_next(
                    st,
                    out,
                    tid,
                    c,
                    NextValue::PredecessorMark(own),
                    Actor::Predecessor,
                    EdgeKind::Normal,
                )?;
                rel.stage = ReleaseStage::WalkPass { c, y };
            }
            ReleaseStage::WalkPass { c, y } => {
                let gv = match rel.gift {
                    Gift::Delegate(v) => v,
                    Gift::Pass => self.grant_value(y),
                };
                let old_tag = st.status[y as usize].tag();
                self.emit_status(st, out, tid, y, gv, Actor::Predecessor, EdgeKind::Normal)?;
                match old_tag {
                    StatusTag::W | StatusTag::R => {
                        match rel.gift {
                            Gift::Delegate(_) => {
                                for lvl in (lo_level..=rel.deleg_depth).rev() {
                                    f.release(tid, lvl, EventKind::Delegate, out)?;
                                }
                                rel.stub_pending = false;
                            }
                            Gift::Pass => {
                                f.release(
                                    tid,
                                    path[rel.cur as usize].level,
                                    EventKind::Release,
                                    out,
                                )?;
                            }
                        }
                        rel.stage = ReleaseStage::WalkRecycleDelivered { c };
                    }
                    StatusTag::A => rel.stage = ReleaseStage::WalkRecycleChain { c, y },
                    t => unreachable!("the monitor rejects granting onto a node tagged {t:?}"),
                }
            }
            ReleaseStage::WalkRecycleDelivered { c } => {
                if !self.opts.drop_recycle_write {
                    self.emit_status(
                        st,
                        out,
                        tid,
                        c,
                        StatusValue::Recycled,
                        Actor::Predecessor,
                        EdgeKind::Normal,
                    )?;
                }
                rel.stage = ReleaseStage::ClearNext;
            }
            ReleaseStage::WalkRecycleChain { c, y } => {
                if !self.opts.drop_recycle_write {
                    self.emit_status(
                        st,
                        out,
                        tid,
                        c,
                        StatusValue::Recycled,
                        Actor::Predecessor,
                        EdgeKind::Normal,
                    )?;
                }
                rel.stage = ReleaseStage::WalkRead { c: y };
            }
            ReleaseStage::WalkTailCas { c } => {
                let h = path[rel.cur as usize];
                if self.opts.skip_dequeue_cas || st.tails[h.queue] == Some(c) {
                    if !self.opts.skip_dequeue_cas {
                        st.tails[h.queue] = None;
                    }
                    f.release(tid, h.level, EventKind::Release, out)?;
                    rel.stage = ReleaseStage::WalkRecycleDisposed { c };
                } else {
                    rel.stage = ReleaseStage::WalkSpin { c };
                }
            }
            ReleaseStage::WalkSpin { c } => {
                let h = path[rel.cur as usize];
                match choice {
                    Choice::Proceed => match st.next[c as usize] {
                        NextValue::Successor(y) => rel.stage = ReleaseStage::WalkMark { c, y },
                        v => unreachable!("proceed gated on an advertised successor, saw {v}"),
                    },
                    Choice::Timeout => {
                        if !self.opts.skip_impatience_mark {
                            self.emit_next(
                                st,
                                out,
                                tid,
                                c,
                                NextValue::ImpatienceMark,
                                Actor::Predecessor,
                                EdgeKind::Timeout,
                            )?;
                            if self.at_true_root(c)
                                && st.status[c as usize].tag() == StatusTag::U
                            {
                                self.ride_status(
                                    st, out, tid, c, Actor::Predecessor, EdgeKind::Timeout,
                                )?;
                            }
                        }
                        if self.at_true_root(c) {
                            f.release(tid, h.level, EventKind::Release, out)?;
                            rel.stage = ReleaseStage::ClearNext;
                        } else {
                            rel.stage = ReleaseStage::WalkImpatience2 { c };
                        }
                    }
                }
            }
            ReleaseStage::WalkRecycleDisposed { c } => {
                if !self.opts.drop_recycle_write {
                    self.emit_status(
                        st,
                        out,
                        tid,
                        c,
                        StatusValue::Recycled,
                        Actor::Predecessor,
                        EdgeKind::Normal,
                    )?;
                    if st.next[c as usize] == NextValue::Null {
                        self.ride_next(st, out, tid, c, Actor::Predecessor, EdgeKind::Normal)?;
                    }
                }
                rel.stage = ReleaseStage::ClearNext;
            }
            ReleaseStage::WalkImpatience2 { c } => {
                let h = path[rel.cur as usize];
                // Downgrade the parked node: a compare-and-swap that only
                // lands while the cell still shows the value the walker
                // parked (or the tenant's re-begin over it). If the tenant
                // already re-parked a prefix itself, the swap fails and the
                // access is spent silently. Either way the walker's level
                // ownership is discharged into the parked value here, which
                // is what entitles the eventual discoverer to withdraw it.
                let sup = st.smon[c as usize].support;
                if sup & !(self.masks.nr_vp1 | self.masks.nr_w3) == 0 {
                    self.emit_status(
                        st,
                        out,
                        tid,
                        c,
                        StatusValue::ParentPrefix,
                        Actor::Predecessor,
                        EdgeKind::Timeout,
                    )?;
                }
                f.release(tid, h.level, EventKind::Release, out)?;
                rel.stage = ReleaseStage::ClearNext;
            }
        }
        Ok(false)
    }
}
