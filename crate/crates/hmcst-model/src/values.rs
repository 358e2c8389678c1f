//! Core value domains shared by the protocol engine, the NFA specifications and
//! the conformance monitors: queue-node cell values, actor roles, edge kinds and
//! the action labels emitted by shared-cell accesses.

use std::fmt;

/// Index of a queue node. Nodes are statically allocated per configuration.
pub type NodeId = u8;

/// Index of a thread.
pub type ThreadId = u8;

/// Lock level, 1-based. Level `n` is the root.
pub type Level = u8;

/// Contents of a queue node's `status` cell.
///
/// The status cell is the primary communication channel of the lock: waiting,
/// abandonment, recycling, and every form of lock passing travel through it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StatusValue {
    /// The owner thread is (or was) spinning on this node waiting for the lock.
    Wait,
    /// The owner timed out while waiting and walked away; the node is still
    /// enqueued and a predecessor will dispose of it.
    Abandoned,
    /// The node is free for reuse by its owning thread.
    Recycled,
    /// Root level only: this node holds the root lock.
    UnlockedRoot,
    /// Non-root owner value: `count` consecutive intra-level passes have
    /// happened since the level above was last acquired (1 = fresh cohort).
    Cohort(u8),
    /// Non-root pass of this level only; all ancestor locks were released by
    /// the passer, so the receiver starts a fresh cohort.
    ParentPrefix,
    /// Non-root pass of levels `node.level ..= depth` in one shot. Levels
    /// strictly between the node's level and `depth` sit parked with their
    /// `Cohort` values intact for the receiver to claim; `depth == n` conveys
    /// the root lock itself. `count` carries the cohort counter forward so the
    /// passing threshold keeps bounding consecutive passes.
    PassAll { depth: Level, count: u8 },
}

impl StatusValue {
    /// Abstract tag used for NFA matching (payloads are protocol detail).
    pub fn tag(&self) -> StatusTag {
        match self {
            StatusValue::Wait => StatusTag::W,
            StatusValue::Abandoned => StatusTag::A,
            StatusValue::Recycled => StatusTag::R,
            StatusValue::UnlockedRoot => StatusTag::U,
            StatusValue::Cohort(_) => StatusTag::C,
            StatusValue::ParentPrefix => StatusTag::P,
            StatusValue::PassAll { .. } => StatusTag::V,
        }
    }
}

impl fmt::Display for StatusValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StatusValue::Wait => write!(f, "W"),
            StatusValue::Abandoned => write!(f, "A"),
            StatusValue::Recycled => write!(f, "R"),
            StatusValue::UnlockedRoot => write!(f, "U"),
            StatusValue::Cohort(k) => write!(f, "C({k})"),
            StatusValue::ParentPrefix => write!(f, "P"),
            StatusValue::PassAll { depth, count } => write!(f, "V(d{depth},c{count})"),
        }
    }
}

/// Abstract status tags: the alphabet the status NFAs are written in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StatusTag {
    W,
    A,
    R,
    U,
    C,
    P,
    V,
}

/// Contents of a queue node's `next` cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NextValue {
    /// No successor known.
    Null,
    /// A successor advertised its node.
    Successor(NodeId),
    /// A walking predecessor parked its own node id here while moving past an
    /// abandoned node; the mark's presence (not its payload) tells the owner a
    /// predecessor has taken responsibility for recycling.
    PredecessorMark(NodeId),
    /// An impatient releaser gave up waiting for the advertisement; the tardy
    /// successor that eventually swaps this mark out must serve itself.
    ImpatienceMark,
}

impl NextValue {
    /// Abstract tag used for NFA matching.
    pub fn tag(&self) -> NextTag {
        match self {
            NextValue::Null => NextTag::Zero,
            NextValue::Successor(_) => NextTag::S,
            NextValue::PredecessorMark(_) => NextTag::P,
            NextValue::ImpatienceMark => NextTag::M,
        }
    }
}

impl fmt::Display for NextValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NextValue::Null => write!(f, "0"),
            NextValue::Successor(n) => write!(f, "S(n{n})"),
            NextValue::PredecessorMark(n) => write!(f, "P(n{n})"),
            NextValue::ImpatienceMark => write!(f, "M"),
        }
    }
}

/// Abstract next-cell tags: the alphabet the next NFA is written in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NextTag {
    Zero,
    S,
    P,
    M,
}

/// Which cell of a node an access touched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    Status,
    Next,
}

/// A cell value of either field, as carried by action labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellValue {
    Status(StatusValue),
    Next(NextValue),
}

impl fmt::Display for CellValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellValue::Status(v) => write!(f, "{v}"),
            CellValue::Next(v) => write!(f, "{v}"),
        }
    }
}

/// Role of the acting thread relative to the node it touches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Actor {
    /// The thread currently owning the node (original owner, or the current
    /// holder of a shared domain node's tenure).
    Itself,
    /// A thread approaching from the predecessor side of the queue: a lock
    /// passer or a walker disposing of abandoned nodes.
    Predecessor,
    /// A thread approaching from the successor side: an advertiser or a tardy
    /// discoverer recycling the node of an impatient releaser.
    Successor,
}

impl fmt::Display for Actor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Actor::Itself => write!(f, "self"),
            Actor::Predecessor => write!(f, "pred"),
            Actor::Successor => write!(f, "succ"),
        }
    }
}

/// Classification of a transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    /// First action of a (re-)acquisition effort.
    Begin,
    /// Ordinary protocol progress.
    Normal,
    /// An action taken because a timeout choice fired.
    Timeout,
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgeKind::Begin => write!(f, "begin"),
            EdgeKind::Normal => write!(f, "normal"),
            EdgeKind::Timeout => write!(f, "timeout"),
        }
    }
}

/// Observable effect of one shared-cell access, fed to the conformance
/// monitors. Failed compare-and-swaps and pure reads emit no label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ActionLabel {
    pub node: NodeId,
    pub field: Field,
    pub old: CellValue,
    pub new: CellValue,
    pub actor: Actor,
    pub kind: EdgeKind,
}

impl fmt::Display for ActionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "n{} {:?} {} -> {} [{} {}]",
            self.node, self.field, self.old, self.new, self.actor, self.kind
        )
    }
}
