use thiserror::Error;

use crate::graph::NodeId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("graph must have at least one node")]
    EmptyGraph,
    #[error("node {node} out of range for a graph with {node_count} nodes")]
    NodeOutOfRange { node: NodeId, node_count: usize },
    #[error("edges contain a directed cycle")]
    CycleDetected,
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(NodeId, NodeId),
    #[error("self loop on node {0}")]
    SelfLoop(NodeId),
    #[error("node {node} has indegree {indegree} above the bound {delta}")]
    IndegreeExceeded { node: NodeId, indegree: usize, delta: usize },
    #[error("bad shape: {0}")]
    BadShape(String),
    #[error("instance too large: {0}")]
    TooLarge(String),

    #[error("permutation width {0} outside 2..=24")]
    WidthOutOfRange(u32),
    #[error("word {word:#x} does not fit in {width} bits")]
    WordOutOfRange { word: u32, width: u32 },

    #[error("input has {got} words but the graph has {expected} sources")]
    InputLengthMismatch { expected: usize, got: usize },
    #[error("permutation width {perm} differs from expected width {expected}")]
    WidthMismatch { expected: u32, perm: u32 },
    #[error("cannot draw {needed} distinct {width}-bit words")]
    InputSpaceTooSmall { needed: usize, width: u32 },

    #[error("pebbling must start from an empty configuration")]
    NonEmptyInitial,
    #[error("round {round} out of range 1..={last}")]
    RoundOutOfRange { round: usize, last: usize },
    #[error("black pebbling adds {added} nodes in round {round}, more than m = {m}")]
    StepTooWide { round: usize, added: usize, m: usize },
    #[error("red budget {budget} exceeds the cache of {cache} words")]
    BudgetExceedsCache { budget: usize, cache: usize },
    #[error("illegal pebbling at round {round}: {reason}")]
    IllegalPebbling { round: usize, reason: String },
    #[error("pebbling does not place a pebble on every sink")]
    Unsuccessful,
    #[error("strategy `{strategy}` cannot run: {reason}")]
    StrategyInfeasible { strategy: String, reason: String },

    #[error("labels collide; call classification is ambiguous")]
    AmbiguousLabels,
    #[error("sink {0} never receives a correct call")]
    IncompleteEvaluation(NodeId),

    #[error("interval {0} is the last interval")]
    LastInterval(usize),
    #[error("interval {0} does not exist")]
    NoSuchInterval(usize),
    #[error("interval {0} has an empty critical set")]
    NoCriticalNodes(usize),
    #[error("forbidden {direction} query at {word:#x}")]
    ForbiddenQuery { direction: String, word: u32 },
    #[error("hint is inconsistent with the replay: {0}")]
    InconsistentHint(String),

    #[error("parse error: {0}")]
    Parse(String),
}
