//! Simulator and analysis toolkit for bandwidth-hard graph functions built
//! from an n-bit random permutation.
//!
//! The crate is organised bottom-up:
//!
//! * [`graph`]: bounded-indegree DAGs, generators, depth-robustness.
//! * [`perm`]: explicit random permutations with a query ledger.
//! * [`label`]: the permutation-based labeling function and collisions.
//! * [`pebble`]: black and red-blue pebbling rules, costs and an exact
//!   minimum-cost oracle.
//! * [`extend`]: interval partitioning and the black to red-blue extension.
//! * [`exec`]: execution traces, CMC/energy metrics, honest evaluation and
//!   black pebbling extraction.
//! * [`predictor`]: hints, the replaying predictor and guess-bound estimates.
//! * [`strategy`]: honest red-blue evaluation strategies used by the CLI.
//! * [`theorem`]: the desk-scale energy lower-bound check.

pub mod error;
pub mod exec;
pub mod extend;
pub mod graph;
pub mod label;
pub mod pebble;
pub mod perm;
pub mod predictor;
pub mod rng;
pub mod strategy;
pub mod theorem;

pub use error::{Error, Result};
pub use exec::{CallClassification, ExecutionTrace, TraceHeader, TraceRound};
pub use extend::{ExtensionPebbling, IntervalPartition};
pub use graph::{Dag, Family, NodeId};
pub use label::{InputVector, LabelMap};
pub use pebble::{BlackPebbling, Cost, CostModel, NodeSet, RedBluePebbling};
pub use perm::{Direction, Permutation, QueryRecord, Word};
pub use predictor::{Hint, PredictionReport};
