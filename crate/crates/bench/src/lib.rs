//! Fixtures shared by the benchmarks.

pub use rbpebble::{BlackPebbling, CostModel, Dag, Family};

use rbpebble::graph::generate;

/// A seeded `random_delta` graph.
pub fn random_graph(nodes: usize, delta: usize) -> Dag {
    generate(Family::RandomDelta, nodes, delta, 17).expect("valid parameters")
}
