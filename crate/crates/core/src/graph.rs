//! Bounded-indegree DAGs: construction, validation, generators and the
//! structural predicates used by the labeling and pebbling layers.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng;

pub type NodeId = usize;

/// Largest graph the exhaustive depth-robustness checks accept.
pub const MAX_EXHAUSTIVE_NODES: usize = 20;
/// Largest number of deletion sets the exhaustive checks will enumerate.
pub const MAX_EXHAUSTIVE_SUBSETS: u64 = 1 << 20;

/// A validated DAG. Predecessor and successor lists are kept in ascending
/// node-id order, and `topo` is the smallest-id-first topological order,
/// which is the identity order for every generated graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    delta: usize,
    edges: Vec<(NodeId, NodeId)>,
    preds: Vec<Vec<NodeId>>,
    succs: Vec<Vec<NodeId>>,
    topo: Vec<NodeId>,
}

impl Dag {
    /// Builds a DAG and sets `delta` to its maximum indegree (at least 1).
    pub fn build(node_count: usize, edges: &[(NodeId, NodeId)]) -> Result<Dag> {
        Self::assemble(node_count, edges, None)
    }

    /// Builds a DAG that must respect the indegree bound `delta`.
    pub fn with_delta(node_count: usize, edges: &[(NodeId, NodeId)], delta: usize) -> Result<Dag> {
        if delta == 0 {
            return Err(Error::BadShape("delta must be positive".into()));
        }
        Self::assemble(node_count, edges, Some(delta))
    }

    fn assemble(node_count: usize, edges: &[(NodeId, NodeId)], delta: Option<usize>) -> Result<Dag> {
        if node_count == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut seen = BTreeSet::new();
        for &(u, v) in edges {
            for node in [u, v] {
                if node >= node_count {
                    return Err(Error::NodeOutOfRange { node, node_count });
                }
            }
            if u == v {
                return Err(Error::SelfLoop(u));
            }
            if !seen.insert((u, v)) {
                return Err(Error::DuplicateEdge(u, v));
            }
        }
        let edges: Vec<(NodeId, NodeId)> = seen.into_iter().collect();

        let mut preds = vec![Vec::new(); node_count];
        let mut succs = vec![Vec::new(); node_count];
        for &(u, v) in &edges {
            preds[v].push(u);
            succs[u].push(v);
        }
        for list in preds.iter_mut().chain(succs.iter_mut()) {
            list.sort_unstable();
        }

        let max_indegree = preds.iter().map(Vec::len).max().unwrap_or(0);
        let delta = match delta {
            Some(bound) => {
                if let Some(node) = (0..node_count).find(|&v| preds[v].len() > bound) {
                    return Err(Error::IndegreeExceeded {
                        node,
                        indegree: preds[node].len(),
                        delta: bound,
                    });
                }
                bound
            }
            None => max_indegree.max(1),
        };

        // Kahn's algorithm, always releasing the smallest ready id.
        let mut indegree: Vec<usize> = preds.iter().map(Vec::len).collect();
        let mut ready: BinaryHeap<Reverse<NodeId>> =
            (0..node_count).filter(|&v| indegree[v] == 0).map(Reverse).collect();
        let mut topo = Vec::with_capacity(node_count);
        while let Some(Reverse(u)) = ready.pop() {
            topo.push(u);
            for &v in &succs[u] {
                indegree[v] -= 1;
                if indegree[v] == 0 {
                    ready.push(Reverse(v));
                }
            }
        }
        if topo.len() != node_count {
            return Err(Error::CycleDetected);
        }

        Ok(Dag { delta, edges, preds, succs, topo })
    }

    pub fn node_count(&self) -> usize {
        self.preds.len()
    }

    pub fn delta(&self) -> usize {
        self.delta
    }

    /// Edges in lexicographic order.
    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn preds(&self, v: NodeId) -> &[NodeId] {
        &self.preds[v]
    }

    pub fn succs(&self, v: NodeId) -> &[NodeId] {
        &self.succs[v]
    }

    pub fn indegree(&self, v: NodeId) -> usize {
        self.preds[v].len()
    }

    pub fn max_indegree(&self) -> usize {
        self.preds.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn is_source(&self, v: NodeId) -> bool {
        self.preds[v].is_empty()
    }

    pub fn is_sink(&self, v: NodeId) -> bool {
        self.succs[v].is_empty()
    }

    /// Sources in ascending id order; the i-th entry consumes input word i.
    pub fn sources(&self) -> Vec<NodeId> {
        (0..self.node_count()).filter(|&v| self.is_source(v)).collect()
    }

    pub fn sinks(&self) -> Vec<NodeId> {
        (0..self.node_count()).filter(|&v| self.is_sink(v)).collect()
    }

    pub fn topo_order(&self) -> &[NodeId] {
        &self.topo
    }

    /// Number of nodes on the longest directed path.
    pub fn depth(&self) -> usize {
        self.depth_without(&vec![false; self.node_count()])
    }

    /// Depth of the graph with the nodes flagged in `removed` deleted.
    /// Returns 0 when every node is removed.
    pub fn depth_without(&self, removed: &[bool]) -> usize {
        let mut longest = vec![0usize; self.node_count()];
        let mut best = 0;
        for &v in &self.topo {
            if removed[v] {
                continue;
            }
            let from_preds = self.preds[v]
                .iter()
                .filter(|&&u| !removed[u])
                .map(|&u| longest[u])
                .max()
                .unwrap_or(0);
            longest[v] = from_preds + 1;
            best = best.max(longest[v]);
        }
        best
    }

    /// Longest path of the residual graph that starts at a source of the
    /// original graph and ends at one of its sinks; 0 if none survives.
    pub fn source_to_sink_depth_without(&self, removed: &[bool]) -> usize {
        let mut longest: Vec<Option<usize>> = vec![None; self.node_count()];
        let mut best = 0;
        for &v in &self.topo {
            if removed[v] {
                continue;
            }
            longest[v] = if self.is_source(v) {
                Some(1)
            } else {
                self.preds[v]
                    .iter()
                    .filter(|&&u| !removed[u])
                    .filter_map(|&u| longest[u])
                    .max()
                    .map(|len| len + 1)
            };
            if self.is_sink(v) {
                if let Some(len) = longest[v] {
                    best = best.max(len);
                }
            }
        }
        best
    }

    /// True iff no two distinct nodes share a predecessor set. Any graph
    /// with two or more sources fails this, since every source has an empty
    /// predecessor set.
    pub fn is_predecessor_distinct(&self) -> bool {
        let distinct: BTreeSet<&Vec<NodeId>> = self.preds.iter().collect();
        distinct.len() == self.node_count()
    }

    /// The same predicate restricted to non-source nodes.
    pub fn is_predecessor_distinct_non_source(&self) -> bool {
        let non_sources: Vec<&Vec<NodeId>> = self.preds.iter().filter(|p| !p.is_empty()).collect();
        let distinct: BTreeSet<&Vec<NodeId>> = non_sources.iter().copied().collect();
        distinct.len() == non_sources.len()
    }

    /// (e, d)-depth-robustness by exhaustive enumeration of deletion sets.
    pub fn is_depth_robust(&self, e: usize, d: usize) -> Result<bool> {
        self.exhaustive_robustness(e, |removed| self.depth_without(removed) >= d)
    }

    /// (e, d)-source-to-sink depth-robustness, exhaustively.
    pub fn is_source_to_sink_depth_robust(&self, e: usize, d: usize) -> Result<bool> {
        self.exhaustive_robustness(e, |removed| self.source_to_sink_depth_without(removed) >= d)
    }

    // Depth only shrinks as more nodes are removed, so it is enough to try
    // every deletion set of the largest allowed size.
    fn exhaustive_robustness(&self, e: usize, survives: impl Fn(&[bool]) -> bool) -> Result<bool> {
        let n = self.node_count();
        if n > MAX_EXHAUSTIVE_NODES {
            return Err(Error::TooLarge(format!(
                "exhaustive depth-robustness needs at most {MAX_EXHAUSTIVE_NODES} nodes, got {n}"
            )));
        }
        let k = e.min(n);
        let subsets = binomial(n as u64, k as u64);
        if subsets > MAX_EXHAUSTIVE_SUBSETS {
            return Err(Error::TooLarge(format!("{subsets} deletion sets")));
        }
        let mut removed = vec![false; n];
        let mut all_survive = true;
        for_each_k_subset(n, k, |mask| {
            for (v, slot) in removed.iter_mut().enumerate() {
                *slot = mask & (1 << v) != 0;
            }
            if !survives(&removed) {
                all_survive = false;
                return false;
            }
            true
        });
        Ok(all_survive)
    }

    /// Edges as a JSON graph file: `{"nodes":N,"delta":D,"edges":[[u,v],...]}`.
    pub fn to_json(&self) -> String {
        let file = GraphFile {
            nodes: self.node_count(),
            delta: self.delta,
            edges: self.edges.iter().map(|&(u, v)| [u, v]).collect(),
        };
        serde_json::to_string(&file).expect("graph file serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Dag> {
        let file: GraphFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let edges: Vec<(NodeId, NodeId)> = file.edges.iter().map(|e| (e[0], e[1])).collect();
        Dag::with_delta(file.nodes, &edges, file.delta)
    }

    /// SHA-256 of the canonical JSON encoding, as lowercase hex.
    pub fn content_hash(&self) -> String {
        let digest = Sha256::digest(self.to_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Ancestors of `v` (excluding `v`), ascending.
    pub fn ancestors(&self, v: NodeId) -> BTreeSet<NodeId> {
        let mut out = BTreeSet::new();
        let mut stack: Vec<NodeId> = self.preds[v].clone();
        while let Some(u) = stack.pop() {
            if out.insert(u) {
                stack.extend_from_slice(&self.preds[u]);
            }
        }
        out
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct GraphFile {
    nodes: usize,
    delta: usize,
    edges: Vec<[NodeId; 2]>,
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// Calls `visit` with every `k`-subset of `0..n` encoded as a bitmask, in
/// increasing numeric order, until `visit` returns false.
fn for_each_k_subset(n: usize, k: usize, mut visit: impl FnMut(u32) -> bool) {
    if k == 0 {
        visit(0);
        return;
    }
    let limit: u64 = 1 << n;
    let mut mask: u64 = (1 << k) - 1;
    while mask < limit {
        if !visit(mask as u32) {
            return;
        }
        // Gosper's hack: next integer with the same popcount.
        let low = mask & mask.wrapping_neg();
        let ripple = mask + low;
        mask = (((ripple ^ mask) >> 2) / low) | ripple;
    }
}

/// Generator families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// `0 -> 1 -> ... -> n-1`.
    Path,
    /// Complete binary in-tree: leaves are sources, node `n-1` is the root.
    BinaryTree,
    /// Two layers of `n/2 = 2^k` nodes threaded by a single path, with an
    /// edge from layer-0 node `rev(j)` into layer-1 node `j`.
    BitReversal,
    /// Node `v > 0` always has `v - 1` as predecessor plus up to `delta - 1`
    /// further predecessors drawn uniformly from `0..v-1`.
    RandomDelta,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Path, Family::BinaryTree, Family::BitReversal, Family::RandomDelta];

    pub fn name(self) -> &'static str {
        match self {
            Family::Path => "path",
            Family::BinaryTree => "binary_tree",
            Family::BitReversal => "bit_reversal",
            Family::RandomDelta => "random_delta",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Family> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown graph family `{s}`")))
    }
}

/// Deterministic generator: the output depends only on the arguments.
pub fn generate(family: Family, node_count: usize, delta: usize, seed: u64) -> Result<Dag> {
    if node_count == 0 {
        return Err(Error::EmptyGraph);
    }
    if delta == 0 {
        return Err(Error::BadShape("delta must be positive".into()));
    }
    let edges: Vec<(NodeId, NodeId)> = match family {
        Family::Path => (1..node_count).map(|v| (v - 1, v)).collect(),
        Family::BinaryTree => {
            // Heap index h has children 2h+1 and 2h+2; ids are reversed so
            // that every edge points to a larger id.
            let id = |h: usize| node_count - 1 - h;
            (1..node_count).map(|c| (id(c), id((c - 1) / 2))).collect()
        }
        Family::BitReversal => {
            if !node_count.is_multiple_of(2) || !(node_count / 2).is_power_of_two() {
                return Err(Error::BadShape(format!(
                    "bit_reversal needs node_count = 2 * 2^k, got {node_count}"
                )));
            }
            let layer = node_count / 2;
            let bits = layer.trailing_zeros();
            let reverse = |j: usize| if bits == 0 { 0 } else { j.reverse_bits() >> (usize::BITS - bits) };
            let mut edges: BTreeSet<(NodeId, NodeId)> = (1..node_count).map(|v| (v - 1, v)).collect();
            edges.extend((0..layer).map(|j| (reverse(j), layer + j)));
            edges.into_iter().collect()
        }
        Family::RandomDelta => {
            let mut rng = rng::from_seed(seed);
            let mut edges = Vec::new();
            for v in 1..node_count {
                edges.push((v - 1, v));
                let extra_max = (delta - 1).min(v - 1);
                let extra = rng.gen_range(0..=extra_max);
                let mut picked: Vec<NodeId> = index::sample(&mut rng, v - 1, extra).into_vec();
                picked.sort_unstable();
                edges.extend(picked.into_iter().map(|u| (u, v)));
            }
            edges
        }
    };
    let dag = Dag::build(node_count, &edges)?;
    if dag.max_indegree() > delta {
        return Err(Error::BadShape(format!(
            "{family} on {node_count} nodes needs delta >= {}, got {delta}",
            dag.max_indegree()
        )));
    }
    Dag::with_delta(node_count, dag.edges(), delta)
}

/// The four-node diamond `0 -> {1, 2} -> 3`.
pub fn diamond() -> Dag {
    Dag::build(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]).expect("diamond is a valid DAG")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> Dag {
        generate(Family::Path, n, 1, 0).unwrap()
    }

    #[test]
    fn build_path_sets_delta_sources_and_sinks() {
        let g = Dag::build(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(g.delta(), 1);
        assert_eq!(g.sources(), vec![0]);
        assert_eq!(g.sinks(), vec![2]);
        assert_eq!(g.topo_order(), &[0, 1, 2]);
    }

    #[test]
    fn single_node_is_source_and_sink() {
        let g = Dag::build(1, &[]).unwrap();
        assert_eq!(g.sources(), vec![0]);
        assert_eq!(g.sinks(), vec![0]);
        assert_eq!(g.depth(), 1);
    }

    #[test]
    fn construction_errors() {
        assert_eq!(Dag::build(3, &[(0, 1), (1, 2), (2, 0)]), Err(Error::CycleDetected));
        assert_eq!(Dag::build(2, &[(0, 1), (0, 1)]), Err(Error::DuplicateEdge(0, 1)));
        assert_eq!(Dag::build(2, &[(1, 1)]), Err(Error::SelfLoop(1)));
        assert!(matches!(Dag::build(2, &[(0, 2)]), Err(Error::NodeOutOfRange { .. })));
        assert_eq!(Dag::build(0, &[]), Err(Error::EmptyGraph));
        assert!(matches!(
            Dag::with_delta(3, &[(0, 2), (1, 2)], 1),
            Err(Error::IndegreeExceeded { node: 2, .. })
        ));
    }

    #[test]
    fn topo_order_handles_unsorted_ids() {
        let g = Dag::build(3, &[(2, 0), (0, 1)]).unwrap();
        assert_eq!(g.topo_order(), &[2, 0, 1]);
        assert_eq!(g.depth(), 3);
    }

    #[test]
    fn predecessor_distinctness() {
        assert!(path(3).is_predecessor_distinct());
        assert!(!diamond().is_predecessor_distinct());
        let isolated = Dag::build(2, &[]).unwrap();
        assert!(!isolated.is_predecessor_distinct());
        assert!(isolated.is_predecessor_distinct_non_source());
        assert!(!diamond().is_predecessor_distinct_non_source());
    }

    #[test]
    fn depth_examples() {
        assert_eq!(path(3).depth(), 3);
        assert_eq!(diamond().depth(), 3);
    }

    #[test]
    fn depth_robustness_examples() {
        let p5 = path(5);
        assert!(p5.is_depth_robust(0, 5).unwrap());
        assert!(!p5.is_depth_robust(1, 5).unwrap());
        let complete: Vec<(usize, usize)> = (0..4).flat_map(|u| (u + 1..4).map(move |v| (u, v))).collect();
        let k4 = Dag::build(4, &complete).unwrap();
        assert!(k4.is_depth_robust(1, 3).unwrap());
        assert!(!k4.is_depth_robust(2, 3).unwrap());
    }

    #[test]
    fn source_to_sink_examples() {
        let p5 = path(5);
        assert!(p5.is_source_to_sink_depth_robust(0, 5).unwrap());
        assert!(!p5.is_source_to_sink_depth_robust(1, 1).unwrap());

        // Two parallel paths of three interior nodes sharing one source and
        // one sink: deleting the shared source (or sink) leaves no path
        // between a source and a sink of the original graph.
        let parallel = Dag::build(
            8,
            &[(0, 1), (1, 2), (2, 3), (3, 7), (0, 4), (4, 5), (5, 6), (6, 7)],
        )
        .unwrap();
        assert!(parallel.is_source_to_sink_depth_robust(0, 5).unwrap());
        assert!(!parallel.is_source_to_sink_depth_robust(1, 4).unwrap());

        // Two disjoint 4-paths survive any single deletion.
        let disjoint = Dag::build(8, &[(0, 1), (1, 2), (2, 3), (4, 5), (5, 6), (6, 7)]).unwrap();
        assert!(disjoint.is_source_to_sink_depth_robust(1, 4).unwrap());
        assert!(!disjoint.is_source_to_sink_depth_robust(2, 1).unwrap());
    }

    #[test]
    fn exhaustive_cap() {
        let big = path(21);
        assert!(matches!(big.is_depth_robust(1, 2), Err(Error::TooLarge(_))));
    }

    #[test]
    fn subset_enumeration_counts_binomials() {
        for n in 0..8 {
            for k in 0..=n {
                let mut count = 0u64;
                for_each_k_subset(n, k, |mask| {
                    assert_eq!(mask.count_ones() as usize, k);
                    count += 1;
                    true
                });
                assert_eq!(count, binomial(n as u64, k as u64));
            }
        }
    }

    #[test]
    fn generators() {
        assert_eq!(generate(Family::Path, 4, 1, 7).unwrap().edges(), &[(0, 1), (1, 2), (2, 3)]);
        let a = generate(Family::RandomDelta, 8, 2, 11).unwrap();
        let b = generate(Family::RandomDelta, 8, 2, 11).unwrap();
        assert_eq!(a, b);
        assert!(matches!(generate(Family::BitReversal, 6, 2, 0), Err(Error::BadShape(_))));
        assert!(matches!(generate(Family::BinaryTree, 7, 1, 0), Err(Error::BadShape(_))));
    }

    #[test]
    fn bit_reversal_eight() {
        let g = generate(Family::BitReversal, 8, 2, 0).unwrap();
        // Layer-0 node rev(j) feeds layer-1 node 4 + j; rev on 2 bits is
        // 0->0, 1->2, 2->1, 3->3.
        let mut expected: Vec<(usize, usize)> = (1..8).map(|v| (v - 1, v)).collect();
        expected.extend([(0, 4), (2, 5), (1, 6), (3, 7)]);
        expected.sort_unstable();
        expected.dedup();
        assert_eq!(g.edges(), expected.as_slice());
        assert!(g.max_indegree() <= 2);
    }

    #[test]
    fn json_roundtrip_and_hash() {
        let g = generate(Family::RandomDelta, 10, 3, 5).unwrap();
        let text = g.to_json();
        assert_eq!(Dag::from_json(&text).unwrap(), g);
        assert_eq!(g.content_hash().len(), 64);
        assert!(matches!(Dag::from_json("{\"nodes\":2}"), Err(Error::Parse(_))));
        assert_eq!(
            Dag::from_json("{\"nodes\":2,\"delta\":1,\"edges\":[[0,1],[1,0]]}"),
            Err(Error::CycleDetected)
        );
    }
}
