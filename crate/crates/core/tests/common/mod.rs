//! Random instance generators and independent reference computations shared
//! by the integration tests.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rbpebble::graph::{Dag, NodeId};
use rbpebble::pebble::{BlackPebbling, NodeSet, RbConfig, RedBluePebbling};

/// A random linear extension of `g`.
pub fn random_topo<R: Rng>(g: &Dag, rng: &mut R) -> Vec<NodeId> {
    let mut indeg: Vec<usize> = (0..g.node_count()).map(|v| g.indegree(v)).collect();
    let mut ready: Vec<NodeId> = (0..g.node_count()).filter(|&v| indeg[v] == 0).collect();
    let mut order = Vec::with_capacity(g.node_count());
    while !ready.is_empty() {
        let v = ready.swap_remove(rng.gen_range(0..ready.len()));
        order.push(v);
        for &w in g.succs(v) {
            indeg[w] -= 1;
            if indeg[w] == 0 {
                ready.push(w);
            }
        }
    }
    order
}

/// A legal, successful black pebbling adding between 1 and `m` nodes per
/// round. Pebbles are dropped at random, so nodes may be recomputed; after
/// `4|V|` rounds dropping stops and the pebbling finishes monotonically.
pub fn random_black<R: Rng>(g: &Dag, m: usize, rng: &mut R) -> BlackPebbling {
    let sinks: BTreeSet<NodeId> = g.sinks().into_iter().collect();
    let mut configs = vec![NodeSet::new()];
    let mut held = NodeSet::new();
    let mut seen = BTreeSet::new();
    while !sinks.is_subset(&seen) {
        let mut ready: Vec<NodeId> = (0..g.node_count())
            .filter(|v| !held.contains(v) && g.preds(*v).iter().all(|u| held.contains(u)))
            .collect();
        ready.shuffle(rng);
        let take = rng.gen_range(1..=m.min(ready.len()));
        let mut next = held.clone();
        if configs.len() < 4 * g.node_count() {
            next.retain(|_| rng.gen_bool(0.75));
        }
        next.extend(&ready[..take]);
        seen.extend(&ready[..take]);
        held = next;
        configs.push(held.clone());
    }
    BlackPebbling::new(configs).unwrap()
}

/// A legal, successful red-blue pebbling with red budget `m >= max(indegree, 1)`.
///
/// Nodes are evaluated in a random topological order. Missing predecessors
/// are loaded (or recomputed, for sources); victims are chosen at random and
/// stored first when still needed. Extra stores and blue deletions are
/// sprinkled in so that every move class occurs.
pub fn random_redblue<R: Rng>(g: &Dag, m: usize, rng: &mut R) -> RedBluePebbling {
    let order = random_topo(g, rng);
    let mut pos = vec![0; g.node_count()];
    for (k, &v) in order.iter().enumerate() {
        pos[v] = k;
    }
    let needed_after = |u: NodeId, k: usize| g.succs(u).iter().any(|&w| pos[w] > k);

    let mut configs = vec![RbConfig::default()];
    let mut red = NodeSet::new();
    let mut blue = NodeSet::new();

    // Shrinks `red` to `room` nodes outside `pinned`, storing live victims.
    // The store happens in the same round as the eviction or, at random, in
    // a round of its own just before.
    let evict = |red: &mut NodeSet,
                     blue: &mut NodeSet,
                     configs: &mut Vec<RbConfig>,
                     pinned: &NodeSet,
                     room: usize,
                     k: usize,
                     rng: &mut R| {
        let mut victims: Vec<NodeId> = red.difference(pinned).copied().collect();
        victims.shuffle(rng);
        let excess = (red.len()).saturating_sub(room);
        let victims = &victims[..excess.min(victims.len())];
        let stores: Vec<NodeId> =
            victims.iter().copied().filter(|&v| !g.is_source(v) && !blue.contains(&v) && needed_after(v, k)).collect();
        if !stores.is_empty() && rng.gen_bool(0.5) {
            blue.extend(&stores);
            configs.push(RbConfig { blue: blue.clone(), red: red.clone() });
        } else {
            blue.extend(&stores);
        }
        for v in victims {
            red.remove(v);
        }
    };

    for (k, &v) in order.iter().enumerate() {
        let preds: NodeSet = g.preds(v).iter().copied().collect();
        let missing: NodeSet = preds.difference(&red).copied().collect();
        if !missing.is_empty() {
            let pinned: NodeSet = preds.intersection(&red).copied().collect();
            evict(&mut red, &mut blue, &mut configs, &pinned, m - missing.len(), k, rng);
            red.extend(&missing);
            configs.push(RbConfig { blue: blue.clone(), red: red.clone() });
        }
        evict(&mut red, &mut blue, &mut configs, &NodeSet::new(), m - 1, k, rng);
        red.insert(v);
        if rng.gen_bool(0.1) {
            // A gratuitous store of something already red last round.
            let prev = &configs.last().unwrap().red;
            if let Some(&u) = prev.iter().find(|u| red.contains(u) && !blue.contains(u)) {
                blue.insert(u);
            }
        }
        if rng.gen_bool(0.2) {
            blue.retain(|&u| needed_after(u, k) || rng.gen_bool(0.5));
        }
        configs.push(RbConfig { blue: blue.clone(), red: red.clone() });
    }
    RedBluePebbling::new(configs, m).unwrap()
}

/// `Critical(t1, t2)` straight from its definition: parents of nodes newly
/// pebbled at some round `j` of the window, minus nodes newly pebbled at a
/// round of the window strictly before `j`.
pub fn critical_reference(g: &Dag, p: &BlackPebbling, t1: usize, t2: usize) -> NodeSet {
    let mut out = NodeSet::new();
    for j in t1..=t2 {
        let earlier: NodeSet = (t1..j).flat_map(|i| p.added(i)).collect();
        for v in p.added(j) {
            out.extend(g.preds(v).iter().filter(|u| !earlier.contains(u)));
        }
    }
    out
}
