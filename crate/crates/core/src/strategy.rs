//! Honest evaluation strategies expressed as pebblings.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::{Dag, NodeId};
use crate::pebble::{BlackPebbling, NodeSet, RbConfig, RedBluePebbling};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Sequential evaluation in topological order with a cache of `m`
    /// labels, evicting the label needed furthest in the future.
    GreedyKeepHot,
    /// Sequential evaluation keeping every label red; needs `|V| <= m`.
    AllRedIfFits,
}

impl Strategy {
    pub const ALL: [Strategy; 2] = [Strategy::GreedyKeepHot, Strategy::AllRedIfFits];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::GreedyKeepHot => "greedy_keep_hot",
            Strategy::AllRedIfFits => "all_red_if_fits",
        }
    }

    /// A red-blue pebbling with red budget `m`.
    pub fn pebbling(self, g: &Dag, m: usize) -> Result<RedBluePebbling> {
        match self {
            Strategy::GreedyKeepHot => greedy_keep_hot(g, m),
            Strategy::AllRedIfFits => all_red_if_fits(g, m),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Strategy> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown strategy `{s}`")))
    }
}

fn infeasible(strategy: Strategy, reason: String) -> Error {
    Error::StrategyInfeasible { strategy: strategy.name().into(), reason }
}

pub fn all_red_if_fits(g: &Dag, m: usize) -> Result<RedBluePebbling> {
    if g.node_count() > m {
        return Err(infeasible(Strategy::AllRedIfFits, format!("{} nodes do not fit in {m} words", g.node_count())));
    }
    let mut configs = vec![RbConfig::default()];
    let mut red = NodeSet::new();
    for &v in g.topo_order() {
        red.insert(v);
        configs.push(RbConfig { blue: NodeSet::new(), red: red.clone() });
    }
    RedBluePebbling::new(configs, m)
}

/// Positions in the topological order at which each node is consumed.
fn use_positions(g: &Dag) -> Vec<Vec<usize>> {
    let mut pos = vec![0; g.node_count()];
    for (k, &v) in g.topo_order().iter().enumerate() {
        pos[v] = k;
    }
    (0..g.node_count())
        .map(|u| {
            let mut uses: Vec<usize> = g.succs(u).iter().map(|&w| pos[w]).collect();
            uses.sort_unstable();
            uses
        })
        .collect()
}

fn next_use(uses: &[usize], after: usize) -> Option<usize> {
    uses.iter().copied().find(|&k| k > after)
}

/// Keeps at most `room` nodes of `cache`, always keeping `pinned`; drops
/// nodes with no use after `step` first, then those used furthest away.
/// Returns the kept set and the evicted nodes that are used again.
fn shrink(cache: &NodeSet, pinned: &NodeSet, room: usize, step: usize, uses: &[Vec<usize>]) -> (NodeSet, Vec<NodeId>) {
    let mut live: Vec<(usize, NodeId)> = cache
        .iter()
        .filter(|v| !pinned.contains(v))
        .filter_map(|&v| next_use(&uses[v], step).map(|k| (k, v)))
        .collect();
    live.sort_unstable();
    let free = room.saturating_sub(pinned.len());
    let spilled = live.split_off(free.min(live.len())).into_iter().map(|(_, v)| v).collect();
    let mut kept = pinned.clone();
    kept.extend(live.into_iter().map(|(_, v)| v));
    (kept, spilled)
}

/// Evaluates nodes one per round in topological order. Missing predecessors
/// are brought back in a round of their own (sources are recomputed, other
/// nodes loaded from memory); a label evicted while still needed is stored
/// in the round it leaves the cache, unless it is a source or already blue.
pub fn greedy_keep_hot(g: &Dag, m: usize) -> Result<RedBluePebbling> {
    if m < g.max_indegree().max(1) {
        return Err(infeasible(
            Strategy::GreedyKeepHot,
            format!("a cache of {m} words cannot hold {} predecessors", g.max_indegree()),
        ));
    }
    let uses = use_positions(g);
    let mut configs = vec![RbConfig::default()];
    let mut red = NodeSet::new();
    let mut blue = NodeSet::new();

    let spill = |spilled: Vec<NodeId>, blue: &mut NodeSet| {
        for v in spilled {
            if !g.is_source(v) {
                blue.insert(v);
            }
        }
    };

    for (step, &v) in g.topo_order().iter().enumerate() {
        let preds: NodeSet = g.preds(v).iter().copied().collect();
        if !preds.is_subset(&red) {
            let present: NodeSet = preds.intersection(&red).copied().collect();
            let missing = preds.len() - present.len();
            let (kept, spilled) = shrink(&red, &present, m - missing, step.saturating_sub(1), &uses);
            spill(spilled, &mut blue);
            red = kept;
            red.extend(preds.iter().copied());
            configs.push(RbConfig { blue: blue.clone(), red: red.clone() });
        }
        let (kept, spilled) = shrink(&red, &NodeSet::new(), m - 1, step, &uses);
        spill(spilled, &mut blue);
        red = kept;
        red.insert(v);
        configs.push(RbConfig { blue: blue.clone(), red: red.clone() });
    }
    RedBluePebbling::new(configs, m)
}

/// One node per round in topological order; a node is dropped once all of
/// its successors have been pebbled.
pub fn greedy_black(g: &Dag) -> BlackPebbling {
    let uses = use_positions(g);
    let mut configs = vec![NodeSet::new()];
    let mut held = NodeSet::new();
    for (step, &v) in g.topo_order().iter().enumerate() {
        held.retain(|&u| next_use(&uses[u], step).is_some());
        held.insert(v);
        configs.push(held.clone());
    }
    BlackPebbling::new(configs).expect("first configuration is empty")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{diamond, generate, Family};
    use crate::pebble::{
        check_legal_redblue, cost_redblue, is_legal_black, is_successful_black, is_successful_redblue, moves,
        CostModel,
    };

    fn path(n: usize) -> Dag {
        generate(Family::Path, n, 1, 0).unwrap()
    }

    fn words_moved(g: &Dag, rb: &RedBluePebbling) -> usize {
        (1..=rb.rounds()).map(|i| moves(g, rb, i).unwrap().0).sum()
    }

    #[test]
    fn names_roundtrip() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
        assert!("lazy".parse::<Strategy>().is_err());
    }

    #[test]
    fn path_needs_no_transfers() {
        let g = path(8);
        for m in [1, 8] {
            let rb = greedy_keep_hot(&g, m).unwrap();
            check_legal_redblue(&g, &rb).unwrap();
            assert!(is_successful_redblue(&g, &rb));
            assert_eq!(words_moved(&g, &rb), 0);
            assert_eq!(cost_redblue(&g, &rb, &CostModel::unit(1, 1)), 8.into());
        }
        let rb = all_red_if_fits(&g, 8).unwrap();
        check_legal_redblue(&g, &rb).unwrap();
        assert_eq!(rb.max_red(), 8);
        assert!(matches!(all_red_if_fits(&g, 7), Err(Error::StrategyInfeasible { .. })));
    }

    #[test]
    fn small_cache_spills_to_memory() {
        // A long chain whose head is needed again at the very end.
        let mut edges: Vec<(usize, usize)> = (0..5).map(|i| (i, i + 1)).collect();
        edges.push((1, 5));
        let g = Dag::build(6, &edges).unwrap();
        let rb = greedy_keep_hot(&g, 2).unwrap();
        check_legal_redblue(&g, &rb).unwrap();
        assert!(is_successful_redblue(&g, &rb));
        // Node 1 stays red beside the chain, so nothing moves.
        assert_eq!(words_moved(&g, &rb), 0);

        let mut edges: Vec<(usize, usize)> = (0..6).map(|i| (i, i + 1)).collect();
        edges.extend([(1, 6), (2, 5)]);
        let g = Dag::build(7, &edges).unwrap();
        let rb = greedy_keep_hot(&g, 2).unwrap();
        check_legal_redblue(&g, &rb).unwrap();
        assert!(is_successful_redblue(&g, &rb));
        assert!(words_moved(&g, &rb) > 0);
    }

    #[test]
    fn greedy_is_legal_on_generated_graphs() {
        for family in Family::ALL {
            for seed in 0..5 {
                let g = generate(family, 16, 2, seed).unwrap();
                for m in g.max_indegree()..=4 {
                    let rb = greedy_keep_hot(&g, m).unwrap();
                    check_legal_redblue(&g, &rb).unwrap();
                    assert!(is_successful_redblue(&g, &rb));
                    assert!(rb.max_red() <= m);
                }
            }
        }
        assert!(matches!(greedy_keep_hot(&diamond(), 1), Err(Error::StrategyInfeasible { .. })));
    }

    #[test]
    fn greedy_black_is_legal() {
        for family in Family::ALL {
            let g = generate(family, 16, 2, 3).unwrap();
            let p = greedy_black(&g);
            assert!(is_legal_black(&g, &p));
            assert!(is_successful_black(&g, &p));
            assert_eq!(p.max_step(), 1);
        }
        let p = greedy_black(&path(3));
        assert_eq!(p.configs().iter().map(|c| c.len()).collect::<Vec<_>>(), vec![0, 1, 1, 1]);
    }
}
