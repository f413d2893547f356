//! Black and red-blue pebbling: legality, success, move accounting, costs
//! and an exact minimum-cost oracle for tiny graphs.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap};

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Dag, NodeId};

pub type NodeSet = BTreeSet<NodeId>;
/// Exact non-negative rational cost.
pub type Cost = Ratio<i64>;

/// Default node cap of [`rbcost_oracle`].
pub const DEFAULT_ORACLE_NODES: usize = 6;
/// The oracle packs node sets into `u32` masks and never goes beyond this.
pub const HARD_ORACLE_NODES: usize = 16;

/// `c_b` is charged per n-bit word moved between cache and memory, `c_r`
/// per permutation query. `cache_words` is `m`, the cache size in words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostModel {
    pub c_b: Cost,
    pub c_r: Cost,
    pub cache_words: usize,
    pub width: u32,
}

impl CostModel {
    pub fn new(c_b: Cost, c_r: Cost, cache_words: usize, width: u32) -> Result<CostModel> {
        if c_b < Cost::from_integer(0) || c_r < Cost::from_integer(0) {
            return Err(Error::BadShape("costs must be non-negative".into()));
        }
        if cache_words == 0 {
            return Err(Error::BadShape("cache must hold at least one word".into()));
        }
        Ok(CostModel { c_b, c_r, cache_words, width })
    }

    /// Integer costs, mostly for tests.
    pub fn unit(c_b: i64, c_r: i64) -> CostModel {
        CostModel { c_b: Cost::from_integer(c_b), c_r: Cost::from_integer(c_r), cache_words: 1, width: 16 }
    }

    pub fn scaled(&self, factor: i64) -> CostModel {
        CostModel { c_b: self.c_b * factor, c_r: self.c_r * factor, ..*self }
    }
}

fn check_nodes<'a>(g: &Dag, sets: impl IntoIterator<Item = &'a NodeSet>) -> bool {
    sets.into_iter().flatten().all(|&v| v < g.node_count())
}

fn diff(a: &NodeSet, b: &NodeSet) -> NodeSet {
    a.difference(b).copied().collect()
}

/// `P_0, ..., P_t` with `P_0` empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlackPebbling {
    configs: Vec<NodeSet>,
}

impl BlackPebbling {
    pub fn new(configs: Vec<NodeSet>) -> Result<BlackPebbling> {
        match configs.first() {
            Some(first) if first.is_empty() => Ok(BlackPebbling { configs }),
            _ => Err(Error::NonEmptyInitial),
        }
    }

    pub fn from_rounds<I, S>(rounds: I) -> Result<BlackPebbling>
    where
        I: IntoIterator<Item = S>,
        S: IntoIterator<Item = NodeId>,
    {
        Self::new(rounds.into_iter().map(|r| r.into_iter().collect()).collect())
    }

    pub fn configs(&self) -> &[NodeSet] {
        &self.configs
    }

    /// Index of the last configuration.
    pub fn rounds(&self) -> usize {
        self.configs.len() - 1
    }

    pub fn config(&self, i: usize) -> &NodeSet {
        &self.configs[i]
    }

    /// `P_i \ P_{i-1}` for `i >= 1`.
    pub fn added(&self, i: usize) -> NodeSet {
        diff(&self.configs[i], &self.configs[i - 1])
    }

    pub fn max_step(&self) -> usize {
        (1..=self.rounds()).map(|i| self.added(i).len()).max().unwrap_or(0)
    }
}

pub fn is_legal_black(g: &Dag, p: &BlackPebbling) -> bool {
    check_nodes(g, &p.configs)
        && (1..=p.rounds()).all(|i| {
            let prev = &p.configs[i - 1];
            p.added(i).iter().all(|&v| g.preds(v).iter().all(|u| prev.contains(u)))
        })
}

pub fn is_successful_black(g: &Dag, p: &BlackPebbling) -> bool {
    g.sinks().iter().all(|s| p.configs[1..].iter().any(|c| c.contains(s)))
}

/// Sum of `|P_i|` over all rounds.
pub fn cumulative_black_cost(p: &BlackPebbling) -> usize {
    p.configs.iter().map(BTreeSet::len).sum()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RbConfig {
    pub blue: NodeSet,
    pub red: NodeSet,
}

/// `((B_0, R_0), ..., (B_t, R_t))` played with `red_budget` red pebbles.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RedBluePebbling {
    configs: Vec<RbConfig>,
    red_budget: usize,
}

impl RedBluePebbling {
    pub fn new(configs: Vec<RbConfig>, red_budget: usize) -> Result<RedBluePebbling> {
        match configs.first() {
            Some(c) if c.blue.is_empty() && c.red.is_empty() => Ok(RedBluePebbling { configs, red_budget }),
            _ => Err(Error::NonEmptyInitial),
        }
    }

    /// Builds from `(blue, red)` node lists per round.
    pub fn from_rounds(rounds: &[(&[NodeId], &[NodeId])], red_budget: usize) -> Result<RedBluePebbling> {
        let configs = rounds
            .iter()
            .map(|(b, r)| RbConfig { blue: b.iter().copied().collect(), red: r.iter().copied().collect() })
            .collect();
        Self::new(configs, red_budget)
    }

    pub fn configs(&self) -> &[RbConfig] {
        &self.configs
    }

    pub fn red_budget(&self) -> usize {
        self.red_budget
    }

    pub fn with_budget(mut self, red_budget: usize) -> RedBluePebbling {
        self.red_budget = red_budget;
        self
    }

    pub fn rounds(&self) -> usize {
        self.configs.len() - 1
    }

    pub fn max_red(&self) -> usize {
        self.configs.iter().map(|c| c.red.len()).max().unwrap_or(0)
    }
}

#[derive(Serialize, Deserialize)]
struct BlackLine {
    i: usize,
    #[serde(rename = "P")]
    p: Vec<NodeId>,
}

#[derive(Serialize, Deserialize)]
struct RedBlueLine {
    i: usize,
    #[serde(rename = "B")]
    b: Vec<NodeId>,
    #[serde(rename = "R")]
    r: Vec<NodeId>,
}

fn parse_lines<T: serde::de::DeserializeOwned>(text: &str) -> Result<Vec<T>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(k, l)| serde_json::from_str(l).map_err(|e| Error::Parse(format!("line {}: {e}", k + 1))))
        .collect()
}

fn check_round_index(k: usize, i: usize) -> Result<()> {
    if k == i {
        Ok(())
    } else {
        Err(Error::Parse(format!("expected round {k}, found {i}")))
    }
}

impl BlackPebbling {
    /// One `{"i": i, "P": [...]}` record per line.
    pub fn to_jsonl(&self) -> String {
        self.configs
            .iter()
            .enumerate()
            .map(|(i, c)| serde_json::to_string(&BlackLine { i, p: c.iter().copied().collect() }).unwrap() + "\n")
            .collect()
    }

    pub fn from_jsonl(text: &str) -> Result<BlackPebbling> {
        let lines: Vec<BlackLine> = parse_lines(text)?;
        let mut configs = Vec::with_capacity(lines.len());
        for (k, line) in lines.into_iter().enumerate() {
            check_round_index(k, line.i)?;
            configs.push(line.p.into_iter().collect());
        }
        Self::new(configs)
    }
}

impl RedBluePebbling {
    /// One `{"i": i, "B": [...], "R": [...]}` record per line. The red
    /// budget is not part of the format.
    pub fn to_jsonl(&self) -> String {
        self.configs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let line = RedBlueLine { i, b: c.blue.iter().copied().collect(), r: c.red.iter().copied().collect() };
                serde_json::to_string(&line).unwrap() + "\n"
            })
            .collect()
    }

    pub fn from_jsonl(text: &str, red_budget: usize) -> Result<RedBluePebbling> {
        let lines: Vec<RedBlueLine> = parse_lines(text)?;
        let mut configs = Vec::with_capacity(lines.len());
        for (k, line) in lines.into_iter().enumerate() {
            check_round_index(k, line.i)?;
            configs.push(RbConfig { blue: line.b.into_iter().collect(), red: line.r.into_iter().collect() });
        }
        Self::new(configs, red_budget)
    }
}

/// Classification of what changed in one red-blue round.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RoundMoves {
    /// New red pebbles whose predecessors were all red: computations.
    pub computed: NodeSet,
    /// New red pebbles with some predecessor not red: loads from memory.
    pub loaded: NodeSet,
    /// New blue pebbles: stores to memory.
    pub stored: NodeSet,
}

impl RoundMoves {
    pub fn blue_moves(&self) -> usize {
        self.loaded.len() + self.stored.len()
    }

    pub fn red_moves(&self) -> usize {
        self.computed.len()
    }

    pub fn cost(&self, cm: &CostModel) -> Cost {
        cm.c_b * self.blue_moves() as i64 + cm.c_r * self.red_moves() as i64
    }
}

pub fn round_moves(g: &Dag, rb: &RedBluePebbling, i: usize) -> Result<RoundMoves> {
    if i == 0 || i > rb.rounds() {
        return Err(Error::RoundOutOfRange { round: i, last: rb.rounds() });
    }
    let prev = &rb.configs[i - 1];
    let cur = &rb.configs[i];
    let (computed, loaded) = cur
        .red
        .difference(&prev.red)
        .partition(|&&v| g.preds(v).iter().all(|u| prev.red.contains(u)));
    Ok(RoundMoves { computed, loaded, stored: diff(&cur.blue, &prev.blue) })
}

/// `(BM_i, RM_i)`.
pub fn moves(g: &Dag, rb: &RedBluePebbling, i: usize) -> Result<(usize, usize)> {
    let m = round_moves(g, rb, i)?;
    Ok((m.blue_moves(), m.red_moves()))
}

/// Checks the three red-blue rules at every round and reports the first
/// violation.
pub fn check_legal_redblue(g: &Dag, rb: &RedBluePebbling) -> Result<()> {
    let illegal = |round: usize, reason: String| Err(Error::IllegalPebbling { round, reason });
    if !check_nodes(g, rb.configs.iter().flat_map(|c| [&c.blue, &c.red])) {
        return illegal(0, "node id out of range".into());
    }
    for i in 1..=rb.rounds() {
        let prev = &rb.configs[i - 1];
        let cur = &rb.configs[i];
        for &v in cur.red.difference(&prev.red) {
            if !prev.blue.contains(&v) {
                if let Some(u) = g.preds(v).iter().find(|u| !prev.red.contains(u)) {
                    return illegal(i, format!("red on {v} but predecessor {u} was not red"));
                }
            }
        }
        if let Some(v) = cur.blue.difference(&prev.blue).find(|v| !prev.red.contains(v)) {
            return illegal(i, format!("blue on {v} which was not red"));
        }
        if cur.red.len() > rb.red_budget {
            return illegal(i, format!("{} red pebbles exceed the budget {}", cur.red.len(), rb.red_budget));
        }
    }
    Ok(())
}

pub fn is_legal_redblue(g: &Dag, rb: &RedBluePebbling) -> bool {
    check_legal_redblue(g, rb).is_ok()
}

pub fn is_successful_redblue(g: &Dag, rb: &RedBluePebbling) -> bool {
    g.sinks().iter().all(|s| rb.configs.iter().any(|c| c.red.contains(s)))
}

/// `sum_i c_b * BM_i + c_r * RM_i` over rounds `1..=t`.
pub fn cost_redblue(g: &Dag, rb: &RedBluePebbling, cm: &CostModel) -> Cost {
    (1..=rb.rounds())
        .map(|i| round_moves(g, rb, i).expect("round in range").cost(cm))
        .sum()
}

/// Exact `rbcost(G, m)` with the default node cap. `Ok(None)` means no
/// legal successful pebbling exists with that many red pebbles.
pub fn rbcost_oracle(g: &Dag, red_budget: usize, cm: &CostModel) -> Result<Option<Cost>> {
    rbcost_oracle_capped(g, red_budget, cm, DEFAULT_ORACLE_NODES)
}

/// Least-cost search over states `(B, R, sinks already red)`. Any legal
/// single-round transition is an edge weighted `c_b * BM + c_r * RM`.
///
/// Blue pebbles are never removed during the search: a blue pebble only
/// ever enlarges the set of legal next moves and removing it is free, so
/// restricting to `B' ⊇ B` does not change the optimum.
pub fn rbcost_oracle_capped(g: &Dag, red_budget: usize, cm: &CostModel, max_nodes: usize) -> Result<Option<Cost>> {
    let n = g.node_count();
    if n > max_nodes.min(HARD_ORACLE_NODES) {
        return Err(Error::TooLarge(format!(
            "rbcost oracle accepts at most {} nodes, got {n}",
            max_nodes.min(HARD_ORACLE_NODES)
        )));
    }
    let pred_mask: Vec<u32> = (0..n).map(|v| g.preds(v).iter().fold(0, |m, &u| m | 1 << u)).collect();
    let sink_mask: u32 = g.sinks().iter().fold(0, |m, &s| m | 1 << s);

    type State = (u32, u32, u32);
    let start: State = (0, 0, 0);
    let mut best: HashMap<State, Cost> = HashMap::from([(start, Cost::from_integer(0))]);
    let mut frontier = BinaryHeap::from([Reverse((Cost::from_integer(0), start))]);

    while let Some(Reverse((cost, state))) = frontier.pop() {
        let (blue, red, seen) = state;
        if seen == sink_mask {
            return Ok(Some(cost));
        }
        if best.get(&state).is_some_and(|&c| c < cost) {
            continue;
        }
        let computable = (0..n).filter(|&v| pred_mask[v] & !red == 0).fold(0u32, |m, v| m | 1 << v);
        let red_candidates = red | blue | computable;
        let storable = red & !blue;

        let mut stores = storable;
        loop {
            let next_blue = blue | stores;
            let store_cost = cm.c_b * stores.count_ones() as i64;
            let mut next_red = red_candidates;
            loop {
                if next_red.count_ones() as usize <= red_budget {
                    let fresh = next_red & !red;
                    let (computed, loaded) = (0..n).filter(|&v| fresh & (1 << v) != 0).fold((0i64, 0i64), |(c, l), v| {
                        if pred_mask[v] & !red == 0 {
                            (c + 1, l)
                        } else {
                            (c, l + 1)
                        }
                    });
                    let step = store_cost + cm.c_b * loaded + cm.c_r * computed;
                    let next: State = (next_blue, next_red, seen | (next_red & sink_mask));
                    let total = cost + step;
                    if best.get(&next).is_none_or(|&c| total < c) {
                        best.insert(next, total);
                        frontier.push(Reverse((total, next)));
                    }
                }
                if next_red == 0 {
                    break;
                }
                next_red = (next_red - 1) & red_candidates;
            }
            if stores == 0 {
                break;
            }
            stores = (stores - 1) & storable;
        }
    }
    Ok(None)
}
