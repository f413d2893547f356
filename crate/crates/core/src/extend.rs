//! Critical sets, interval partitioning and the extension of a black
//! pebbling to a red-blue pebbling.
//!
//! Notation: `new_j = P_j \ P_{j-1}`. An interval `(s - 1, e]` covers rounds
//! `s..=e`; its move set is `Critical(s, e)`, the nodes it needs that were
//! pebbled before it started.

use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::graph::Dag;
use crate::pebble::{
    is_legal_black, is_successful_black, round_moves, BlackPebbling, Cost, CostModel, NodeSet, RbConfig,
    RedBluePebbling,
};

fn parents(g: &Dag, set: &NodeSet) -> NodeSet {
    set.iter().flat_map(|&v| g.preds(v).iter().copied()).collect()
}

/// `Critical(t1, t2)`: parents of nodes newly pebbled in rounds `t1..=t2`
/// that were not themselves newly pebbled earlier in the window.
pub fn critical_set(g: &Dag, p: &BlackPebbling, t1: usize, t2: usize) -> Result<NodeSet> {
    let last = p.rounds();
    if t1 == 0 || t1 > t2 {
        return Err(Error::RoundOutOfRange { round: t1, last });
    }
    if t2 > last {
        return Err(Error::RoundOutOfRange { round: t2, last });
    }
    Ok(critical_window(g, p, t1, t2))
}

/// Like [`critical_set`] but an empty window (`t1 > t2`) yields the empty set.
pub(crate) fn critical_window(g: &Dag, p: &BlackPebbling, t1: usize, t2: usize) -> NodeSet {
    let mut earlier = NodeSet::new();
    let mut out = NodeSet::new();
    for i in t1..=t2 {
        let new = p.added(i);
        out.extend(parents(g, &new).difference(&earlier));
        earlier.extend(new);
    }
    out
}

/// `Critical(j, hi)` for every `j` in `lo..=hi + 1`, indexed by `j - lo`.
/// Uses `Critical(j, hi) = parents(new_j) ∪ (Critical(j + 1, hi) \ new_j)`.
fn suffix_critical(g: &Dag, p: &BlackPebbling, lo: usize, hi: usize) -> Vec<NodeSet> {
    let mut out = vec![NodeSet::new(); hi + 2 - lo];
    for j in (lo..=hi).rev() {
        let new = p.added(j);
        let mut cur = parents(g, &new);
        cur.extend(out[j + 1 - lo].difference(&new));
        out[j - lo] = cur;
    }
    out
}

/// Interval boundaries `t_0 = 0 < t_1 < ... < t_k = t` and the move set of
/// each interval.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IntervalPartition {
    pub boundaries: Vec<usize>,
    pub critical: Vec<NodeSet>,
}

impl IntervalPartition {
    pub fn interval_count(&self) -> usize {
        self.boundaries.len().saturating_sub(1)
    }

    /// Rounds covered by interval `a`, as an inclusive range.
    pub fn rounds(&self, a: usize) -> std::ops::RangeInclusive<usize> {
        self.boundaries[a] + 1..=self.boundaries[a + 1]
    }

    /// Index of the interval containing round `r >= 1`.
    pub fn interval_of(&self, r: usize) -> Option<usize> {
        if r == 0 || r > *self.boundaries.last()? {
            return None;
        }
        Some(self.boundaries.partition_point(|&b| b < r) - 1)
    }
}

/// `(10δ - 1) m`.
pub fn partition_threshold(delta: usize, m: usize) -> usize {
    (10 * delta - 1) * m
}

pub fn partition_intervals(g: &Dag, p: &BlackPebbling, delta: usize, m: usize) -> IntervalPartition {
    partition_intervals_with_threshold(g, p, partition_threshold(delta, m))
}

/// Each boundary is the least round `r` after the previous boundary `s` for
/// which some `j` with `s < j < r` has `|Critical(j, r)| > threshold`. The
/// final interval ends at `t` whether or not the threshold is reached.
pub fn partition_intervals_with_threshold(g: &Dag, p: &BlackPebbling, threshold: usize) -> IntervalPartition {
    let t = p.rounds();
    let mut boundaries = vec![0];
    let mut start = 0;
    while start < t {
        let hit = (start + 1..t).find(|&r| {
            let suffix = suffix_critical(g, p, start + 1, r);
            (start + 1..r).any(|j| suffix[j - start - 1].len() > threshold)
        });
        start = hit.unwrap_or(t);
        boundaries.push(start);
    }
    let critical = boundaries.windows(2).map(|w| critical_window(g, p, w[0] + 1, w[1])).collect();
    IntervalPartition { boundaries, critical }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TransferKind {
    Load,
    Store,
}

/// One cache/memory transfer together with the interval that pays for it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Transfer {
    pub node: usize,
    pub round: usize,
    pub kind: TransferKind,
    pub interval: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LemmaReport {
    pub max_critical: usize,
    pub max_r_old: usize,
    pub critical_violations: usize,
    pub r_old_violations: usize,
    pub containment_violations: usize,
}

impl LemmaReport {
    pub fn is_clean(&self) -> bool {
        self.critical_violations == 0 && self.r_old_violations == 0 && self.containment_violations == 0
    }
}

#[derive(Debug, Clone)]
pub struct ExtensionPebbling {
    pub rb: RedBluePebbling,
    pub partition: IntervalPartition,
    /// `R_old_j` for `j = 0..=t`.
    pub r_old: Vec<NodeSet>,
    /// Move set held red at round `j`: the move set of the interval that
    /// contains round `j + 1`, empty at `t`.
    pub r_move: Vec<NodeSet>,
    pub transfers: Vec<Transfer>,
    pub interval_costs: Vec<Cost>,
    pub delta: usize,
    pub m: usize,
}

/// Builds the extension with red budget `20δm`.
///
/// Round `j` holds red pebbles on `new_j`, on `R_old_j` (nodes computed in
/// the current interval that the rest of the interval still needs) and on
/// the move set of the interval containing `j + 1`; the next interval's move
/// set is therefore loaded at the last round of the current one. A node
/// computed at round `j` that a later interval's move set contains is stored
/// at round `j + 1`. Nothing else is ever stored.
pub fn extend_to_redblue(
    g: &Dag,
    p: &BlackPebbling,
    delta: usize,
    m: usize,
    cm: &CostModel,
) -> Result<ExtensionPebbling> {
    extend_with_partition(g, p, delta, m, cm, partition_intervals(g, p, delta, m))
}

/// As [`extend_to_redblue`] with an explicit partition threshold.
pub fn extend_with_threshold(
    g: &Dag,
    p: &BlackPebbling,
    delta: usize,
    m: usize,
    cm: &CostModel,
    threshold: usize,
) -> Result<ExtensionPebbling> {
    extend_with_partition(g, p, delta, m, cm, partition_intervals_with_threshold(g, p, threshold))
}

fn extend_with_partition(
    g: &Dag,
    p: &BlackPebbling,
    delta: usize,
    m: usize,
    cm: &CostModel,
    partition: IntervalPartition,
) -> Result<ExtensionPebbling> {
    let t = p.rounds();
    for i in 1..=t {
        let added = p.added(i).len();
        if added > m {
            return Err(Error::StepTooWide { round: i, added, m });
        }
    }
    if !is_legal_black(g, p) {
        return Err(Error::IllegalPebbling { round: 0, reason: "black pebbling is not legal".into() });
    }
    if !is_successful_black(g, p) {
        return Err(Error::Unsuccessful);
    }

    let k = partition.interval_count();
    let new: Vec<NodeSet> = (0..=t).map(|j| if j == 0 { NodeSet::new() } else { p.added(j) }).collect();

    let mut r_old = vec![NodeSet::new(); t + 1];
    for a in 0..k {
        let (s, e) = (partition.boundaries[a] + 1, partition.boundaries[a + 1]);
        let suffix = suffix_critical(g, p, s, e);
        let mut carry = NodeSet::new();
        for j in s..=e {
            carry.extend(new[j].iter().copied());
            carry = carry.intersection(&suffix[j + 1 - s]).copied().collect();
            r_old[j] = carry.clone();
        }
    }

    let r_move: Vec<NodeSet> = (0..=t)
        .map(|j| match partition.interval_of(j + 1) {
            Some(a) => partition.critical[a].clone(),
            None => NodeSet::new(),
        })
        .collect();

    let mut transfers = Vec::new();
    let mut configs = vec![RbConfig::default()];
    let mut blue = NodeSet::new();
    for j in 1..=t {
        for &v in &new[j - 1] {
            if blue.contains(&v) {
                continue;
            }
            let consumer = (0..k).find(|&a| partition.boundaries[a] + 1 >= j && partition.critical[a].contains(&v));
            if let Some(a) = consumer {
                blue.insert(v);
                transfers.push(Transfer { node: v, round: j, kind: TransferKind::Store, interval: a });
            }
        }
        let mut red = new[j].clone();
        red.extend(r_old[j].iter().copied());
        red.extend(r_move[j].iter().copied());
        configs.push(RbConfig { blue: blue.clone(), red });
    }
    let rb = RedBluePebbling::new(configs, 20 * delta * m)?;

    let mut interval_costs = vec![Cost::from_integer(0); k];
    for tr in &transfers {
        interval_costs[tr.interval] += cm.c_b;
    }
    for (j, fresh) in new.iter().enumerate().skip(1) {
        let moves = round_moves(g, &rb, j)?;
        let here = partition.interval_of(j).expect("round inside partition");
        for &v in &moves.computed {
            let a = if fresh.contains(&v) { here } else { here + 1 };
            interval_costs[a] += cm.c_r;
        }
        for &v in &moves.loaded {
            let a = if fresh.contains(&v) { here } else { here + 1 };
            interval_costs[a] += cm.c_b;
            transfers.push(Transfer { node: v, round: j, kind: TransferKind::Load, interval: a });
        }
    }
    transfers.sort_by_key(|tr| (tr.round, tr.kind == TransferKind::Store, tr.node));

    Ok(ExtensionPebbling { rb, partition, r_old, r_move, transfers, interval_costs, delta, m })
}

impl ExtensionPebbling {
    pub fn total_cost(&self) -> Cost {
        self.interval_costs.iter().sum()
    }

    /// `20δm c_b + c_r Σ |new_j|` over the rounds of interval `a`.
    pub fn interval_cost_bound(&self, p: &BlackPebbling, a: usize, cm: &CostModel) -> Cost {
        let computed: usize = self.partition.rounds(a).map(|j| p.added(j).len()).sum();
        cm.c_b * (20 * self.delta * self.m) as i64 + cm.c_r * computed as i64
    }

    pub fn cost_bound_holds(&self, p: &BlackPebbling, cm: &CostModel) -> bool {
        (0..self.partition.interval_count()).all(|a| self.interval_costs[a] <= self.interval_cost_bound(p, a, cm))
    }

    /// Largest `|P_j \ (B_j ∪ R_j)|`: black pebbles the extension does not
    /// cover.
    pub fn max_uncovered(&self, p: &BlackPebbling) -> usize {
        self.coverage(p).0
    }

    /// Largest `|(B_j ∪ R_j) \ P_j|`.
    pub fn max_slack(&self, p: &BlackPebbling) -> usize {
        self.coverage(p).1
    }

    fn coverage(&self, p: &BlackPebbling) -> (usize, usize) {
        let mut worst = (0, 0);
        for (c, pj) in self.rb.configs().iter().zip(p.configs()) {
            let held: NodeSet = c.blue.union(&c.red).copied().collect();
            worst.0 = worst.0.max(pj.difference(&held).count());
            worst.1 = worst.1.max(held.difference(pj).count());
        }
        worst
    }

    /// Checks `|Critical(j, e)| <= 10δm` and `|R_old_j| <= 10δm` for every
    /// round `j` of every interval ending at `e`, and that every node
    /// computed so far in the interval and still needed by it is in
    /// `R_old_j`.
    pub fn lemma_report(&self, g: &Dag, p: &BlackPebbling) -> LemmaReport {
        let bound = 10 * self.delta * self.m;
        let mut report = LemmaReport::default();
        for a in 0..self.partition.interval_count() {
            let (s, e) = (self.partition.boundaries[a] + 1, self.partition.boundaries[a + 1]);
            let suffix = suffix_critical(g, p, s, e);
            let mut computed = NodeSet::new();
            for j in s..=e {
                let crit = &suffix[j - s];
                report.max_critical = report.max_critical.max(crit.len());
                report.critical_violations += usize::from(crit.len() > bound);

                let old = &self.r_old[j];
                report.max_r_old = report.max_r_old.max(old.len());
                report.r_old_violations += usize::from(old.len() > bound);

                computed.extend(p.added(j));
                let missing = computed.intersection(&suffix[j + 1 - s]).any(|v| !old.contains(v));
                report.containment_violations += usize::from(missing);
            }
        }
        report
    }

    /// `{"boundaries", "critical", "interval_costs"}`.
    pub fn partition_report(&self) -> serde_json::Value {
        json!({
            "boundaries": self.partition.boundaries,
            "critical": self.partition.critical,
            "interval_costs": self.interval_costs.iter().map(Cost::to_string).collect::<Vec<_>>(),
        })
    }
}
