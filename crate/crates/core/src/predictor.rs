//! Hints for one interval of an honest run, a predictor that replays the
//! evaluator from the interval's cache snapshot and predicts the
//! permutation at every critical prelabel, and a guess-bound estimator.
//!
//! Interval `a` covers rounds `t_a + 1..=t_{a+1}` of the run. Its critical
//! nodes are the move set `Critical(t_a + 1, t_{a+1})`: labels the interval
//! consumes that were computed before it started. The predictor must output
//! `(prelab(v), pi(prelab(v)))` for each of them without ever asking the
//! permutation for `pi(prelab(v))` or `pi^-1(postlab(v))`.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{
    classify_calls, execute_redblue, extract_black_pebbling, run_rounds, BitString, CallClassification, EvalState,
    ExecutionTrace, Oracle,
};
use crate::extend::{partition_intervals_with_threshold, partition_threshold, IntervalPartition};
use crate::graph::{Dag, NodeId};
use crate::label::{eval_labels, source_positions, InputVector, LabelMap};
use crate::pebble::{round_moves, BlackPebbling, CostModel, RedBluePebbling};
use crate::perm::{Direction, Permutation, Word};
use crate::rng;
use crate::strategy::greedy_keep_hot;

/// `ceil(log2(x))`, zero for `x <= 1`.
pub fn ceil_log2(x: usize) -> usize {
    if x <= 1 {
        0
    } else {
        (usize::BITS - (x - 1).leading_zeros()) as usize
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct HintBits {
    pub critical_list: usize,
    pub q: usize,
    pub w: usize,
    pub l: usize,
    pub h: usize,
    pub snapshot: usize,
    pub messages: usize,
    pub total: usize,
}

/// Everything the predictor is given about one interval.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Hint {
    pub interval: usize,
    /// Last round before the interval; the snapshot is taken after it.
    pub start_round: usize,
    pub end_round: usize,
    pub node_count: usize,
    pub width: u32,
    /// Queries the interval makes.
    pub query_count: usize,
    /// `v_1, v_2, ...` ordered by first critical call, ties by node id.
    pub critical_nodes: Vec<NodeId>,
    /// Index, relative to the interval's first query, of the first critical
    /// call for each `v_j`.
    pub q: Vec<usize>,
    /// The successor each such call is a correct call for.
    pub w: Vec<NodeId>,
    /// Relative index of the first correct call for `v_j`, if any.
    pub l: Vec<Option<usize>>,
    /// `lab(v_j)` when a later `v_k` shares the same first critical call.
    pub h: Vec<Option<Word>>,
    /// Cached labels at `start_round`, ascending node id.
    pub cache_snapshot: Vec<BitString>,
    /// Memory-to-cache messages of the interval, in order.
    pub messages: Vec<BitString>,
    pub bits: HintBits,
}

impl Hint {
    fn compute_bits(&self) -> HintBits {
        let k = self.critical_nodes.len();
        let node_bits = ceil_log2(self.node_count);
        let mut bits = HintBits {
            critical_list: k * node_bits,
            q: k * ceil_log2(self.query_count),
            w: k * node_bits,
            // One extra symbol encodes "no correct call".
            l: k * ceil_log2(self.query_count + 1),
            h: self.h.iter().flatten().count() * self.width as usize,
            snapshot: self.cache_snapshot.iter().map(BitString::bits).sum(),
            messages: self.messages.iter().map(BitString::bits).sum(),
            total: 0,
        };
        bits.total = bits.critical_list + bits.q + bits.w + bits.l + bits.h + bits.snapshot + bits.messages;
        bits
    }
}

/// Builds the hint for interval `a` of an honest run of `rb`.
pub fn build_hint(
    g: &Dag,
    lm: &LabelMap,
    rb: &RedBluePebbling,
    tr: &ExecutionTrace,
    calls: &CallClassification,
    partition: &IntervalPartition,
    a: usize,
) -> Result<Hint> {
    let k = partition.interval_count();
    if a == k {
        return Err(Error::LastInterval(a));
    }
    if a > k {
        return Err(Error::NoSuchInterval(a));
    }
    if lm.has_collision() {
        return Err(Error::AmbiguousLabels);
    }
    let (start, end) = (partition.boundaries[a], partition.boundaries[a + 1]);
    let critical = &partition.critical[a];
    if critical.is_empty() {
        return Err(Error::NoCriticalNodes(a));
    }
    let base = calls.rounds.iter().position(|&r| r > start).unwrap_or(calls.rounds.len());
    let query_count = calls.rounds[base..].iter().take_while(|&&r| r <= end).count();

    let mut entries = Vec::with_capacity(critical.len());
    for &v in critical {
        let (e, w) = calls
            .first_critical_after(g, v, start)
            .filter(|&(e, _)| e < base + query_count)
            .ok_or_else(|| Error::InconsistentHint(format!("node {v} has no critical call in interval {a}")))?;
        let first_correct = calls.first_correct_after(v, start).filter(|&c| c < base + query_count);
        entries.push((e - base, v, w, first_correct.map(|c| c - base)));
    }
    entries.sort_unstable();

    let h = (0..entries.len())
        .map(|j| entries[j + 1..].iter().any(|other| other.0 == entries[j].0).then(|| lm.lab[entries[j].1]))
        .collect();
    let width = tr.header.n;
    let cache_snapshot =
        rb.configs()[start].red.iter().map(|&v| BitString::from_word(lm.lab[v], width)).collect();
    let messages = tr
        .rounds
        .iter()
        .filter(|r| r.i > start && r.i <= end)
        .flat_map(|r| r.from_mem.iter().cloned())
        .collect();

    let mut hint = Hint {
        interval: a,
        start_round: start,
        end_round: end,
        node_count: g.node_count(),
        width,
        query_count,
        critical_nodes: entries.iter().map(|e| e.1).collect(),
        q: entries.iter().map(|e| e.0).collect(),
        w: entries.iter().map(|e| e.2).collect(),
        l: entries.iter().map(|e| e.3).collect(),
        h,
        cache_snapshot,
        messages,
        bits: HintBits::default(),
    };
    hint.bits = hint.compute_bits();
    Ok(hint)
}

/// Analytical hint-size bounds for cache `m` words of `n` bits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HintBudget {
    pub critical_list: usize,
    pub q: usize,
    pub w: usize,
    pub l: usize,
    pub h: usize,
    pub snapshot_and_messages: usize,
    pub component_total: usize,
    /// `(10δ - 3) m n`.
    pub claimed_total: usize,
    /// `|V| <= 2^(n/8δ)` and `q <= 2^(n/8δ)`.
    pub in_regime: bool,
    /// `q <= 2^(n/10δ)`.
    pub q_within_theorem: bool,
    /// `|V| <= 2^(n/4δ)`.
    pub nodes_within_theorem: bool,
}

/// `x <= 2^(n / d)` without floating point.
fn within_power(x: usize, n: u32, d: usize) -> bool {
    // x <= 2^(n/d)  <=>  x^d <= 2^n
    let mut acc: u128 = 1;
    for _ in 0..d {
        acc = acc.saturating_mul(x as u128);
    }
    n >= 128 || acc <= 1u128 << n
}

pub fn hint_budget(delta: usize, m: usize, n: u32, node_count: usize, q: usize) -> HintBudget {
    let slots = 10 * delta * m;
    let nn = n as usize;
    let critical_list = slots * ceil_log2(node_count);
    let q_bits = slots * ceil_log2(q);
    let h = 10 * (delta - 1) * m * nn;
    let snapshot_and_messages = 2 * m * nn;
    HintBudget {
        critical_list,
        q: q_bits,
        w: critical_list,
        l: q_bits,
        h,
        snapshot_and_messages,
        component_total: 2 * critical_list + 2 * q_bits + h + snapshot_and_messages,
        claimed_total: (10 * delta - 3) * m * nn,
        in_regime: within_power(node_count, n, 8 * delta) && within_power(q, n, 8 * delta),
        q_within_theorem: within_power(q, n, 10 * delta),
        nodes_within_theorem: within_power(node_count, n, 4 * delta),
    }
}

/// `5mn + 10δmn - 10mn + 2mn = (10δ - 3)mn`.
pub fn hint_identity_holds(delta: usize, m: usize, n: usize) -> bool {
    5 * m * n + 10 * delta * m * n + 2 * m * n == (10 * delta - 3) * m * n + 10 * m * n
}

/// A permutation that refuses queries at the points being predicted and
/// records every refusal.
pub struct GuardedPermutation<'a> {
    perm: &'a mut Permutation,
    forbidden_forward: BTreeSet<Word>,
    forbidden_inverse: BTreeSet<Word>,
    pub rejected: Vec<(Direction, Word)>,
    pub answered: usize,
}

impl<'a> GuardedPermutation<'a> {
    pub fn new(perm: &'a mut Permutation, lm: &LabelMap, critical: &[NodeId]) -> GuardedPermutation<'a> {
        GuardedPermutation {
            perm,
            forbidden_forward: critical.iter().map(|&v| lm.prelab[v]).collect(),
            forbidden_inverse: critical.iter().map(|&v| lm.postlab[v]).collect(),
            rejected: Vec::new(),
            answered: 0,
        }
    }

    /// Ground truth for scoring predictions; never used to answer queries.
    pub fn truth(&self, x: Word) -> Word {
        self.perm.peek(Direction::Forward, x)
    }
}

impl Oracle for GuardedPermutation<'_> {
    fn query(&mut self, direction: Direction, input: Word, round: usize) -> Result<Word> {
        let forbidden = match direction {
            Direction::Forward => &self.forbidden_forward,
            Direction::Inverse => &self.forbidden_inverse,
        };
        if forbidden.contains(&input) {
            self.rejected.push((direction, input));
            return Err(Error::ForbiddenQuery { direction: direction.symbol().into(), word: input });
        }
        self.answered += 1;
        self.perm.query(direction, input, round)
    }
}

/// An adversary that can be resumed from an interval's hint.
pub trait ReplayAdversary {
    fn replay(&mut self, oracle: &mut dyn Oracle) -> Result<()>;
}

/// The honest evaluator resumed after `start_round` from the hint's cache
/// snapshot and message transcript.
pub struct HonestReplay<'a> {
    g: &'a Dag,
    x: &'a InputVector,
    rb: &'a RedBluePebbling,
    width: u32,
    first: usize,
    last: usize,
    state: EvalState,
}

impl<'a> HonestReplay<'a> {
    pub fn from_hint(g: &'a Dag, x: &'a InputVector, rb: &'a RedBluePebbling, hint: &Hint) -> Result<HonestReplay<'a>> {
        let mismatch = |what: &str| Error::InconsistentHint(format!("{what} does not match the pebbling"));
        let cached = &rb.configs()[hint.start_round].red;
        if cached.len() != hint.cache_snapshot.len() {
            return Err(mismatch("cache snapshot"));
        }
        let words = |bits: &[BitString]| bits.iter().map(|b| b.to_word().ok_or_else(|| mismatch("message"))).collect::<Result<Vec<_>>>();
        let cache = cached.iter().copied().zip(words(&hint.cache_snapshot)?).collect();

        // The terminal trace round has no pebbling round behind it.
        let last = hint.end_round.min(rb.rounds());
        let mut loads = Vec::new();
        for i in hint.start_round + 1..=last {
            loads.extend(round_moves(g, rb, i)?.loaded);
        }
        if loads.len() != hint.messages.len() {
            return Err(mismatch("message transcript"));
        }
        let memory = loads.into_iter().zip(words(&hint.messages)?).collect();
        let emitted = g.sinks().into_iter().collect();
        Ok(HonestReplay {
            g,
            x,
            rb,
            width: hint.width,
            first: hint.start_round + 1,
            last,
            state: EvalState { cache, memory, emitted },
        })
    }
}

impl ReplayAdversary for HonestReplay<'_> {
    fn replay(&mut self, oracle: &mut dyn Oracle) -> Result<()> {
        run_rounds(self.g, oracle, self.x, self.rb, self.width, &mut self.state, self.first, self.last).map(|_| ())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// The successor has no other predecessor: `lab(v) = prelab(w)`.
    SinglePredecessor,
    /// `lab(v) = prelab(w) ^` labels of the successor's other predecessors.
    OtherPredecessors,
    /// Taken from the hint.
    HintLabel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Prediction {
    pub node: NodeId,
    pub prelab: Word,
    pub predicted: Word,
    pub correct: bool,
    pub method: Method,
    /// Resolving this label needed a permutation query outside the replay.
    /// Recomputing the prelabel from ancestors is not counted.
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PredictionReport {
    pub interval: usize,
    pub predictions: Vec<Prediction>,
    pub replay_queries: usize,
    pub oracle_queries: usize,
    pub answered_from_list: usize,
    /// Inverse critical calls whose successor prelabel was derived from a
    /// known label instead of the permutation.
    pub inverse_extractions: usize,
    pub forbidden_attempts: Vec<(Direction, Word)>,
}

impl PredictionReport {
    pub fn all_correct(&self) -> bool {
        self.predictions.iter().all(|p| p.correct) && self.forbidden_attempts.is_empty()
    }

    pub fn distinct_points(&self) -> usize {
        self.predictions.iter().map(|p| p.prelab).collect::<BTreeSet<_>>().len()
    }
}

struct Predictor<'h, 'p> {
    g: &'h Dag,
    x: &'h InputVector,
    hint: &'h Hint,
    guard: &'h mut GuardedPermutation<'p>,
    positions: Vec<Option<usize>>,
    critical: Vec<Option<usize>>,
    /// Relative call index -> members of its critical group.
    groups: BTreeMap<usize, Vec<usize>>,
    first_correct: HashMap<usize, usize>,
    lab: Vec<Option<Word>>,
    prelab_c: Vec<Option<Word>>,
    postlab_c: Vec<Option<Word>>,
    /// Every `(prelab, postlab)` pair observed so far.
    pairs: HashMap<Word, Word>,
    /// Critical calls seen: (call index, successor, successor prelabel).
    pending: Vec<(usize, NodeId, Word)>,
    method: Vec<Option<Method>>,
    fallback: Vec<bool>,
    counter: usize,
    answered_from_list: usize,
    inverse_extractions: usize,
}

impl<'h, 'p> Predictor<'h, 'p> {
    fn new(g: &'h Dag, x: &'h InputVector, hint: &'h Hint, guard: &'h mut GuardedPermutation<'p>) -> Self {
        let n = g.node_count();
        let mut critical = vec![None; n];
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        let mut first_correct = HashMap::new();
        for (j, &v) in hint.critical_nodes.iter().enumerate() {
            critical[v] = Some(j);
            groups.entry(hint.q[j]).or_default().push(j);
            if let Some(l) = hint.l[j] {
                first_correct.insert(l, j);
            }
        }
        let k = hint.critical_nodes.len();
        Predictor {
            g,
            x,
            hint,
            guard,
            positions: source_positions(g),
            critical,
            groups,
            first_correct,
            lab: vec![None; n],
            prelab_c: vec![None; n],
            postlab_c: vec![None; n],
            pairs: HashMap::new(),
            pending: Vec::new(),
            method: vec![None; k],
            fallback: vec![false; k],
            counter: 0,
            answered_from_list: 0,
            inverse_extractions: 0,
        }
    }

    fn is_critical(&self, v: NodeId) -> bool {
        self.critical[v].is_some()
    }

    fn known_prelab(&self, u: NodeId) -> Option<Word> {
        match self.positions[u] {
            Some(s) => Some(self.x.0[s]),
            None => self.g.preds(u).iter().try_fold(0, |acc, &p| self.lab[p].map(|l| acc ^ l)),
        }
    }

    /// Propagates labels of non-critical nodes from observed pairs and
    /// resolves critical groups until nothing changes.
    fn learn(&mut self) {
        loop {
            let mut changed = false;
            for u in 0..self.g.node_count() {
                if self.lab[u].is_some() || self.is_critical(u) {
                    continue;
                }
                if let Some(pre) = self.known_prelab(u) {
                    if let Some(&post) = self.pairs.get(&pre) {
                        self.lab[u] = Some(pre ^ post);
                        changed = true;
                    }
                }
            }
            let pending = std::mem::take(&mut self.pending);
            for (id, w, pre_w) in pending {
                if self.resolve(id, w, pre_w) {
                    changed = true;
                } else {
                    self.pending.push((id, w, pre_w));
                }
            }
            if !changed {
                break;
            }
        }
    }

    /// Labels of the critical group realised by call `id` on successor `w`.
    fn resolve(&mut self, id: usize, w: NodeId, pre_w: Word) -> bool {
        let members = self.groups[&id].clone();
        for &j in &members {
            if let Some(h) = self.hint.h[j] {
                self.lab[self.hint.critical_nodes[j]].get_or_insert(h);
                self.method[j].get_or_insert(Method::HintLabel);
            }
        }
        let Some(&last) = members.iter().find(|&&j| self.hint.h[j].is_none()) else {
            return true;
        };
        let v = self.hint.critical_nodes[last];
        if self.lab[v].is_some() {
            return true;
        }
        let others = self.g.preds(w).iter().filter(|&&u| u != v).try_fold(0, |acc, &u| self.lab[u].map(|l| acc ^ l));
        match others {
            Some(rest) => {
                self.lab[v] = Some(pre_w ^ rest);
                self.method[last] =
                    Some(if self.g.indegree(w) == 1 { Method::SinglePredecessor } else { Method::OtherPredecessors });
                true
            }
            None => false,
        }
    }

    fn answer(&mut self, direction: Direction, input: Word, round: usize) -> Result<Word> {
        let e = self.counter;
        self.counter += 1;

        let listed = if let Some(&j) = self.first_correct.get(&e) {
            let v = self.hint.critical_nodes[j];
            self.learn();
            let lab = self.lab[v]
                .ok_or_else(|| Error::InconsistentHint(format!("label of {v} unknown at its first correct call")))?;
            let out = lab ^ input;
            match direction {
                Direction::Forward => (self.prelab_c[v], self.postlab_c[v]) = (Some(input), Some(out)),
                Direction::Inverse => (self.prelab_c[v], self.postlab_c[v]) = (Some(out), Some(input)),
            }
            Some(out)
        } else {
            let stored = match direction {
                Direction::Forward => &self.prelab_c,
                Direction::Inverse => &self.postlab_c,
            };
            let hit = stored.iter().position(|&s| s == Some(input));
            hit.and_then(|v| self.lab[v]).map(|lab| lab ^ input)
        };
        let output = match listed {
            Some(out) => {
                self.answered_from_list += 1;
                out
            }
            None => self.guard.query(direction, input, round)?,
        };
        let (pre, post) = match direction {
            Direction::Forward => (input, output),
            Direction::Inverse => (output, input),
        };
        self.pairs.insert(pre, post);

        if let Some(&j) = self.groups.get(&e).and_then(|g| g.first()) {
            let w = self.hint.w[j];
            if self.is_critical(w) {
                if direction == Direction::Inverse {
                    self.inverse_extractions += 1;
                }
            } else {
                self.lab[w] = Some(pre ^ post);
            }
            self.pending.push((e, w, pre));
        }
        self.learn();
        Ok(output)
    }

    /// Label of a non-critical node, recomputed from the permutation if the
    /// replay never revealed it.
    fn fallback_label(&mut self, u: NodeId, round: usize) -> Result<Word> {
        if let Some(l) = self.lab[u] {
            return Ok(l);
        }
        if self.is_critical(u) {
            return Err(Error::InconsistentHint(format!("label of critical node {u} never resolved")));
        }
        let pre = match self.positions[u] {
            Some(s) => self.x.0[s],
            None => {
                let mut acc = 0;
                for p in self.g.preds(u).to_vec() {
                    acc ^= self.fallback_label(p, round)?;
                }
                acc
            }
        };
        let post = match self.pairs.get(&pre) {
            Some(&post) => post,
            None => self.guard.query(Direction::Forward, pre, round)?,
        };
        self.pairs.insert(pre, post);
        self.lab[u] = Some(pre ^ post);
        Ok(pre ^ post)
    }

    fn finish(mut self) -> Result<PredictionReport> {
        self.learn();
        let round = self.hint.end_round + 1;
        for (id, w, pre_w) in std::mem::take(&mut self.pending) {
            if self.resolve(id, w, pre_w) {
                continue;
            }
            for u in self.g.preds(w).to_vec() {
                if !self.is_critical(u) {
                    self.fallback_label(u, round)?;
                }
            }
            for &j in &self.groups[&id] {
                self.fallback[j] = true;
            }
            self.learn();
            if !self.resolve(id, w, pre_w) {
                return Err(Error::InconsistentHint(format!("critical call {id} cannot be resolved")));
            }
        }

        let mut predictions = Vec::with_capacity(self.hint.critical_nodes.len());
        for (j, &v) in self.hint.critical_nodes.iter().enumerate() {
            let lab = self.lab[v].ok_or_else(|| Error::InconsistentHint(format!("label of {v} never resolved")))?;
            let prelab = match self.prelab_c[v] {
                Some(p) => p,
                None => {
                    let mut acc = 0;
                    for p in self.g.preds(v).to_vec() {
                        acc ^= self.fallback_label(p, round)?;
                    }
                    match self.positions[v] {
                        Some(s) => self.x.0[s],
                        None => acc,
                    }
                }
            };
            let predicted = lab ^ prelab;
            predictions.push(Prediction {
                node: v,
                prelab,
                predicted,
                correct: self.guard.truth(prelab) == predicted,
                method: self.method[j].expect("resolved groups record a method"),
                fallback: self.fallback[j],
            });
        }
        Ok(PredictionReport {
            interval: self.hint.interval,
            predictions,
            replay_queries: self.counter,
            oracle_queries: self.guard.answered,
            answered_from_list: self.answered_from_list,
            inverse_extractions: self.inverse_extractions,
            forbidden_attempts: self.guard.rejected.clone(),
        })
    }
}

impl Oracle for Predictor<'_, '_> {
    fn query(&mut self, direction: Direction, input: Word, round: usize) -> Result<Word> {
        self.answer(direction, input, round)
    }
}

/// Runs `adversary` against the predictor, which answers from its own
/// knowledge where it must and forwards everything else to `guard`.
pub fn run_predictor(
    g: &Dag,
    x: &InputVector,
    hint: &Hint,
    adversary: &mut dyn ReplayAdversary,
    guard: &mut GuardedPermutation<'_>,
) -> Result<PredictionReport> {
    let mut predictor = Predictor::new(g, x, hint, guard);
    adversary.replay(&mut predictor)?;
    predictor.finish()
}

/// An honest run of the greedy strategy together with everything derived
/// from it.
#[derive(Debug, Clone)]
pub struct HonestRun {
    /// The permutation with the run's queries in its ledger.
    pub perm: Permutation,
    pub x: InputVector,
    pub rb: RedBluePebbling,
    pub labels: LabelMap,
    pub trace: ExecutionTrace,
    pub calls: CallClassification,
    pub pebbling: BlackPebbling,
    pub partition: IntervalPartition,
}

/// Samples a permutation and a non-colliding input from `seed`, evaluates
/// with `greedy_keep_hot` and a cache of `m` words, and partitions the
/// extracted black pebbling with `threshold` (default `(10δ - 1)m`).
pub fn honest_run(g: &Dag, width: u32, m: usize, seed: u64, threshold: Option<usize>) -> Result<HonestRun> {
    let rb = greedy_keep_hot(g, m)?;
    let threshold = threshold.unwrap_or_else(|| partition_threshold(g.delta(), m));
    HonestRun::from_pebbling(g, rb, width, seed, threshold)
}

impl HonestRun {
    /// As [`honest_run`] but following an arbitrary legal pebbling.
    pub fn from_pebbling(g: &Dag, rb: RedBluePebbling, width: u32, seed: u64, threshold: usize) -> Result<HonestRun> {
        let mut rng = rng::from_seed(seed);
        let mut perm = Permutation::sample_with(width, &mut rng)?;
        let x = InputVector::sample_noncolliding(g.sources().len(), width, &mut rng)?;
        let labels = eval_labels(g, &mut perm.clone(), &x)?;
        if labels.has_collision() {
            return Err(Error::AmbiguousLabels);
        }
        let cm = CostModel { cache_words: rb.red_budget(), width, ..CostModel::unit(1, 1) };
        let mut trace = execute_redblue(g, &mut perm, &x, &rb, &cm)?;
        trace.header.seed = Some(seed);
        let calls = classify_calls(g, &labels, perm.ledger())?;
        let pebbling = extract_black_pebbling(g, &labels, &trace)?;
        let partition = partition_intervals_with_threshold(g, &pebbling, threshold);
        Ok(HonestRun { perm, x, rb, labels, trace, calls, pebbling, partition })
    }

    pub fn hint(&self, g: &Dag, interval: usize) -> Result<Hint> {
        build_hint(g, &self.labels, &self.rb, &self.trace, &self.calls, &self.partition, interval)
    }

    /// First interval with a non-empty critical set.
    pub fn first_predictable_interval(&self) -> Option<usize> {
        self.partition.critical.iter().position(|c| !c.is_empty())
    }

    /// Builds the hint for `interval` and runs the predictor against the
    /// honest replay.
    pub fn predict(&self, g: &Dag, interval: usize) -> Result<(Hint, PredictionReport)> {
        let hint = self.hint(g, interval)?;
        let mut replay = HonestReplay::from_hint(g, &self.x, &self.rb, &hint)?;
        let mut perm = self.perm.clone();
        let mut guard = GuardedPermutation::new(&mut perm, &self.labels, &hint.critical_nodes);
        let report = run_predictor(g, &self.x, &hint, &mut replay, &mut guard)?;
        Ok((hint, report))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GuessEstimate {
    pub trials: u64,
    pub successes: u64,
    pub rate: f64,
    /// `2^-(kn - 1)`.
    pub bound: f64,
}

/// Monte Carlo probability that a hintless guesser who has seen
/// `pi(0), ..., pi(q - 1)` predicts `pi(q), ..., pi(q + k - 1)` exactly.
/// The guesser answers each point with the smallest value it has neither
/// seen nor already guessed.
pub fn guess_bound_estimate(width: u32, q: usize, k: usize, trials: u64, seed: u64) -> Result<GuessEstimate> {
    let space = 1usize << width.min(31);
    if q + k > space {
        return Err(Error::InputSpaceTooSmall { needed: q + k, width });
    }
    let bound = 2f64.powi(1 - (k as i32) * (width as i32));
    let mut successes = 0;
    for trial in 0..trials {
        let perm = Permutation::sample_with(width, &mut rng::for_trial(seed, trial))?;
        let mut used: BTreeSet<Word> = (0..q as Word).map(|p| perm.peek(Direction::Forward, p)).collect();
        let mut ok = true;
        for p in q..q + k {
            let guess = (0..).find(|w| !used.contains(w)).expect("space not exhausted");
            used.insert(guess);
            ok &= perm.peek(Direction::Forward, p as Word) == guess;
        }
        successes += u64::from(ok);
    }
    let rate = if trials == 0 { 0.0 } else { successes as f64 / trials as f64 };
    Ok(GuessEstimate { trials, successes, rate, bound })
}
