//! Parallel execution traces, their CMC and energy cost, an honest
//! evaluator that follows a red-blue pebbling, call classification and
//! black pebbling extraction.
//!
//! Trace round `i` of an honest execution mirrors pebbling round `i`: the
//! red moves of the round become its forward queries, loads become
//! memory-to-cache messages and stores cache-to-memory messages. Round 0
//! holds only the input, and a final round with no queries terminates the
//! trace.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Dag, NodeId};
use crate::label::{check_inputs, source_positions, InputVector, LabelMap};
use crate::pebble::{check_legal_redblue, round_moves, BlackPebbling, Cost, CostModel, NodeSet, RedBluePebbling};
use crate::perm::{Direction, Permutation, QueryRecord, Word};

/// Anything that answers permutation queries.
pub trait Oracle {
    fn query(&mut self, direction: Direction, input: Word, round: usize) -> Result<Word>;
}

impl Oracle for Permutation {
    fn query(&mut self, direction: Direction, input: Word, round: usize) -> Result<Word> {
        Permutation::query(self, direction, input, round)
    }
}

/// A bit string exchanged between cache and memory, written `bits:hex`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct BitString {
    bits: usize,
    bytes: Vec<u8>,
}

impl BitString {
    pub fn from_word(word: Word, width: u32) -> BitString {
        let len = (width as usize).div_ceil(8);
        BitString { bits: width as usize, bytes: word.to_be_bytes()[4 - len..].to_vec() }
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn to_word(&self) -> Option<Word> {
        (self.bytes.len() <= 4).then(|| self.bytes.iter().fold(0, |acc, &b| acc << 8 | b as Word))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.bits)?;
        self.bytes.iter().try_for_each(|b| write!(f, "{b:02x}"))
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<BitString> {
        let bad = || Error::Parse(format!("bad bit string `{s}`"));
        let (bits, hex) = s.split_once(':').ok_or_else(bad)?;
        let bits: usize = bits.parse().map_err(|_| bad())?;
        if hex.len() % 2 != 0 || hex.len() / 2 != bits.div_ceil(8) {
            return Err(bad());
        }
        let bytes = (0..hex.len())
            .step_by(2)
            .map(|k| u8::from_str_radix(&hex[k..k + 2], 16).map_err(|_| bad()))
            .collect::<Result<_>>()?;
        Ok(BitString { bits, bytes })
    }
}

impl From<BitString> for String {
    fn from(b: BitString) -> String {
        b.to_string()
    }
}

impl TryFrom<String> for BitString {
    type Error = Error;

    fn try_from(s: String) -> Result<BitString> {
        s.parse()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub graph_hash: String,
    pub n: u32,
    pub seed: Option<u64>,
    pub cache_words: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TraceRound {
    pub i: usize,
    pub sigma_bits: u64,
    pub zeta_bits: u64,
    pub queries: Vec<(Direction, Word)>,
    pub out: Vec<(NodeId, Word)>,
    pub to_mem: Vec<BitString>,
    pub from_mem: Vec<BitString>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionTrace {
    pub header: TraceHeader,
    pub rounds: Vec<TraceRound>,
}

#[derive(Serialize, Deserialize)]
struct RoundLine {
    i: usize,
    sigma_bits: u64,
    zeta_bits: u64,
    queries: Vec<(Direction, String)>,
    out: Vec<(NodeId, String)>,
    to_mem: Vec<BitString>,
    from_mem: Vec<BitString>,
}

fn hex_word(w: Word, width: u32) -> String {
    format!("{w:0digits$x}", digits = (width as usize).div_ceil(4))
}

fn parse_word(s: &str) -> Result<Word> {
    Word::from_str_radix(s, 16).map_err(|e| Error::Parse(format!("bad hex word `{s}`: {e}")))
}

impl ExecutionTrace {
    /// Header line followed by one line per round.
    pub fn to_jsonl(&self) -> String {
        let n = self.header.n;
        let mut text = serde_json::to_string(&self.header).unwrap() + "\n";
        for r in &self.rounds {
            let line = RoundLine {
                i: r.i,
                sigma_bits: r.sigma_bits,
                zeta_bits: r.zeta_bits,
                queries: r.queries.iter().map(|&(d, w)| (d, hex_word(w, n))).collect(),
                out: r.out.iter().map(|&(v, w)| (v, hex_word(w, n))).collect(),
                to_mem: r.to_mem.clone(),
                from_mem: r.from_mem.clone(),
            };
            text += &serde_json::to_string(&line).unwrap();
            text.push('\n');
        }
        text
    }

    pub fn from_jsonl(text: &str) -> Result<ExecutionTrace> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let parse_err = |e: serde_json::Error| Error::Parse(e.to_string());
        let header: TraceHeader = serde_json::from_str(lines.next().ok_or(Error::Parse("empty trace".into()))?)
            .map_err(parse_err)?;
        let rounds = lines
            .map(|l| {
                let line: RoundLine = serde_json::from_str(l).map_err(parse_err)?;
                Ok(TraceRound {
                    i: line.i,
                    sigma_bits: line.sigma_bits,
                    zeta_bits: line.zeta_bits,
                    queries: line.queries.iter().map(|(d, w)| Ok((*d, parse_word(w)?))).collect::<Result<_>>()?,
                    out: line.out.iter().map(|(v, w)| Ok((*v, parse_word(w)?))).collect::<Result<_>>()?,
                    to_mem: line.to_mem,
                    from_mem: line.from_mem,
                })
            })
            .collect::<Result<_>>()?;
        Ok(ExecutionTrace { header, rounds })
    }

    pub fn query_count(&self) -> usize {
        self.rounds.iter().map(|r| r.queries.len()).sum()
    }

    pub fn message_count(&self) -> usize {
        self.rounds.iter().map(|r| r.to_mem.len() + r.from_mem.len()).sum()
    }

    pub fn max_batch(&self) -> usize {
        self.rounds.iter().map(|r| r.queries.len()).max().unwrap_or(0)
    }

    /// Queries as ledger records tagged with their trace round. Outputs are
    /// not part of a trace and are left zero.
    pub fn query_records(&self) -> Vec<QueryRecord> {
        self.rounds
            .iter()
            .flat_map(|r| {
                r.queries.iter().map(|&(direction, input)| QueryRecord { direction, input, output: 0, round: r.i })
            })
            .collect()
    }

    /// Every `(node, label)` output, in round order.
    pub fn outputs(&self) -> impl Iterator<Item = (NodeId, Word)> + '_ {
        self.rounds.iter().flat_map(|r| r.out.iter().copied())
    }
}

/// Sum of `sigma_bits + zeta_bits` over all rounds.
pub fn cmc(tr: &ExecutionTrace) -> u64 {
    tr.rounds.iter().map(|r| r.sigma_bits + r.zeta_bits).sum()
}

/// `c_r` per query plus `c_b` per n-bit word of every message, partial
/// words rounded up per message.
pub fn ecost(tr: &ExecutionTrace, cm: &CostModel) -> Cost {
    let n = tr.header.n.max(1) as usize;
    let words: usize = tr
        .rounds
        .iter()
        .flat_map(|r| r.to_mem.iter().chain(&r.from_mem))
        .map(|m| m.bits().div_ceil(n))
        .sum();
    cm.c_r * tr.query_count() as i64 + cm.c_b * words as i64
}

/// Labels held in cache and in memory between rounds.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EvalState {
    pub cache: BTreeMap<NodeId, Word>,
    pub memory: BTreeMap<NodeId, Word>,
    /// Sinks whose label has already been output.
    pub emitted: BTreeSet<NodeId>,
}

/// Plays rounds `first..=last` of `rb` against `oracle`, starting from
/// `state`, which must hold the labels of `R_{first-1}` and `B_{first-1}`.
#[allow(clippy::too_many_arguments)]
pub fn run_rounds<O: Oracle + ?Sized>(
    g: &Dag,
    oracle: &mut O,
    x: &InputVector,
    rb: &RedBluePebbling,
    width: u32,
    state: &mut EvalState,
    first: usize,
    last: usize,
) -> Result<Vec<TraceRound>> {
    let positions = source_positions(g);
    let n = width as u64;
    let mut out = Vec::new();
    for i in first..=last {
        let moves = round_moves(g, rb, i)?;
        let cfg = &rb.configs()[i];
        let mut round = TraceRound { i, sigma_bits: n * cfg.red.len() as u64, zeta_bits: n * cfg.blue.len() as u64, ..Default::default() };
        let missing = |v: NodeId| Error::IllegalPebbling { round: i, reason: format!("label of {v} unavailable") };

        let mut fresh = BTreeMap::new();
        for &v in &moves.computed {
            let pre = match positions[v] {
                Some(s) => x.0[s],
                None => g
                    .preds(v)
                    .iter()
                    .map(|u| state.cache.get(u).copied().ok_or_else(|| missing(*u)))
                    .try_fold(0, |acc, w| w.map(|w| acc ^ w))?,
            };
            let post = oracle.query(Direction::Forward, pre, i)?;
            round.queries.push((Direction::Forward, pre));
            fresh.insert(v, pre ^ post);
        }
        for &v in &moves.loaded {
            let w = *state.memory.get(&v).ok_or_else(|| missing(v))?;
            round.from_mem.push(BitString::from_word(w, width));
            fresh.insert(v, w);
        }
        for &v in &moves.stored {
            let w = *state.cache.get(&v).ok_or_else(|| missing(v))?;
            round.to_mem.push(BitString::from_word(w, width));
            state.memory.insert(v, w);
        }
        state.memory.retain(|v, _| cfg.blue.contains(v));
        state.cache.retain(|v, _| cfg.red.contains(v));
        state.cache.extend(fresh);

        for &v in &cfg.red {
            if g.is_sink(v) && state.emitted.insert(v) {
                round.out.push((v, state.cache[&v]));
            }
        }
        out.push(round);
    }
    Ok(out)
}

/// Honest evaluation of `G` following `rb`.
pub fn execute_redblue(
    g: &Dag,
    perm: &mut Permutation,
    x: &InputVector,
    rb: &RedBluePebbling,
    cm: &CostModel,
) -> Result<ExecutionTrace> {
    if rb.red_budget() > cm.cache_words {
        return Err(Error::BudgetExceedsCache { budget: rb.red_budget(), cache: cm.cache_words });
    }
    if perm.width() != cm.width {
        return Err(Error::WidthMismatch { expected: cm.width, perm: perm.width() });
    }
    check_inputs(g, perm, x)?;
    check_legal_redblue(g, rb)?;

    let n = cm.width;
    let header = TraceHeader { graph_hash: g.content_hash(), n, seed: None, cache_words: cm.cache_words };
    let mut rounds = vec![TraceRound { i: 0, sigma_bits: n as u64 * x.0.len() as u64, ..Default::default() }];
    let mut state = EvalState::default();
    let t = rb.rounds();
    rounds.extend(run_rounds(g, perm, x, rb, n, &mut state, 1, t)?);
    let last = &rb.configs()[t];
    rounds.push(TraceRound {
        i: t + 1,
        sigma_bits: n as u64 * last.red.len() as u64,
        zeta_bits: n as u64 * last.blue.len() as u64,
        ..Default::default()
    });
    Ok(ExecutionTrace { header, rounds })
}

/// Per-entry and per-node view of which queries are correct or critical.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CallClassification {
    pub rounds: Vec<usize>,
    pub correct_for: Vec<Option<NodeId>>,
    pub critical_for: Vec<Vec<NodeId>>,
    pub first_correct: Vec<Option<usize>>,
    pub first_critical: Vec<Option<usize>>,
}

fn correct_node(lm: &LabelMap, direction: Direction, input: Word) -> Option<NodeId> {
    match direction {
        Direction::Forward => lm.node_with_prelab(input),
        Direction::Inverse => lm.node_with_postlab(input),
    }
}

/// A call is correct for `v` if it is a forward query at `prelab(v)` or an
/// inverse query at `postlab(v)`. It is critical for `u` if it is correct
/// for a successor of `u` and no correct call for `u` is made in the same
/// round. The first correct call for a sink is critical for that sink.
pub fn classify_calls(g: &Dag, lm: &LabelMap, ledger: &[QueryRecord]) -> Result<CallClassification> {
    if lm.has_collision() {
        return Err(Error::AmbiguousLabels);
    }
    let n = g.node_count();
    let rounds: Vec<usize> = ledger.iter().map(|q| q.round).collect();
    let correct_for: Vec<Option<NodeId>> = ledger.iter().map(|q| correct_node(lm, q.direction, q.input)).collect();

    let mut called_in_round: BTreeMap<usize, BTreeSet<NodeId>> = BTreeMap::new();
    for (e, v) in correct_for.iter().enumerate() {
        if let Some(v) = v {
            called_in_round.entry(rounds[e]).or_default().insert(*v);
        }
    }

    let mut first_correct = vec![None; n];
    let mut first_critical = vec![None; n];
    let mut critical_for = vec![Vec::new(); ledger.len()];
    for (e, v) in correct_for.iter().enumerate() {
        let Some(v) = *v else { continue };
        let same_round = &called_in_round[&rounds[e]];
        for &u in g.preds(v) {
            if !same_round.contains(&u) {
                critical_for[e].push(u);
            }
        }
        if g.is_sink(v) && first_correct[v].is_none() {
            critical_for[e].push(v);
        }
        first_correct[v].get_or_insert(e);
        for &u in &critical_for[e] {
            first_critical[u].get_or_insert(e);
        }
    }
    Ok(CallClassification { rounds, correct_for, critical_for, first_correct, first_critical })
}

impl CallClassification {
    fn correct_for_in_round(&self, u: NodeId, round: usize) -> bool {
        self.rounds.iter().zip(&self.correct_for).any(|(&r, &c)| r == round && c == Some(u))
    }

    /// First entry in a round after `since` that is a correct call for a
    /// successor of `u`, provided no correct call for `u` happens in rounds
    /// `since + 1` up to that entry's round. Returns the entry index and the
    /// successor.
    pub fn first_critical_after(&self, g: &Dag, u: NodeId, since: usize) -> Option<(usize, NodeId)> {
        for (e, (&r, &c)) in self.rounds.iter().zip(&self.correct_for).enumerate() {
            if r <= since {
                continue;
            }
            if c == Some(u) {
                return None;
            }
            if let Some(v) = c {
                if g.preds(v).contains(&u) {
                    return (!self.correct_for_in_round(u, r)).then_some((e, v));
                }
            }
        }
        None
    }

    /// First correct call for `v` in a round after `since`.
    pub fn first_correct_after(&self, v: NodeId, since: usize) -> Option<usize> {
        (0..self.rounds.len()).find(|&e| self.rounds[e] > since && self.correct_for[e] == Some(v))
    }
}

/// Reads a black pebbling off a trace.
///
/// A node `v` whose label is output by a correct call in round `o` holds a
/// pebble from `o` until the round before the last correct call for a
/// successor that happens no later than `v`'s next correct call. Without
/// such a successor call no pebble is placed. A sink holds a pebble only in
/// the round of its first correct call.
pub fn extract_black_pebbling(g: &Dag, lm: &LabelMap, tr: &ExecutionTrace) -> Result<BlackPebbling> {
    if lm.has_collision() {
        return Err(Error::AmbiguousLabels);
    }
    let n = g.node_count();
    let mut calls: Vec<Vec<usize>> = vec![Vec::new(); n];
    for r in &tr.rounds {
        for &(d, w) in &r.queries {
            if let Some(v) = correct_node(lm, d, w) {
                if r.i == 0 {
                    return Err(Error::BadShape("correct call in round 0".into()));
                }
                if calls[v].last() != Some(&r.i) {
                    calls[v].push(r.i);
                }
            }
        }
    }
    if let Some(&s) = g.sinks().iter().find(|&&s| calls[s].is_empty()) {
        return Err(Error::IncompleteEvaluation(s));
    }

    let last_round = tr.rounds.iter().map(|r| r.i).max().unwrap_or(0);
    let mut configs = vec![NodeSet::new(); last_round + 1];
    for v in 0..n {
        if g.is_sink(v) {
            configs[calls[v][0]].insert(v);
            continue;
        }
        for (k, &o) in calls[v].iter().enumerate() {
            let next = calls[v].get(k + 1).copied().unwrap_or(usize::MAX);
            let last_use = g
                .succs(v)
                .iter()
                .flat_map(|&w| calls[w].iter().copied())
                .filter(|&r| r > o && r <= next)
                .max();
            if let Some(r) = last_use {
                for cfg in &mut configs[o..r] {
                    cfg.insert(v);
                }
            }
        }
    }
    BlackPebbling::new(configs)
}
