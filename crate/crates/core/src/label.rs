//! The permutation-based graph labeling function.
//!
//! Every node issues exactly one forward query. A source consuming input
//! word `x_i` gets `lab = pi(x_i) ^ x_i`; a non-source gets
//! `prelab = XOR of its predecessors' labels` and `lab = pi(prelab) ^ prelab`.
//! With two predecessors this is `pi(a ^ b) ^ a ^ b`, and with one it is
//! `pi(a) ^ a`. XOR-folding all predecessors avoids having to pad nodes
//! whose indegree is below `delta`.

use std::collections::HashSet;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Dag, NodeId};
use crate::perm::{Direction, Permutation, Word};
use crate::rng;

/// One input word per source, in ascending source-id order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputVector(pub Vec<Word>);

impl InputVector {
    pub fn words(&self) -> &[Word] {
        &self.0
    }

    pub fn is_noncolliding(&self) -> bool {
        let mut seen = HashSet::with_capacity(self.0.len());
        self.0.iter().all(|w| seen.insert(*w))
    }

    /// `count` pairwise-distinct words of the given width.
    pub fn sample_noncolliding<R: Rng + ?Sized>(count: usize, width: u32, rng: &mut R) -> Result<InputVector> {
        let space = 1usize << width;
        if count > space {
            return Err(Error::InputSpaceTooSmall { needed: count, width });
        }
        Ok(InputVector(index::sample(rng, space, count).into_iter().map(|w| w as Word).collect()))
    }

    /// Parses whitespace- or comma-separated hex words (optional `0x`).
    pub fn parse_hex(text: &str) -> Result<InputVector> {
        text.split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| {
                let digits = s.trim_start_matches("0x").trim_start_matches("0X");
                Word::from_str_radix(digits, 16).map_err(|e| Error::Parse(format!("bad hex word `{s}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(InputVector)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMap {
    pub prelab: Vec<Word>,
    pub postlab: Vec<Word>,
    pub lab: Vec<Word>,
}

impl LabelMap {
    pub fn len(&self) -> usize {
        self.lab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lab.is_empty()
    }

    /// True iff two distinct nodes share a label or share a prelabel.
    pub fn has_collision(&self) -> bool {
        fn repeats(words: &[Word]) -> bool {
            let mut seen = HashSet::with_capacity(words.len());
            !words.iter().all(|w| seen.insert(*w))
        }
        repeats(&self.lab) || repeats(&self.prelab)
    }

    /// The node whose prelabel is `word`, assuming collision-free labels.
    pub fn node_with_prelab(&self, word: Word) -> Option<NodeId> {
        self.prelab.iter().position(|&w| w == word)
    }

    pub fn node_with_postlab(&self, word: Word) -> Option<NodeId> {
        self.postlab.iter().position(|&w| w == word)
    }
}

pub fn detect_collision(labels: &LabelMap) -> bool {
    labels.has_collision()
}

pub(crate) fn check_inputs(g: &Dag, perm: &Permutation, x: &InputVector) -> Result<()> {
    let sources = g.sources().len();
    if x.0.len() != sources {
        return Err(Error::InputLengthMismatch { expected: sources, got: x.0.len() });
    }
    x.0.iter().try_for_each(|&w| perm.check_word(w))
}

/// XOR of the predecessors' labels, or the source's input word.
pub(crate) fn prelab_from(g: &Dag, v: NodeId, source_index: &[Option<usize>], x: &InputVector, lab: &[Word]) -> Word {
    match source_index[v] {
        Some(i) => x.0[i],
        None => g.preds(v).iter().fold(0, |acc, &u| acc ^ lab[u]),
    }
}

/// Position of each source in the input vector.
pub(crate) fn source_positions(g: &Dag) -> Vec<Option<usize>> {
    let mut positions = vec![None; g.node_count()];
    for (i, s) in g.sources().into_iter().enumerate() {
        positions[s] = Some(i);
    }
    positions
}

/// Evaluates every label in topological order, issuing one forward query per
/// node. The query for the k-th node of the order is tagged with round k+1.
pub fn eval_labels(g: &Dag, perm: &mut Permutation, x: &InputVector) -> Result<LabelMap> {
    check_inputs(g, perm, x)?;
    let n = g.node_count();
    let positions = source_positions(g);
    let mut labels = LabelMap { prelab: vec![0; n], postlab: vec![0; n], lab: vec![0; n] };
    for (k, &v) in g.topo_order().iter().enumerate() {
        let pre = prelab_from(g, v, &positions, x, &labels.lab);
        let post = perm.query(Direction::Forward, pre, k + 1)?;
        labels.prelab[v] = pre;
        labels.postlab[v] = post;
        labels.lab[v] = pre ^ post;
        debug_assert_eq!(labels.lab[v], labels.prelab[v] ^ labels.postlab[v]);
    }
    Ok(labels)
}

/// Sink labels in ascending sink-id order.
pub fn graph_function(g: &Dag, perm: &mut Permutation, x: &InputVector) -> Result<Vec<Word>> {
    let labels = eval_labels(g, perm, x)?;
    Ok(g.sinks().into_iter().map(|v| labels.lab[v]).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollisionEstimate {
    pub trials: u64,
    pub collisions: u64,
}

impl CollisionEstimate {
    pub fn rate(&self) -> f64 {
        self.collisions as f64 / self.trials as f64
    }

    /// `2 |V|^2 / 2^n`.
    pub fn claimed_bound(node_count: usize, width: u32) -> f64 {
        2.0 * (node_count * node_count) as f64 / (1u64 << width) as f64
    }
}

/// Fraction of trials, each with a fresh permutation and a fresh
/// non-colliding input, whose evaluation collides.
pub fn collision_rate(g: &Dag, width: u32, trials: u64, seed: u64) -> Result<CollisionEstimate> {
    collision_rate_with(g, width, trials, seed, Permutation::sample_with)
}

/// [`collision_rate`] with a caller-supplied permutation source, e.g. the
/// identity permutation in tests.
pub fn collision_rate_with<F>(g: &Dag, width: u32, trials: u64, seed: u64, mut make_perm: F) -> Result<CollisionEstimate>
where
    F: FnMut(u32, &mut rng::Prng) -> Result<Permutation>,
{
    if trials == 0 {
        return Err(Error::BadShape("at least one trial is required".into()));
    }
    let sources = g.sources().len();
    let mut collisions = 0;
    for trial in 0..trials {
        let mut rng = rng::for_trial(seed, trial);
        let mut perm = make_perm(width, &mut rng)?;
        let x = InputVector::sample_noncolliding(sources, width, &mut rng)?;
        if eval_labels(g, &mut perm, &x)?.has_collision() {
            collisions += 1;
        }
    }
    Ok(CollisionEstimate { trials, collisions })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{diamond, generate, Family};

    fn path(n: usize) -> Dag {
        generate(Family::Path, n, 1, 0).unwrap()
    }

    /// Independent recursive evaluator over the raw table.
    fn reference_label(g: &Dag, table: &[Word], x: &InputVector, v: NodeId) -> Word {
        let pre = match g.sources().iter().position(|&s| s == v) {
            Some(i) => x.0[i],
            None => g.preds(v).iter().map(|&u| reference_label(g, table, x, u)).fold(0, |a, b| a ^ b),
        };
        table[pre as usize] ^ pre
    }

    // A fixed 4-bit table: pi(x) = (7x + 3) mod 16, a bijection since 7 is odd.
    fn affine_table() -> Vec<Word> {
        (0..16).map(|x| (7 * x + 3) % 16).collect()
    }

    #[test]
    fn noncolliding_inputs() {
        assert!(InputVector(vec![1, 2, 3]).is_noncolliding());
        assert!(!InputVector(vec![1, 1]).is_noncolliding());
        assert!(InputVector(vec![]).is_noncolliding());
    }

    #[test]
    fn single_node_source_rule() {
        let g = Dag::build(1, &[]).unwrap();
        let mut p = Permutation::sample(8, 5).unwrap();
        let pi9 = p.peek(Direction::Forward, 9);
        let out = graph_function(&g, &mut p, &InputVector(vec![9])).unwrap();
        assert_eq!(out, vec![pi9 ^ 9]);
    }

    #[test]
    fn identity_collapses_chain_labels_to_zero() {
        let g = path(4);
        let mut p = Permutation::identity(8).unwrap();
        let labels = eval_labels(&g, &mut p, &InputVector(vec![0xab])).unwrap();
        assert!(labels.lab.iter().all(|&l| l == 0));
        assert_eq!(graph_function(&g, &mut p, &InputVector(vec![0xab])).unwrap(), vec![0]);
        assert!(detect_collision(&labels));
    }

    #[test]
    fn diamond_with_explicit_table() {
        let g = diamond();
        let table = affine_table();
        let mut p = Permutation::from_table(4, table.clone()).unwrap();
        let x = InputVector(vec![5]);
        let labels = eval_labels(&g, &mut p, &x).unwrap();
        // Hand walk: lab0 = pi(5)^5 = 6^5 = 3; lab1 = lab2 = pi(3)^3 = 8^3 = 11;
        // prelab3 = 11^11 = 0; lab3 = pi(0)^0 = 3.
        assert_eq!(labels.lab, vec![3, 11, 11, 3]);
        for v in 0..4 {
            assert_eq!(labels.lab[v], reference_label(&g, &table, &x, v));
            assert_eq!(labels.lab[v], labels.prelab[v] ^ labels.postlab[v]);
        }
        assert_eq!(
            labels.lab[3],
            table[(labels.lab[1] ^ labels.lab[2]) as usize] ^ labels.lab[1] ^ labels.lab[2]
        );
    }

    #[test]
    fn path_three_function_matches_labels() {
        let g = path(3);
        let mut p = Permutation::from_table(4, affine_table()).unwrap();
        let x = InputVector(vec![1]);
        let labels = eval_labels(&g, &mut p, &x).unwrap();
        let out = graph_function(&g, &mut p, &x).unwrap();
        assert_eq!(out, vec![labels.lab[2]]);
        assert_eq!(labels.lab[2], reference_label(&g, &affine_table(), &x, 2));
    }

    #[test]
    fn query_discipline() {
        let g = generate(Family::RandomDelta, 12, 3, 4).unwrap();
        let mut p = Permutation::sample(12, 4).unwrap();
        eval_labels(&g, &mut p, &InputVector(vec![17])).unwrap();
        assert_eq!(p.query_count(), 12);
        assert!(p.ledger().iter().all(|r| r.direction == Direction::Forward));
    }

    #[test]
    fn input_errors() {
        let g = Dag::build(2, &[]).unwrap();
        let mut p = Permutation::sample(4, 0).unwrap();
        assert_eq!(
            eval_labels(&g, &mut p, &InputVector(vec![1])).unwrap_err(),
            Error::InputLengthMismatch { expected: 2, got: 1 }
        );
        assert!(eval_labels(&g, &mut p, &InputVector(vec![1, 16])).is_err());
    }

    #[test]
    fn single_node_never_collides() {
        let g = Dag::build(1, &[]).unwrap();
        assert_eq!(collision_rate(&g, 8, 50, 1).unwrap().collisions, 0);
        assert!(!detect_collision(&eval_labels(&g, &mut Permutation::sample(4, 0).unwrap(), &InputVector(vec![2])).unwrap()));
    }

    #[test]
    fn identity_injection_always_collides() {
        let g = generate(Family::RandomDelta, 6, 2, 1).unwrap();
        let est = collision_rate_with(&g, 8, 20, 3, |w, _| Permutation::identity(w)).unwrap();
        assert_eq!(est.rate(), 1.0);
    }

    #[test]
    fn collision_rate_is_deterministic() {
        let g = generate(Family::RandomDelta, 8, 2, 2).unwrap();
        assert_eq!(collision_rate(&g, 6, 200, 8).unwrap(), collision_rate(&g, 6, 200, 8).unwrap());
    }

    #[test]
    fn parse_hex_words() {
        assert_eq!(InputVector::parse_hex("0x1f, a 3").unwrap().0, vec![0x1f, 0xa, 3]);
        assert!(InputVector::parse_hex("zz").is_err());
    }
}
