mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use rbpebble::exec::{classify_calls, cmc, ecost, execute_redblue, extract_black_pebbling};
use rbpebble::extend::{critical_set, extend_to_redblue, partition_intervals};
use rbpebble::graph::{generate, Dag, Family};
use rbpebble::label::{eval_labels, InputVector};
use rbpebble::pebble::{
    check_legal_redblue, cost_redblue, is_legal_black, is_successful_black, is_successful_redblue, rbcost_oracle,
    round_moves, Cost, CostModel,
};
use rbpebble::perm::{Direction, Permutation};
use rbpebble::predictor::{hint_identity_holds, honest_run};
use rbpebble::rng;

use common::{critical_reference, random_black, random_redblue};

fn family() -> impl Strategy<Value = Family> {
    prop::sample::select(Family::ALL.to_vec())
}

/// A generated graph; bit-reversal sizes are rounded to a valid shape.
fn graph(family: Family, nodes: usize, delta: usize, seed: u64) -> Dag {
    let nodes = match family {
        Family::BitReversal => 2 * (nodes / 2).max(1).next_power_of_two(),
        _ => nodes,
    };
    let delta = match family {
        Family::BinaryTree | Family::BitReversal => delta.max(2),
        _ => delta,
    };
    generate(family, nodes, delta, seed).unwrap()
}

fn small_random(nodes: usize, delta: usize, seed: u64) -> Dag {
    generate(Family::RandomDelta, nodes, delta, seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_graphs_are_valid(f in family(), nodes in 1usize..24, delta in 1usize..4, seed: u64) {
        let g = graph(f, nodes, delta, seed);
        prop_assert!(g.max_indegree() <= g.delta());
        let mut pos = vec![usize::MAX; g.node_count()];
        for (k, &v) in g.topo_order().iter().enumerate() {
            pos[v] = k;
        }
        for &(u, v) in g.edges() {
            prop_assert!(pos[u] < pos[v]);
        }
        prop_assert!(g.depth() >= 1);
        prop_assert_eq!(Dag::from_json(&g.to_json()).unwrap(), g);
    }

    #[test]
    fn robustness_is_monotone(nodes in 2usize..9, delta in 1usize..4, seed: u64) {
        let g = small_random(nodes, delta, seed);
        let depth = g.depth();
        prop_assert!(g.is_depth_robust(0, depth).unwrap());
        prop_assert!(!g.is_depth_robust(0, depth + 1).unwrap());
        for e in 0..3 {
            for d in 1..=depth {
                if !g.is_depth_robust(e, d).unwrap() {
                    prop_assert!(!g.is_depth_robust(e + 1, d).unwrap());
                    prop_assert!(!g.is_depth_robust(e, d + 1).unwrap());
                }
            }
        }
    }

    #[test]
    fn permutations_are_bijections(width in 2u32..9, seed: u64) {
        let mut p = Permutation::sample(width, seed).unwrap();
        let mut seen = BTreeSet::new();
        for x in 0..1u32 << width {
            let y = p.query(Direction::Forward, x, 0).unwrap();
            prop_assert_eq!(p.query(Direction::Inverse, y, 0).unwrap(), x);
            prop_assert_eq!(p.peek(Direction::Inverse, p.peek(Direction::Forward, y)), y);
            seen.insert(y);
        }
        prop_assert_eq!(seen.len(), 1 << width);
        prop_assert_eq!(p.ledger().len(), 2 << width);
        prop_assert_eq!(p.query_count(), 2 << width);
    }

    #[test]
    fn labels_satisfy_the_xor_identity(nodes in 1usize..16, delta in 1usize..4, seed: u64) {
        let g = small_random(nodes, delta, seed);
        let mut r = rng::from_seed(seed);
        let mut perm = Permutation::sample_with(12, &mut r).unwrap();
        let x = InputVector::sample_noncolliding(g.sources().len(), 12, &mut r).unwrap();
        let lm = eval_labels(&g, &mut perm, &x).unwrap();
        for v in 0..g.node_count() {
            prop_assert_eq!(lm.lab[v], lm.prelab[v] ^ lm.postlab[v]);
            prop_assert_eq!(perm.peek(Direction::Forward, lm.prelab[v]), lm.postlab[v]);
            let expect = if g.is_source(v) {
                x.0[g.sources().iter().position(|&s| s == v).unwrap()]
            } else {
                g.preds(v).iter().fold(0, |acc, &u| acc ^ lm.lab[u])
            };
            prop_assert_eq!(lm.prelab[v], expect);
        }
        prop_assert_eq!(perm.query_count(), g.node_count());
        prop_assert!(perm.ledger().iter().all(|q| q.direction == Direction::Forward));
        prop_assert_eq!(eval_labels(&g, &mut perm.clone(), &x).unwrap(), lm);
    }

    #[test]
    fn move_classes_partition_new_red(nodes in 1usize..10, delta in 1usize..4, extra in 0usize..3, seed: u64) {
        let g = small_random(nodes, delta, seed);
        let m = g.max_indegree().max(1) + extra;
        let rb = random_redblue(&g, m, &mut rng::from_seed(seed));
        check_legal_redblue(&g, &rb).unwrap();
        prop_assert!(is_successful_redblue(&g, &rb));
        for i in 1..=rb.rounds() {
            let mv = round_moves(&g, &rb, i).unwrap();
            let (prev, cur) = (&rb.configs()[i - 1], &rb.configs()[i]);
            let new_red = cur.red.difference(&prev.red).count();
            let new_blue = cur.blue.difference(&prev.blue).count();
            prop_assert_eq!(mv.red_moves() + mv.blue_moves() - new_blue, new_red);
        }
    }

    #[test]
    fn oracle_beats_random_pebblings(nodes in 1usize..6, delta in 1usize..3, extra in 0usize..2, cb in 0i64..4, cr in 0i64..4, seed: u64) {
        let g = small_random(nodes, delta, seed);
        let m = g.max_indegree().max(1) + extra;
        let cm = CostModel::unit(cb, cr);
        let best = rbcost_oracle(&g, m, &cm).unwrap().unwrap();
        for k in 0..4 {
            let rb = random_redblue(&g, m, &mut rng::for_trial(seed, k));
            prop_assert!(best <= cost_redblue(&g, &rb, &cm));
        }
    }

    #[test]
    fn unlimited_free_transfers_cost_one_query_per_node(nodes in 1usize..6, delta in 1usize..3, cr in 1i64..5, seed: u64) {
        // Every generated node reaches the last node, a sink.
        let g = small_random(nodes, delta, seed);
        let best = rbcost_oracle(&g, nodes, &CostModel::unit(0, cr)).unwrap().unwrap();
        prop_assert_eq!(best, Cost::from_integer(cr * nodes as i64));
    }

    #[test]
    fn critical_sets_match_definition(nodes in 1usize..9, delta in 1usize..4, m in 1usize..4, seed: u64) {
        let g = small_random(nodes, delta, seed);
        let p = random_black(&g, m, &mut rng::from_seed(seed));
        prop_assert!(is_legal_black(&g, &p) && is_successful_black(&g, &p));
        let t = p.rounds();
        for t1 in 1..=t {
            for t2 in t1..=t.min(t1 + 6) {
                prop_assert_eq!(critical_set(&g, &p, t1, t2).unwrap(), critical_reference(&g, &p, t1, t2));
            }
        }
    }

    #[test]
    fn partitions_cover_the_pebbling(nodes in 1usize..9, delta in 1usize..4, m in 1usize..4, seed: u64) {
        let g = small_random(nodes, delta, seed);
        let p = random_black(&g, m, &mut rng::from_seed(seed));
        let part = partition_intervals(&g, &p, delta, m);
        prop_assert_eq!(part.boundaries[0], 0);
        prop_assert_eq!(*part.boundaries.last().unwrap(), p.rounds());
        prop_assert!(part.boundaries.windows(2).all(|w| w[0] < w[1]));
        for a in 0..part.interval_count() {
            let (s, e) = (part.boundaries[a] + 1, part.boundaries[a + 1]);
            prop_assert_eq!(&part.critical[a], &critical_reference(&g, &p, s, e));
        }
    }

    #[test]
    fn extensions_are_legal_and_within_bounds(nodes in 1usize..9, delta in 1usize..4, m in 1usize..4, seed: u64) {
        let g = small_random(nodes, delta, seed);
        let p = random_black(&g, m, &mut rng::from_seed(seed));
        for cm in [CostModel::unit(1, 1), CostModel::unit(4, 1), CostModel::unit(1, 4)] {
            let ext = extend_to_redblue(&g, &p, delta, m, &cm).unwrap();
            check_legal_redblue(&g, &ext.rb).unwrap();
            prop_assert_eq!(ext.rb.red_budget(), 20 * delta * m);
            prop_assert!(is_successful_redblue(&g, &ext.rb));
            prop_assert!(ext.cost_bound_holds(&p, &cm));
            prop_assert_eq!(ext.total_cost(), cost_redblue(&g, &ext.rb, &cm));
            let report = ext.lemma_report(&g, &p);
            prop_assert_eq!(report.r_old_violations, 0);
            prop_assert_eq!(report.containment_violations, 0);
        }
    }

    #[test]
    fn honest_traces_match_pebbling_costs(nodes in 1usize..12, delta in 1usize..4, extra in 0usize..3, cb in 0i64..5, cr in 0i64..5, seed: u64) {
        let g = small_random(nodes, delta, seed);
        let m = g.max_indegree().max(1) + extra;
        let mut r = rng::from_seed(seed);
        let rb = random_redblue(&g, m, &mut r);
        let mut perm = Permutation::sample_with(16, &mut r).unwrap();
        let x = InputVector::sample_noncolliding(g.sources().len(), 16, &mut r).unwrap();
        let lm = eval_labels(&g, &mut perm.clone(), &x).unwrap();
        let cm = CostModel { cache_words: m, ..CostModel::unit(cb, cr) };
        let tr = execute_redblue(&g, &mut perm, &x, &rb, &cm).unwrap();

        prop_assert_eq!(ecost(&tr, &cm), cost_redblue(&g, &rb, &cm));
        prop_assert!(tr.rounds.iter().all(|round| round.queries.len() <= cm.cache_words));
        // Round 0 holds the input; the terminal round repeats the last state.
        let held = |c: &rbpebble::pebble::RbConfig| (c.red.len() + c.blue.len()) as u64;
        let words: u64 = rb.configs().iter().map(held).sum::<u64>() + held(rb.configs().last().unwrap());
        prop_assert_eq!(cmc(&tr), 16 * (words + g.sources().len() as u64));
        prop_assert_eq!(tr.rounds.len(), rb.rounds() + 2);

        let outputs: Vec<_> = tr.outputs().collect();
        let sinks = g.sinks();
        prop_assert_eq!(outputs.len(), sinks.len());
        prop_assert!(outputs.iter().all(|&(v, w)| lm.lab[v] == w));

        if !lm.has_collision() {
            let calls = classify_calls(&g, &lm, perm.ledger()).unwrap();
            prop_assert_eq!(calls.correct_for.len(), perm.query_count());
            prop_assert!(calls.correct_for.iter().all(|c| c.is_some()));
            let p = extract_black_pebbling(&g, &lm, &tr).unwrap();
            prop_assert!(is_legal_black(&g, &p));
            prop_assert!(is_successful_black(&g, &p));
        }
    }

    #[test]
    fn hints_are_deterministic(nodes in 4usize..12, seed in 0u64..1000) {
        let g = small_random(nodes, 2, seed);
        let a = honest_run(&g, 16, 2, seed, Some(0)).unwrap();
        let b = honest_run(&g, 16, 2, seed, Some(0)).unwrap();
        for i in 0..a.partition.interval_count() {
            prop_assert_eq!(a.hint(&g, i).ok(), b.hint(&g, i).ok());
        }
    }

    #[test]
    fn hint_identity(delta in 1usize..8, m in 1usize..64, n in 1usize..256) {
        prop_assert!(hint_identity_holds(delta, m, n));
    }
}
