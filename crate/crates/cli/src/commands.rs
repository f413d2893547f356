use std::path::Path;

use serde_json::{json, Value};

use rbpebble::exec::{cmc, ecost, execute_redblue};
use rbpebble::extend::{extend_to_redblue, extend_with_threshold};
use rbpebble::graph::{generate, Dag, Family};
use rbpebble::label::{collision_rate, eval_labels, CollisionEstimate, InputVector};
use rbpebble::pebble::{
    cost_redblue, is_legal_redblue, is_successful_redblue, rbcost_oracle_capped, BlackPebbling, Cost, CostModel,
};
use rbpebble::perm::{Permutation, Word};
use rbpebble::predictor::{guess_bound_estimate, hint_budget, honest_run};
use rbpebble::rng;
use rbpebble::strategy::{greedy_black, Strategy};
use rbpebble::theorem;

use crate::output::{read, write, CliError, Report};

fn load_graph(path: &Path) -> Result<Dag, CliError> {
    Dag::from_json(&read(path)?).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn hex(w: Word, width: u32) -> String {
    format!("{w:0digits$x}", digits = (width as usize).div_ceil(4))
}

fn cost(c: Cost) -> Value {
    Value::String(c.to_string())
}

/// The permutation and source inputs every seeded command starts from.
fn sample(g: &Dag, width: u32, seed: u64) -> Result<(Permutation, InputVector), CliError> {
    let mut rng = rng::from_seed(seed);
    let perm = Permutation::sample_with(width, &mut rng)?;
    let x = InputVector::sample_noncolliding(g.sources().len(), width, &mut rng)?;
    Ok((perm, x))
}

pub fn gen(family: Family, nodes: usize, delta: usize, seed: u64) -> Result<Report, CliError> {
    let g = generate(family, nodes, delta, seed)?;
    let body = serde_json::from_str(&g.to_json()).expect("graph JSON is valid");
    Ok(Report::new(body))
}

pub fn eval(graph: &Path, width: u32, seed: u64, input: Option<&str>) -> Result<Report, CliError> {
    let g = load_graph(graph)?;
    let (mut perm, sampled) = sample(&g, width, seed)?;
    let x = match input {
        Some(text) => InputVector::parse_hex(text)?,
        None => sampled,
    };
    let lm = eval_labels(&g, &mut perm, &x)?;
    let words = |ws: &[Word]| ws.iter().map(|&w| hex(w, width)).collect::<Vec<_>>();
    let outputs: Vec<Value> = g.sinks().iter().map(|&s| json!([s, hex(lm.lab[s], width)])).collect();
    Ok(Report::new(json!({
        "graph_hash": g.content_hash(),
        "width": width,
        "seed": seed,
        "input": words(&x.0),
        "prelab": words(&lm.prelab),
        "postlab": words(&lm.postlab),
        "lab": words(&lm.lab),
        "outputs": outputs,
        "collision": lm.has_collision(),
        "queries": perm.query_count(),
    })))
}

#[allow(clippy::too_many_arguments)]
pub fn simulate(
    graph: &Path,
    width: u32,
    seed: u64,
    cache: usize,
    c_b: Cost,
    c_r: Cost,
    strategy: Strategy,
    trace_out: Option<&Path>,
) -> Result<Report, CliError> {
    let g = load_graph(graph)?;
    let cm = CostModel::new(c_b, c_r, cache, width)?;
    let (mut perm, x) = sample(&g, width, seed)?;
    let rb = strategy.pebbling(&g, cache)?;
    let mut trace = execute_redblue(&g, &mut perm, &x, &rb, &cm)?;
    trace.header.seed = Some(seed);
    if let Some(path) = trace_out {
        write(path, &trace.to_jsonl())?;
    }
    let e = ecost(&trace, &cm);
    let pebbling_cost = cost_redblue(&g, &rb, &cm);
    Ok(Report::new(json!({
        "strategy": strategy.name(),
        "cache_words": cache,
        "ecost": cost(e),
        "pebbling_cost": cost(pebbling_cost),
        "cmc": cmc(&trace),
        "queries": trace.query_count(),
        "words_moved": trace.message_count(),
        "rounds": trace.rounds.len(),
        "max_batch": trace.max_batch(),
    }))
    .check(e == pebbling_cost, "ecost differs from the pebbling cost"))
}

#[allow(clippy::too_many_arguments)]
pub fn extend(
    graph: &Path,
    pebbling: Option<&Path>,
    m: usize,
    delta: Option<usize>,
    c_b: Cost,
    c_r: Cost,
    threshold: Option<usize>,
    redblue_out: Option<&Path>,
) -> Result<Report, CliError> {
    let g = load_graph(graph)?;
    let delta = delta.unwrap_or(g.delta());
    let p = match pebbling {
        Some(path) => {
            BlackPebbling::from_jsonl(&read(path)?).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?
        }
        None => greedy_black(&g),
    };
    let cm = CostModel::new(c_b, c_r, 1, 16)?;
    let ext = match threshold {
        Some(t) => extend_with_threshold(&g, &p, delta, m, &cm, t)?,
        None => extend_to_redblue(&g, &p, delta, m, &cm)?,
    };
    if let Some(path) = redblue_out {
        write(path, &ext.rb.to_jsonl())?;
    }
    let legal = is_legal_redblue(&g, &ext.rb);
    let successful = is_successful_redblue(&g, &ext.rb);
    let bounds_hold = ext.cost_bound_holds(&p, &cm);
    let lemmas = ext.lemma_report(&g, &p);
    let bounds: Vec<Value> =
        (0..ext.partition.interval_count()).map(|a| cost(ext.interval_cost_bound(&p, a, &cm))).collect();
    let mut body = ext.partition_report();
    let extra = json!({
        "delta": delta,
        "m": m,
        "red_budget": ext.rb.red_budget(),
        "rounds": ext.rb.rounds(),
        "legal": legal,
        "successful": successful,
        "interval_bounds": bounds,
        "cost_bound_holds": bounds_hold,
        "total_cost": cost(ext.total_cost()),
        "transfers": ext.transfers.len(),
        "lemmas": lemmas,
        "max_uncovered": ext.max_uncovered(&p),
        "max_slack": ext.max_slack(&p),
    });
    body.as_object_mut().expect("partition report is an object").extend(extra.as_object().unwrap().clone());
    Ok(Report::new(body)
        .check(legal, "extension is not a legal red-blue pebbling")
        .check(successful, "extension is not successful")
        .check(bounds_hold, "an interval exceeds its cost bound")
        .check(lemmas.is_clean(), "a lemma-level bound is violated"))
}

pub fn rbcost(graph: &Path, m: usize, c_b: Cost, c_r: Cost, max_nodes: usize) -> Result<Report, CliError> {
    let g = load_graph(graph)?;
    let cm = CostModel::new(c_b, c_r, 1, 16)?;
    let best = rbcost_oracle_capped(&g, m, &cm, max_nodes)?;
    Ok(Report::new(json!({
        "nodes": g.node_count(),
        "m": m,
        "c_b": cost(c_b),
        "c_r": cost(c_r),
        "feasible": best.is_some(),
        "rbcost": best.map(cost),
    })))
}

pub fn collide(graph: &Path, width: u32, trials: u64, seed: u64) -> Result<Report, CliError> {
    let g = load_graph(graph)?;
    let est = collision_rate(&g, width, trials, seed)?;
    let bound = CollisionEstimate::claimed_bound(g.node_count(), width);
    let sigma = (bound.min(1.0) * (1.0 - bound.min(1.0)) / trials as f64).sqrt();
    let within = est.rate() <= bound + 3.0 * sigma;
    Ok(Report::new(json!({
        "nodes": g.node_count(),
        "width": width,
        "trials": est.trials,
        "collisions": est.collisions,
        "rate": est.rate(),
        "bound": bound,
        "sigma": sigma,
        "within_bound": within,
    }))
    .check(within, "collision rate above the bound plus three standard deviations"))
}

pub fn predict(
    graph: &Path,
    width: u32,
    m: usize,
    seed: u64,
    threshold: Option<usize>,
    interval: Option<usize>,
) -> Result<Report, CliError> {
    let g = load_graph(graph)?;
    let run = honest_run(&g, width, m, seed, threshold)?;
    let a = match interval {
        Some(a) => a,
        None => run
            .first_predictable_interval()
            .filter(|&a| a + 1 < run.partition.boundaries.len())
            .ok_or_else(|| CliError::Usage("no interval has critical nodes; try a smaller --threshold".into()))?,
    };
    let (hint, report) = run.predict(&g, a)?;
    let budget = hint_budget(g.delta(), m, width, g.node_count(), hint.query_count);
    let ok = report.all_correct() && report.forbidden_attempts.is_empty();
    Ok(Report::new(json!({
        "boundaries": run.partition.boundaries,
        "interval": a,
        "all_correct": report.all_correct(),
        "distinct_points": report.distinct_points(),
        "hint_bits": hint.bits,
        "budget": budget,
        "hint": hint,
        "report": report,
    }))
    .check(ok, "a prediction is wrong or a forbidden query was attempted"))
}

#[allow(clippy::too_many_arguments)]
pub fn check_theorem1(
    graph: &Path,
    width: u32,
    seed: u64,
    m: usize,
    delta: Option<usize>,
    c_b: Cost,
    c_r: Cost,
    max_nodes: usize,
) -> Result<Report, CliError> {
    let g = load_graph(graph)?;
    let delta = delta.unwrap_or(g.delta());
    let r = theorem::check_theorem1(&g, width, seed, m, delta, c_b, c_r, max_nodes)?;
    let strategies: Vec<Value> =
        r.strategies.iter().map(|s| json!({"strategy": s.strategy, "ecost": s.ecost.map(cost)})).collect();
    Ok(Report::new(json!({
        "verdict": r.verdict(),
        "delta": r.delta,
        "m": r.m,
        "lhs": cost(r.lhs),
        "rhs": cost(r.rhs),
        "rbcost": cost(r.rbcost),
        "extension_cost": cost(r.extension_cost),
        "sandwich": r.sandwich,
        "strategies": strategies,
    }))
    .check(r.holds, "ecost is below the lower bound")
    .check(r.sandwich, "rbcost exceeds the extension cost"))
}

pub fn depth(graph: &Path, robustness: Option<(usize, usize)>) -> Result<Report, CliError> {
    let g = load_graph(graph)?;
    let mut body = json!({
        "nodes": g.node_count(),
        "delta": g.delta(),
        "depth": g.depth(),
        "sources": g.sources(),
        "sinks": g.sinks(),
    });
    if let Some((e, d)) = robustness {
        let extra = json!({
            "e": e,
            "d": d,
            "depth_robust": g.is_depth_robust(e, d)?,
            "source_to_sink_depth_robust": g.is_source_to_sink_depth_robust(e, d)?,
        });
        body.as_object_mut().unwrap().extend(extra.as_object().unwrap().clone());
    }
    Ok(Report::new(body))
}

pub fn guess(width: u32, q: usize, k: usize, trials: u64, seed: u64) -> Result<Report, CliError> {
    let est = guess_bound_estimate(width, q, k, trials, seed)?;
    Ok(Report::new(json!({
        "width": width,
        "q": q,
        "k": k,
        "trials": est.trials,
        "successes": est.successes,
        "rate": est.rate,
        "bound": est.bound,
    }))
    .check(est.rate <= est.bound, "guessing rate above the bound"))
}
