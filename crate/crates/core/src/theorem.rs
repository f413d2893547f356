//! Desk-scale check of the energy lower bound
//! `ecost >= rbcost(G, 20δm) / 40δ - m c_b / 2` for the honest strategies.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{ecost, execute_redblue};
use crate::extend::extend_to_redblue;
use crate::graph::Dag;
use crate::label::InputVector;
use crate::pebble::{rbcost_oracle_capped, Cost, CostModel};
use crate::perm::Permutation;
use crate::rng;
use crate::strategy::{greedy_black, Strategy};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StrategyCost {
    pub strategy: String,
    /// `None` when the strategy cannot run with this cache.
    pub ecost: Option<Cost>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Theorem1Report {
    pub delta: usize,
    pub m: usize,
    pub strategies: Vec<StrategyCost>,
    /// Least ecost over the strategies that ran.
    pub lhs: Cost,
    pub rbcost: Cost,
    pub rhs: Cost,
    pub holds: bool,
    /// Cost of the extension of the greedy black pebbling.
    pub extension_cost: Cost,
    /// `rbcost(G, 20δm) <= extension_cost`.
    pub sandwich: bool,
}

impl Theorem1Report {
    pub fn verdict(&self) -> &'static str {
        if self.holds && self.sandwich {
            "holds"
        } else {
            "violated"
        }
    }
}

/// Runs every shipped strategy with a cache of `m` words on labels drawn
/// from `seed` and compares the cheapest against the bound. The permutation
/// and input are sampled exactly as in an honest predictor run.
#[allow(clippy::too_many_arguments)]
pub fn check_theorem1(
    g: &Dag,
    width: u32,
    seed: u64,
    m: usize,
    delta: usize,
    c_b: Cost,
    c_r: Cost,
    max_oracle_nodes: usize,
) -> Result<Theorem1Report> {
    if delta == 0 {
        return Err(Error::BadShape("delta must be positive".into()));
    }
    let cm = CostModel::new(c_b, c_r, m, width)?;
    let budget = 20 * delta * m;
    let rbcost = rbcost_oracle_capped(g, budget, &cm, max_oracle_nodes)?
        .ok_or_else(|| Error::BadShape(format!("no pebbling fits {budget} red pebbles")))?;

    let mut rng = rng::from_seed(seed);
    let perm = Permutation::sample_with(width, &mut rng)?;
    let x = InputVector::sample_noncolliding(g.sources().len(), width, &mut rng)?;
    let mut strategies = Vec::new();
    for s in Strategy::ALL {
        let ecost = match s.pebbling(g, m) {
            Ok(rb) => Some(ecost(&execute_redblue(g, &mut perm.clone(), &x, &rb, &cm)?, &cm)),
            Err(Error::StrategyInfeasible { .. }) => None,
            Err(e) => return Err(e),
        };
        strategies.push(StrategyCost { strategy: s.name().into(), ecost });
    }
    let lhs = strategies.iter().filter_map(|s| s.ecost).min().ok_or_else(|| Error::StrategyInfeasible {
        strategy: "any".into(),
        reason: format!("no strategy runs with {m} words"),
    })?;
    let rhs = rbcost / Cost::from_integer(40 * delta as i64) - c_b * Cost::new(m as i64, 2);

    let extension = extend_to_redblue(g, &greedy_black(g), delta, m, &cm)?;
    let extension_cost = extension.total_cost();
    Ok(Theorem1Report {
        delta,
        m,
        strategies,
        lhs,
        rbcost,
        rhs,
        holds: lhs >= rhs,
        extension_cost,
        sandwich: rbcost <= extension_cost,
    })
}
