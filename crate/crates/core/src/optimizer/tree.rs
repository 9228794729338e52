//! Outcome trees of shot-by-shot protocols whose prior is re-flattened and
//! recentred after every shot.

use std::borrow::Cow;
use std::collections::HashMap;

use serde::Serialize;

use crate::bayes::{
    enumerate_sequences, single_shot_report_with, FlatPrior, ZERO_BRANCH_PROB,
};
use crate::error::{domain, Error, Result};
use crate::fock::{pmf_table, BeamSplitterMatrix, InputState};
use crate::numeric::KahanSum;

use super::{optimize_single_shot, OptimizerConfig, WIDTH_FLOOR};

/// How the width of the next flat prior is chosen after an outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum WidthRule {
    /// `sqrt(12 BMSE)` of the shot, independent of the outcome.
    OutcomeAveraged,
    /// `sqrt(12 (dphi)^2_m)` of the realized branch, capped at the current width.
    PerBranch,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolNode {
    /// Outcomes that lead to this shot.
    pub outcomes: Vec<usize>,
    /// Probability of reaching this node under the flat re-approximation.
    pub path_probability: f64,
    pub center: f64,
    pub width: f64,
    /// Input used at this node, already shifted to `center`.
    pub state: InputState,
    /// Shot estimators per outcome, in absolute phase.
    pub estimators: Vec<f64>,
    pub outcome_probs: Vec<f64>,
    pub branch_variances: Vec<f64>,
    pub bmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolTree {
    pub photon_count: usize,
    pub shots: usize,
    pub rule: WidthRule,
    /// Breadth-first, children in outcome order.
    pub nodes: Vec<ProtocolNode>,
    /// Expected final-shot BMSE under the flat re-approximation.
    pub flat_bmse: f64,
    /// Exact expected posterior variance of the protocol under the initial
    /// prior.
    pub exact_bmse: Option<f64>,
}

impl ProtocolTree {
    pub fn node(&self, outcomes: &[usize]) -> Option<&ProtocolNode> {
        self.nodes.iter().find(|n| n.outcomes == outcomes)
    }
}

fn state_key(width: f64) -> u64 {
    width.to_bits()
}

/// Builds the full protocol tree to depth `shots`.
pub fn protocol_tree(
    photon_count: usize,
    shots: usize,
    prior: &FlatPrior,
    cfg: &OptimizerConfig,
    rule: WidthRule,
) -> Result<ProtocolTree> {
    if shots == 0 {
        return domain("at least one shot is required");
    }
    let dim = photon_count + 1;
    let leaves = (dim as f64).powi(shots as i32);
    if leaves > cfg.enumeration_cap as f64 {
        return Err(Error::Resource(format!(
            "{leaves:.0} outcome sequences for N = {photon_count}, nu = {shots} exceed the \
             enumeration cap of {}",
            cfg.enumeration_cap
        )));
    }
    let bs = BeamSplitterMatrix::balanced_shared(photon_count)?;
    let mut cache: HashMap<u64, InputState> = HashMap::new();
    let mut choose = |width: f64| -> Result<InputState> {
        if let Some(s) = cache.get(&state_key(width)) {
            return Ok(s.clone());
        }
        let r = optimize_single_shot(photon_count, &FlatPrior::centered(width)?, cfg)?;
        let s = r.states.into_iter().next().expect("one state");
        cache.insert(state_key(width), s.clone());
        Ok(s)
    };

    let make_node = |outcomes: Vec<usize>,
                     path_probability: f64,
                     center: f64,
                     width: f64,
                     choose: &mut dyn FnMut(f64) -> Result<InputState>|
     -> Result<ProtocolNode> {
        let local = FlatPrior::new(center, width)?;
        let state = choose(width)?.phase_shifted(center);
        let grid = cfg.grid(local)?;
        let rep = single_shot_report_with(&state, &grid, bs)?;
        Ok(ProtocolNode {
            outcomes,
            path_probability,
            center,
            width,
            state,
            estimators: rep.estimators,
            outcome_probs: rep.outcome_probs,
            branch_variances: rep.branch_variances,
            bmse: rep.bmse,
        })
    };

    let mut nodes = vec![make_node(Vec::new(), 1.0, prior.center(), prior.width(), &mut choose)?];
    let mut level_start = 0;
    for _depth in 1..shots {
        let level_end = nodes.len();
        for parent in level_start..level_end {
            for m in 0..dim {
                let p = &nodes[parent];
                let (center, width) = if p.outcome_probs[m] < ZERO_BRANCH_PROB {
                    (p.center, p.width)
                } else {
                    let w = match rule {
                        WidthRule::OutcomeAveraged => FlatPrior::width_for_variance(p.bmse),
                        WidthRule::PerBranch => FlatPrior::width_for_variance(p.branch_variances[m]),
                    };
                    (p.estimators[m], w.min(p.width).max(WIDTH_FLOOR))
                };
                let mut outcomes = p.outcomes.clone();
                outcomes.push(m);
                let path = p.path_probability * p.outcome_probs[m];
                let child = make_node(outcomes, path, center, width, &mut choose)?;
                nodes.push(child);
            }
        }
        level_start = level_end;
    }
    let flat_bmse = nodes[level_start..]
        .iter()
        .map(|n| n.path_probability * n.bmse)
        .collect::<KahanSum>()
        .value();

    let grid = cfg.grid(*prior)?;
    let index: HashMap<&[usize], usize> = nodes.iter().enumerate().map(|(i, n)| (n.outcomes.as_slice(), i)).collect();
    let tables: Vec<Vec<f64>> = nodes
        .iter()
        .map(|n| pmf_table(&n.state, grid.nodes(), bs))
        .collect::<Result<_>>()?;
    let mut exact = KahanSum::new();
    enumerate_sequences(
        &grid,
        photon_count,
        shots,
        cfg.enumeration_cap,
        |prefix: &[usize]| {
            let i = index[prefix];
            Ok(Cow::Borrowed(tables[i].as_slice()))
        },
        |leaf| exact.add(leaf.weighted_variance),
    )?;
    let exact_bmse = Some(exact.value());
    drop(index);
    Ok(ProtocolTree {
        photon_count,
        shots,
        rule,
        nodes,
        flat_bmse,
        exact_bmse,
    })
}
