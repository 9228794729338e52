//! Bayesian inference over a flat phase prior: MMSE estimators, posterior
//! variances and their outcome average (the BMSE) for one shot, for
//! non-adaptive shot sequences and for outcome-conditioned second shots.
//!
//! All phase integrals are Gauss-Legendre sums over the prior interval. An
//! outcome sequence is scored by carrying the weight vector
//! `p(phi_j) w_j prod_i p(m_i | phi_j)` down a depth-first walk of the
//! outcome tree, so the per-shot tables are computed once and reused.

use std::borrow::Cow;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::fock::{pmf_table, BeamSplitterMatrix, InputState};
use crate::numeric::{GaussLegendre, KahanSum};

/// Gauss-Legendre nodes per phase integral.
pub const DEFAULT_NODE_COUNT: usize = 96;
/// Smallest node count accepted by [`make_quadrature`].
pub const MIN_NODE_COUNT: usize = 16;
/// Branches less likely than this fall back to the prior centre.
pub const ZERO_BRANCH_PROB: f64 = 1e-14;
/// Largest number of outcome sequences a global enumeration may visit.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

/// Uniform prior of width `width` centred on `center`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatPrior {
    center: f64,
    width: f64,
}

impl FlatPrior {
    /// Widths up to and including `pi` are accepted.
    pub fn new(center: f64, width: f64) -> Result<Self> {
        if !center.is_finite() {
            return domain("prior centre must be finite");
        }
        if !(width.is_finite() && width > 0.0 && width <= PI) {
            return domain(format!("prior width must lie in (0, pi], got {width}"));
        }
        Ok(Self { center, width })
    }

    pub fn centered(width: f64) -> Result<Self> {
        Self::new(0.0, width)
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn variance(&self) -> f64 {
        self.width * self.width / 12.0
    }

    pub fn lower(&self) -> f64 {
        self.center - 0.5 * self.width
    }

    pub fn upper(&self) -> f64 {
        self.center + 0.5 * self.width
    }

    pub fn with_center(&self, center: f64) -> Result<Self> {
        Self::new(center, self.width)
    }

    /// Width of the flat distribution whose variance is `variance`.
    pub fn width_for_variance(variance: f64) -> f64 {
        (12.0 * variance.max(0.0)).sqrt()
    }
}

/// Quadrature nodes on the prior interval; weights integrate `dphi`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    prior: FlatPrior,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// `weights / width`, i.e. prior density times quadrature weight.
    prior_weights: Vec<f64>,
}

impl QuadratureGrid {
    pub fn prior(&self) -> &FlatPrior {
        &self.prior
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn prior_weights(&self) -> &[f64] {
        &self.prior_weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `int f(phi) dphi` over the prior interval.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .collect::<KahanSum>()
            .value()
    }

    /// The default-resolution grid for a prior.
    pub fn for_prior(prior: FlatPrior) -> Self {
        build_grid(prior, DEFAULT_NODE_COUNT)
    }
}

/// Gauss-Legendre rule mapped onto `[center - width/2, center + width/2]`.
pub fn make_quadrature(prior: FlatPrior, node_count: usize) -> Result<QuadratureGrid> {
    if node_count < MIN_NODE_COUNT {
        return Err(Error::Config(format!(
            "quadrature needs at least {MIN_NODE_COUNT} nodes, got {node_count}"
        )));
    }
    Ok(build_grid(prior, node_count))
}

fn build_grid(prior: FlatPrior, node_count: usize) -> QuadratureGrid {
    let rule = GaussLegendre::cached(node_count);
    let half = 0.5 * prior.width;
    let nodes = rule.nodes.iter().map(|x| prior.center + half * x).collect();
    let weights: Vec<f64> = rule.weights.iter().map(|w| half * w).collect();
    let prior_weights = weights.iter().map(|w| w / prior.width).collect();
    QuadratureGrid {
        prior,
        nodes,
        weights,
        prior_weights,
    }
}

/// Ordered outcomes of consecutive shots.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OutcomeSequence {
    pub outcomes: Vec<usize>,
}

/// Posterior summary per outcome (or outcome sequence) plus the BMSE.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosteriorReport {
    /// Outcome sequences in lexicographic order; one entry per shot.
    pub sequences: Vec<OutcomeSequence>,
    pub outcome_probs: Vec<f64>,
    pub estimators: Vec<f64>,
    pub branch_variances: Vec<f64>,
    pub bmse: f64,
}

impl PosteriorReport {
    pub fn variance_ratio(&self, prior: &FlatPrior) -> f64 {
        self.bmse / prior.variance()
    }

    pub fn total_probability(&self) -> f64 {
        self.outcome_probs.iter().sum()
    }

    /// Probability-weighted variance of the estimators about `center`.
    pub fn estimator_spread(&self, center: f64) -> f64 {
        self.outcome_probs
            .iter()
            .zip(&self.estimators)
            .map(|(p, e)| p * (e - center).powi(2))
            .sum()
    }
}

/// Posterior of a single outcome sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Posterior {
    pub probability: f64,
    pub estimator: f64,
    /// Posterior variance; the prior variance for a vanishing branch.
    pub variance: f64,
}

/// One leaf of the outcome tree as seen by an enumeration visitor.
#[derive(Debug, Clone, Copy)]
pub struct Leaf<'a> {
    pub outcomes: &'a [usize],
    pub probability: f64,
    pub estimator: f64,
    /// `p * branch variance`; zero for a vanishing branch.
    pub weighted_variance: f64,
}

impl Leaf<'_> {
    pub fn posterior(&self, prior: &FlatPrior) -> Posterior {
        Posterior {
            probability: self.probability,
            estimator: self.estimator,
            variance: if self.probability < ZERO_BRANCH_PROB {
                prior.variance()
            } else {
                self.weighted_variance / self.probability
            },
        }
    }
}

fn summarize(grid: &QuadratureGrid, weights: &[f64]) -> (f64, f64, f64) {
    let mut p = KahanSum::new();
    let mut first = KahanSum::new();
    for (w, x) in weights.iter().zip(&grid.nodes) {
        p.add(*w);
        first.add(w * x);
    }
    let p = p.value();
    if p < ZERO_BRANCH_PROB {
        return (p, grid.prior.center, 0.0);
    }
    let est = first.value() / p;
    let var = weights
        .iter()
        .zip(&grid.nodes)
        .map(|(w, x)| w * (x - est) * (x - est))
        .collect::<KahanSum>()
        .value();
    (p, est, var)
}

fn check_cap(photon_count: usize, shots: usize, cap: u64) -> Result<()> {
    let count = ((photon_count + 1) as f64).powi(shots as i32);
    if count > cap as f64 {
        return Err(Error::Resource(format!(
            "{count:.0} outcome sequences for N = {photon_count}, nu = {shots} exceed the \
             enumeration cap of {cap}; use the local (shot-by-shot) strategy instead"
        )));
    }
    Ok(())
}

/// Depth-first walk over every outcome sequence of length `shots`.
///
/// `table(prefix)` returns the row-major `[node][m]` outcome table of the
/// shot that follows `prefix`, so inputs may depend on earlier outcomes.
/// Leaves are visited in lexicographic order.
pub fn enumerate_sequences<'t, T, V>(
    grid: &QuadratureGrid,
    photon_count: usize,
    shots: usize,
    cap: u64,
    mut table: T,
    mut visit: V,
) -> Result<()>
where
    T: FnMut(&[usize]) -> Result<Cow<'t, [f64]>>,
    V: FnMut(&Leaf<'_>),
{
    if shots == 0 {
        return domain("at least one shot is required");
    }
    check_cap(photon_count, shots, cap)?;
    let dim = photon_count + 1;
    let nodes = grid.len();
    let mut stack: Vec<Vec<f64>> = vec![grid.prior_weights.clone()];
    stack.extend((0..shots).map(|_| vec![0.0; nodes]));
    let mut prefix: Vec<usize> = Vec::with_capacity(shots);
    let mut tables: Vec<Cow<'t, [f64]>> = Vec::with_capacity(shots);

    // iterative DFS: tables[d] is the table for the shot after prefix[..d]
    tables.push(table(&prefix)?);
    check_table(&tables[0], nodes, dim)?;
    prefix.push(0);
    loop {
        let depth = prefix.len() - 1;
        let m = prefix[depth];
        {
            let (lo, hi) = stack.split_at_mut(depth + 1);
            let parent = &lo[depth];
            let child = &mut hi[0];
            let t = &tables[depth];
            for j in 0..nodes {
                child[j] = parent[j] * t[j * dim + m];
            }
        }
        if depth + 1 == shots {
            let (p, est, var) = summarize(grid, &stack[depth + 1]);
            visit(&Leaf {
                outcomes: &prefix,
                probability: p,
                estimator: est,
                weighted_variance: var,
            });
            // advance to the next sibling, popping exhausted levels
            loop {
                let last = prefix.len() - 1;
                prefix[last] += 1;
                if prefix[last] < dim {
                    break;
                }
                prefix.pop();
                tables.pop();
                if prefix.is_empty() {
                    return Ok(());
                }
            }
        } else {
            let t = table(&prefix)?;
            check_table(&t, nodes, dim)?;
            tables.push(t);
            prefix.push(0);
        }
    }
}

fn check_table(t: &[f64], nodes: usize, dim: usize) -> Result<()> {
    if t.len() != nodes * dim {
        return domain(format!(
            "outcome table has {} entries, expected {} nodes x {} outcomes",
            t.len(),
            nodes,
            dim
        ));
    }
    Ok(())
}

fn common_photon_count(states: &[&InputState]) -> Result<usize> {
    let n = match states.first() {
        Some(s) => s.photon_count(),
        None => return domain("at least one input state is required"),
    };
    if states.iter().any(|s| s.photon_count() != n) {
        return domain("all shots must use the same photon number");
    }
    Ok(n)
}

fn collect_report<T>(
    grid: &QuadratureGrid,
    photon_count: usize,
    shots: usize,
    cap: u64,
    table: T,
) -> Result<PosteriorReport>
where
    T: for<'p> FnMut(&'p [usize]) -> Result<Cow<'static, [f64]>>,
{
    let mut report = PosteriorReport {
        sequences: Vec::new(),
        outcome_probs: Vec::new(),
        estimators: Vec::new(),
        branch_variances: Vec::new(),
        bmse: 0.0,
    };
    let mut bmse = KahanSum::new();
    let prior = grid.prior;
    enumerate_sequences(grid, photon_count, shots, cap, table, |leaf| {
        let post = leaf.posterior(&prior);
        report.sequences.push(OutcomeSequence {
            outcomes: leaf.outcomes.to_vec(),
        });
        report.outcome_probs.push(leaf.probability);
        report.estimators.push(post.estimator);
        report.branch_variances.push(post.variance);
        bmse.add(leaf.weighted_variance);
    })?;
    report.bmse = bmse.value();
    Ok(report)
}

/// Outcome tables of each state on the grid nodes.
pub fn state_tables(
    states: &[&InputState],
    grid: &QuadratureGrid,
    bs: &BeamSplitterMatrix,
) -> Result<Vec<Vec<f64>>> {
    states.iter().map(|s| pmf_table(s, &grid.nodes, bs)).collect()
}

/// Single-shot posterior report with an explicit beam splitter.
pub fn single_shot_report_with(
    state: &InputState,
    grid: &QuadratureGrid,
    bs: &BeamSplitterMatrix,
) -> Result<PosteriorReport> {
    multishot_report_with(&[state], grid, bs, DEFAULT_ENUMERATION_CAP)
}

/// Single-shot report for the balanced interferometer.
pub fn single_shot_report(
    state: &InputState,
    prior: &FlatPrior,
    grid: &QuadratureGrid,
) -> Result<PosteriorReport> {
    check_grid(prior, grid)?;
    let bs = BeamSplitterMatrix::balanced_shared(state.photon_count())?;
    single_shot_report_with(state, grid, bs)
}

/// Non-adaptive report with one fixed state per shot.
pub fn multishot_report_with(
    states: &[&InputState],
    grid: &QuadratureGrid,
    bs: &BeamSplitterMatrix,
    cap: u64,
) -> Result<PosteriorReport> {
    let n = common_photon_count(states)?;
    check_cap(n, states.len(), cap)?;
    let tables = state_tables(states, grid, bs)?;
    collect_report(grid, n, states.len(), cap, |prefix: &[usize]| {
        Ok(Cow::Owned(tables[prefix.len()].clone()))
    })
}

pub fn multishot_report(
    states: &[InputState],
    prior: &FlatPrior,
    grid: &QuadratureGrid,
) -> Result<PosteriorReport> {
    check_grid(prior, grid)?;
    let refs: Vec<&InputState> = states.iter().collect();
    let n = common_photon_count(&refs)?;
    let bs = BeamSplitterMatrix::balanced_shared(n)?;
    multishot_report_with(&refs, grid, bs, DEFAULT_ENUMERATION_CAP)
}

/// BMSE of a non-adaptive sequence from precomputed tables, without storing
/// the per-sequence report. This is the optimizer's objective.
pub fn bmse_from_tables(
    tables: &[&[f64]],
    grid: &QuadratureGrid,
    photon_count: usize,
    cap: u64,
) -> Result<f64> {
    let mut total = KahanSum::new();
    enumerate_sequences(
        grid,
        photon_count,
        tables.len(),
        cap,
        |prefix: &[usize]| Ok(Cow::Borrowed(tables[prefix.len()])),
        |leaf| total.add(leaf.weighted_variance),
    )?;
    Ok(total.value())
}

/// BMSE of a two-shot adaptive protocol from precomputed tables:
/// `seconds[m1]` is used after first outcome `m1`.
pub fn adaptive_bmse_from_tables(
    first: &[f64],
    seconds: &[&[f64]],
    grid: &QuadratureGrid,
    photon_count: usize,
) -> Result<f64> {
    if seconds.len() != photon_count + 1 {
        return domain(format!(
            "adaptive protocol needs {} second-shot states, got {}",
            photon_count + 1,
            seconds.len()
        ));
    }
    let mut total = KahanSum::new();
    enumerate_sequences(
        grid,
        photon_count,
        2,
        DEFAULT_ENUMERATION_CAP,
        |prefix: &[usize]| {
            Ok(Cow::Borrowed(match prefix.first() {
                None => first,
                Some(&m1) => seconds[m1],
            }))
        },
        |leaf| total.add(leaf.weighted_variance),
    )?;
    Ok(total.value())
}

/// Report of the outcome-conditioned two-shot protocol.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdaptiveReport {
    /// Joint report over `(m1, m2)` in lexicographic order.
    pub joint: PosteriorReport,
    /// `p(m1)`.
    pub first_outcome_probs: Vec<f64>,
    /// `sum_{m2} p(m2 | m1) (dphi)^2_{m1,m2}`: the two-shot variance kept
    /// separate per first outcome.
    pub first_outcome_variances: Vec<f64>,
}

impl AdaptiveReport {
    /// Two-shot posterior for the realized pair.
    pub fn pair(&self, m1: usize, m2: usize) -> Posterior {
        let dim = self.first_outcome_probs.len();
        let i = m1 * dim + m2;
        Posterior {
            probability: self.joint.outcome_probs[i],
            estimator: self.joint.estimators[i],
            variance: self.joint.branch_variances[i],
        }
    }
}

pub fn adaptive_report_with(
    first: &InputState,
    seconds: &[InputState],
    grid: &QuadratureGrid,
    bs: &BeamSplitterMatrix,
) -> Result<AdaptiveReport> {
    let n = first.photon_count();
    if seconds.len() != n + 1 {
        return domain(format!(
            "adaptive protocol needs {} second-shot states, got {}",
            n + 1,
            seconds.len()
        ));
    }
    let mut all: Vec<&InputState> = vec![first];
    all.extend(seconds.iter());
    common_photon_count(&all)?;
    let first_table = pmf_table(first, &grid.nodes, bs)?;
    let second_tables: Vec<Vec<f64>> = seconds
        .iter()
        .map(|s| pmf_table(s, &grid.nodes, bs))
        .collect::<Result<_>>()?;
    let joint = collect_report(grid, n, 2, DEFAULT_ENUMERATION_CAP, |prefix: &[usize]| {
        Ok(Cow::Owned(match prefix.first() {
            None => first_table.clone(),
            Some(&m1) => second_tables[m1].clone(),
        }))
    })?;
    let dim = n + 1;
    let mut first_outcome_probs = vec![0.0; dim];
    let mut first_outcome_variances = vec![0.0; dim];
    for m1 in 0..dim {
        let mut p = KahanSum::new();
        let mut v = KahanSum::new();
        for m2 in 0..dim {
            let i = m1 * dim + m2;
            let pj = joint.outcome_probs[i];
            p.add(pj);
            if pj >= ZERO_BRANCH_PROB {
                v.add(pj * joint.branch_variances[i]);
            }
        }
        first_outcome_probs[m1] = p.value();
        first_outcome_variances[m1] = if p.value() < ZERO_BRANCH_PROB {
            grid.prior.variance()
        } else {
            v.value() / p.value()
        };
    }
    Ok(AdaptiveReport {
        joint,
        first_outcome_probs,
        first_outcome_variances,
    })
}

pub fn adaptive_report(
    first: &InputState,
    seconds: &[InputState],
    prior: &FlatPrior,
    grid: &QuadratureGrid,
) -> Result<AdaptiveReport> {
    check_grid(prior, grid)?;
    let bs = BeamSplitterMatrix::balanced_shared(first.photon_count())?;
    adaptive_report_with(first, seconds, grid, bs)
}

/// Exact posterior of one realized sequence, `states[i]` used on shot `i`.
pub fn posterior_for_sequence(
    states: &[&InputState],
    outcomes: &[usize],
    grid: &QuadratureGrid,
    bs: &BeamSplitterMatrix,
) -> Result<Posterior> {
    if states.len() != outcomes.len() {
        return domain(format!(
            "{} states for {} outcomes",
            states.len(),
            outcomes.len()
        ));
    }
    let n = common_photon_count(states)?;
    if let Some(m) = outcomes.iter().find(|&&m| m > n) {
        return domain(format!("outcome {m} exceeds N = {n}"));
    }
    let dim = n + 1;
    let mut w = grid.prior_weights.clone();
    for (s, &m) in states.iter().zip(outcomes) {
        let t = pmf_table(s, &grid.nodes, bs)?;
        for (j, wj) in w.iter_mut().enumerate() {
            *wj *= t[j * dim + m];
        }
    }
    let (p, est, var) = summarize(grid, &w);
    Ok(Leaf {
        outcomes,
        probability: p,
        estimator: est,
        weighted_variance: var,
    }
    .posterior(&grid.prior))
}

fn check_grid(prior: &FlatPrior, grid: &QuadratureGrid) -> Result<()> {
    let tol = 1e-12 * (1.0 + prior.width());
    if (grid.prior.center - prior.center).abs() > tol || (grid.prior.width - prior.width).abs() > tol {
        return domain("quadrature grid does not span the prior interval");
    }
    Ok(())
}
