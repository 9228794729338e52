//! BMSE minimization for one-shot, multi-shot global, multi-shot local,
//! adaptive global and feedforward strategies.
//!
//! Every search is a multi-start simplex over the coordinates of
//! [`param::Layout`]. Starts run in parallel; the winner is the lowest BMSE
//! with ties broken by start index, so results do not depend on scheduling.

pub mod param;
pub mod simplex;
mod tree;

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bayes::{
    adaptive_bmse_from_tables, bmse_from_tables, make_quadrature, FlatPrior, QuadratureGrid,
    DEFAULT_ENUMERATION_CAP, DEFAULT_NODE_COUNT,
};
use crate::error::{domain, Error, Result};
use crate::fock::{pmf_table, BeamSplitterMatrix, InputState};
use crate::scaling::{RhoSample, ScalingConstants, ScalingSample};
use crate::states::{analytic_state, best_fit_gaussian_with, make_gaussian, make_noon, GaussianParams, Sign};

pub use param::Layout;
pub use tree::{protocol_tree, ProtocolNode, ProtocolTree, WidthRule};

/// Search space of the optimizers, from richest to cheapest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// Free mirror-symmetric coefficients.
    Full,
    /// Gaussian profile with an optimized width.
    GaussianRho,
    /// Gaussian plus quartic correction.
    QuasiGaussian,
    /// No search: N00N below the regime boundary, best-fit Gaussian above.
    Analytic,
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "full" => Ok(Family::Full),
            "gaussian-rho" | "gaussian" => Ok(Family::GaussianRho),
            "quasi-gaussian" => Ok(Family::QuasiGaussian),
            "analytic" => Ok(Family::Analytic),
            other => Err(Error::Config(format!("unknown state family '{other}'"))),
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Family::Full => "full",
            Family::GaussianRho => "gaussian-rho",
            Family::QuasiGaussian => "quasi-gaussian",
            Family::Analytic => "analytic",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub restarts: usize,
    /// Perturb-and-repolish rounds after each start's first descent; a
    /// round is kept only if it lowers the BMSE.
    pub hops: usize,
    /// Simplex iteration budget per start.
    pub max_iterations: usize,
    /// Absolute BMSE change (rad^2) at which a simplex is considered converged.
    pub convergence_tol: f64,
    pub seed: u64,
    pub family: Family,
    pub node_count: usize,
    pub sign: Sign,
    pub constants: ScalingConstants,
    pub enumeration_cap: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 8,
            hops: 4,
            max_iterations: 20_000,
            convergence_tol: 1e-10,
            seed: 0,
            family: Family::Full,
            node_count: DEFAULT_NODE_COUNT,
            sign: Sign::Plus,
            constants: ScalingConstants::default(),
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        }
    }
}

impl OptimizerConfig {
    pub fn with_family(family: Family) -> Self {
        Self {
            family,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::Config("at least one restart is required".into()));
        }
        if !(self.convergence_tol.is_finite() && self.convergence_tol > 0.0) {
            return Err(Error::Config("convergence tolerance must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("iteration budget must be positive".into()));
        }
        self.constants.validate()?;
        make_quadrature(FlatPrior::centered(1.0)?, self.node_count).map(|_| ())
    }

    fn simplex_options(&self) -> simplex::SimplexOptions {
        simplex::SimplexOptions {
            max_iterations: self.max_iterations,
            value_tol: self.convergence_tol,
            ..Default::default()
        }
    }

    pub(crate) fn grid(&self, prior: FlatPrior) -> Result<QuadratureGrid> {
        make_quadrature(prior, self.node_count)
    }
}

/// One start of a multi-start search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestartLog {
    pub index: usize,
    pub start: String,
    pub bmse: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyResult {
    /// One state per shot (for adaptive strategies, the first shot only).
    pub states: Vec<InputState>,
    /// Second-shot inputs indexed by the first outcome (adaptive only).
    pub branch_states: Vec<InputState>,
    /// Objective value: exact BMSE for global strategies, the flat-width
    /// propagated variance for local ones (rad^2).
    pub bmse: f64,
    pub variance_ratio: f64,
    pub prior_width: f64,
    /// Width before each shot and after the last one (local strategies).
    pub widths: Vec<f64>,
    /// Exact BMSE of the chosen inputs under the original prior, when the
    /// outcome tree is small enough to enumerate.
    pub exact_bmse: Option<f64>,
    /// Winning coordinates in family parameters (single shot only).
    pub coordinates: Vec<f64>,
    pub converged: bool,
    pub trace: Vec<RestartLog>,
}

impl StrategyResult {
    pub fn exact_ratio(&self) -> Option<f64> {
        self.exact_bmse
            .map(|b| b / (self.prior_width * self.prior_width / 12.0))
    }
}

struct Search {
    x: Vec<f64>,
    converged: bool,
    trace: Vec<RestartLog>,
}

/// RNG streams of the hop perturbations sit above the start streams.
const HOP_STREAM: usize = 1 << 32;
/// Half-width of the uniform hop perturbation per coordinate (radians for
/// the full family).
const HOP_SCALE: f64 = 0.6;

/// Runs every start and keeps the best, ties broken by start order.
fn multistart<F>(starts: Vec<(String, Vec<f64>)>, cfg: &OptimizerConfig, objective: F) -> Search
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let opts = cfg.simplex_options();
    let runs: Vec<(String, simplex::SimplexResult)> = starts
        .into_par_iter()
        .enumerate()
        .map(|(i, (label, x0))| {
            let mut best = simplex::minimize(&objective, &x0, &opts);
            let mut rng = restart_rng(cfg.seed, HOP_STREAM + i);
            for _ in 0..cfg.hops {
                let x: Vec<f64> = best.x.iter().map(|v| v + rng.random_range(-HOP_SCALE..HOP_SCALE)).collect();
                let r = simplex::minimize(&objective, &x, &opts);
                let (iterations, evaluations) = (best.iterations + r.iterations, best.evaluations + r.evaluations);
                if r.value < best.value {
                    best = r;
                }
                best.iterations = iterations;
                best.evaluations = evaluations;
            }
            (label, best)
        })
        .collect();
    let trace: Vec<RestartLog> = runs
        .iter()
        .enumerate()
        .map(|(i, (label, r))| RestartLog {
            index: i,
            start: label.clone(),
            bmse: r.value,
            iterations: r.iterations,
            evaluations: r.evaluations,
            converged: r.converged,
        })
        .collect();
    let (best, _) = runs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.value.total_cmp(&b.1 .1.value).then(a.0.cmp(&b.0)))
        .expect("at least one start");
    let r = &runs[best].1;
    if !r.converged {
        log::warn!("best start '{}' hit the iteration budget", runs[best].0);
    }
    Search {
        x: r.x.clone(),
        converged: r.converged,
        trace,
    }
}

fn restart_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn random_coords(layout: &Layout, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = layout.photon_count;
    match layout.family {
        Family::Full => {
            let a = crate::states::SymmetricParams::amplitude_len(n) - 1;
            let p = crate::states::SymmetricParams::phase_len(n);
            let mut x: Vec<f64> = (0..a).map(|_| rng.random_range(0.0..std::f64::consts::FRAC_PI_2)).collect();
            x.extend((0..p).map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)));
            x
        }
        Family::GaussianRho => vec![rng.random_range(0.0..1.0)],
        Family::QuasiGaussian => vec![rng.random_range(-0.5..1.0), rng.random_range(-0.05..0.05)],
        Family::Analytic => Vec::new(),
    }
}

/// Start list for one state: N00N, best-fit Gaussian, uniform, then random.
fn seed_coords(layout: &Layout, width: f64, cfg: &OptimizerConfig, stream: usize) -> Result<Vec<(String, Vec<f64>)>> {
    let n = layout.photon_count;
    let rho_fit = cfg.constants.c_rho * width / n as f64;
    let named: Vec<(String, Vec<f64>)> = match layout.family {
        Family::Full => vec![
            ("noon".into(), layout.coords_of(&make_noon(n, cfg.sign)?)),
            (
                "best-fit-gaussian".into(),
                layout.coords_of(&best_fit_gaussian_with(n, width, cfg.sign, &cfg.constants)?),
            ),
            (
                "uniform".into(),
                layout.coords_of(&make_gaussian(n, GaussianParams::new(0.0, cfg.sign))?),
            ),
        ],
        Family::GaussianRho => vec![
            ("best-fit-gaussian".into(), vec![rho_fit]),
            ("uniform".into(), vec![0.0]),
            ("narrow".into(), vec![1.0]),
        ],
        Family::QuasiGaussian => vec![
            ("best-fit-gaussian".into(), vec![rho_fit, 0.0]),
            ("uniform".into(), vec![0.0, 0.0]),
            ("inverted".into(), vec![-0.3, 0.0]),
        ],
        Family::Analytic => Vec::new(),
    };
    let mut out: Vec<(String, Vec<f64>)> = named.into_iter().take(cfg.restarts).collect();
    let mut rng = restart_rng(cfg.seed, stream);
    while out.len() < cfg.restarts {
        out.push((format!("random-{}", out.len()), random_coords(layout, &mut rng)));
    }
    Ok(out)
}

fn layout(photon_count: usize, cfg: &OptimizerConfig) -> Layout {
    Layout {
        family: cfg.family,
        photon_count,
        sign: cfg.sign,
    }
}

fn states_from(layout: &Layout, x: &[f64], count: usize) -> Result<Vec<InputState>> {
    let d = layout.dimension();
    (0..count).map(|i| layout.state(&x[i * d..(i + 1) * d])).collect()
}

fn tables_for(states: &[InputState], grid: &QuadratureGrid, bs: &BeamSplitterMatrix) -> Result<Vec<Vec<f64>>> {
    states.iter().map(|s| pmf_table(s, grid.nodes(), bs)).collect()
}

/// Exact non-adaptive BMSE of fixed inputs under `prior`.
pub fn sequence_bmse(states: &[InputState], prior: FlatPrior, cfg: &OptimizerConfig) -> Result<f64> {
    let n = states.first().map(|s| s.photon_count()).ok_or_else(|| Error::Domain("no states".into()))?;
    let grid = cfg.grid(prior)?;
    let bs = BeamSplitterMatrix::balanced_shared(n)?;
    let tables = tables_for(states, &grid, bs)?;
    let refs: Vec<&[f64]> = tables.iter().map(|t| t.as_slice()).collect();
    bmse_from_tables(&refs, &grid, n, cfg.enumeration_cap)
}

fn single_bmse(state: &InputState, grid: &QuadratureGrid, bs: &BeamSplitterMatrix) -> Result<f64> {
    let t = pmf_table(state, grid.nodes(), bs)?;
    bmse_from_tables(&[&t], grid, state.photon_count(), DEFAULT_ENUMERATION_CAP)
}

/// Picks the `s = +1` member (or `s = -1` if configured) of the pair
/// `{c, conj c}`, judged by overlap with the analytic references.
fn prefers_conjugate(state: &InputState, width: f64, cfg: &OptimizerConfig) -> bool {
    let n = state.photon_count();
    let mut refs = vec![];
    if let Ok(s) = make_noon(n, cfg.sign) {
        refs.push(s);
    }
    if let Ok(s) = best_fit_gaussian_with(n, width.min(std::f64::consts::PI), cfg.sign, &cfg.constants) {
        refs.push(s);
    }
    let score = |s: &InputState| refs.iter().map(|r| r.overlap(s)).fold(0.0, f64::max);
    score(&state.conjugated()) > score(state) + 1e-12
}

fn canonical_all(states: Vec<InputState>, width: f64, cfg: &OptimizerConfig) -> Vec<InputState> {
    match states.first() {
        Some(first) if prefers_conjugate(first, width, cfg) => states.iter().map(|s| s.conjugated()).collect(),
        _ => states,
    }
}

fn check_photons(photon_count: usize) -> Result<()> {
    if photon_count == 0 {
        return domain("optimization needs N >= 1");
    }
    Ok(())
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

/// Best single-shot input for `prior` within the configured family.
pub fn optimize_single_shot(photon_count: usize, prior: &FlatPrior, cfg: &OptimizerConfig) -> Result<StrategyResult> {
    cfg.validate()?;
    check_photons(photon_count)?;
    let width = prior.width();
    let centred = FlatPrior::centered(width)?;
    let grid = cfg.grid(centred)?;
    let bs = BeamSplitterMatrix::balanced_shared(photon_count)?;
    let (state, coordinates, converged, trace) = if cfg.family == Family::Analytic {
        let (_, s) = analytic_state(photon_count, width, cfg.sign, &cfg.constants)?;
        (s, Vec::new(), true, Vec::new())
    } else {
        let layout = layout(photon_count, cfg);
        let starts = seed_coords(&layout, width, cfg, 0)?;
        let search = multistart(starts, cfg, |x| match layout.state(x) {
            Ok(s) => single_bmse(&s, &grid, bs).unwrap_or(f64::INFINITY),
            Err(_) => f64::INFINITY,
        });
        let s = layout.state(&search.x)?;
        let mut coords = search.x;
        if cfg.family == Family::GaussianRho {
            coords[0] = coords[0].abs();
        }
        (s, coords, search.converged, search.trace)
    };
    let state = canonical_all(vec![state], width, cfg).remove(0);
    let bmse = single_bmse(&state, &grid, bs)?;
    let state = if prior.center() != 0.0 {
        state.phase_shifted(prior.center())
    } else {
        state
    };
    Ok(StrategyResult {
        states: vec![state],
        branch_states: Vec::new(),
        bmse,
        variance_ratio: bmse / prior.variance(),
        prior_width: width,
        widths: vec![width, FlatPrior::width_for_variance(bmse)],
        exact_bmse: Some(bmse),
        coordinates,
        converged,
        trace,
    })
}

/// Shot-by-shot protocol: each input is optimal for a flat prior whose
/// width carries the previous shot's outcome-averaged variance.
pub fn optimize_local_nonadaptive(
    photon_count: usize,
    shots: usize,
    prior: &FlatPrior,
    cfg: &OptimizerConfig,
) -> Result<StrategyResult> {
    cfg.validate()?;
    check_photons(photon_count)?;
    if shots == 0 {
        return domain("at least one shot is required");
    }
    let mut widths = vec![prior.width()];
    let mut states = Vec::with_capacity(shots);
    let mut converged = true;
    let mut trace = Vec::new();
    for _ in 0..shots {
        let w = *widths.last().expect("nonempty");
        let r = optimize_single_shot(photon_count, &FlatPrior::centered(w)?, cfg)?;
        converged &= r.converged;
        trace.extend(r.trace);
        let next = FlatPrior::width_for_variance(r.bmse).clamp(WIDTH_FLOOR, w);
        states.push(r.states.into_iter().next().expect("one state"));
        widths.push(next);
    }
    let last = *widths.last().expect("nonempty");
    let bmse = last * last / 12.0;
    let exact_bmse = if check_cap(photon_count, shots, cfg.enumeration_cap).is_ok() {
        Some(sequence_bmse(&states, FlatPrior::centered(prior.width())?, cfg)?)
    } else {
        None
    };
    let states = if prior.center() != 0.0 {
        states.iter().map(|s| s.phase_shifted(prior.center())).collect()
    } else {
        states
    };
    Ok(StrategyResult {
        states,
        branch_states: Vec::new(),
        bmse,
        variance_ratio: bmse / prior.variance(),
        prior_width: prior.width(),
        widths,
        exact_bmse,
        coordinates: Vec::new(),
        converged,
        trace,
    })
}

/// Smallest width a protocol may propagate.
pub const WIDTH_FLOOR: f64 = 1e-9;

/// Shots of the local protocol needed to bring the width to `target`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShotsToTarget {
    pub shots: usize,
    pub widths: Vec<f64>,
}

pub fn shots_to_target(
    photon_count: usize,
    delta_start: f64,
    delta_target: f64,
    cfg: &OptimizerConfig,
    max_shots: usize,
) -> Result<ShotsToTarget> {
    cfg.validate()?;
    FlatPrior::centered(delta_start)?;
    if !(delta_target > 0.0 && delta_target < delta_start) {
        return domain("target width must lie in (0, Delta_start)");
    }
    let mut widths = vec![delta_start];
    while *widths.last().expect("nonempty") > delta_target {
        if widths.len() > max_shots {
            return Err(Error::Resource(format!(
                "target {delta_target} not reached within {max_shots} shots"
            )));
        }
        let w = *widths.last().expect("nonempty");
        let r = optimize_single_shot(photon_count, &FlatPrior::centered(w)?, cfg)?;
        let next = FlatPrior::width_for_variance(r.bmse);
        if !(next < w) {
            return Err(Error::Domain(format!("width stalled at {w}")));
        }
        widths.push(next);
    }
    Ok(ShotsToTarget {
        shots: widths.len() - 1,
        widths,
    })
}

/// Jointly optimized inputs for `shots` non-adaptive shots.
pub fn optimize_global_nonadaptive(
    photon_count: usize,
    shots: usize,
    prior: &FlatPrior,
    cfg: &OptimizerConfig,
) -> Result<StrategyResult> {
    cfg.validate()?;
    check_photons(photon_count)?;
    if shots == 0 {
        return domain("at least one shot is required");
    }
    check_cap(photon_count, shots, cfg.enumeration_cap)?;
    if shots == 1 {
        return optimize_single_shot(photon_count, prior, cfg);
    }
    let width = prior.width();
    let centred = FlatPrior::centered(width)?;
    let local = optimize_local_nonadaptive(photon_count, shots, &centred, cfg)?;
    if cfg.family == Family::Analytic {
        let bmse = local.exact_bmse.expect("cap checked");
        return Ok(StrategyResult {
            bmse,
            variance_ratio: bmse / prior.variance(),
            widths: vec![width, FlatPrior::width_for_variance(bmse)],
            ..shift_result(local, prior.center())
        });
    }
    let single = optimize_single_shot(photon_count, &centred, cfg)?;
    let layout = layout(photon_count, cfg);
    let grid = cfg.grid(centred)?;
    let bs = BeamSplitterMatrix::balanced_shared(photon_count)?;

    let coords_of = |s: &InputState| -> Vec<f64> {
        match cfg.family {
            Family::Full => layout.coords_of(s),
            _ => Vec::new(),
        }
    };
    let mut starts: Vec<(String, Vec<f64>)> = Vec::new();
    if cfg.family == Family::Full {
        starts.push(("repeated-single-shot".into(), coords_of(&single.states[0]).repeat(shots)));
        starts.push(("local-sequence".into(), local.states.iter().flat_map(|s| coords_of(s)).collect()));
    } else {
        starts.push(("repeated-single-shot".into(), single.coordinates.repeat(shots)));
    }
    let per_shot: Vec<Vec<(String, Vec<f64>)>> = (0..shots)
        .map(|i| seed_coords(&layout, local.widths[i], cfg, i))
        .collect::<Result<_>>()?;
    for r in 0..cfg.restarts {
        let label = per_shot[0][r].0.clone();
        starts.push((label, per_shot.iter().flat_map(|p| p[r].1.clone()).collect()));
    }
    let search = multistart(starts, cfg, |x| {
        let states = match states_from(&layout, x, shots) {
            Ok(s) => s,
            Err(_) => return f64::INFINITY,
        };
        let tables = match tables_for(&states, &grid, bs) {
            Ok(t) => t,
            Err(_) => return f64::INFINITY,
        };
        let refs: Vec<&[f64]> = tables.iter().map(|t| t.as_slice()).collect();
        bmse_from_tables(&refs, &grid, photon_count, cfg.enumeration_cap).unwrap_or(f64::INFINITY)
    });
    let states = canonical_all(states_from(&layout, &search.x, shots)?, width, cfg);
    let bmse = sequence_bmse(&states, centred, cfg)?;
    Ok(shift_result(
        StrategyResult {
            states,
            branch_states: Vec::new(),
            bmse,
            variance_ratio: bmse / prior.variance(),
            prior_width: width,
            widths: vec![width, FlatPrior::width_for_variance(bmse)],
            exact_bmse: Some(bmse),
            coordinates: Vec::new(),
            converged: search.converged,
            trace: search.trace,
        },
        prior.center(),
    ))
}

fn shift_result(mut r: StrategyResult, center: f64) -> StrategyResult {
    if center != 0.0 {
        r.states = r.states.iter().map(|s| s.phase_shifted(center)).collect();
        r.branch_states = r.branch_states.iter().map(|s| s.phase_shifted(center)).collect();
    }
    r
}

/// Outcome-conditioned local protocol: each branch is re-flattened at its
/// own estimator and width, and the next input is chosen for that width
/// and shifted to that estimator.
pub fn feedforward_protocol(
    photon_count: usize,
    shots: usize,
    prior: &FlatPrior,
    cfg: &OptimizerConfig,
) -> Result<(StrategyResult, ProtocolTree)> {
    cfg.validate()?;
    check_photons(photon_count)?;
    let tree = protocol_tree(photon_count, shots, prior, cfg, WidthRule::PerBranch)?;
    let root = tree.nodes[0].state.clone();
    let branch_states: Vec<InputState> = tree
        .nodes
        .iter()
        .filter(|n| n.outcomes.len() == 1)
        .map(|n| n.state.clone())
        .collect();
    let result = StrategyResult {
        states: vec![root],
        branch_states,
        bmse: tree.flat_bmse,
        variance_ratio: tree.flat_bmse / prior.variance(),
        prior_width: prior.width(),
        widths: vec![prior.width(), FlatPrior::width_for_variance(tree.flat_bmse)],
        exact_bmse: tree.exact_bmse,
        coordinates: Vec::new(),
        converged: true,
        trace: Vec::new(),
    };
    Ok((result, tree))
}

/// Jointly optimized first input and one second input per first outcome.
pub fn optimize_adaptive_global(photon_count: usize, prior: &FlatPrior, cfg: &OptimizerConfig) -> Result<StrategyResult> {
    cfg.validate()?;
    check_photons(photon_count)?;
    check_cap(photon_count, 2, cfg.enumeration_cap)?;
    let width = prior.width();
    let centred = FlatPrior::centered(width)?;
    let (ff, _) = feedforward_protocol(photon_count, 2, &centred, cfg)?;
    if cfg.family == Family::Analytic {
        let bmse = ff.exact_bmse.expect("two shots fit the cap");
        return Ok(shift_result(
            StrategyResult {
                bmse,
                variance_ratio: bmse / prior.variance(),
                widths: vec![width, FlatPrior::width_for_variance(bmse)],
                ..ff
            },
            prior.center(),
        ));
    }
    let global = optimize_global_nonadaptive(photon_count, 2, &centred, cfg)?;
    let dim = photon_count + 1;
    let count = dim + 1;
    let full = Layout {
        family: Family::Full,
        photon_count,
        sign: cfg.sign,
    };
    // second-shot inputs must be able to carry a shift, so the search always
    // uses the free family
    let grid = cfg.grid(centred)?;
    let bs = BeamSplitterMatrix::balanced_shared(photon_count)?;
    let mut starts: Vec<(String, Vec<f64>)> = Vec::new();
    let mut nonadaptive = full.coords_of(&global.states[0]);
    for _ in 0..dim {
        nonadaptive.extend(full.coords_of(&global.states[1]));
    }
    starts.push(("nonadaptive-global".into(), nonadaptive));
    let mut feed = full.coords_of(&ff.states[0]);
    for s in &ff.branch_states {
        feed.extend(full.coords_of(s));
    }
    starts.push(("feedforward".into(), feed));
    let full_cfg = OptimizerConfig {
        family: Family::Full,
        ..*cfg
    };
    let seeds: Vec<Vec<(String, Vec<f64>)>> = (0..count)
        .map(|i| seed_coords(&full, width, &full_cfg, i))
        .collect::<Result<_>>()?;
    for r in 0..cfg.restarts {
        starts.push((seeds[0][r].0.clone(), seeds.iter().flat_map(|s| s[r].1.clone()).collect()));
    }
    let search = multistart(starts, cfg, |x| {
        let states = match states_from(&full, x, count) {
            Ok(s) => s,
            Err(_) => return f64::INFINITY,
        };
        let tables = match tables_for(&states, &grid, bs) {
            Ok(t) => t,
            Err(_) => return f64::INFINITY,
        };
        let seconds: Vec<&[f64]> = tables[1..].iter().map(|t| t.as_slice()).collect();
        adaptive_bmse_from_tables(&tables[0], &seconds, &grid, photon_count).unwrap_or(f64::INFINITY)
    });
    let states = canonical_all(states_from(&full, &search.x, count)?, width, cfg);
    let tables = tables_for(&states, &grid, bs)?;
    let seconds: Vec<&[f64]> = tables[1..].iter().map(|t| t.as_slice()).collect();
    let bmse = adaptive_bmse_from_tables(&tables[0], &seconds, &grid, photon_count)?;
    let mut it = states.into_iter();
    let first = it.next().expect("first state");
    Ok(shift_result(
        StrategyResult {
            states: vec![first],
            branch_states: it.collect(),
            bmse,
            variance_ratio: bmse / prior.variance(),
            prior_width: width,
            widths: vec![width, FlatPrior::width_for_variance(bmse)],
            exact_bmse: Some(bmse),
            coordinates: Vec::new(),
            converged: search.converged,
            trace: search.trace,
        },
        prior.center(),
    ))
}

/// Exact adaptive BMSE of given inputs under a centred prior.
pub fn adaptive_bmse(first: &InputState, seconds: &[InputState], prior: FlatPrior, cfg: &OptimizerConfig) -> Result<f64> {
    let n = first.photon_count();
    let grid = cfg.grid(prior)?;
    let bs = BeamSplitterMatrix::balanced_shared(n)?;
    let t0 = pmf_table(first, grid.nodes(), bs)?;
    let ts = tables_for(seconds, &grid, bs)?;
    let refs: Vec<&[f64]> = ts.iter().map(|t| t.as_slice()).collect();
    adaptive_bmse_from_tables(&t0, &refs, &grid, n)
}

/// BMSE of the Gaussian whose width is optimized for `delta`, and that width.
pub fn optimal_gaussian(photon_count: usize, delta: f64, cfg: &OptimizerConfig) -> Result<(f64, f64)> {
    let c = OptimizerConfig {
        family: Family::GaussianRho,
        restarts: cfg.restarts.min(3),
        ..*cfg
    };
    let r = optimize_single_shot(photon_count, &FlatPrior::centered(delta)?, &c)?;
    Ok((r.bmse, r.coordinates[0]))
}

/// Width at which the N00N state and the optimized Gaussian give equal
/// one-shot BMSE, found by scanning upward from `0.5 / N` and bisecting the
/// first sign change.
pub fn regime_boundary(photon_count: usize, cfg: &OptimizerConfig) -> Result<f64> {
    if photon_count < 2 {
        return Err(Error::Unsupported("no regime boundary for a single photon".into()));
    }
    let n = photon_count as f64;
    let noon = make_noon(photon_count, cfg.sign)?;
    let bs = BeamSplitterMatrix::balanced_shared(photon_count)?;
    let gap = |d: f64| -> Result<f64> {
        let grid = cfg.grid(FlatPrior::centered(d)?)?;
        let b_noon = single_bmse(&noon, &grid, bs)?;
        let (b_gauss, _) = optimal_gaussian(photon_count, d, cfg)?;
        Ok(b_noon - b_gauss)
    };
    let hi_limit = std::f64::consts::PI;
    let mut lo = 0.5 / n;
    let mut g_lo = gap(lo)?;
    let step = 0.25 / n;
    loop {
        let hi = (lo + step).min(hi_limit);
        let g_hi = gap(hi)?;
        if g_lo < 0.0 && g_hi >= 0.0 {
            let (mut a, mut b) = (lo, hi);
            while b - a > 1e-7 {
                let mid = 0.5 * (a + b);
                if gap(mid)? < 0.0 {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            return Ok(0.5 * (a + b));
        }
        if hi >= hi_limit {
            return domain(format!("no regime crossing below pi for N = {photon_count}"));
        }
        lo = hi;
        g_lo = g_hi;
    }
}

/// One local step `(N, Delta) -> sqrt(12 BMSE)` for every grid point, plus
/// the optimized Gaussian width when the family is `GaussianRho`.
pub fn collect_scaling_samples(
    points: &[(usize, f64)],
    cfg: &OptimizerConfig,
) -> Result<(Vec<ScalingSample>, Vec<RhoSample>)> {
    let results: Vec<Result<(ScalingSample, Option<RhoSample>)>> = points
        .par_iter()
        .map(|&(n, d)| {
            let r = optimize_single_shot(n, &FlatPrior::centered(d)?, cfg)?;
            let sample = ScalingSample {
                photon_count: n,
                delta_in: d,
                delta_out: FlatPrior::width_for_variance(r.bmse),
            };
            let rho = (cfg.family == Family::GaussianRho).then(|| RhoSample {
                photon_count: n,
                delta: d,
                rho: r.coordinates[0],
            });
            Ok((sample, rho))
        })
        .collect();
    let mut samples = Vec::with_capacity(results.len());
    let mut rhos = Vec::new();
    for r in results {
        let (s, rho) = r?;
        samples.push(s);
        rhos.extend(rho);
    }
    Ok((samples, rhos))
}
