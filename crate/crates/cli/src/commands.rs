//! The experiment commands. Each one checks its parameters first and only
//! then computes, writing CSV tables and JSON documents.

use std::f64::consts::PI;

use phasest::bayes::FlatPrior;
use phasest::fock::InputState;
use phasest::monte_carlo::{
    corrected_variance, protocol_reference, run_grid, CellResult, Correction, Strategy, TrialConfig, TrialRow,
    TruePhase,
};
use phasest::optimizer::{
    collect_scaling_samples, feedforward_protocol, optimal_gaussian, optimize_adaptive_global,
    optimize_global_nonadaptive, optimize_local_nonadaptive, optimize_single_shot, regime_boundary,
    shots_to_target, Family, OptimizerConfig, ProtocolTree, StrategyResult,
};
use phasest::scaling::{
    fit_scaling_constants, general_shot_plan, shots_gaussian, shots_noon, FitWindows, ScalingConstants,
    ScalingFit,
};
use phasest::states::{best_fit_gaussian_with, make_gaussian, make_noon, GaussianParams, Sign};
use serde::Serialize;

use crate::cli::{FitArgs, GlobalOpts, McArgs, Mode, OptimizeArgs, ScalingArgs, ScanArgs, Table1Args};
use crate::error::{CliError, CliResult};
use crate::output::OutputDir;

/// Scaling constants with the command-line overrides applied.
pub fn constants(g: &GlobalOpts) -> CliResult<ScalingConstants> {
    let d = ScalingConstants::default();
    let k = ScalingConstants {
        c_g: g.c_g.unwrap_or(d.c_g),
        c_n: g.c_n.unwrap_or(d.c_n),
        c_rho: g.c_rho.unwrap_or(d.c_rho),
        boundary: g.boundary.unwrap_or(d.boundary),
    };
    k.validate().map_err(|e| CliError::invalid("constants", e.to_string()))?;
    Ok(k)
}

pub fn optimizer_config(g: &GlobalOpts, family: Family, sign: Sign) -> CliResult<OptimizerConfig> {
    let cfg = OptimizerConfig {
        restarts: g.restarts,
        hops: g.hops,
        seed: g.seed,
        family,
        node_count: g.node_count,
        sign,
        constants: constants(g)?,
        enumeration_cap: g.enumeration_cap,
        ..OptimizerConfig::default()
    };
    cfg.validate().map_err(|e| {
        let key = if g.node_count < phasest::bayes::MIN_NODE_COUNT { "node_count" } else { "restarts" };
        CliError::invalid(key, e.to_string())
    })?;
    Ok(cfg)
}

fn check_photons(key: &str, n: usize, min: usize) -> CliResult<()> {
    if n < min {
        return Err(CliError::invalid(key, format!("photon number must be at least {min}, got {n}")));
    }
    Ok(())
}

fn check_width(key: &str, delta: f64) -> CliResult<()> {
    if !(delta.is_finite() && delta > 0.0 && delta <= PI) {
        return Err(CliError::invalid(key, format!("width must lie in (0, pi], got {delta}")));
    }
    Ok(())
}

fn check_tree(n: usize, shots: usize, cap: u64) -> CliResult<()> {
    let leaves = ((n + 1) as f64).powi(shots as i32);
    if leaves > cap as f64 {
        return Err(CliError::Resource(format!(
            "{leaves:.0} outcome sequences for N = {n}, nu = {shots} exceed the enumeration cap of {cap}"
        )));
    }
    Ok(())
}

fn check_mode(mode: Mode, n: usize, nu: usize, cap: u64) -> CliResult<()> {
    if nu == 0 {
        return Err(CliError::invalid("nu", "at least one shot is required"));
    }
    match mode {
        Mode::Single if nu != 1 => Err(CliError::invalid("nu", "mode 'single' takes exactly one shot")),
        Mode::Adaptive if nu != 2 => Err(CliError::invalid("nu", "mode 'adaptive' takes exactly two shots")),
        Mode::Global | Mode::Adaptive | Mode::Feedforward => check_tree(n, nu, cap),
        _ => Ok(()),
    }
}

/// Result of one strategy, plus the outcome tree for feedforward runs.
pub fn evaluate(
    mode: Mode,
    n: usize,
    nu: usize,
    prior: &FlatPrior,
    cfg: &OptimizerConfig,
) -> CliResult<(StrategyResult, Option<ProtocolTree>)> {
    Ok(match mode {
        Mode::Single => (optimize_single_shot(n, prior, cfg)?, None),
        Mode::Local => (optimize_local_nonadaptive(n, nu, prior, cfg)?, None),
        Mode::Global => (optimize_global_nonadaptive(n, nu, prior, cfg)?, None),
        Mode::Adaptive => (optimize_adaptive_global(n, prior, cfg)?, None),
        Mode::Feedforward => {
            let (r, t) = feedforward_protocol(n, nu, prior, cfg)?;
            (r, Some(t))
        }
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RatioRow {
    #[serde(rename = "N")]
    pub photon_count: usize,
    pub nu: usize,
    pub mode: String,
    pub family: String,
    pub delta_rad: f64,
    /// Objective of the strategy (flat-width propagated for local ones).
    pub bmse_rad2: f64,
    pub variance_ratio: f64,
    /// Expected posterior variance under the starting prior.
    pub exact_bmse_rad2: Option<f64>,
    pub exact_variance_ratio: Option<f64>,
}

impl RatioRow {
    fn new(mode: Mode, family: Family, nu: usize, r: &StrategyResult, n: usize) -> Self {
        Self {
            photon_count: n,
            nu,
            mode: mode.to_string(),
            family: family.to_string(),
            delta_rad: r.prior_width,
            bmse_rad2: r.bmse,
            variance_ratio: r.variance_ratio,
            exact_bmse_rad2: r.exact_bmse,
            exact_variance_ratio: r.exact_ratio(),
        }
    }
}

/// Fidelities of a single-shot optimum with the analytic references,
/// maximized over global phase, conjugation and mode interchange.
#[derive(Debug, Clone, Serialize)]
pub struct Fidelities {
    pub noon: f64,
    pub best_fit_gaussian: f64,
    pub optimized_gaussian: f64,
    pub optimized_rho: f64,
}

pub fn fidelities(state: &InputState, delta: f64, cfg: &OptimizerConfig) -> CliResult<Fidelities> {
    let n = state.photon_count();
    let (_, rho) = optimal_gaussian(n, delta, cfg)?;
    Ok(Fidelities {
        noon: state.fidelity(&make_noon(n, cfg.sign)?),
        best_fit_gaussian: state.fidelity(&best_fit_gaussian_with(n, delta, cfg.sign, &cfg.constants)?),
        optimized_gaussian: state.fidelity(&make_gaussian(n, GaussianParams::new(rho, cfg.sign))?),
        optimized_rho: rho,
    })
}

#[derive(Debug, Serialize)]
struct StatesDoc<'a> {
    states: &'a [InputState],
    branch_states: &'a [InputState],
}

#[derive(Debug, Serialize)]
struct OptimizeDoc<'a> {
    mode: String,
    family: String,
    #[serde(rename = "N")]
    photon_count: usize,
    nu: usize,
    delta_rad: f64,
    result: &'a StrategyResult,
    fidelity: Option<Fidelities>,
}

pub fn check_optimize(a: &OptimizeArgs, g: &GlobalOpts) -> CliResult<OptimizerConfig> {
    check_photons("n", a.n, 1)?;
    check_width("delta", a.delta)?;
    check_mode(a.mode, a.n, a.nu, g.enumeration_cap)?;
    optimizer_config(g, a.family, a.sign.into())
}

pub fn optimize(a: &OptimizeArgs, cfg: &OptimizerConfig, out: &mut OutputDir) -> CliResult<()> {
    let prior = FlatPrior::centered(a.delta)?;
    let (r, tree) = evaluate(a.mode, a.n, a.nu, &prior, cfg)?;
    let fidelity = match a.mode {
        Mode::Single => Some(fidelities(&r.states[0], a.delta, cfg)?),
        _ => None,
    };
    out.write_json(
        "states.json",
        &StatesDoc {
            states: &r.states,
            branch_states: &r.branch_states,
        },
    )?;
    out.write_json(
        "result.json",
        &OptimizeDoc {
            mode: a.mode.to_string(),
            family: a.family.to_string(),
            photon_count: a.n,
            nu: a.nu,
            delta_rad: a.delta,
            result: &r,
            fidelity,
        },
    )?;
    if let Some(t) = tree {
        out.write_json("tree.json", &t)?;
    }
    out.write_csv("variance_ratio.csv", &[RatioRow::new(a.mode, a.family, a.nu, &r, a.n)])
}

fn scan_widths(a: &ScanArgs) -> Vec<f64> {
    let mut v = a.delta.clone();
    for g in &a.delta_grid {
        v.extend(&g.0);
    }
    v
}

fn scan_photons(a: &ScanArgs) -> Vec<usize> {
    a.n.iter().flat_map(|p| p.0.iter().copied()).collect()
}

pub fn check_scan(a: &ScanArgs, g: &GlobalOpts) -> CliResult<OptimizerConfig> {
    let widths = scan_widths(a);
    if widths.is_empty() {
        return Err(CliError::invalid("delta", "give at least one --delta or --delta-grid"));
    }
    for d in &widths {
        check_width("delta", *d)?;
    }
    for n in scan_photons(a) {
        check_photons("n", n, 1)?;
        for m in &a.mode {
            check_mode(*m, n, a.nu, g.enumeration_cap)?;
        }
    }
    optimizer_config(g, a.family, a.sign.into())
}

pub fn scan(a: &ScanArgs, cfg: &OptimizerConfig, out: &mut OutputDir) -> CliResult<()> {
    let mut rows = Vec::new();
    for n in scan_photons(a) {
        for d in scan_widths(a) {
            let prior = FlatPrior::centered(d)?;
            for m in &a.mode {
                let (r, _) = evaluate(*m, n, a.nu, &prior, cfg)?;
                rows.push(RatioRow::new(*m, a.family, a.nu, &r, n));
            }
        }
    }
    out.write_csv("scan.csv", &rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundaryRow {
    #[serde(rename = "N")]
    pub photon_count: usize,
    pub delta_boundary_rad: f64,
    pub n_delta_boundary: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PlanRow {
    #[serde(rename = "N")]
    pub photon_count: usize,
    pub delta_start_rad: f64,
    pub delta_req_rad: f64,
    pub gaussian_shots: Option<u32>,
    pub noon_shots: Option<u32>,
    pub total_shots: Option<u32>,
    pub split_delta_rad: Option<f64>,
    pub note: String,
}

pub fn check_scaling(a: &ScalingArgs, g: &GlobalOpts) -> CliResult<OptimizerConfig> {
    let bisect = a.boundary_bisect || !a.predict;
    for n in &a.n_range.0 {
        check_photons("n_range", *n, if bisect { 2 } else { 1 })?;
    }
    check_width("delta_start", a.delta_start)?;
    for d in &a.delta_req {
        check_width("delta_req", *d)?;
        if *d >= a.delta_start {
            return Err(CliError::invalid("delta_req", format!("target {d} is not below the start width")));
        }
    }
    optimizer_config(g, Family::GaussianRho, Sign::Plus)
}

pub fn scaling(a: &ScalingArgs, cfg: &OptimizerConfig, out: &mut OutputDir) -> CliResult<()> {
    let (bisect, predict) = match (a.boundary_bisect, a.predict) {
        (false, false) => (true, true),
        flags => flags,
    };
    if bisect {
        let mut rows = Vec::new();
        for &n in &a.n_range.0 {
            let d = regime_boundary(n, cfg)?;
            rows.push(BoundaryRow {
                photon_count: n,
                delta_boundary_rad: d,
                n_delta_boundary: n as f64 * d,
            });
        }
        out.write_csv("boundary.csv", &rows)?;
    }
    if predict {
        let mut rows = Vec::new();
        for &n in &a.n_range.0 {
            for &req in &a.delta_req {
                let mut row = PlanRow {
                    photon_count: n,
                    delta_start_rad: a.delta_start,
                    delta_req_rad: req,
                    gaussian_shots: None,
                    noon_shots: None,
                    total_shots: None,
                    split_delta_rad: None,
                    note: String::new(),
                };
                match general_shot_plan(n, a.delta_start, req, &cfg.constants) {
                    Ok(p) => {
                        row.gaussian_shots = Some(p.gaussian_shots);
                        row.noon_shots = Some(p.noon_shots);
                        row.total_shots = Some(p.total);
                        row.split_delta_rad = p.boundary_delta;
                    }
                    Err(e) => row.note = e.to_string(),
                }
                rows.push(row);
            }
        }
        out.write_csv("shot_plan.csv", &rows)?;
    }
    Ok(())
}

/// The five reference rows `(N, Delta_start, Delta_req)`.
pub fn table1_rows() -> Vec<(usize, f64, f64)> {
    vec![
        (9, PI, 0.5),
        (9, PI / 15.0, PI / 20.0),
        (9, PI, PI / 20.0),
        (13, PI, 0.05),
        (9, PI, 0.05),
    ]
}

#[derive(Debug, Clone, Serialize)]
pub struct Table1Row {
    #[serde(rename = "N")]
    pub photon_count: usize,
    pub delta_start_rad: f64,
    pub delta_req_rad: f64,
    /// Shots of the simulated shot-by-shot protocol.
    pub opt_shots: usize,
    /// Regime-split plan from the two closed forms.
    pub plan_gaussian_shots: Option<u32>,
    pub plan_noon_shots: Option<u32>,
    pub plan_total_shots: Option<u32>,
    /// Each closed form applied to the whole range, where it is defined.
    pub gaussian_formula_shots: Option<u32>,
    pub noon_formula_shots: Option<u32>,
}

#[derive(Debug, Serialize)]
struct Table1Trajectory {
    #[serde(rename = "N")]
    photon_count: usize,
    delta_start_rad: f64,
    delta_req_rad: f64,
    widths_rad: Vec<f64>,
}

fn table1_list(a: &Table1Args) -> Vec<(usize, f64, f64)> {
    if a.rows.is_empty() {
        table1_rows()
    } else {
        a.rows.clone()
    }
}

pub fn check_table1(a: &Table1Args, g: &GlobalOpts) -> CliResult<OptimizerConfig> {
    for (n, s, r) in table1_list(a) {
        check_photons("row", n, 2)?;
        check_width("row", s)?;
        check_width("row", r)?;
        if r >= s {
            return Err(CliError::invalid("row", format!("target {r} is not below the start width {s}")));
        }
    }
    optimizer_config(g, a.family, Sign::Plus)
}

pub fn table1(a: &Table1Args, cfg: &OptimizerConfig, out: &mut OutputDir) -> CliResult<()> {
    let mut rows = Vec::new();
    let mut trajectories = Vec::new();
    for (n, start, req) in table1_list(a) {
        let sim = shots_to_target(n, start, req, cfg, a.max_shots)?;
        let plan = general_shot_plan(n, start, req, &cfg.constants).ok();
        rows.push(Table1Row {
            photon_count: n,
            delta_start_rad: start,
            delta_req_rad: req,
            opt_shots: sim.shots,
            plan_gaussian_shots: plan.map(|p| p.gaussian_shots),
            plan_noon_shots: plan.map(|p| p.noon_shots),
            plan_total_shots: plan.map(|p| p.total),
            gaussian_formula_shots: shots_gaussian(n, start, req, &cfg.constants).ok(),
            noon_formula_shots: shots_noon(n, start, req, &cfg.constants).ok(),
        });
        trajectories.push(Table1Trajectory {
            photon_count: n,
            delta_start_rad: start,
            delta_req_rad: req,
            widths_rad: sim.widths,
        });
    }
    out.write_csv("table1.csv", &rows)?;
    out.write_json("table1_widths.json", &trajectories)
}

#[derive(Debug, Clone, Serialize)]
pub struct CellRow {
    pub seed: u64,
    #[serde(rename = "N")]
    pub photon_count: usize,
    pub nu: usize,
    pub strategy: String,
    pub correction: String,
    pub delta_start_rad: f64,
    /// Empty when the true phase is drawn per trial.
    pub phi_frac: Option<f64>,
    pub phi_true_rad: Option<f64>,
    pub trials: usize,
    pub median_estimator_rad: f64,
    pub mad_rad: f64,
    pub success_rate: f64,
    pub success_stderr: f64,
    pub variance_ratio: f64,
    pub mean_final_width_rad: f64,
    pub mad_ratio: f64,
    pub mean_corrected_variance_rad2: f64,
    pub corrected_variance_stderr_rad2: f64,
    pub corrected_variance_ratio: f64,
    /// Exact expected posterior variance of the uncorrected protocol.
    pub reference_bmse_rad2: Option<f64>,
}

/// One configured Monte Carlo cell and its trial count.
#[derive(Debug, Clone)]
pub struct McCell {
    pub config: TrialConfig,
    pub phi_frac: Option<f64>,
    pub trials: usize,
}

pub fn mc_cells(a: &McArgs, cfg: &OptimizerConfig, seed: u64) -> Vec<McCell> {
    let mut cells = Vec::new();
    for &strategy in &a.strategy {
        let trials = a.trials.unwrap_or_else(|| {
            let base = match strategy {
                Strategy::Mcna => 30.0,
                Strategy::Mca => 100.0,
            };
            (base * a.trial_multiplier).ceil() as usize
        });
        for &correction in &a.correction {
            for &d in &a.delta_start {
                let phis: Vec<Option<f64>> = if a.sampled {
                    vec![None]
                } else {
                    a.phi_frac.iter().map(|f| Some(*f)).collect()
                };
                for frac in phis {
                    let phi = match frac {
                        Some(f) => TruePhase::Fixed(f * d),
                        None => TruePhase::Sampled,
                    };
                    let mut c = TrialConfig::new(a.n, a.nu, d, phi, strategy);
                    c.correction = correction;
                    c.seed = seed;
                    c.optimizer = OptimizerConfig {
                        family: Family::Analytic,
                        ..*cfg
                    };
                    cells.push(McCell {
                        config: c,
                        phi_frac: frac,
                        trials,
                    });
                }
            }
        }
    }
    cells
}

pub fn check_mc(a: &McArgs, g: &GlobalOpts) -> CliResult<(OptimizerConfig, Vec<McCell>)> {
    check_photons("n", a.n, 1)?;
    if a.nu == 0 {
        return Err(CliError::invalid("nu", "at least one shot is required"));
    }
    for d in &a.delta_start {
        check_width("delta_start", *d)?;
    }
    if !a.sampled {
        for f in &a.phi_frac {
            if !(f.is_finite() && f.abs() <= 0.5) {
                return Err(CliError::invalid("phi_frac", format!("fraction {f} lies outside [-1/2, 1/2]")));
            }
        }
    }
    if !(a.trial_multiplier.is_finite() && a.trial_multiplier > 0.0) {
        return Err(CliError::invalid("trial_multiplier", "multiplier must be positive"));
    }
    if a.trials == Some(0) {
        return Err(CliError::invalid("trials", "at least one trial per cell is required"));
    }
    if a.reference {
        check_tree(a.n, a.nu, g.enumeration_cap)?;
    }
    let cfg = optimizer_config(g, Family::Analytic, Sign::Plus)?;
    let cells = mc_cells(a, &cfg, g.seed);
    for c in &cells {
        c.config.validate().map_err(|e| CliError::invalid("phi_frac", e.to_string()))?;
    }
    Ok((cfg, cells))
}

fn summarize(cell: &McCell, result: &CellResult, reference: Option<f64>) -> CliResult<(CellRow, Vec<TrialRow>)> {
    let c = &cell.config;
    let prior = FlatPrior::centered(c.delta_start)?;
    let mut trials = Vec::with_capacity(result.records.len());
    let mut variances = Vec::with_capacity(result.records.len());
    for r in &result.records {
        let v = corrected_variance(r, &prior, c.optimizer.node_count)?;
        variances.push(v);
        trials.push(TrialRow::new(c, r).with_corrected_variance(v));
    }
    let t = variances.len() as f64;
    let mean = variances.iter().sum::<f64>() / t;
    let sd = if variances.len() > 1 {
        (variances.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (t - 1.0)).sqrt()
    } else {
        0.0
    };
    let s = result
        .stats
        .ok_or_else(|| CliError::invalid("trials", "empty Monte Carlo cell"))?;
    let row = CellRow {
        seed: c.seed,
        photon_count: c.photon_count,
        nu: c.shots,
        strategy: c.strategy.to_string(),
        correction: c.correction.to_string(),
        delta_start_rad: c.delta_start,
        phi_frac: cell.phi_frac,
        phi_true_rad: match c.phi_true {
            TruePhase::Fixed(p) => Some(p),
            TruePhase::Sampled => None,
        },
        trials: s.trials,
        median_estimator_rad: s.median_estimator,
        mad_rad: s.mad,
        success_rate: s.success_rate,
        success_stderr: s.success_stderr,
        variance_ratio: s.variance_ratio,
        mean_final_width_rad: s.mean_final_width,
        mad_ratio: s.mad_ratio,
        mean_corrected_variance_rad2: mean,
        corrected_variance_stderr_rad2: sd / t.sqrt(),
        corrected_variance_ratio: mean / prior.variance(),
        reference_bmse_rad2: reference,
    };
    Ok((row, trials))
}

/// Runs the cells and returns per-cell summaries and per-trial rows, in
/// cell order.
pub fn run_mc_cells(cells: &[McCell], reference: bool) -> CliResult<(Vec<CellRow>, Vec<TrialRow>)> {
    let mut summaries = Vec::with_capacity(cells.len());
    let mut all_trials = Vec::new();
    let mut references: Vec<((Strategy, u64), Option<f64>)> = Vec::new();
    // cells sharing a trial count run as one parallel grid
    let mut results: Vec<Option<CellResult>> = vec![None; cells.len()];
    let mut counts: Vec<usize> = cells.iter().map(|c| c.trials).collect();
    counts.sort_unstable();
    counts.dedup();
    for t in counts {
        let idx: Vec<usize> = (0..cells.len()).filter(|&i| cells[i].trials == t).collect();
        let configs: Vec<TrialConfig> = idx.iter().map(|&i| cells[i].config).collect();
        for (i, r) in idx.into_iter().zip(run_grid(&configs, t)?) {
            results[i] = Some(r);
        }
    }
    for (cell, result) in cells.iter().zip(results) {
        let result = result.expect("every cell ran");
        let c = &cell.config;
        let reference_bmse = if reference && c.correction == Correction::None {
            let key = (c.strategy, c.delta_start.to_bits());
            match references.iter().find(|(k, _)| *k == key) {
                Some((_, v)) => *v,
                None => {
                    let v = protocol_reference(c)?.exact_bmse;
                    references.push((key, v));
                    v
                }
            }
        } else {
            None
        };
        let (row, trials) = summarize(cell, &result, reference_bmse)?;
        summaries.push(row);
        all_trials.extend(trials);
    }
    Ok((summaries, all_trials))
}

pub fn mc(a: &McArgs, cells: &[McCell], out: &mut OutputDir) -> CliResult<()> {
    let (summaries, trials) = run_mc_cells(cells, a.reference)?;
    out.write_csv("trials.csv", &trials)?;
    out.write_csv("cells.csv", &summaries)
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleRow {
    pub law: String,
    #[serde(rename = "N")]
    pub photon_count: usize,
    pub delta_in_rad: f64,
    pub delta_out_rad: f64,
    pub n_delta_in: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RhoRow {
    #[serde(rename = "N")]
    pub photon_count: usize,
    pub delta_rad: f64,
    pub rho: f64,
}

#[derive(Debug, Serialize)]
pub struct FitDoc {
    pub family: String,
    pub windows: FitWindows,
    pub fit: ScalingFit,
}

/// Grid points inside each law's window: `(N, Delta)` for the Gaussian and
/// the N00N laws.
pub type FitGrid = (Vec<(usize, f64)>, Vec<(usize, f64)>);

pub fn fit_points(a: &FitArgs) -> FitGrid {
    let gauss = a
        .gaussian_n
        .0
        .iter()
        .flat_map(|&n| a.gaussian_delta.0.iter().map(move |&d| (n, d)))
        .filter(|&(n, d)| n as f64 * d >= a.gaussian_min_n_delta)
        .collect();
    let mut noon = Vec::new();
    for &n in &a.noon_n.0 {
        let hi = (a.noon_max_n_delta / n as f64).min(PI);
        for i in 0..a.noon_points {
            let d = if a.noon_points == 1 {
                hi
            } else {
                a.noon_min_delta + (hi - a.noon_min_delta) * i as f64 / (a.noon_points - 1) as f64
            };
            noon.push((n, d));
        }
    }
    (gauss, noon)
}

pub fn check_fit(a: &FitArgs, g: &GlobalOpts) -> CliResult<OptimizerConfig> {
    for n in a.gaussian_n.0.iter().chain(&a.noon_n.0) {
        check_photons("gaussian_n", *n, 2)?;
    }
    for d in &a.gaussian_delta.0 {
        check_width("gaussian_delta", *d)?;
    }
    check_width("noon_min_delta", a.noon_min_delta)?;
    if a.noon_points == 0 {
        return Err(CliError::invalid("noon_points", "at least one width per photon number"));
    }
    for &n in &a.noon_n.0 {
        if a.noon_min_delta > a.noon_max_n_delta / n as f64 {
            return Err(CliError::invalid(
                "noon_min_delta",
                format!("minimum width exceeds the N00N window for N = {n}"),
            ));
        }
    }
    let (gauss, noon) = fit_points(a);
    if gauss.len() + noon.len() < 4 {
        return Err(CliError::invalid("gaussian_delta", "the fit grids hold fewer than 4 points"));
    }
    optimizer_config(g, a.family, Sign::Plus)
}

pub fn fit_constants(a: &FitArgs, cfg: &OptimizerConfig, out: &mut OutputDir) -> CliResult<()> {
    let (gauss, noon) = fit_points(a);
    let (g_samples, _) = collect_scaling_samples(&gauss, cfg)?;
    let (n_samples, _) = collect_scaling_samples(&noon, cfg)?;
    let rho_cfg = OptimizerConfig {
        family: Family::GaussianRho,
        ..*cfg
    };
    let (_, rhos) = collect_scaling_samples(&gauss, &rho_cfg)?;
    let windows = FitWindows {
        gaussian_min_n_delta: a.gaussian_min_n_delta,
        noon_max_n_delta: a.noon_max_n_delta,
    };
    let mut samples = g_samples.clone();
    samples.extend(&n_samples);
    let fit = fit_scaling_constants(&samples, &rhos, &windows, &cfg.constants)?;
    let row = |law: &str, s: &phasest::scaling::ScalingSample| SampleRow {
        law: law.into(),
        photon_count: s.photon_count,
        delta_in_rad: s.delta_in,
        delta_out_rad: s.delta_out,
        n_delta_in: s.photon_count as f64 * s.delta_in,
    };
    let mut rows: Vec<SampleRow> = g_samples.iter().map(|s| row("gaussian", s)).collect();
    rows.extend(n_samples.iter().map(|s| row("noon", s)));
    out.write_csv("samples.csv", &rows)?;
    let rho_rows: Vec<RhoRow> = rhos
        .iter()
        .map(|r| RhoRow {
            photon_count: r.photon_count,
            delta_rad: r.delta,
            rho: r.rho,
        })
        .collect();
    out.write_csv("rho_samples.csv", &rho_rows)?;
    out.write_json(
        "constants.json",
        &FitDoc {
            family: a.family.to_string(),
            windows,
            fit,
        },
    )
}
