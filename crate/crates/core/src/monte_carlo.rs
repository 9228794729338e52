//! Frequentist check of the shot-by-shot protocols: trajectories are
//! simulated against a hidden true phase, re-flattening the prior after
//! every shot exactly as the Bayesian model assumes.
//!
//! Each shot runs in a frame where the current interval is centred on zero;
//! the accumulated estimator is the offset of that frame. Randomness comes
//! from a ChaCha stream per trial, positioned per shot, so any trial can be
//! replayed on its own and trials parallelize without changing results.

use std::collections::HashMap;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bayes::{posterior_for_sequence, single_shot_report_with, FlatPrior, OutcomeSequence};
use crate::error::{domain, Error, Result};
use crate::fock::{outcome_pmf, BeamSplitterMatrix, InputState};
use crate::numeric::{median, KahanSum};
use crate::optimizer::{optimize_single_shot, protocol_tree, Family, OptimizerConfig, ProtocolTree, WidthRule, WIDTH_FLOOR};
use crate::scaling::{classify_regime_with, Regime};

/// `sqrt(2) erfinv(1/2) / sqrt(12)`: MAD of a normal error with the
/// variance of a flat interval of unit width.
pub const GAUSSIAN_MAD_FACTOR: f64 = 0.194_708_419_420_675_65;
/// `erf(sqrt(3/2))`: interval-hit probability for a normal error of
/// standard deviation `width / sqrt(12)`.
pub const GAUSSIAN_SUCCESS_RATE: f64 = 0.916_735_483_336_449_6;
/// Cells with fewer trials are reported but flagged.
pub const MIN_TRIALS_PER_CELL: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Strategy {
    /// Next width from the outcome-averaged variance.
    Mcna,
    /// Next width from the realized branch variance.
    Mca,
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mcna" => Ok(Strategy::Mcna),
            "mca" => Ok(Strategy::Mca),
            other => Err(Error::Config(format!("unknown strategy '{other}'"))),
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Strategy::Mcna => "MCNA",
            Strategy::Mca => "MCA",
        })
    }
}

/// Shots on which the width reduction is halved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Correction {
    None,
    First5,
    WhileGaussian,
    AllShots,
}

impl Correction {
    fn applies(self, shot: usize, photon_count: usize, width: f64, boundary: f64) -> bool {
        match self {
            Correction::None => false,
            Correction::First5 => shot < 5,
            Correction::WhileGaussian => photon_count as f64 * width >= boundary,
            Correction::AllShots => true,
        }
    }
}

impl FromStr for Correction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "none" => Ok(Correction::None),
            "first_5" | "first5" => Ok(Correction::First5),
            "while_gaussian" => Ok(Correction::WhileGaussian),
            "all_shots" | "all" => Ok(Correction::AllShots),
            other => Err(Error::Config(format!("unknown correction '{other}'"))),
        }
    }
}

impl std::fmt::Display for Correction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Correction::None => "NONE",
            Correction::First5 => "FIRST_5",
            Correction::WhileGaussian => "WHILE_GAUSSIAN",
            Correction::AllShots => "ALL_SHOTS",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TruePhase {
    Fixed(f64),
    /// Uniform on `[-delta_start/2, delta_start/2]`, drawn per trial.
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub photon_count: usize,
    pub shots: usize,
    pub delta_start: f64,
    pub phi_true: TruePhase,
    pub strategy: Strategy,
    pub correction: Correction,
    pub seed: u64,
    /// Input selection per shot; the analytic family unless overridden.
    pub optimizer: OptimizerConfig,
}

impl TrialConfig {
    pub fn new(photon_count: usize, shots: usize, delta_start: f64, phi_true: TruePhase, strategy: Strategy) -> Self {
        Self {
            photon_count,
            shots,
            delta_start,
            phi_true,
            strategy,
            correction: Correction::None,
            seed: 0,
            optimizer: OptimizerConfig::with_family(Family::Analytic),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.photon_count == 0 {
            return domain("trials need N >= 1");
        }
        if self.shots == 0 {
            return domain("trials need at least one shot");
        }
        FlatPrior::centered(self.delta_start)?;
        if let TruePhase::Fixed(p) = self.phi_true {
            if !(p.is_finite() && p.abs() <= 0.5 * self.delta_start * (1.0 + 1e-12)) {
                return domain(format!(
                    "true phase {p} lies outside [-{0}/2, {0}/2]",
                    self.delta_start
                ));
            }
        }
        self.optimizer.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShotLog {
    /// Estimator (frame offset) before the shot.
    pub center: f64,
    pub width: f64,
    pub regime: Option<Regime>,
    pub outcome: usize,
    pub estimator_shift: f64,
    pub branch_variance: f64,
    pub bmse: f64,
    pub corrected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub phi_true: f64,
    pub outcomes: OutcomeSequence,
    /// Estimator after each shot.
    pub estimator_path: Vec<f64>,
    /// Width after each shot.
    pub width_path: Vec<f64>,
    pub final_estimator: f64,
    pub final_width: f64,
    pub success: bool,
    pub shots: Vec<ShotLog>,
    /// Inputs as used, already shifted to each shot's centre.
    #[serde(skip)]
    pub inputs: Vec<InputState>,
}

/// Centred single-shot summary for one width.
#[derive(Debug, Clone)]
struct LocalShot {
    state: InputState,
    regime: Option<Regime>,
    estimators: Vec<f64>,
    branch_variances: Vec<f64>,
    bmse: f64,
}

/// Memo of per-width shots, shared across trials.
#[derive(Debug, Default)]
pub struct ShotCache {
    map: Mutex<HashMap<(usize, u64), Arc<LocalShot>>>,
}

impl ShotCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn get(&self, photon_count: usize, width: f64, cfg: &OptimizerConfig) -> Result<Arc<LocalShot>> {
        let key = (photon_count, width.to_bits());
        if let Some(s) = self.map.lock().expect("shot cache poisoned").get(&key) {
            return Ok(s.clone());
        }
        let prior = FlatPrior::centered(width)?;
        let r = optimize_single_shot(photon_count, &prior, cfg)?;
        let state = r.states.into_iter().next().expect("one state");
        let grid = cfg.grid(prior)?;
        let bs = BeamSplitterMatrix::balanced_shared(photon_count)?;
        let rep = single_shot_report_with(&state, &grid, bs)?;
        let shot = Arc::new(LocalShot {
            state,
            regime: classify_regime_with(photon_count, width, &cfg.constants).ok(),
            estimators: rep.estimators,
            branch_variances: rep.branch_variances,
            bmse: rep.bmse,
        });
        self.map
            .lock()
            .expect("shot cache poisoned")
            .insert(key, shot.clone());
        Ok(shot)
    }
}

fn trial_rng(seed: u64, trial: u64, slot: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    // 256 32-bit words per slot; slot 0 draws the true phase, slot s + 1 shot s
    rng.set_word_pos((slot as u128) << 8);
    rng
}

/// Inverse-CDF draw of the D1 count.
pub fn simulate_outcome<R: Rng + ?Sized>(state: &InputState, phi_true: f64, rng: &mut R) -> Result<usize> {
    let bs = BeamSplitterMatrix::balanced_shared(state.photon_count())?;
    let pmf = outcome_pmf(state, phi_true, bs)?;
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (m, p) in pmf.probs.iter().enumerate() {
        if *p > 0.0 {
            last_positive = m;
        }
        acc += p;
        if u < acc {
            return Ok(m);
        }
    }
    Ok(last_positive)
}

/// Runs one trajectory with its own cache.
pub fn run_trial(cfg: &TrialConfig, trial: u64) -> Result<TrialRecord> {
    run_trial_cached(cfg, trial, &ShotCache::new())
}

pub fn run_trial_cached(cfg: &TrialConfig, trial: u64, cache: &ShotCache) -> Result<TrialRecord> {
    cfg.validate()?;
    let n = cfg.photon_count;
    let phi_true = match cfg.phi_true {
        TruePhase::Fixed(p) => p,
        TruePhase::Sampled => {
            let mut rng = trial_rng(cfg.seed, trial, 0);
            (rng.random::<f64>() - 0.5) * cfg.delta_start
        }
    };
    let mut center = 0.0;
    let mut width = cfg.delta_start;
    let mut outcomes = Vec::with_capacity(cfg.shots);
    let mut estimator_path = Vec::with_capacity(cfg.shots);
    let mut width_path = Vec::with_capacity(cfg.shots);
    let mut shots = Vec::with_capacity(cfg.shots);
    let mut inputs = Vec::with_capacity(cfg.shots);
    for s in 0..cfg.shots {
        let local = cache.get(n, width, &cfg.optimizer)?;
        let mut rng = trial_rng(cfg.seed, trial, s as u64 + 1);
        let m = simulate_outcome(&local.state, phi_true - center, &mut rng)?;
        let shift = local.estimators[m];
        let target = match cfg.strategy {
            Strategy::Mcna => FlatPrior::width_for_variance(local.bmse),
            Strategy::Mca => FlatPrior::width_for_variance(local.branch_variances[m]).min(width),
        };
        let corrected = cfg
            .correction
            .applies(s, n, width, cfg.optimizer.constants.boundary);
        let next = if corrected { width - 0.5 * (width - target) } else { target };
        shots.push(ShotLog {
            center,
            width,
            regime: local.regime,
            outcome: m,
            estimator_shift: shift,
            branch_variance: local.branch_variances[m],
            bmse: local.bmse,
            corrected,
        });
        inputs.push(local.state.phase_shifted(center));
        outcomes.push(m);
        center += shift;
        width = next.max(WIDTH_FLOOR);
        estimator_path.push(center);
        width_path.push(width);
    }
    Ok(TrialRecord {
        trial,
        phi_true,
        outcomes: OutcomeSequence { outcomes },
        estimator_path,
        width_path,
        final_estimator: center,
        final_width: width,
        success: (center - phi_true).abs() <= 0.5 * width,
        shots,
        inputs,
    })
}

/// Exact posterior variance of the realized outcomes under `prior`, with
/// every shot's input as actually used.
pub fn corrected_variance(record: &TrialRecord, prior: &FlatPrior, node_count: usize) -> Result<f64> {
    let n = match record.inputs.first() {
        Some(s) => s.photon_count(),
        None => return domain("record has no shots"),
    };
    let grid = crate::bayes::make_quadrature(*prior, node_count)?;
    let bs = BeamSplitterMatrix::balanced_shared(n)?;
    let refs: Vec<&InputState> = record.inputs.iter().collect();
    Ok(posterior_for_sequence(&refs, &record.outcomes.outcomes, &grid, bs)?.variance)
}

/// Exact outcome tree of the protocol a trial configuration describes
/// (no correction), for comparison with ensemble averages.
pub fn protocol_reference(cfg: &TrialConfig) -> Result<ProtocolTree> {
    if cfg.correction != Correction::None {
        return Err(Error::Unsupported("reference trees cover the uncorrected protocols".into()));
    }
    let rule = match cfg.strategy {
        Strategy::Mcna => WidthRule::OutcomeAveraged,
        Strategy::Mca => WidthRule::PerBranch,
    };
    protocol_tree(
        cfg.photon_count,
        cfg.shots,
        &FlatPrior::centered(cfg.delta_start)?,
        &cfg.optimizer,
        rule,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnsembleStats {
    pub trials: usize,
    pub median_estimator: f64,
    /// Median of `|estimator - phi_true|`.
    pub mad: f64,
    pub success_rate: f64,
    /// Binomial standard error of `success_rate`.
    pub success_stderr: f64,
    /// Mean squared error over `delta_start^2 / 12`.
    pub variance_ratio: f64,
    pub mean_final_width: f64,
    /// `mad / mean_final_width`; about 0.195 for normal errors.
    pub mad_ratio: f64,
}

/// Aggregates one cell; `None` (with a warning) for an empty cell.
pub fn ensemble_stats(records: &[TrialRecord], delta_start: f64) -> Option<EnsembleStats> {
    if records.is_empty() {
        log::warn!("skipping empty Monte Carlo cell");
        return None;
    }
    if records.len() < MIN_TRIALS_PER_CELL {
        log::warn!(
            "cell has {} trials, fewer than the recommended {MIN_TRIALS_PER_CELL}",
            records.len()
        );
    }
    let mut sorted: Vec<&TrialRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.trial);
    let t = sorted.len() as f64;
    let ests: Vec<f64> = sorted.iter().map(|r| r.final_estimator).collect();
    let devs: Vec<f64> = sorted.iter().map(|r| (r.final_estimator - r.phi_true).abs()).collect();
    let success = sorted.iter().filter(|r| r.success).count() as f64 / t;
    let mse = sorted
        .iter()
        .map(|r| (r.final_estimator - r.phi_true).powi(2))
        .collect::<KahanSum>()
        .value()
        / t;
    let mean_width = sorted.iter().map(|r| r.final_width).collect::<KahanSum>().value() / t;
    let mad = median(&devs);
    Some(EnsembleStats {
        trials: sorted.len(),
        median_estimator: median(&ests),
        mad,
        success_rate: success,
        success_stderr: (success * (1.0 - success) / t).sqrt(),
        variance_ratio: mse / (delta_start * delta_start / 12.0),
        mean_final_width: mean_width,
        mad_ratio: mad / mean_width,
    })
}

/// A cell of a Monte Carlo grid and its trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub config: TrialConfig,
    pub records: Vec<TrialRecord>,
    pub stats: Option<EnsembleStats>,
}

/// Runs `trials` trajectories per configuration in parallel. Output order
/// follows the input cells and trial indices.
pub fn run_grid(cells: &[TrialConfig], trials: usize) -> Result<Vec<CellResult>> {
    for c in cells {
        c.validate()?;
    }
    let cache = ShotCache::new();
    let jobs: Vec<(usize, u64)> = (0..cells.len())
        .flat_map(|c| (0..trials as u64).map(move |t| (c, t)))
        .collect();
    let records: Vec<Result<TrialRecord>> = jobs
        .par_iter()
        .map(|&(c, t)| run_trial_cached(&cells[c], t, &cache))
        .collect();
    let mut out: Vec<CellResult> = cells
        .iter()
        .map(|c| CellResult {
            config: *c,
            records: Vec::with_capacity(trials),
            stats: None,
        })
        .collect();
    for ((c, _), r) in jobs.iter().zip(records) {
        out[*c].records.push(r?);
    }
    for cell in &mut out {
        cell.stats = ensemble_stats(&cell.records, cell.config.delta_start);
    }
    Ok(out)
}

/// One CSV row per trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRow {
    pub seed: u64,
    pub trial: u64,
    #[serde(rename = "N")]
    pub photon_count: usize,
    pub nu: usize,
    pub delta_start_rad: f64,
    pub phi_true_rad: f64,
    pub strategy: String,
    pub correction: String,
    pub final_estimator_rad: f64,
    pub final_width_rad: f64,
    pub success: bool,
    /// Exact posterior variance of the realized outcomes under the starting
    /// prior, when computed.
    pub corrected_variance_rad2: Option<f64>,
}

impl TrialRow {
    pub fn new(cfg: &TrialConfig, r: &TrialRecord) -> Self {
        Self {
            seed: cfg.seed,
            trial: r.trial,
            photon_count: cfg.photon_count,
            nu: cfg.shots,
            delta_start_rad: cfg.delta_start,
            phi_true_rad: r.phi_true,
            strategy: cfg.strategy.to_string(),
            correction: cfg.correction.to_string(),
            final_estimator_rad: r.final_estimator,
            final_width_rad: r.final_width,
            success: r.success,
            corrected_variance_rad2: None,
        }
    }

    pub fn with_corrected_variance(self, variance: f64) -> Self {
        Self {
            corrected_variance_rad2: Some(variance),
            ..self
        }
    }
}
