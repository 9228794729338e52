//! Command-line surface. Manifests are translated into the same arguments,
//! so defaults live in one place.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use phasest::bayes::{DEFAULT_ENUMERATION_CAP, DEFAULT_NODE_COUNT};
use phasest::monte_carlo::{Correction, Strategy};
use phasest::optimizer::Family;
use phasest::states::Sign;

use crate::angle::{parse_angle, parse_grid, parse_range};

#[derive(Debug, Parser)]
#[command(name = "phasest", version, about = "Bayesian phase estimation with N-photon interferometers")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Output directory.
    #[arg(long, global = true, env = "PHASEST_OUT", default_value = "phasest-out")]
    pub out: PathBuf,
    /// Seed for optimizer restarts and Monte Carlo streams.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Gauss-Legendre nodes per shot integral.
    #[arg(long, global = true, default_value_t = DEFAULT_NODE_COUNT)]
    pub node_count: usize,
    /// Optimizer starts per search.
    #[arg(long, global = true, default_value_t = 8)]
    pub restarts: usize,
    /// Perturb-and-repolish rounds per start.
    #[arg(long, global = true, default_value_t = 4)]
    pub hops: usize,
    /// Largest outcome tree an exact evaluation may enumerate.
    #[arg(long, global = true, default_value_t = DEFAULT_ENUMERATION_CAP)]
    pub enumeration_cap: u64,
    /// Override of the Gaussian-law constant.
    #[arg(long = "c-g", global = true)]
    pub c_g: Option<f64>,
    /// Override of the N00N-law constant.
    #[arg(long = "c-n", global = true)]
    pub c_n: Option<f64>,
    /// Override of the best-fit Gaussian width constant.
    #[arg(long = "c-rho", global = true)]
    pub c_rho: Option<f64>,
    /// Override of the regime boundary in units of N * Delta.
    #[arg(long, global = true)]
    pub boundary: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimize the inputs of one strategy at one prior width.
    Optimize(OptimizeArgs),
    /// Variance ratios over a grid of widths and photon numbers.
    Scan(ScanArgs),
    /// Regime boundary bisection and closed-form shot predictions.
    Scaling(ScalingArgs),
    /// Shots needed to reach a target width, simulated and by formula.
    Table1(Table1Args),
    /// Monte Carlo trajectories against hidden true phases.
    Mc(McArgs),
    /// Refit the scaling constants from optimized single shots.
    FitConstants(FitArgs),
    /// Execute a JSON experiment manifest.
    Run(RunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Optimize(_) => "optimize",
            Command::Scan(_) => "scan",
            Command::Scaling(_) => "scaling",
            Command::Table1(_) => "table1",
            Command::Mc(_) => "mc",
            Command::FitConstants(_) => "fit-constants",
            Command::Run(_) => "run",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// One shot.
    Single,
    /// Shot-by-shot, each input optimal for the propagated flat width.
    Local,
    /// All non-adaptive inputs optimized jointly.
    Global,
    /// Two shots, the second input chosen per first outcome, optimized jointly.
    Adaptive,
    /// Shot-by-shot with per-branch recentring and widths.
    Feedforward,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Single => "single",
            Mode::Local => "local",
            Mode::Global => "global",
            Mode::Adaptive => "adaptive",
            Mode::Feedforward => "feedforward",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SignArg {
    Plus,
    Minus,
}

impl From<SignArg> for Sign {
    fn from(s: SignArg) -> Sign {
        match s {
            SignArg::Plus => Sign::Plus,
            SignArg::Minus => Sign::Minus,
        }
    }
}

fn family(s: &str) -> Result<Family, String> {
    s.parse().map_err(|e: phasest::Error| e.to_string())
}

fn strategy(s: &str) -> Result<Strategy, String> {
    s.parse().map_err(|e: phasest::Error| e.to_string())
}

fn correction(s: &str) -> Result<Correction, String> {
    s.parse().map_err(|e: phasest::Error| e.to_string())
}

/// Photon numbers from one `a..b` argument.
#[derive(Debug, Clone, PartialEq)]
pub struct Photons(pub Vec<usize>);

/// Widths from one `from:to:count` argument.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleGrid(pub Vec<f64>);

fn photons(s: &str) -> Result<Photons, String> {
    parse_range(s).map(Photons)
}

fn angle_grid(s: &str) -> Result<AngleGrid, String> {
    parse_grid(s).map(AngleGrid)
}

/// `N:Delta_start:Delta_req`, angles as pi-expressions.
fn table_row(s: &str) -> Result<(usize, f64, f64), String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [n, a, b] = parts.as_slice() else {
        return Err(format!("row '{s}' is not of the form N:start:target"));
    };
    let n = n.trim().parse().map_err(|_| format!("bad photon number in '{s}'"))?;
    Ok((n, parse_angle(a)?, parse_angle(b)?))
}

#[derive(Debug, Clone, Args)]
pub struct OptimizeArgs {
    /// Photon number N.
    #[arg(long)]
    pub n: usize,
    /// Prior width, e.g. `pi`, `3pi/10`, `0.314`.
    #[arg(long, value_parser = parse_angle)]
    pub delta: f64,
    /// Number of shots.
    #[arg(long, default_value_t = 1)]
    pub nu: usize,
    #[arg(long, value_enum, default_value_t = Mode::Single)]
    pub mode: Mode,
    /// full, gaussian-rho, quasi-gaussian or analytic.
    #[arg(long, value_parser = family, default_value = "full")]
    pub family: Family,
    #[arg(long, value_enum, default_value_t = SignArg::Plus)]
    pub sign: SignArg,
}

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    /// Photon numbers, `a..b` inclusive; repeatable.
    #[arg(long = "n", value_parser = photons, required = true)]
    pub n: Vec<Photons>,
    /// Widths as explicit angles; repeatable.
    #[arg(long, value_parser = parse_angle)]
    pub delta: Vec<f64>,
    /// Widths as `from:to:count`; repeatable.
    #[arg(long, value_parser = angle_grid)]
    pub delta_grid: Vec<AngleGrid>,
    #[arg(long, default_value_t = 1)]
    pub nu: usize,
    /// Strategies to evaluate; repeatable.
    #[arg(long, value_enum, default_values_t = [Mode::Single])]
    pub mode: Vec<Mode>,
    #[arg(long, value_parser = family, default_value = "full")]
    pub family: Family,
    #[arg(long, value_enum, default_value_t = SignArg::Plus)]
    pub sign: SignArg,
}

#[derive(Debug, Clone, Args)]
pub struct ScalingArgs {
    /// Locate the N00N/Gaussian boundary by bisection.
    #[arg(long)]
    pub boundary_bisect: bool,
    /// Closed-form shot plans from `--delta-start` to each `--delta-req`.
    #[arg(long)]
    pub predict: bool,
    /// Photon numbers, `a..b` inclusive.
    #[arg(long, value_parser = photons, default_value = "2..13")]
    pub n_range: Photons,
    #[arg(long, value_parser = parse_angle, default_value = "pi")]
    pub delta_start: f64,
    /// Target widths; repeatable.
    #[arg(long, value_parser = parse_angle, default_values_t = [0.5, 0.1, 0.05])]
    pub delta_req: Vec<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct Table1Args {
    /// `N:start:target` rows; repeatable. Defaults to the five reference rows.
    #[arg(long = "row", value_parser = table_row)]
    pub rows: Vec<(usize, f64, f64)>,
    /// Family of the simulated shot-by-shot protocol.
    #[arg(long, value_parser = family, default_value = "full")]
    pub family: Family,
    /// Give up after this many shots.
    #[arg(long, default_value_t = 1000)]
    pub max_shots: usize,
}

#[derive(Debug, Clone, Args)]
pub struct McArgs {
    /// Photon number N.
    #[arg(long)]
    pub n: usize,
    /// Shots per trajectory.
    #[arg(long, default_value_t = 10)]
    pub nu: usize,
    /// mcna or mca; repeatable.
    #[arg(long, value_parser = strategy, default_values_t = [Strategy::Mcna])]
    pub strategy: Vec<Strategy>,
    /// none, first-5, while-gaussian or all-shots; repeatable.
    #[arg(long, value_parser = correction, default_values_t = [Correction::None])]
    pub correction: Vec<Correction>,
    /// Starting widths; repeatable.
    #[arg(long, value_parser = parse_angle, default_values_t = default_mc_widths())]
    pub delta_start: Vec<f64>,
    /// True phases as fractions of the starting width; repeatable.
    #[arg(long, allow_negative_numbers = true, default_values_t = [-0.5, -0.25, 0.0, 0.25, 0.5])]
    pub phi_frac: Vec<f64>,
    /// Draw the true phase uniformly per trial instead of `--phi-frac`.
    #[arg(long)]
    pub sampled: bool,
    /// Trials per cell (default 30 for MCNA and 100 for MCA).
    #[arg(long)]
    pub trials: Option<usize>,
    /// Factor applied to the default trial counts.
    #[arg(long, default_value_t = 1.0)]
    pub trial_multiplier: f64,
    /// Also compute the exact expected posterior variance of each
    /// uncorrected protocol.
    #[arg(long)]
    pub reference: bool,
}

pub fn default_mc_widths() -> Vec<f64> {
    (5..=10).map(|k| k as f64 * std::f64::consts::PI / 10.0).collect()
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// Photon numbers of the Gaussian-regime grid.
    #[arg(long, value_parser = photons, default_value = "5..10")]
    pub gaussian_n: Photons,
    /// Widths of the Gaussian-regime grid, `from:to:count`.
    #[arg(long, value_parser = angle_grid, default_value = "0.8:0.999pi:12")]
    pub gaussian_delta: AngleGrid,
    /// Photon numbers of the N00N-regime grid.
    #[arg(long, value_parser = photons, default_value = "3..6")]
    pub noon_n: Photons,
    /// Widths per photon number, spread from `--noon-min-delta` to `1/N`.
    #[arg(long, default_value_t = 8)]
    pub noon_points: usize,
    #[arg(long, value_parser = parse_angle, default_value = "0.05")]
    pub noon_min_delta: f64,
    /// Family of the single-shot steps behind the width laws.
    #[arg(long, value_parser = family, default_value = "full")]
    pub family: Family,
    /// Lower end of the Gaussian-law window in N * Delta.
    #[arg(long, default_value_t = 8.0)]
    pub gaussian_min_n_delta: f64,
    /// Upper end of the N00N-law window in N * Delta.
    #[arg(long, default_value_t = 1.0)]
    pub noon_max_n_delta: f64,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Path of the JSON manifest.
    pub manifest: PathBuf,
}
