//! Batch driver: subcommands and JSON manifests whose results are written
//! as CSV and JSON files.

pub mod angle;
pub mod cli;
pub mod commands;
pub mod error;
pub mod manifest;
pub mod output;

use std::ffi::OsString;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::Parser;

use crate::cli::{Cli, Command};
use crate::error::{CliError, CliResult};
use crate::manifest::LoadedManifest;
use crate::output::{git_describe, OutputDir, RunMetadata};

/// Parsed and checked command, ready to compute.
enum Prepared {
    Optimize(cli::OptimizeArgs, phasest::optimizer::OptimizerConfig),
    Scan(cli::ScanArgs, phasest::optimizer::OptimizerConfig),
    Scaling(cli::ScalingArgs, phasest::optimizer::OptimizerConfig),
    Table1(cli::Table1Args, phasest::optimizer::OptimizerConfig),
    Mc(cli::McArgs, Vec<commands::McCell>),
    Fit(cli::FitArgs, phasest::optimizer::OptimizerConfig),
}

fn prepare(cli: &Cli) -> CliResult<Prepared> {
    let g = &cli.global;
    if g.threads == Some(0) {
        return Err(CliError::invalid("threads", "thread cap must be positive"));
    }
    Ok(match &cli.command {
        Command::Optimize(a) => Prepared::Optimize(a.clone(), commands::check_optimize(a, g)?),
        Command::Scan(a) => Prepared::Scan(a.clone(), commands::check_scan(a, g)?),
        Command::Scaling(a) => Prepared::Scaling(a.clone(), commands::check_scaling(a, g)?),
        Command::Table1(a) => Prepared::Table1(a.clone(), commands::check_table1(a, g)?),
        Command::Mc(a) => Prepared::Mc(a.clone(), commands::check_mc(a, g)?.1),
        Command::FitConstants(a) => Prepared::Fit(a.clone(), commands::check_fit(a, g)?),
        Command::Run(_) => return Err(CliError::invalid("command", "manifests cannot nest 'run'")),
    })
}

fn compute(p: &Prepared, out: &mut OutputDir) -> CliResult<()> {
    match p {
        Prepared::Optimize(a, c) => commands::optimize(a, c, out),
        Prepared::Scan(a, c) => commands::scan(a, c, out),
        Prepared::Scaling(a, c) => commands::scaling(a, c, out),
        Prepared::Table1(a, c) => commands::table1(a, c, out),
        Prepared::Mc(a, cells) => commands::mc(a, cells, out),
        Prepared::Fit(a, c) => commands::fit_constants(a, c, out),
    }
}

/// Checks, computes and writes one command. The manifest, when given, is
/// echoed verbatim into the output directory before any computation.
pub fn execute(cli: &Cli, args: &[String], manifest: Option<&LoadedManifest>) -> CliResult<OutputDir> {
    let prepared = prepare(cli).map_err(|e| match (e, manifest) {
        (CliError::Invalid { key, message }, Some(m)) => m.error_at(key.as_deref(), &message),
        (e, _) => e,
    })?;
    let started = Instant::now();
    let started_unix_s = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut out = OutputDir::create(&cli.global.out)?;
    if let Some(m) = manifest {
        out.write_bytes("manifest.json", m.text.as_bytes())?;
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.global.threads {
        pool = pool.num_threads(t);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Resource(format!("cannot start worker threads: {e}")))?;
    let threads = pool.current_num_threads();
    pool.install(|| compute(&prepared, &mut out))?;
    let meta = RunMetadata {
        command: cli.command.name().to_string(),
        version: env!("CARGO_PKG_VERSION"),
        git_describe: git_describe(),
        seed: cli.global.seed,
        threads,
        started_unix_s,
        wall_time_s: started.elapsed().as_secs_f64(),
        arguments: args.to_vec(),
        files: out.written().to_vec(),
    };
    out.write_json("run.json", &meta)?;
    Ok(out)
}

/// Loads a manifest file and runs it.
pub fn run_manifest(path: &Path) -> CliResult<OutputDir> {
    let text = std::fs::read_to_string(path)?;
    let loaded = LoadedManifest::parse(&path.display().to_string(), &text)?;
    let args = loaded.to_args()?;
    let cli = Cli::try_parse_from(&args).map_err(|e| {
        let key = e.get(clap::error::ContextKind::InvalidArg).map(|v| {
            let s = v.to_string();
            s.trim_start_matches("--").split([' ', '=']).next().unwrap_or_default().to_string()
        });
        let message = e.kind().to_string();
        let detail = e.render().to_string();
        let first = detail.lines().next().unwrap_or_default().trim_start_matches("error: ").to_string();
        loaded.error_at(key.as_deref(), if first.is_empty() { &message } else { &first })
    })?;
    execute(&cli, &args, Some(&loaded))
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn main_with<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let args: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let result = match &cli.command {
        Command::Run(r) => run_manifest(&r.manifest),
        _ => execute(&cli, &args, None),
    };
    match result {
        Ok(out) => {
            for f in out.written() {
                println!("{}", out.path().join(f).display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
