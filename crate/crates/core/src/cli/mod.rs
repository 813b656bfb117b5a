//! The `ciblp` command-line tool: experiment configs in, CSV tables, SVG
//! plots and a run manifest out.

pub mod config;
pub mod manifest;
pub mod plot;
pub mod table;
pub mod validate;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::sim::{run_block_sweep, run_ser_sweep, run_timing, SerCurve, TimingRow};
use config::ExperimentConfig;
use manifest::RunManifest;
use validate::{run_validation, Fault, ValidateOptions, ValidationReport};

#[derive(Debug, Parser)]
#[command(name = "ciblp", version = manifest::VERSION, about = "Constructive-interference block-level precoding experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Worker threads for Monte Carlo trials (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// SER against SNR for each scheme.
    SerSweep(RunArgs),
    /// SER against block length at fixed SNR.
    BlockSweep(RunArgs),
    /// QP solve time of CI-BLP against N CI-SLP solves.
    Timing(RunArgs),
    /// Run the invariant battery on seeded random instances.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
    /// Overrides the seed in the config file.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Also write the report and a manifest here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, hide = true)]
    pub inject_fault: Option<Fault>,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let outcome = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(&cli.command)),
            Err(e) => Err(Error::InvalidConfig(format!("`--threads`: {e}"))),
        },
        None => dispatch(&cli.command),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: &Command) -> Result<i32> {
    match command {
        Command::SerSweep(a) => cmd_ser_sweep(&load(a)?, &a.out).map(|_| 0),
        Command::BlockSweep(a) => cmd_block_sweep(&load(a)?, &a.out).map(|_| 0),
        Command::Timing(a) => cmd_timing(&load(a)?, &a.out).map(|_| 0),
        Command::Validate(a) => {
            let opts = ValidateOptions {
                seed: a.seed.unwrap_or(ValidateOptions::default().seed),
                fault: a.inject_fault,
                ..ValidateOptions::default()
            };
            let report = cmd_validate(&opts, a.out.as_deref())?;
            print!("{}", report.render());
            Ok(if report.passed() { 0 } else { 1 })
        }
    }
}

fn load(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))
}

/// Writes `ser_sweep.csv`, `ser_sweep.svg` and `manifest.toml` to `out`.
pub fn cmd_ser_sweep(cfg: &ExperimentConfig, out: &Path) -> Result<SerCurve> {
    let sim = cfg.sim_config(true)?;
    if cfg.block_lengths().len() > 1 {
        return Err(Error::InvalidConfig("`n_block`: ser-sweep takes a single block length".into()));
    }
    create_dir(out)?;
    let mut manifest = RunManifest::new("ser-sweep", cfg.seed, Some(cfg.clone()));
    let result = run_ser_sweep(&sim);
    if let Err(Error::TooManyFailures { .. }) = &result {
        manifest.write(out)?;
        return result;
    }
    let curve = result?;
    let csv = out.join("ser_sweep.csv");
    table::write_ser_sweep(&csv, &curve)?;
    plot::plot_ser_sweep(&csv, &out.join("ser_sweep.svg"))?;
    manifest.outputs = vec!["ser_sweep.csv".into(), "ser_sweep.svg".into()];
    manifest.record_failures(curve.n_block, &curve.failures);
    manifest.write(out)?;
    check_curve(&curve)?;
    Ok(curve)
}

/// Writes `block_sweep.csv`, `block_sweep.svg` and `manifest.toml` to `out`.
pub fn cmd_block_sweep(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<SerCurve>> {
    let sim = cfg.sim_config(true)?;
    create_dir(out)?;
    let mut manifest = RunManifest::new("block-sweep", cfg.seed, Some(cfg.clone()));
    let curves = match run_block_sweep(&sim, &cfg.block_lengths()) {
        Ok(c) => c,
        Err(e) => {
            manifest.write(out)?;
            return Err(e);
        }
    };
    let csv = out.join("block_sweep.csv");
    table::write_block_sweep(&csv, &curves)?;
    plot::plot_block_sweep(&csv, &out.join("block_sweep.svg"))?;
    manifest.outputs = vec!["block_sweep.csv".into(), "block_sweep.svg".into()];
    for c in &curves {
        manifest.record_failures(c.n_block, &c.failures);
    }
    manifest.write(out)?;
    for c in &curves {
        check_curve(c)?;
    }
    Ok(curves)
}

/// Writes `timing.csv`, `timing.svg` and `manifest.toml` to `out`.
pub fn cmd_timing(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<TimingRow>> {
    let sim = cfg.sim_config(false)?;
    create_dir(out)?;
    let mut manifest = RunManifest::new("timing", cfg.seed, Some(cfg.clone()));
    let rows = run_timing(&sim, &cfg.systems(), &cfg.block_lengths())?;
    let csv = out.join("timing.csv");
    table::write_timing(&csv, &rows)?;
    plot::plot_timing(&csv, &out.join("timing.svg"))?;
    manifest.outputs = vec!["timing.csv".into(), "timing.svg".into()];
    manifest.write(out)?;
    Ok(rows)
}

pub fn cmd_validate(opts: &ValidateOptions, out: Option<&Path>) -> Result<ValidationReport> {
    let manifest = RunManifest::new("validate", opts.seed, None);
    let report = run_validation(opts);
    if let Some(dir) = out {
        create_dir(dir)?;
        let path = dir.join("validate.txt");
        std::fs::write(&path, report.render()).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut manifest = manifest;
        manifest.outputs = vec!["validate.txt".into()];
        manifest.write(dir)?;
    }
    Ok(report)
}

fn check_curve(curve: &SerCurve) -> Result<()> {
    if !curve.check_digests() {
        let digests: Vec<String> = curve.digests.iter().map(|(s, d)| format!("{s}={d:016x}")).collect();
        return Err(Error::CommonRandomNumbers(digests.join(", ")));
    }
    curve.check_monotone()
}
