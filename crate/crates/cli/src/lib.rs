//! Command-line front end for the simulator.
//!
//! `cli_run` returns the process exit code: 0 on success, 1 for usage and
//! configuration errors, 2 for numerical or budget failures.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use vpdpo::harness::{execute, run_sweep, sweep_stem, write_truth, RunConfig, RunSummary, PRESETS};
use vpdpo::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "vpdpo",
    version,
    about = "Primal-dual policy optimization for constrained convex MDPs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment and write its CSV.
    Run {
        #[command(flatten)]
        source: Source,
        /// Run seed; defaults to the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Number of episodes T.
        #[arg(long)]
        rounds: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Run every (seed, T) pair of the config in parallel.
    Sweep {
        #[command(flatten)]
        source: Source,
        /// Comma-separated seeds, replacing the config's seed list.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Comma-separated horizons T, replacing the config's list.
        #[arg(long, value_delimiter = ',')]
        rounds: Option<Vec<usize>>,
        #[command(flatten)]
        output: Output,
    },
    /// Solve for the comparator optimum only and print it as JSON.
    Oracle {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        seed: Option<u64>,
        /// Also write `<name>_seed<N>.truth.json` here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the built-in presets.
    Presets,
}

#[derive(Debug, Args)]
struct Source {
    /// TOML experiment config.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in preset name (see `vpdpo presets`).
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Debug, Args)]
struct Output {
    /// Output directory; defaults to the config's, then `results`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write gnuplot data and script files.
    #[arg(long)]
    emit_plots: bool,
}

impl Source {
    fn load(&self) -> Result<(RunConfig, Option<PathBuf>)> {
        match (&self.config, &self.preset) {
            (Some(path), _) => {
                let config = RunConfig::load(path)?;
                Ok((config, path.parent().map(Path::to_path_buf)))
            }
            (None, Some(name)) => {
                vpdpo::harness::find_preset(name)?;
                Ok((RunConfig::from_preset(name), None))
            }
            (None, None) => Err(Error::Config("one of --config or --preset is required".into())),
        }
    }
}

/// Prints a line, ignoring a closed stdout (e.g. piped into `head`).
macro_rules! say {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

fn out_dir(flag: &Option<PathBuf>, config: &RunConfig) -> PathBuf {
    flag.clone()
        .or_else(|| config.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("results"))
}

fn report(summary: &RunSummary) {
    let r = &summary.report;
    say!(
        "seed {} T {}: Regret {:.6e} Violation {:.6e} covered {} -> {}",
        summary.seed,
        summary.rounds,
        r.regret,
        r.violation,
        r.covered,
        summary.csv.display()
    );
    for w in &summary.warnings {
        eprintln!("warning: {w}");
    }
}

fn run_command(command: Command) -> Result<()> {
    match command {
        Command::Presets => {
            for p in PRESETS {
                say!("{:<38} {}", p.name, p.description);
            }
            Ok(())
        }
        Command::Run {
            source,
            seed,
            rounds,
            output,
        } => {
            let (config, config_dir) = source.load()?;
            let seed = match seed {
                Some(s) => s,
                None => config.seeds()?[0],
            };
            let mut spec = config.build(seed, config_dir.as_deref())?;
            if let Some(t) = rounds {
                spec.rounds = t;
            }
            let dir = out_dir(&output.out, &config);
            let stem = sweep_stem(&config.name(), seed, spec.rounds);
            let summary = execute(&spec, &dir, &stem, output.emit_plots || config.output.emit_plots)?;
            report(&summary);
            Ok(())
        }
        Command::Sweep {
            source,
            seeds,
            rounds,
            output,
        } => {
            let (mut config, config_dir) = source.load()?;
            if seeds.is_some() {
                config.sweep.seeds = seeds;
            }
            if rounds.is_some() {
                config.sweep.rounds = rounds;
            }
            config.output.emit_plots |= output.emit_plots;
            let dir = out_dir(&output.out, &config);
            let mut worst: Option<Error> = None;
            for result in run_sweep(&config, config_dir.as_deref(), &dir) {
                match result {
                    Ok(summary) => report(&summary),
                    Err(e) => {
                        eprintln!("error: {e}");
                        if worst.as_ref().is_none_or(|w| e.exit_code() > w.exit_code()) {
                            worst = Some(e);
                        }
                    }
                }
            }
            worst.map_or(Ok(()), Err)
        }
        Command::Oracle { source, seed, out } => {
            let (config, config_dir) = source.load()?;
            let seed = match seed {
                Some(s) => s,
                None => config.seeds()?[0],
            };
            let spec = config.build(seed, config_dir.as_deref())?;
            let truth = spec.ground_truth()?.ok_or_else(|| {
                Error::Config("the KNR environment has no finite comparator; use a tabular or low-rank config".into())
            })?;
            let json = serde_json::to_string_pretty(&truth).map_err(|e| Error::Numerical(e.to_string()))?;
            say!("{json}");
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                write_truth(&dir.join(format!("{}_seed{seed}.truth.json", config.name())), &truth)?;
            }
            Ok(())
        }
    }
}

/// Parses `args` (program name first) and runs the subcommand.
pub fn cli_run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run_command(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
