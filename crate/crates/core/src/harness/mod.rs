//! Configuration, presets, sweeps and result files.

mod config;
mod output;
mod presets;

pub use config::{
    AlgorithmConfig, ClassSource, EnvironmentConfig, ModelSource, OutputConfig, RunConfig, SweepConfig,
    TabularFeatureConfig,
};
pub use output::{csv_text, parse_csv, read_csv, write_csv, write_plots, write_truth};
pub use presets::{
    find_preset, preset_apprenticeship, preset_apprenticeship_constrained, preset_multiobjective, projection_rows,
    MultiObjective, MultiObjectiveEnv, Preset, PRESETS,
};

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::Result;
use crate::vpdpo::{regret_violation, run_partial, ExperimentSpec, RegretReport};

/// Files and headline numbers of one run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub seed: u64,
    pub rounds: usize,
    pub csv: PathBuf,
    pub truth: Option<PathBuf>,
    pub plots: Vec<PathBuf>,
    pub report: RegretReport,
    pub warnings: Vec<String>,
}

/// Runs one experiment and writes `<stem>.csv`, `<stem>.truth.json` (when a
/// comparator exists) and, optionally, plot files into `dir`. A run that
/// stops early still writes the rows it logged before returning the error.
pub fn execute(spec: &ExperimentSpec, dir: &Path, stem: &str, emit_plots: bool) -> Result<RunSummary> {
    spec.validate()?;
    fs::create_dir_all(dir)?;
    let truth = spec.ground_truth()?;
    let truth_path = match &truth {
        Some(gt) => {
            let p = dir.join(format!("{stem}.truth.json"));
            write_truth(&p, gt)?;
            Some(p)
        }
        None => None,
    };
    let log = run_partial(spec);
    let report = regret_violation(&log.records, truth.as_ref(), &spec.objective, spec.constraint.as_ref());
    let csv = dir.join(format!("{stem}.csv"));
    write_csv(&csv, &report.curve)?;
    let plots = if emit_plots {
        write_plots(dir, stem, &report.curve)?
    } else {
        Vec::new()
    };
    if let Some(e) = log.failure {
        return Err(e);
    }
    let mut warnings: Vec<String> = log.records.iter().flat_map(|r| r.warnings.iter().cloned()).collect();
    warnings.dedup();
    Ok(RunSummary {
        seed: spec.seed,
        rounds: spec.rounds,
        csv,
        truth: truth_path,
        plots,
        report,
        warnings,
    })
}

/// File stem of a sweep member.
pub fn sweep_stem(name: &str, seed: u64, rounds: usize) -> String {
    format!("{name}_seed{seed}_T{rounds}")
}

/// Every `(seed, T)` pair of the config, run in parallel. Results come back
/// in sweep order, seeds outermost.
pub fn run_sweep(config: &RunConfig, config_dir: Option<&Path>, dir: &Path) -> Vec<Result<RunSummary>> {
    let jobs: Vec<(u64, Option<usize>)> = match (config.seeds(), config.round_list()) {
        (Ok(seeds), Ok(rounds)) => seeds
            .iter()
            .flat_map(|s| rounds.iter().map(move |t| (*s, *t)))
            .collect(),
        (Err(e), _) | (_, Err(e)) => return vec![Err(e)],
    };
    let name = config.name();
    jobs.par_iter()
        .map(|&(seed, rounds)| {
            let mut spec = config.build(seed, config_dir)?;
            if let Some(t) = rounds {
                spec.rounds = t;
                spec.validate()?;
            }
            execute(
                &spec,
                dir,
                &sweep_stem(&name, seed, spec.rounds),
                config.output.emit_plots,
            )
        })
        .collect()
}
