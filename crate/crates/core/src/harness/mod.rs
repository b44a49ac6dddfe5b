//! Seeded trial execution, experiment suites and their reports.

pub mod pilot;
mod report;
mod suites;
mod verify;

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dla::{self, ClusterState, DlaError, RunOptions, StopRule, TrialRecord};

pub use report::{write_report, ReportFormat, ReportRow, SCHEMA_VERSION};
pub use suites::{
    default_series_times, fullness_suite, height_suite, notall_suite, path_suite, tend_scaling,
    xbound_suite, HEIGHT_PHI,
};
pub use verify::{conc_suite, identities_suite, rec1_suite};

/// Master seed of the pilot runs that fix the golden values.
pub const PILOT_SEED: u64 = 0xD1A;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Dimension(#[from] DlaError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Theory(#[from] crate::theory::TheoryError),
    #[error(transparent)]
    Observable(#[from] crate::observables::ObservableError),
    #[error("report output: {0}")]
    Io(#[from] std::io::Error),
    #[error("report encoding: {0}")]
    Csv(#[from] csv::Error),
    #[error("report encoding: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// One dimension, or an ascending grid.
    pub ns: Vec<u32>,
    pub trials: u64,
    pub master_seed: u64,
    pub eps: f64,
    pub a_exponent: f64,
    /// Checkpoint times; absolute for plain runs, relative to `τ0` for the
    /// post-`τ0` series.
    pub checkpoints: Vec<u64>,
    pub output: Option<PathBuf>,
    pub format: ReportFormat,
    /// Worker threads, 0 for one per core.
    pub parallelism: usize,
    /// Levels probed by the height suite.
    pub height_levels: Vec<u64>,
    pub height_delta: f64,
    pub xbound_slack: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            ns: vec![12],
            trials: 100,
            master_seed: PILOT_SEED,
            eps: 0.01,
            a_exponent: 0.45,
            checkpoints: Vec::new(),
            output: None,
            format: ReportFormat::Csv,
            parallelism: 0,
            height_levels: vec![1, 2, 3],
            height_delta: 0.5,
            xbound_slack: 0.25,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.trials == 0 {
            return Err(HarnessError::Config("trials must be at least 1".into()));
        }
        if self.ns.is_empty() {
            return Err(HarnessError::Config("no dimension given".into()));
        }
        if self.ns.windows(2).any(|w| w[0] >= w[1]) {
            return Err(HarnessError::Config(
                "n-grid must be strictly ascending".into(),
            ));
        }
        for &n in &self.ns {
            if n == 0 || n > dla::DEFAULT_MAX_DIMENSION {
                return Err(DlaError::DimensionOutOfRange {
                    n,
                    cap: dla::DEFAULT_MAX_DIMENSION,
                }
                .into());
            }
        }
        if !(self.eps > 0.0 && self.eps < 0.5) {
            return Err(HarnessError::Config(format!(
                "eps = {} not in (0, 1/2)",
                self.eps
            )));
        }
        Ok(())
    }
}

/// Outcome of one suite: report rows plus named pass/fail checks.
#[derive(Debug, Clone, Default)]
pub struct SuiteReport {
    pub rows: Vec<ReportRow>,
    pub checks: Vec<Check>,
    /// Human-readable remarks such as skipped levels.
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub(crate) fn check(
        &mut self,
        name: impl Into<String>,
        passed: bool,
        detail: impl Into<String>,
    ) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    pub(crate) fn extend(&mut self, other: SuiteReport) {
        self.rows.extend(other.rows);
        self.checks.extend(other.checks);
        self.notes.extend(other.notes);
    }
}

/// Independent stream for trial `i`: stream `i` of a ChaCha8 generator keyed
/// by the master seed.
pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng
}

/// Evaluates `f` for every trial index, in parallel, returning results in
/// trial order. Output depends only on the seed, never on the thread count.
pub fn map_trials<T, F>(trials: u64, master_seed: u64, parallelism: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut ChaCha8Rng) -> T + Sync,
{
    let work = || {
        (0..trials)
            .into_par_iter()
            .map(|i| f(i, &mut trial_rng(master_seed, i)))
            .collect()
    };
    if parallelism == 0 {
        work()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(parallelism)
            .build()
            .expect("thread pool")
            .install(work)
    }
}

/// Runs `config.trials` fresh clusters of dimension `n` to termination,
/// snapshotting at `config.checkpoints`.
pub fn run_trials(config: &ExperimentConfig, n: u32) -> Result<Vec<TrialRecord>, HarnessError> {
    config.validate()?;
    ClusterState::new(n)?;
    let opts = RunOptions {
        checkpoints: config.checkpoints.clone(),
        record_levels: false,
    };
    Ok(map_trials(
        config.trials,
        config.master_seed,
        config.parallelism,
        |_, rng| {
            let mut c = ClusterState::new(n).expect("dimension checked");
            dla::run(&mut c, rng, StopRule::UntilTermination, &opts)
        },
    ))
}

/// Sample mean and the normal-approximation 95% half-width.
pub fn mean_ci(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use rand::Rng;

    use super::*;

    #[test]
    fn streams_are_distinct_and_reproducible() {
        let a: u64 = trial_rng(1, 0).random();
        let b: u64 = trial_rng(1, 1).random();
        assert_ne!(a, b);
        assert_eq!(a, trial_rng(1, 0).random::<u64>());
    }

    #[test]
    fn thread_count_does_not_matter() {
        let cfg = ExperimentConfig {
            ns: vec![8],
            trials: 20,
            master_seed: 3,
            ..Default::default()
        };
        let one = run_trials(
            &ExperimentConfig {
                parallelism: 1,
                ..cfg.clone()
            },
            8,
        )
        .unwrap();
        let many = run_trials(
            &ExperimentConfig {
                parallelism: 4,
                ..cfg
            },
            8,
        )
        .unwrap();
        assert_eq!(one, many);
    }

    #[test]
    fn rejects_bad_configs() {
        let cfg = ExperimentConfig::default();
        assert!(run_trials(&cfg, 31).is_err());
        assert!(ExperimentConfig {
            trials: 0,
            ..cfg.clone()
        }
        .validate()
        .is_err());
        assert!(ExperimentConfig {
            ns: vec![10, 8],
            ..cfg
        }
        .validate()
        .is_err());
    }

    #[test]
    fn small_run() {
        let cfg = ExperimentConfig {
            ns: vec![12],
            trials: 1,
            ..Default::default()
        };
        let r = run_trials(&cfg, 12).unwrap();
        assert_eq!(r.len(), 1);
        assert!(r[0].t_end.unwrap() <= 4095);
    }

    #[test]
    fn ci_of_constant_sample() {
        assert_eq!(mean_ci(&[2.0, 2.0, 2.0]), (2.0, 0.0));
    }
}
