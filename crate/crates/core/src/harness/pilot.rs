//! The pilot procedure: fixed-seed runs whose outcomes become the golden
//! values that desk-scale checks are measured against.

use serde::{Deserialize, Serialize};

use super::{
    fullness_suite, height_suite, notall_suite, path_suite, tend_scaling, xbound_suite,
    ExperimentConfig, HarnessError, ReportRow, SuiteReport, PILOT_SEED,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridValue {
    pub n: u32,
    pub value: f64,
    pub half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PilotValues {
    pub seed: u64,
    /// Fraction of 100 trials at n = 20 whose level 1 is full at termination.
    pub fullness_l1_n20: f64,
    /// Fraction of 100 trials at n = 20 with a vacancy at level 8.
    pub positive_vacancy_k8_n20: f64,
    /// Mean isolated path length, 200 trials per n.
    pub path_means: Vec<GridValue>,
    /// Mean `T_end / 2^n`, 100 trials per n.
    pub tend_ratios: Vec<GridValue>,
    /// Fraction of 100 trials at n = 24 whose height at `τ_{2,ε}` exceeds the
    /// reference line.
    pub height_violation_n24_k2: f64,
    /// Trials out of 500 at n = 16, a = 0.45 that reached the stopping time.
    pub tau0_found_n16: f64,
    /// Largest mean-`X` to bound ratio in those trials.
    pub xbound_max_ratio_n16: f64,
}

pub const PATH_GRID: [u32; 4] = [12, 16, 20, 24];
pub const TEND_GRID: [u32; 7] = [10, 12, 14, 16, 18, 20, 22];

fn find<'r>(r: &'r SuiteReport, n: u32, metric: &str) -> Result<&'r ReportRow, HarnessError> {
    r.rows
        .iter()
        .find(|row| row.n == n && row.trial == "aggregate" && row.metric == metric)
        .ok_or_else(|| HarnessError::Config(format!("pilot: no {metric} row at n = {n}")))
}

fn grid(r: &SuiteReport, ns: &[u32], metric: &str) -> Result<Vec<GridValue>, HarnessError> {
    ns.iter()
        .map(|&n| {
            let row = find(r, n, metric)?;
            Ok(GridValue {
                n,
                value: row.value,
                half_width: row.half_width.unwrap_or(f64::NAN),
            })
        })
        .collect()
}

pub fn pilot_config(ns: Vec<u32>, trials: u64, parallelism: usize) -> ExperimentConfig {
    ExperimentConfig {
        ns,
        trials,
        master_seed: PILOT_SEED,
        parallelism,
        ..Default::default()
    }
}

pub fn fullness_pilot(parallelism: usize) -> Result<f64, HarnessError> {
    let r = fullness_suite(&pilot_config(vec![20], 100, parallelism))?;
    Ok(find(&r, 20, "full_fraction.k1")?.value)
}

pub fn path_pilot(parallelism: usize) -> Result<(Vec<GridValue>, SuiteReport), HarnessError> {
    let r = path_suite(&pilot_config(PATH_GRID.to_vec(), 200, parallelism))?;
    Ok((grid(&r, &PATH_GRID, "mean_length")?, r))
}

pub fn tend_pilot(parallelism: usize) -> Result<Vec<GridValue>, HarnessError> {
    let r = tend_scaling(&pilot_config(TEND_GRID.to_vec(), 100, parallelism))?;
    grid(&r, &TEND_GRID, "t_end_ratio")
}

/// Runs every pilot experiment with the pilot seed.
pub fn run_pilot(parallelism: usize) -> Result<PilotValues, HarnessError> {
    let notall = notall_suite(&pilot_config(vec![20], 100, parallelism))?;
    let mut height_cfg = pilot_config(vec![24], 100, parallelism);
    height_cfg.height_levels = vec![2];
    let height = height_suite(&height_cfg)?;
    let xbound = xbound_suite(&pilot_config(vec![16], 500, parallelism))?;
    Ok(PilotValues {
        seed: PILOT_SEED,
        fullness_l1_n20: fullness_pilot(parallelism)?,
        positive_vacancy_k8_n20: find(&notall, 20, "positive_vacancy.k8")?.value,
        path_means: path_pilot(parallelism)?.0,
        tend_ratios: tend_pilot(parallelism)?,
        height_violation_n24_k2: find(&height, 24, "violation_fraction.k2")?.value,
        tau0_found_n16: find(&xbound, 16, "tau0_found")?.value,
        xbound_max_ratio_n16: find(&xbound, 16, "max_ratio")?.value,
    })
}
