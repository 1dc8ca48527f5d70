use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, Method};
use super::trial::{run_trial, Prepared, TrialParams, TrialRow};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    /// Mean realized SNR over the configured grid.
    Snr,
    /// Prediction error std at a fixed mean realized SNR.
    Mismatch,
}

impl SweepKind {
    pub fn variable(self) -> &'static str {
        match self {
            SweepKind::Snr => "mean_snr_db",
            SweepKind::Mismatch => "sigma_err_db",
        }
    }

    pub fn grid(self, config: &ExperimentConfig) -> Vec<f64> {
        match self {
            SweepKind::Snr => config.sweep.snr_grid_db.clone(),
            SweepKind::Mismatch => config.sweep.mismatch_grid_db.clone(),
        }
    }

    pub fn params(self, config: &ExperimentConfig, value: f64) -> TrialParams {
        match self {
            SweepKind::Snr => TrialParams {
                target_mean_snr_db: Some(value),
                sigma_err_db: config.sigma_err_db,
            },
            SweepKind::Mismatch => TrialParams {
                target_mean_snr_db: Some(config.sweep.mismatch_mean_snr_db),
                sigma_err_db: value,
            },
        }
    }
}

/// Mean and standard error of the mean (sample std over `sqrt(n)`).
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub method: Method,
    pub sweep_var: &'static str,
    pub value: f64,
    pub psnr_mean: f64,
    pub psnr_se: f64,
    pub ssim_mean: f64,
    pub ssim_se: f64,
    pub trials: usize,
}

impl AggregateRow {
    pub fn from_trials(
        method: Method,
        sweep_var: &'static str,
        value: f64,
        rows: &[TrialRow],
    ) -> Self {
        let psnr: Vec<f64> = rows.iter().map(|r| r.psnr_db).collect();
        let ssim: Vec<f64> = rows.iter().map(|r| r.ssim).collect();
        let (psnr_mean, psnr_se) = mean_se(&psnr);
        let (ssim_mean, ssim_se) = mean_se(&ssim);
        Self {
            method,
            sweep_var,
            value,
            psnr_mean,
            psnr_se,
            ssim_mean,
            ssim_se,
            trials: rows.len(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GridFailure {
    pub value: f64,
    pub error: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub kind: SweepKind,
    pub rows: Vec<AggregateRow>,
    #[serde(skip)]
    pub trials: Vec<(f64, TrialRow)>,
    pub failures: Vec<GridFailure>,
}

/// Runs every `(grid point, method, trial)` work unit in parallel and reduces
/// in that fixed order, so the thread count never changes the output.
pub fn run_sweep(
    config: &ExperimentConfig,
    prepared: &Prepared,
    kind: SweepKind,
) -> Result<SweepResult> {
    let grid = kind.grid(config);
    if grid.is_empty() {
        return Err(Error::Config(format!(
            "{} sweep grid is empty",
            kind.variable()
        )));
    }
    let methods = &config.sweep.methods;
    let units: Vec<(usize, usize, usize)> = (0..grid.len())
        .flat_map(|g| {
            (0..methods.len()).flat_map(move |m| (0..config.trials).map(move |t| (g, m, t)))
        })
        .collect();

    let outcomes: Vec<Result<TrialRow>> = units
        .par_iter()
        .map(|&(g, m, t)| {
            run_trial(
                config,
                prepared,
                methods[m],
                t,
                kind.params(config, grid[g]),
            )
            .map(|o| o.row)
        })
        .collect();

    let mut outcomes = outcomes.into_iter();
    let mut rows = Vec::new();
    let mut trials = Vec::new();
    let mut failures = Vec::new();
    for &value in &grid {
        let point: Vec<Result<TrialRow>> = outcomes
            .by_ref()
            .take(methods.len() * config.trials)
            .collect();
        let point: Vec<TrialRow> = match point.into_iter().collect::<Result<_>>() {
            Ok(p) => p,
            Err(Error::Calibration(error)) => {
                failures.push(GridFailure { value, error });
                continue;
            }
            Err(e) => return Err(e),
        };
        for (m, method_rows) in point.chunks(config.trials).enumerate() {
            rows.push(AggregateRow::from_trials(
                methods[m],
                kind.variable(),
                value,
                method_rows,
            ));
            trials.extend(method_rows.iter().map(|r| (value, r.clone())));
        }
    }
    Ok(SweepResult {
        kind,
        rows,
        trials,
        failures,
    })
}
