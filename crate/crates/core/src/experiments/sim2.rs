//! Test MSE as a function of the training-set size.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{fmt, run_trials, write_rows, DataRole, EvalTracker, HarnessOptions};
use crate::boosting::{fit_gram_observed, BoostConfig};
use crate::error::{Error, Result};
use crate::kernels::{gram, AtomEvaluations};
use crate::stats::{mean, sample_std};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sim2Config {
    pub m_grid: Vec<usize>,
    pub m_test: usize,
    pub noise_variances: Vec<f64>,
    pub c0: f64,
    /// The estimator after `k_max` iterations is evaluated; there is no
    /// validation set in this study.
    pub k_max: usize,
}

impl Sim2Config {
    pub const DESK_M_GRID: [usize; 4] = [300, 900, 1500, 4500];
    pub const FULL_M_GRID: [usize; 5] = [300, 900, 1500, 4500, 12000];

    pub fn new(full_scale: bool, k_max: usize) -> Self {
        Self {
            m_grid: if full_scale {
                Self::FULL_M_GRID.to_vec()
            } else {
                Self::DESK_M_GRID.to_vec()
            },
            m_test: 500,
            noise_variances: vec![1.0, 2.0],
            c0: 0.5,
            k_max,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_grid.is_empty() || self.m_grid.contains(&0) {
            return Err(Error::InvalidInput("m grid must be non-empty and positive".into()));
        }
        if self.m_test == 0 || self.k_max == 0 || self.noise_variances.is_empty() || !(self.c0 > 0.0) {
            return Err(Error::InvalidInput(format!("invalid simulation II config {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sim2Row {
    pub noise_variance: f64,
    pub m: usize,
    pub mean_test_mse: f64,
    pub std_test_mse: f64,
    pub trials: usize,
    /// Per-trial values in trial order.
    pub per_trial: Vec<f64>,
}

/// Rows ordered by noise level, then `m`.
pub fn simulation_2(config: &Sim2Config, options: &HarnessOptions) -> Result<Vec<Sim2Row>> {
    config.validate()?;
    options.validate()?;
    let cfg = BoostConfig::kreboot(config.c0);
    // per trial: [m][noise]
    let per_trial: Vec<Vec<Vec<f64>>> = run_trials(options.trials, options.jobs, |t| {
        let mut by_m = Vec::with_capacity(config.m_grid.len());
        for &m in &config.m_grid {
            let mut g = None;
            let mut by_noise = Vec::with_capacity(config.noise_variances.len());
            for &noise in &config.noise_variances {
                let train = options.dataset(t, DataRole::Train, m, noise)?;
                let test = options.dataset(t, DataRole::Test, config.m_test, noise)?;
                let g = match &g {
                    Some(g) => g,
                    None => g.insert(gram(&train.x, &options.kernel)?),
                };
                let evals = AtomEvaluations::new(&train.x, &test.x, &options.kernel)?;
                let mut tracker = EvalTracker::new(&evals, &test.clean)?;
                fit_gram_observed(g, &train.y, &cfg, config.k_max, |_, r| tracker.update(r))?;
                by_noise.push(tracker.mse());
            }
            by_m.push(by_noise);
        }
        Ok(by_m)
    })?;

    let mut rows = Vec::new();
    for (ni, &noise) in config.noise_variances.iter().enumerate() {
        for (mi, &m) in config.m_grid.iter().enumerate() {
            let values: Vec<f64> = per_trial.iter().map(|t| t[mi][ni]).collect();
            rows.push(Sim2Row {
                noise_variance: noise,
                m,
                mean_test_mse: mean(&values),
                std_test_mse: sample_std(&values),
                trials: values.len(),
                per_trial: values,
            });
        }
    }
    Ok(rows)
}

pub fn write_sim2_csv<W: Write>(writer: W, rows: &[Sim2Row], config: &Sim2Config, seed: u64) -> Result<()> {
    write_rows(
        writer,
        &[
            "simulation",
            "method",
            "noise_variance",
            "m",
            "c0",
            "k_max",
            "seed",
            "trials",
            "mean_test_mse",
            "std_test_mse",
        ],
        rows.iter().map(|r| {
            vec![
                "sim2".into(),
                "KReBooT".into(),
                fmt(r.noise_variance),
                r.m.to_string(),
                fmt(config.c0),
                config.k_max.to_string(),
                seed.to_string(),
                r.trials.to_string(),
                fmt(r.mean_test_mse),
                fmt(r.std_test_mse),
            ]
        }),
    )
}
