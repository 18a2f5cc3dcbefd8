//! Test MSE over the (iteration, c0) plane.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{fmt, run_trials, trajectory_grid, write_rows, DataRole, EvalTracker, HarnessOptions, SweepSpec};
use crate::boosting::{fit_gram_observed, BoostConfig};
use crate::error::{Error, Result};
use crate::kernels::{gram, AtomEvaluations};
use crate::stats::{mean, sample_std};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sim1Config {
    /// Sweep over `c0`; its `trials_per_value` sets the trial count.
    pub c0_sweep: SweepSpec,
    pub m_train: usize,
    pub m_test: usize,
    pub noise_variances: Vec<f64>,
    pub k_max: usize,
}

impl Sim1Config {
    /// 50 log-spaced `c0` in `[0.1, 80]`, 500/500 samples, both noise levels.
    pub fn paper(trials: usize, k_max: usize) -> Result<Self> {
        Ok(Self {
            c0_sweep: SweepSpec::log_spaced("c0", 0.1, 80.0, 50, trials)?,
            m_train: 500,
            m_test: 500,
            noise_variances: vec![1.0, 2.0],
            k_max,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.c0_sweep.validate()?;
        if self.c0_sweep.values.iter().any(|&c| !(c > 0.0 && c.is_finite())) {
            return Err(Error::InvalidInput("every c0 must be positive".into()));
        }
        if self.m_train == 0 || self.m_test == 0 || self.k_max == 0 || self.noise_variances.is_empty() {
            return Err(Error::InvalidInput(format!("invalid simulation I config {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sim1Row {
    pub noise_variance: f64,
    pub c0: f64,
    pub k: usize,
    pub mean_test_mse: f64,
    pub std_test_mse: f64,
    pub trials: usize,
}

/// Rows ordered by noise level, then `c0`, then `k` on the trajectory grid.
pub fn simulation_1(config: &Sim1Config, options: &HarnessOptions) -> Result<Vec<Sim1Row>> {
    config.validate()?;
    options.validate()?;
    let grid = trajectory_grid(config.k_max);
    let trials = config.c0_sweep.trials_per_value;
    // per trial: [noise][c0][grid point] -> mse
    let per_trial: Vec<Vec<Vec<Vec<f64>>>> = run_trials(trials, options.jobs, |t| {
        let mut by_noise = Vec::with_capacity(config.noise_variances.len());
        // noise levels share their inputs, hence the Gram matrix
        let mut g = None;
        for &noise in &config.noise_variances {
            let train = options.dataset(t, DataRole::Train, config.m_train, noise)?;
            let test = options.dataset(t, DataRole::Test, config.m_test, noise)?;
            let g = match &g {
                Some(g) => g,
                None => g.insert(gram(&train.x, &options.kernel)?),
            };
            let evals = AtomEvaluations::new(&train.x, &test.x, &options.kernel)?;
            let mut by_c0 = Vec::with_capacity(config.c0_sweep.values.len());
            for &c0 in &config.c0_sweep.values {
                let mut tracker = EvalTracker::new(&evals, &test.clean)?;
                let mut curve = Vec::with_capacity(grid.len());
                let cfg = BoostConfig::kreboot(c0);
                let mut next = 0;
                fit_gram_observed(g, &train.y, &cfg, config.k_max, |_, r| {
                    tracker.update(r);
                    if next < grid.len() && grid[next] == r.k {
                        curve.push(tracker.mse());
                        next += 1;
                    }
                })?;
                // an exhausted dictionary freezes the estimator
                let last = curve.last().copied().unwrap_or_else(|| tracker.mse());
                curve.resize(grid.len(), last);
                by_c0.push(curve);
            }
            by_noise.push(by_c0);
        }
        Ok(by_noise)
    })?;

    let mut rows = Vec::new();
    for (ni, &noise) in config.noise_variances.iter().enumerate() {
        for (ci, &c0) in config.c0_sweep.values.iter().enumerate() {
            for (gi, &k) in grid.iter().enumerate() {
                let values: Vec<f64> = per_trial.iter().map(|t| t[ni][ci][gi]).collect();
                rows.push(Sim1Row {
                    noise_variance: noise,
                    c0,
                    k,
                    mean_test_mse: mean(&values),
                    std_test_mse: sample_std(&values),
                    trials,
                });
            }
        }
    }
    Ok(rows)
}

pub fn write_sim1_csv<W: Write>(writer: W, rows: &[Sim1Row], seed: u64) -> Result<()> {
    write_rows(
        writer,
        &[
            "simulation",
            "method",
            "noise_variance",
            "c0",
            "k",
            "seed",
            "trials",
            "mean_test_mse",
            "std_test_mse",
        ],
        rows.iter().map(|r| {
            vec![
                "sim1".into(),
                "KReBooT".into(),
                fmt(r.noise_variance),
                fmt(r.c0),
                r.k.to_string(),
                seed.to_string(),
                r.trials.to_string(),
                fmt(r.mean_test_mse),
                fmt(r.std_test_mse),
            ]
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(values: Vec<f64>, trials: usize, k_max: usize) -> Sim1Config {
        Sim1Config {
            c0_sweep: SweepSpec::new("c0", values, trials).unwrap(),
            m_train: 60,
            m_test: 40,
            noise_variances: vec![1.0],
            k_max,
        }
    }

    #[test]
    fn smoke_grid_has_one_row_per_value_and_grid_point() {
        let rows = simulation_1(&small(vec![0.5, 50.0], 2, 30), &HarnessOptions::default()).unwrap();
        assert_eq!(rows.len(), 2 * 30);
        assert!(rows.iter().all(|r| r.trials == 2 && r.mean_test_mse >= 0.0));
        assert_eq!(rows[30].c0, 50.0);
        assert_eq!(rows[30].k, 1);
    }

    #[test]
    fn vanishing_budget_keeps_model_at_zero() {
        let cfg = small(vec![1e-6], 2, 50);
        let opts = HarnessOptions::default();
        let rows = simulation_1(&cfg, &opts).unwrap();
        let zero_mse: Vec<f64> = (0..2)
            .map(|t| {
                let test = opts.dataset(t, DataRole::Test, 40, 1.0).unwrap();
                test.clean.iter().map(|c| c * c).sum::<f64>() / 40.0
            })
            .collect();
        let expected = mean(&zero_mse);
        let last = rows.last().unwrap().mean_test_mse;
        assert!((last - expected).abs() < 1e-3 * expected, "{last} vs {expected}");
    }

    #[test]
    fn csv_header_is_stable() {
        let rows = simulation_1(&small(vec![0.5], 1, 3), &HarnessOptions::default()).unwrap();
        let mut buf = Vec::new();
        write_sim1_csv(&mut buf, &rows, 42).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("simulation,method,noise_variance,c0,k,seed,trials,mean_test_mse,std_test_mse\n"));
        assert_eq!(text.lines().count(), 4);
    }
}
