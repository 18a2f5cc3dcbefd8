//! Test MSE and coefficient l1 norm along the iteration path, for KReBooT and
//! the two unbounded-norm re-scaled variants.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{fmt, run_trials, trajectory_grid, write_rows, DataRole, EvalTracker, HarnessOptions, Method};
use crate::boosting::{fit_gram_observed, EllSchedule};
use crate::error::{Error, Result};
use crate::kernels::{gram, AtomEvaluations};
use crate::stats::{mean, sample_std};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sim45Config {
    pub methods: Vec<Method>,
    pub m_train: usize,
    pub m_test: usize,
    pub noise_variances: Vec<f64>,
    pub c0: f64,
    pub k_max: usize,
}

impl Sim45Config {
    pub fn new(k_max: usize) -> Self {
        Self {
            methods: vec![Method::KReBooT, Method::KRboosting, Method::KRTboosting],
            m_train: 500,
            m_test: 500,
            noise_variances: vec![1.0, 2.0],
            c0: 0.5,
            k_max,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() || self.noise_variances.is_empty() {
            return Err(Error::InvalidInput(
                "simulation IV/V needs methods and noise levels".into(),
            ));
        }
        if let Some(m) = self.methods.iter().find(|m| m.boost_config(1.0, 1.0).is_none()) {
            return Err(Error::InvalidInput(format!("{} has no iteration path", m.name())));
        }
        if self.m_train == 0 || self.m_test == 0 || self.k_max == 0 || !(self.c0 > 0.0) {
            return Err(Error::InvalidInput(format!("invalid simulation IV/V config {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sim45Row {
    pub noise_variance: f64,
    pub method: Method,
    pub k: usize,
    pub mean_test_mse: f64,
    pub std_test_mse: f64,
    pub mean_l1_norm: f64,
    pub max_l1_norm: f64,
    /// `c0 ln(k + 1)`, the KReBooT norm budget at `k`.
    pub ell_k: f64,
    pub trials: usize,
}

/// Test MSE and l1 curves of one run, sampled on the trajectory grid.
type Curves = (Vec<f64>, Vec<f64>);

/// Rows ordered by noise level, then method, then `k` on the trajectory grid.
pub fn simulation_4_5(config: &Sim45Config, options: &HarnessOptions) -> Result<Vec<Sim45Row>> {
    config.validate()?;
    options.validate()?;
    let grid = trajectory_grid(config.k_max);
    // per trial: [noise][method] -> (mse curve, l1 curve)
    let per_trial: Vec<Vec<Vec<Curves>>> = run_trials(options.trials, options.jobs, |t| {
        let mut g = None;
        let mut by_noise = Vec::with_capacity(config.noise_variances.len());
        for &noise in &config.noise_variances {
            let train = options.dataset(t, DataRole::Train, config.m_train, noise)?;
            let test = options.dataset(t, DataRole::Test, config.m_test, noise)?;
            let g = match &g {
                Some(g) => g,
                None => g.insert(gram(&train.x, &options.kernel)?),
            };
            let evals = AtomEvaluations::new(&train.x, &test.x, &options.kernel)?;
            let mut by_method = Vec::with_capacity(config.methods.len());
            for method in &config.methods {
                let cfg = method
                    .boost_config(config.c0, crate::boosting::VariantPolicy::DEFAULT_EPS)
                    .expect("validated");
                let mut tracker = EvalTracker::new(&evals, &test.clean)?;
                let mut mse = Vec::with_capacity(grid.len());
                let mut l1 = Vec::with_capacity(grid.len());
                let mut next = 0;
                fit_gram_observed(g, &train.y, &cfg, config.k_max, |_, r| {
                    tracker.update(r);
                    if next < grid.len() && grid[next] == r.k {
                        mse.push(tracker.mse());
                        l1.push(r.l1_norm);
                        next += 1;
                    }
                })?;
                let last_mse = mse.last().copied().unwrap_or_else(|| tracker.mse());
                let last_l1 = l1.last().copied().unwrap_or(0.0);
                mse.resize(grid.len(), last_mse);
                l1.resize(grid.len(), last_l1);
                by_method.push((mse, l1));
            }
            by_noise.push(by_method);
        }
        Ok(by_noise)
    })?;

    let ell = EllSchedule::Logarithmic { c0: config.c0 };
    let mut rows = Vec::new();
    for (ni, &noise) in config.noise_variances.iter().enumerate() {
        for (mi, &method) in config.methods.iter().enumerate() {
            for (gi, &k) in grid.iter().enumerate() {
                let mse: Vec<f64> = per_trial.iter().map(|t| t[ni][mi].0[gi]).collect();
                let l1: Vec<f64> = per_trial.iter().map(|t| t[ni][mi].1[gi]).collect();
                rows.push(Sim45Row {
                    noise_variance: noise,
                    method,
                    k,
                    mean_test_mse: mean(&mse),
                    std_test_mse: sample_std(&mse),
                    mean_l1_norm: mean(&l1),
                    max_l1_norm: l1.iter().copied().fold(0.0, f64::max),
                    ell_k: ell.at(k),
                    trials: mse.len(),
                });
            }
        }
    }
    Ok(rows)
}

pub fn write_sim45_csv<W: Write>(writer: W, rows: &[Sim45Row], config: &Sim45Config, seed: u64) -> Result<()> {
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
            "mean_l1_norm",
            "max_l1_norm",
            "ell_k",
        ],
        rows.iter().map(|r| {
            vec![
                "sim45".into(),
                r.method.name().into(),
                fmt(r.noise_variance),
                fmt(config.c0),
                r.k.to_string(),
                seed.to_string(),
                r.trials.to_string(),
                fmt(r.mean_test_mse),
                fmt(r.std_test_mse),
                fmt(r.mean_l1_norm),
                fmt(r.max_l1_norm),
                fmt(r.ell_k),
            ]
        }),
    )
}
