//! Simulation harness: trial orchestration, model selection, MSE evaluation
//! and CSV reports for the five simulation studies and the rate check.
//!
//! Every simulation is a deterministic function of its config and master
//! seed. Trial `t` draws its training, validation and test sets from
//! `derive_seed(derive_seed(master, t), role)` with roles 0, 1 and 2, so runs
//! that differ only in noise level are paired: same inputs, same standard
//! normal draws, scaled noise. Trials run on a pool of `jobs` workers and are
//! folded in trial order, so the worker count never changes the output.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boosting::{mean_squared_difference, StepRecord};
use crate::datagen::{derive_seed, generate, DataGenConfig, Dataset, InputLaw};
use crate::error::{Error, Result};
use crate::kernels::{AtomEvaluations, RadialKernel};
use crate::model::FittedModel;

mod rates;
mod sim1;
mod sim2;
mod sim3;
mod sim45;

pub use rates::{rates, write_rates_csv, RateConfig, RateReport};
pub use sim1::{simulation_1, write_sim1_csv, Sim1Config, Sim1Row};
pub use sim2::{simulation_2, write_sim2_csv, Sim2Config, Sim2Row};
pub use sim3::{
    simulation_3, write_sim3_cells_csv, write_sim3_table_csv, Method, Setting, Sim3Cell, Sim3Config, Sim3Report,
};
pub use sim45::{simulation_4_5, write_sim45_csv, Sim45Config, Sim45Row};

/// Options shared by every simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarnessOptions {
    pub master_seed: u64,
    pub trials: usize,
    /// Worker threads; `0` means one per logical CPU.
    pub jobs: usize,
    pub input_law: InputLaw,
    pub kernel: RadialKernel,
}

impl Default for HarnessOptions {
    fn default() -> Self {
        Self {
            master_seed: 42,
            trials: 20,
            jobs: 0,
            input_law: InputLaw::UniformBall3,
            kernel: RadialKernel::Wendland31,
        }
    }
}

impl HarnessOptions {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidInput("trials must be >= 1".into()));
        }
        self.kernel.validate()
    }

    pub fn trial_seed(&self, trial: usize) -> u64 {
        derive_seed(self.master_seed, trial as u64)
    }

    /// Dataset of the given role for one trial.
    pub fn dataset(&self, trial: usize, role: DataRole, m: usize, noise_variance: f64) -> Result<Dataset> {
        let mut cfg = DataGenConfig::new(m, noise_variance, derive_seed(self.trial_seed(trial), role as u64));
        cfg.input_law = self.input_law;
        generate(&cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataRole {
    Train = 0,
    Validation = 1,
    Test = 2,
}

/// Runs `trials` independent closures on `jobs` workers and returns the
/// results in trial order.
pub fn run_trials<T, F>(trials: usize, jobs: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot start worker pool: {e}")))?;
    pool.install(|| (0..trials).into_par_iter().map(&f).collect())
}

/// Outcome of one method on one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub method: String,
    pub params: BTreeMap<String, f64>,
    pub test_mse: f64,
    pub risk_trajectory: Option<Vec<f64>>,
    pub l1_trajectory: Option<Vec<f64>>,
    pub wall_time: f64,
}

/// A one-parameter sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub parameter: String,
    pub values: Vec<f64>,
    pub trials_per_value: usize,
}

impl SweepSpec {
    pub fn new(parameter: impl Into<String>, values: Vec<f64>, trials_per_value: usize) -> Result<Self> {
        let spec = Self {
            parameter: parameter.into(),
            values,
            trials_per_value,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `n` values log-spaced over `[lo, hi]`.
    pub fn log_spaced(parameter: impl Into<String>, lo: f64, hi: f64, n: usize, trials: usize) -> Result<Self> {
        Self::new(parameter, crate::stats::log_space(lo, hi, n), trials)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidInput(format!(
                "sweep over `{}` has no values",
                self.parameter
            )));
        }
        if self.trials_per_value == 0 {
            return Err(Error::InvalidInput("trials per value must be >= 1".into()));
        }
        Ok(())
    }
}

/// `(1/n) sum_t (prediction_t - g(x_t))^2`, measured against the noiseless
/// target.
pub fn mse_against_clean(predictions: &[f64], test_set: &Dataset) -> Result<f64> {
    crate::error::check_len(test_set.len(), predictions.len(), "predictions")?;
    Ok(mean_squared_difference(predictions, &test_set.clean))
}

pub fn test_mse(model: &FittedModel, test_set: &Dataset) -> Result<f64> {
    mse_against_clean(&model.predict(&test_set.x)?, test_set)
}

/// Index of the smallest validation error; ties go to the earliest entry.
pub fn argmin_first(values: &[f64]) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some((_, b)) if !(v < b) => {}
            _ if v.is_nan() => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i).ok_or(Error::EmptyHistory)
}

/// Iteration with the lowest validation error among `(k, mse)` pairs.
pub fn select_model(validation_curve: &[(usize, f64)]) -> Result<usize> {
    let values: Vec<f64> = validation_curve.iter().map(|&(_, v)| v).collect();
    argmin_first(&values).map(|i| validation_curve[i].0)
}

/// 30 log-spaced values over `[1e-4, 1e2]`, used for both the ridge weight and
/// the l1 radius.
pub fn tuning_grid() -> Vec<f64> {
    crate::stats::log_space(1e-4, 1e2, 30)
}

/// Predictions of the boosted estimator on a held-out set, kept in step with
/// the iteration: `p <- (1 - alpha) p + beta K(x_j, .)`.
pub struct EvalTracker<'a> {
    evaluations: &'a AtomEvaluations,
    targets: &'a [f64],
    predictions: Vec<f64>,
}

impl<'a> EvalTracker<'a> {
    pub fn new(evaluations: &'a AtomEvaluations, targets: &'a [f64]) -> Result<Self> {
        crate::error::check_len(evaluations.n_queries(), targets.len(), "tracker targets")?;
        Ok(Self {
            predictions: vec![0.0; evaluations.n_queries()],
            evaluations,
            targets,
        })
    }

    pub fn update(&mut self, record: &StepRecord) {
        let keep = 1.0 - record.alpha;
        let atom = self.evaluations.atom(record.index);
        if record.alpha != 0.0 {
            self.predictions.iter_mut().for_each(|p| *p *= keep);
        }
        if record.beta != 0.0 {
            for (p, v) in self.predictions.iter_mut().zip(atom) {
                *p += record.beta * v;
            }
        }
    }

    pub fn mse(&self) -> f64 {
        mean_squared_difference(&self.predictions, self.targets)
    }

    pub fn predictions(&self) -> &[f64] {
        &self.predictions
    }
}

/// Iterations at which trajectories are reported: all up to 1000, then every
/// 10th.
pub fn trajectory_grid(k_max: usize) -> Vec<usize> {
    (1..=k_max)
        .filter(|&k| crate::boosting::HistoryThinning::TRAJECTORY.records(k))
        .collect()
}

/// Writes rows of already-formatted fields with a header.
pub(crate) fn write_rows<W: Write>(
    writer: W,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn fmt(v: f64) -> String {
    format!("{v}")
}
