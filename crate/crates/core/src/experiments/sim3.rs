//! Method comparison with validation-based tuning.
//!
//! Boosting methods pick their stopping iteration on the validation set.
//! KRR picks its ridge weight and Klasso its l1 radius from [`tuning_grid`].
//! Validation error is measured against the noisy responses, test error
//! against the noiseless target.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{argmin_first, fmt, run_trials, tuning_grid, write_rows, DataRole, EvalTracker, HarnessOptions};
use crate::baselines::{krr_fit_gram, lasso_fit_gram, operator_norm, KrrConfig, LassoConfig};
use crate::boosting::{fit_gram_observed, mean_squared_difference, BoostConfig, Schedules, VariantPolicy};
use crate::datagen::Dataset;
use crate::error::{Error, Result};
use crate::kernels::{gram, AtomEvaluations, GramMatrix};
use crate::stats::{mean, sample_std};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "KReBooT")]
    KReBooT,
    #[serde(rename = "KRboosting")]
    KRboosting,
    #[serde(rename = "KRTboosting")]
    KRTboosting,
    #[serde(rename = "eps-Kboosting")]
    EpsKboosting,
    #[serde(rename = "Klasso")]
    Klasso,
    #[serde(rename = "KRR")]
    Krr,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::KReBooT,
        Method::KRboosting,
        Method::KRTboosting,
        Method::EpsKboosting,
        Method::Klasso,
        Method::Krr,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::KReBooT => "KReBooT",
            Method::KRboosting => "KRboosting",
            Method::KRTboosting => "KRTboosting",
            Method::EpsKboosting => "eps-Kboosting",
            Method::Klasso => "Klasso",
            Method::Krr => "KRR",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|m| m.name().eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::InvalidInput(format!("unknown method `{name}`")))
    }

    /// Boosting config for the boosting methods, `None` otherwise. `c0` sets
    /// both the KReBooT step-size cap and the truncation scale of KRTboosting.
    pub fn boost_config(&self, c0: f64, eps: f64) -> Option<BoostConfig> {
        let schedules = Schedules::logarithmic(c0);
        let policy = match self {
            Method::KReBooT => VariantPolicy::KReBooT,
            Method::KRboosting => VariantPolicy::Rboosting,
            Method::KRTboosting => VariantPolicy::RtBoosting { cap_scale: c0 },
            Method::EpsKboosting => VariantPolicy::EpsilonBoosting { eps },
            Method::Klasso | Method::Krr => return None,
        };
        Some(BoostConfig::new(schedules, policy))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Setting {
    pub m: usize,
    pub noise_variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sim3Config {
    pub settings: Vec<Setting>,
    pub methods: Vec<Method>,
    pub m_validation: usize,
    pub m_test: usize,
    pub k_max: usize,
    pub c0: f64,
    pub eps: f64,
    /// Projected-gradient iteration budget per radius.
    pub lasso_max_iters: usize,
}

impl Sim3Config {
    /// `m in {300, 1000}` times noise variance `{1, 2}`, all six methods.
    pub fn paper(k_max: usize) -> Self {
        let settings = [300, 1000]
            .iter()
            .flat_map(|&m| [1.0, 2.0].map(|noise_variance| Setting { m, noise_variance }))
            .collect();
        Self {
            settings,
            methods: Method::ALL.to_vec(),
            m_validation: 500,
            m_test: 500,
            k_max,
            c0: 0.5,
            eps: VariantPolicy::DEFAULT_EPS,
            lasso_max_iters: 2000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.settings.is_empty() || self.methods.is_empty() {
            return Err(Error::InvalidInput("simulation III needs settings and methods".into()));
        }
        if self.settings.iter().any(|s| s.m == 0 || !(s.noise_variance >= 0.0)) {
            return Err(Error::InvalidInput("every setting needs m >= 1 and noise >= 0".into()));
        }
        if self.m_validation == 0 || self.m_test == 0 || self.k_max == 0 || self.lasso_max_iters == 0 {
            return Err(Error::InvalidInput(format!("invalid simulation III config {self:?}")));
        }
        if !(self.c0 > 0.0 && self.eps > 0.0) {
            return Err(Error::InvalidInput("c0 and eps must be positive".into()));
        }
        Ok(())
    }
}

/// Mean and sample standard deviation of one method in one setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sim3Cell {
    pub m: usize,
    pub noise_variance: f64,
    pub method: Method,
    pub mean_test_mse: f64,
    pub std_test_mse: f64,
    pub trials: usize,
    /// Mean of the tuned parameter: stopping iteration, ridge weight or radius.
    pub mean_selected: f64,
    pub per_trial: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sim3Report {
    pub settings: Vec<Setting>,
    pub methods: Vec<Method>,
    /// Setting-major, then method, in config order.
    pub cells: Vec<Sim3Cell>,
}

impl Sim3Report {
    pub fn cell(&self, m: usize, noise_variance: f64, method: Method) -> Option<&Sim3Cell> {
        self.cells
            .iter()
            .find(|c| c.m == m && c.noise_variance == noise_variance && c.method == method)
    }
}

struct Split<'a> {
    gram: &'a GramMatrix,
    train: &'a Dataset,
    validation: &'a Dataset,
    test: &'a Dataset,
    val_evals: &'a AtomEvaluations,
    test_evals: &'a AtomEvaluations,
}

/// Returns `(test mse, selected parameter)`.
fn run_method(method: Method, split: &Split<'_>, config: &Sim3Config) -> Result<(f64, f64)> {
    if let Some(cfg) = method.boost_config(config.c0, config.eps) {
        let mut val = EvalTracker::new(split.val_evals, &split.validation.y)?;
        let mut test = EvalTracker::new(split.test_evals, &split.test.clean)?;
        let mut val_curve = Vec::with_capacity(config.k_max);
        let mut test_curve = Vec::with_capacity(config.k_max);
        fit_gram_observed(split.gram, &split.train.y, &cfg, config.k_max, |_, r| {
            val.update(r);
            test.update(r);
            val_curve.push(val.mse());
            test_curve.push(test.mse());
        })?;
        let best = argmin_first(&val_curve)?;
        return Ok((test_curve[best], (best + 1) as f64));
    }

    let grid = tuning_grid();
    let mut val_scores = Vec::with_capacity(grid.len());
    let mut test_scores = Vec::with_capacity(grid.len());
    match method {
        Method::Krr => {
            for &lambda in &grid {
                let a = krr_fit_gram(split.gram, &split.train.y, &KrrConfig { lambda })?;
                val_scores.push(mean_squared_difference(
                    &split.val_evals.combine(&a)?,
                    &split.validation.y,
                ));
                test_scores.push(mean_squared_difference(
                    &split.test_evals.combine(&a)?,
                    &split.test.clean,
                ));
            }
        }
        Method::Klasso => {
            let op = operator_norm(split.gram, 50);
            let step = 0.5 * split.gram.size() as f64 / (op * op).max(f64::MIN_POSITIVE);
            let mut warm: Option<Vec<f64>> = None;
            for &radius in &grid {
                let cfg = LassoConfig {
                    radius,
                    max_iters: config.lasso_max_iters,
                    step_size: Some(step),
                    tolerance: 1e-12,
                };
                let fit = lasso_fit_gram(split.gram, &split.train.y, &cfg, warm.as_deref())?;
                val_scores.push(mean_squared_difference(
                    &split.val_evals.combine(&fit.coefficients)?,
                    &split.validation.y,
                ));
                test_scores.push(mean_squared_difference(
                    &split.test_evals.combine(&fit.coefficients)?,
                    &split.test.clean,
                ));
                warm = Some(fit.coefficients);
            }
        }
        _ => unreachable!("boosting methods handled above"),
    }
    let best = argmin_first(&val_scores)?;
    Ok((test_scores[best], grid[best]))
}

pub fn simulation_3(config: &Sim3Config, options: &HarnessOptions) -> Result<Sim3Report> {
    config.validate()?;
    options.validate()?;
    // per trial: [setting][method] -> (mse, selected)
    let per_trial: Vec<Vec<Vec<(f64, f64)>>> = run_trials(options.trials, options.jobs, |t| {
        let mut out = Vec::with_capacity(config.settings.len());
        for setting in &config.settings {
            let train = options.dataset(t, DataRole::Train, setting.m, setting.noise_variance)?;
            let validation = options.dataset(t, DataRole::Validation, config.m_validation, setting.noise_variance)?;
            let test = options.dataset(t, DataRole::Test, config.m_test, setting.noise_variance)?;
            let g = gram(&train.x, &options.kernel)?;
            let val_evals = AtomEvaluations::new(&train.x, &validation.x, &options.kernel)?;
            let test_evals = AtomEvaluations::new(&train.x, &test.x, &options.kernel)?;
            let split = Split {
                gram: &g,
                train: &train,
                validation: &validation,
                test: &test,
                val_evals: &val_evals,
                test_evals: &test_evals,
            };
            let row = config
                .methods
                .iter()
                .map(|&method| run_method(method, &split, config))
                .collect::<Result<Vec<_>>>()?;
            out.push(row);
        }
        Ok(out)
    })?;

    let mut cells = Vec::new();
    for (si, setting) in config.settings.iter().enumerate() {
        for (mi, &method) in config.methods.iter().enumerate() {
            let values: Vec<f64> = per_trial.iter().map(|t| t[si][mi].0).collect();
            let selected: Vec<f64> = per_trial.iter().map(|t| t[si][mi].1).collect();
            cells.push(Sim3Cell {
                m: setting.m,
                noise_variance: setting.noise_variance,
                method,
                mean_test_mse: mean(&values),
                std_test_mse: sample_std(&values),
                trials: values.len(),
                mean_selected: mean(&selected),
                per_trial: values,
            });
        }
    }
    Ok(Sim3Report {
        settings: config.settings.clone(),
        methods: config.methods.clone(),
        cells,
    })
}

/// One row per setting, one `mean±std` column per method.
pub fn write_sim3_table_csv<W: Write>(writer: W, report: &Sim3Report, seed: u64) -> Result<()> {
    let mut header = vec!["simulation", "m", "noise_variance", "seed", "trials"];
    header.extend(report.methods.iter().map(|m| m.name()));
    let rows = report.settings.iter().map(|s| {
        let mut row = vec![
            "sim3".to_string(),
            s.m.to_string(),
            fmt(s.noise_variance),
            seed.to_string(),
        ];
        let trials = report.cells.first().map_or(0, |c| c.trials);
        row.push(trials.to_string());
        for &method in &report.methods {
            let cell = report
                .cell(s.m, s.noise_variance, method)
                .expect("cell for every method");
            row.push(format!("{:.4}±{:.4}", cell.mean_test_mse, cell.std_test_mse));
        }
        row
    });
    write_rows(writer, &header, rows)
}

/// Long format with full precision: one row per (setting, method).
pub fn write_sim3_cells_csv<W: Write>(writer: W, report: &Sim3Report, seed: u64) -> Result<()> {
    write_rows(
        writer,
        &[
            "simulation",
            "method",
            "m",
            "noise_variance",
            "seed",
            "trials",
            "mean_test_mse",
            "std_test_mse",
            "mean_selected_parameter",
        ],
        report.cells.iter().map(|c| {
            vec![
                "sim3".into(),
                c.method.name().into(),
                c.m.to_string(),
                fmt(c.noise_variance),
                seed.to_string(),
                c.trials.to_string(),
                fmt(c.mean_test_mse),
                fmt(c.std_test_mse),
                fmt(c.mean_selected),
            ]
        }),
    )
}
