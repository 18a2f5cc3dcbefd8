//! Empirical convergence rate of the training risk towards the least-squares
//! optimum over the kernel span.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{fmt, write_rows};
use crate::baselines::least_squares_gram;
use crate::boosting::{
    fit_gram_observed, mean_squared_difference, AlphaSchedule, BoostConfig, EllSchedule, Schedules, VariantPolicy,
};
use crate::datagen::{generate, DataGenConfig, InputLaw};
use crate::error::{Error, Result};
use crate::kernels::{gram, RadialKernel};
use crate::stats::{linear_fit, log_space};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateConfig {
    pub m: usize,
    pub noise_variance: f64,
    pub seed: u64,
    pub c0: f64,
    pub alpha: AlphaSchedule,
    pub k_max: usize,
    /// Inclusive `[k_lo, k_hi]` range of the slope fit.
    pub window: (usize, usize),
    /// Number of log-spaced iterations sampled inside the window.
    pub points: usize,
    pub input_law: InputLaw,
    pub kernel: RadialKernel,
}

impl Default for RateConfig {
    fn default() -> Self {
        Self {
            m: 50,
            noise_variance: 0.1,
            seed: 42,
            c0: 5.0,
            alpha: AlphaSchedule::Harmonic,
            k_max: 10_000,
            window: (100, 10_000),
            points: 40,
            input_law: InputLaw::UniformBall3,
            kernel: RadialKernel::Wendland31,
        }
    }
}

impl RateConfig {
    pub fn validate(&self) -> Result<()> {
        self.alpha.validate()?;
        self.kernel.validate()?;
        let (lo, hi) = self.window;
        if self.m == 0 || !(self.c0 > 0.0) || self.points == 0 {
            return Err(Error::InvalidInput(format!("invalid rate config {self:?}")));
        }
        if lo == 0 || lo > hi || hi > self.k_max {
            return Err(Error::InvalidInput(format!(
                "window [{lo}, {hi}] must satisfy 1 <= lo <= hi <= k_max = {}",
                self.k_max
            )));
        }
        Ok(())
    }

    /// Iterations at which the excess risk enters the fit.
    pub fn sample_iterations(&self) -> Vec<usize> {
        let (lo, hi) = self.window;
        let mut ks: Vec<usize> = log_space(lo as f64, hi as f64, self.points.max(1))
            .into_iter()
            .map(|k| k.round() as usize)
            .collect();
        ks.dedup();
        ks
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub config: RateConfig,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Risk of the least-squares solution over the kernel span.
    pub optimal_risk: f64,
    /// `(k, risk_k - optimal_risk)` at the sampled iterations.
    pub excess: Vec<(usize, f64)>,
    /// l1 norm of the least-squares coefficients.
    pub optimum_l1_norm: f64,
    /// First iteration whose step-size cap reaches `optimum_l1_norm`.
    pub k_star: Option<usize>,
    pub warnings: Vec<String>,
}

pub fn rates(config: &RateConfig) -> Result<RateReport> {
    config.validate()?;
    let mut data_cfg = DataGenConfig::new(config.m, config.noise_variance, config.seed);
    data_cfg.input_law = config.input_law;
    let data = generate(&data_cfg)?;
    let g = gram(&data.x, &config.kernel)?;

    let a_ls = least_squares_gram(&g, &data.y)?;
    let optimal_risk = mean_squared_difference(&g.mul_vec(&a_ls), &data.y);
    let optimum_l1_norm: f64 = a_ls.iter().map(|a| a.abs()).sum();

    let schedules = Schedules {
        alpha: config.alpha,
        ell: EllSchedule::Logarithmic { c0: config.c0 },
    };
    let boost = BoostConfig::new(schedules, VariantPolicy::KReBooT);
    let ks = config.sample_iterations();
    let mut risks = Vec::with_capacity(ks.len());
    let mut next = 0;
    fit_gram_observed(&g, &data.y, &boost, config.window.1, |_, r| {
        if next < ks.len() && ks[next] == r.k {
            risks.push(r.risk);
            next += 1;
        }
    })?;

    let mut warnings = Vec::new();
    if risks.len() < ks.len() {
        warnings.push(format!(
            "dictionary exhausted after {} of {} sampled iterations",
            risks.len(),
            ks.len()
        ));
    }
    let mut excess = Vec::with_capacity(risks.len());
    let (mut log_k, mut log_e) = (Vec::new(), Vec::new());
    for (&k, &risk) in ks.iter().zip(&risks) {
        let e = risk - optimal_risk;
        excess.push((k, e));
        if e > 0.0 {
            log_k.push((k as f64).ln());
            log_e.push(e.ln());
        }
    }
    if log_k.len() < excess.len() {
        warnings.push(format!(
            "{} sampled iterations reached the optimum to machine precision and were left out of the fit",
            excess.len() - log_k.len()
        ));
    }
    let line = linear_fit(&log_k, &log_e)?;
    if risks.windows(2).all(|w| w[0] == w[1]) {
        warnings.push("risk trajectory is flat; the estimator never moved".into());
    }
    let k_star = (1..=config.k_max).find(|&k| schedules.ell.at(k) >= optimum_l1_norm);

    Ok(RateReport {
        config: *config,
        slope: line.slope,
        intercept: line.intercept,
        r_squared: line.r_squared,
        optimal_risk,
        excess,
        optimum_l1_norm,
        k_star,
        warnings,
    })
}

/// The sampled excess-risk trajectory, one row per iteration.
pub fn write_rates_csv<W: Write>(writer: W, report: &RateReport) -> Result<()> {
    write_rows(
        writer,
        &["simulation", "method", "m", "c0", "seed", "k", "excess_risk"],
        report.excess.iter().map(|&(k, e)| {
            vec![
                "rates".into(),
                "KReBooT".into(),
                report.config.m.to_string(),
                fmt(report.config.c0),
                report.config.seed.to_string(),
                k.to_string(),
                fmt(e),
            ]
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_window_is_degenerate() {
        let cfg = RateConfig {
            window: (100, 100),
            k_max: 100,
            ..RateConfig::default()
        };
        assert!(matches!(rates(&cfg), Err(Error::DegenerateFit(_))));
    }

    #[test]
    fn zero_rescaling_freezes_the_estimator() {
        let cfg = RateConfig {
            alpha: AlphaSchedule::Constant { value: 0.0 },
            k_max: 300,
            window: (10, 300),
            points: 10,
            ..RateConfig::default()
        };
        let report = rates(&cfg).unwrap();
        assert!(report.slope.abs() < 1e-12, "{}", report.slope);
        assert!(report.warnings.iter().any(|w| w.contains("flat")));
    }

    #[test]
    fn window_outside_run_is_rejected() {
        let cfg = RateConfig {
            window: (10, 20_000),
            ..RateConfig::default()
        };
        assert!(rates(&cfg).is_err());
    }

    #[test]
    fn samples_are_strictly_increasing() {
        let ks = RateConfig::default().sample_iterations();
        assert_eq!(ks.first(), Some(&100));
        assert_eq!(ks.last(), Some(&10_000));
        assert!(ks.windows(2).all(|w| w[0] < w[1]));
    }
}
