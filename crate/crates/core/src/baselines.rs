//! Comparator solvers: kernel ridge regression and l1-ball constrained kernel
//! least squares. Both double as ground-truth oracles for the boosting
//! iteration.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::datagen::Dataset;
use crate::error::{check_len, Error, Result};
use crate::kernels::{gram, GramMatrix, RadialKernel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KrrConfig {
    pub lambda: f64,
}

impl KrrConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambda.is_finite() && self.lambda > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "lambda must be positive, got {}",
                self.lambda
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LassoConfig {
    /// Radius `L` of the l1 ball.
    pub radius: f64,
    pub max_iters: usize,
    /// `None` uses `m / (2 |G|_op^2)`, the inverse Lipschitz constant of the
    /// gradient.
    pub step_size: Option<f64>,
    /// Stop once one iteration lowers the objective by less than this.
    pub tolerance: f64,
}

impl LassoConfig {
    pub fn new(radius: f64) -> Self {
        Self {
            radius,
            max_iters: 100_000,
            step_size: None,
            tolerance: 1e-14,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let step_ok = self.step_size.is_none_or(|s| s.is_finite() && s > 0.0);
        if self.radius > 0.0 && self.radius.is_finite() && self.max_iters > 0 && step_ok && self.tolerance > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid lasso configuration {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    pub coefficients: Vec<f64>,
    /// `(1/m) |G a - y|^2` at the returned point.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after every iteration, starting with the initial point.
    pub trace: Vec<f64>,
}

/// Solves `(A + shift I) x = b` by Cholesky, adding jitter when the
/// factorisation fails: first none, then `1e-12 trace`, growing tenfold up to
/// `1e-6 trace`.
pub fn solve_spd_with_jitter(matrix: &GramMatrix, shift: f64, rhs: &[f64]) -> Result<(Vec<f64>, f64)> {
    let m = matrix.size();
    check_len(m, rhs.len(), "right-hand side")?;
    let base = DMatrix::from_row_slice(m, m, matrix.as_row_major());
    let trace = matrix.trace() + shift * m as f64;
    let b = DVector::from_column_slice(rhs);
    let mut jitter = 0.0;
    let max_jitter = 1e-6 * trace;
    loop {
        let mut a = base.clone();
        for i in 0..m {
            a[(i, i)] += shift + jitter;
        }
        if let Some(chol) = a.cholesky() {
            return Ok((chol.solve(&b).as_slice().to_vec(), jitter));
        }
        jitter = if jitter == 0.0 { 1e-12 * trace } else { jitter * 10.0 };
        if jitter > max_jitter * (1.0 + 1e-9) {
            return Err(Error::Singular { jitter: jitter / 10.0 });
        }
    }
}

/// Kernel ridge regression: `(G + m lambda I) a = y`.
pub fn krr_fit_gram(gram: &GramMatrix, y: &[f64], config: &KrrConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let shift = gram.size() as f64 * config.lambda;
    solve_spd_with_jitter(gram, shift, y).map(|(a, _)| a)
}

pub fn krr_fit(data: &Dataset, kernel: &RadialKernel, config: &KrrConfig) -> Result<Vec<f64>> {
    krr_fit_gram(&gram(&data.x, kernel)?, &data.y, config)
}

/// Interpolating least-squares solution `G a = y`, regularised by a `1e-10`
/// diagonal shift (plus escalating jitter if that is not enough).
pub fn least_squares_gram(gram: &GramMatrix, y: &[f64]) -> Result<Vec<f64>> {
    solve_spd_with_jitter(gram, 1e-10, y).map(|(a, _)| a)
}

/// `(1/m) |G a - y|^2`.
pub fn kernel_objective(gram: &GramMatrix, coefficients: &[f64], y: &[f64]) -> Result<f64> {
    check_len(gram.size(), coefficients.len(), "coefficient count")?;
    check_len(gram.size(), y.len(), "responses")?;
    let fitted = gram.mul_vec(coefficients);
    Ok(crate::boosting::mean_squared_difference(&fitted, y))
}

/// Euclidean projection onto `{a : |a|_1 <= radius}` by sorting magnitudes
/// and soft-thresholding.
pub fn project_l1_ball(v: &[f64], radius: f64) -> Vec<f64> {
    assert!(radius > 0.0, "l1 ball radius must be positive");
    let l1: f64 = v.iter().map(|x| x.abs()).sum();
    if l1 <= radius {
        return v.to_vec();
    }
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, &u) in mags.iter().enumerate() {
        cumulative += u;
        let t = (cumulative - radius) / (i as f64 + 1.0);
        if u > t {
            theta = t;
        } else {
            break;
        }
    }
    let mut out: Vec<f64> = v.iter().map(|&x| x.signum() * (x.abs() - theta).max(0.0)).collect();
    // rounding can leave the result a hair outside the ball
    let l1_out: f64 = out.iter().map(|x| x.abs()).sum();
    if l1_out > radius {
        let s = radius / l1_out;
        out.iter_mut().for_each(|x| *x *= s);
    }
    out
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration from the
/// all-ones vector.
pub fn operator_norm(gram: &GramMatrix, iterations: usize) -> f64 {
    let m = gram.size();
    let mut v = vec![1.0 / (m as f64).sqrt(); m];
    let mut w = vec![0.0; m];
    let mut estimate = 0.0;
    for _ in 0..iterations.max(1) {
        gram.mul_vec_into(&v, &mut w);
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        estimate = norm;
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / norm;
        }
    }
    estimate
}

/// Accelerated projected gradient (FISTA) for `min (1/m)|G a - y|^2` subject
/// to `|a|_1 <= L`, started from `start` (or the origin). A step that would
/// raise the objective is replaced by a plain projected-gradient step from the
/// current point and the momentum is reset, so the trace never increases.
pub fn lasso_fit_gram(gram: &GramMatrix, y: &[f64], config: &LassoConfig, start: Option<&[f64]>) -> Result<LassoFit> {
    config.validate()?;
    let m = gram.size();
    check_len(m, y.len(), "responses")?;
    let step = match config.step_size {
        Some(s) => s,
        None => {
            let op = operator_norm(gram, 50);
            if op == 0.0 {
                1.0
            } else {
                0.5 * m as f64 / (op * op)
            }
        }
    };
    let mut a = match start {
        Some(s) => {
            check_len(m, s.len(), "warm start")?;
            project_l1_ball(s, config.radius)
        }
        None => vec![0.0; m],
    };
    let scale = 2.0 / m as f64;
    let objective_at = |v: &[f64], fitted: &mut Vec<f64>| {
        gram.mul_vec_into(v, fitted);
        crate::boosting::mean_squared_difference(fitted, y)
    };
    let mut fitted = vec![0.0; m];
    let mut objective = objective_at(&a, &mut fitted);
    let mut trace = vec![objective];
    let mut converged = false;
    let mut iterations = 0;
    // extrapolated point and its fit
    let mut z = a.clone();
    let mut z_fitted = fitted.clone();
    let mut momentum = 1.0f64;
    let mut residual = vec![0.0; m];
    let mut gradient = vec![0.0; m];
    let mut candidate = vec![0.0; m];
    let mut next_fitted = vec![0.0; m];
    while iterations < config.max_iters {
        iterations += 1;
        let mut take = |from: &[f64], from_fitted: &[f64], next_fitted: &mut Vec<f64>| {
            for ((r, f), yi) in residual.iter_mut().zip(from_fitted).zip(y) {
                *r = f - yi;
            }
            gram.mul_vec_into(&residual, &mut gradient);
            for ((c, zi), gi) in candidate.iter_mut().zip(from).zip(&gradient) {
                *c = zi - step * scale * gi;
            }
            let next = project_l1_ball(&candidate, config.radius);
            let value = objective_at(&next, next_fitted);
            (next, value)
        };
        let (mut next, mut next_objective) = take(&z, &z_fitted, &mut next_fitted);
        if next_objective > objective {
            momentum = 1.0;
            (next, next_objective) = take(&a, &fitted, &mut next_fitted);
            if next_objective > objective {
                next = a.clone();
                next_objective = objective;
                next_fitted.copy_from_slice(&fitted);
            }
        }
        let decrease = objective - next_objective;
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        let w = (momentum - 1.0) / t_next;
        for (((zi, zf), (ni, nf)), (ai, af)) in z
            .iter_mut()
            .zip(z_fitted.iter_mut())
            .zip(next.iter().zip(&next_fitted))
            .zip(a.iter().zip(&fitted))
        {
            *zi = ni + w * (ni - ai);
            *zf = nf + w * (nf - af);
        }
        momentum = t_next;
        a = next;
        std::mem::swap(&mut fitted, &mut next_fitted);
        objective = next_objective;
        trace.push(objective);
        if decrease < config.tolerance {
            converged = true;
            break;
        }
    }
    Ok(LassoFit {
        coefficients: a,
        objective,
        iterations,
        converged,
        trace,
    })
}

pub fn lasso_fit(data: &Dataset, kernel: &RadialKernel, config: &LassoConfig) -> Result<LassoFit> {
    lasso_fit_gram(&gram(&data.x, kernel)?, &data.y, config, None)
}
