//! Re-scaled L2-boosting with truncation over a kernel dictionary, and the
//! sibling boosting variants used as comparators.
//!
//! Every variant shares one state machine. Step `k` picks the atom most
//! correlated with the current residual, shrinks the previous estimator by
//! `1 - alpha_k`, and adds `beta * atom`:
//!
//! ```text
//! f_k = (1 - alpha_k) f_{k-1} + beta_k K(x_j, .)
//! ```
//!
//! The variants only differ in how `alpha_k` and `beta_k` are chosen:
//!
//! | variant           | `alpha_k`          | `beta_k`                                          |
//! |-------------------|--------------------|---------------------------------------------------|
//! | `KReBooT`         | schedule           | line search clipped to `[-alpha_k l_k, alpha_k l_k]` |
//! | `Rboosting`       | schedule           | unclipped line search                              |
//! | `RtBoosting`      | 0                  | line search clipped to `[-cap(k), cap(k)]`         |
//! | `EpsilonBoosting` | 0                  | `eps * sign(corr)`                                 |
//!
//! For `KReBooT` with a non-decreasing `l_k` the coefficient vector satisfies
//! `|a|_1 <= l_k` after every step.

use serde::{Deserialize, Serialize};

use crate::datagen::Dataset;
use crate::error::{check_len, Error, Result};
use crate::kernels::{dot, gram, GramMatrix, Points, RadialKernel};

/// Re-scaling sequence `alpha_k`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlphaSchedule {
    /// `alpha_k = 2 / (k + 2)`.
    #[default]
    Harmonic,
    /// `alpha_k = value` for every `k`. `value = 0` disables re-scaling.
    Constant { value: f64 },
}

impl AlphaSchedule {
    #[inline]
    pub fn at(&self, k: usize) -> f64 {
        match *self {
            AlphaSchedule::Harmonic => 2.0 / (k as f64 + 2.0),
            AlphaSchedule::Constant { value } => value,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            AlphaSchedule::Harmonic => Ok(()),
            AlphaSchedule::Constant { value } if (0.0..1.0).contains(&value) => Ok(()),
            AlphaSchedule::Constant { value } => Err(Error::InvalidInput(format!(
                "constant alpha must lie in [0, 1), got {value}"
            ))),
        }
    }
}

/// Step-size cap sequence `l_k`. All variants are non-decreasing in `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EllSchedule {
    /// `l_k = c0 ln(k + 1)`.
    Logarithmic {
        c0: f64,
    },
    /// `l_k = radius`.
    Constant {
        radius: f64,
    },
    Unbounded,
}

impl EllSchedule {
    #[inline]
    pub fn at(&self, k: usize) -> f64 {
        match *self {
            EllSchedule::Logarithmic { c0 } => c0 * (k as f64 + 1.0).ln(),
            EllSchedule::Constant { radius } => radius,
            EllSchedule::Unbounded => f64::INFINITY,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            EllSchedule::Logarithmic { c0 } => c0.is_finite() && c0 > 0.0,
            EllSchedule::Constant { radius } => radius.is_finite() && radius > 0.0,
            EllSchedule::Unbounded => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "step-size schedule needs a positive finite constant, got {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedules {
    pub alpha: AlphaSchedule,
    pub ell: EllSchedule,
}

impl Schedules {
    /// `alpha_k = 2/(k+2)`, `l_k = c0 ln(k+1)`.
    pub fn logarithmic(c0: f64) -> Self {
        Self {
            alpha: AlphaSchedule::Harmonic,
            ell: EllSchedule::Logarithmic { c0 },
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.alpha.validate()?;
        self.ell.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum VariantPolicy {
    #[serde(rename = "kreboot")]
    KReBooT,
    Rboosting,
    /// Truncated boosting without re-scaling; `|beta_k| <= cap_scale * k^(-2/3)`,
    /// so the coefficient l1 norm grows like `3 cap_scale k^(1/3)`.
    RtBoosting {
        cap_scale: f64,
    },
    EpsilonBoosting {
        eps: f64,
    },
}

impl VariantPolicy {
    pub const DEFAULT_EPS: f64 = 1e-2;

    /// Method name used in result tables.
    pub fn name(&self) -> &'static str {
        match self {
            VariantPolicy::KReBooT => "KReBooT",
            VariantPolicy::Rboosting => "KRboosting",
            VariantPolicy::RtBoosting { .. } => "KRTboosting",
            VariantPolicy::EpsilonBoosting { .. } => "eps-Kboosting",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            VariantPolicy::RtBoosting { cap_scale } if !(cap_scale.is_finite() && cap_scale > 0.0) => Err(
                Error::InvalidInput(format!("cap scale must be positive, got {cap_scale}")),
            ),
            VariantPolicy::EpsilonBoosting { eps } if !(eps.is_finite() && eps > 0.0) => {
                Err(Error::InvalidInput(format!("eps must be positive, got {eps}")))
            }
            _ => Ok(()),
        }
    }

    fn rescales(&self) -> bool {
        matches!(self, VariantPolicy::KReBooT | VariantPolicy::Rboosting)
    }
}

/// Which residual drives atom selection. `Plain` uses `y - f_{k-1}`;
/// `Rescaled` uses `y - (1 - alpha_k) f_{k-1}`, the residual the line
/// search is taken against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionResidual {
    #[default]
    Plain,
    Rescaled,
}

/// Which iterations are kept in [`BoostingState::history`]: every iteration
/// up to `dense_until`, then every `every`-th.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryThinning {
    pub dense_until: usize,
    pub every: usize,
}

impl Default for HistoryThinning {
    fn default() -> Self {
        Self {
            dense_until: usize::MAX,
            every: 1,
        }
    }
}

impl HistoryThinning {
    /// Dense to 10^3, then every 10th iteration.
    pub const TRAJECTORY: Self = Self {
        dense_until: 1000,
        every: 10,
    };

    #[inline]
    pub fn records(&self, k: usize) -> bool {
        k <= self.dense_until || k.is_multiple_of(self.every.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostConfig {
    pub schedules: Schedules,
    pub policy: VariantPolicy,
    #[serde(default)]
    pub selection: SelectionResidual,
    #[serde(default)]
    pub thinning: HistoryThinning,
}

impl BoostConfig {
    pub fn kreboot(c0: f64) -> Self {
        Self::new(Schedules::logarithmic(c0), VariantPolicy::KReBooT)
    }

    pub fn new(schedules: Schedules, policy: VariantPolicy) -> Self {
        Self {
            schedules,
            policy,
            selection: SelectionResidual::Plain,
            thinning: HistoryThinning::default(),
        }
    }

    pub fn with_thinning(mut self, thinning: HistoryThinning) -> Self {
        self.thinning = thinning;
        self
    }

    pub fn with_selection(mut self, selection: SelectionResidual) -> Self {
        self.selection = selection;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.schedules.validate()?;
        self.policy.validate()
    }

    /// `alpha_k` actually applied by the policy.
    #[inline]
    pub fn alpha_at(&self, k: usize) -> f64 {
        if self.policy.rescales() {
            self.schedules.alpha.at(k)
        } else {
            0.0
        }
    }
}

/// One boosting iteration as recorded in the history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub k: usize,
    /// Index of the selected atom.
    pub index: usize,
    pub alpha: f64,
    pub beta: f64,
    /// `<r_{k-1}, g_k>_m` against the re-scaled residual.
    pub correlation: f64,
    /// `|y - f_k|_m^2`.
    pub risk: f64,
    pub l1_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Advanced,
    /// Every atom has zero empirical norm; the state is left untouched.
    Exhausted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoostingState {
    /// `a[j]` multiplies `K(x_j, .)`.
    pub coefficients: Vec<f64>,
    /// `f_k(x_i) = (G a)_i`, maintained incrementally.
    pub fitted: Vec<f64>,
    pub k: usize,
    pub history: Vec<StepRecord>,
    residual: Vec<f64>,
}

impl BoostingState {
    /// `f_0 = 0` over a dictionary of `m` atoms.
    pub fn zero(m: usize) -> Self {
        Self {
            coefficients: vec![0.0; m],
            fitted: vec![0.0; m],
            k: 0,
            history: Vec::new(),
            residual: vec![0.0; m],
        }
    }

    pub fn l1_norm(&self) -> f64 {
        self.coefficients.iter().map(|a| a.abs()).sum()
    }

    /// Applies one iteration.
    pub fn step(&mut self, y: &[f64], gram: &GramMatrix, config: &BoostConfig) -> Result<StepOutcome> {
        self.advance(y, gram, config).map(|r| match r {
            Some(_) => StepOutcome::Advanced,
            None => StepOutcome::Exhausted,
        })
    }

    fn advance(&mut self, y: &[f64], gram: &GramMatrix, config: &BoostConfig) -> Result<Option<StepRecord>> {
        let m = gram.size();
        check_len(m, y.len(), "responses")?;
        check_len(m, self.coefficients.len(), "coefficients")?;
        let k = self.k + 1;
        let alpha = config.alpha_at(k);
        let keep = 1.0 - alpha;

        let rescaled = config.selection == SelectionResidual::Rescaled || alpha == 0.0;
        for ((r, &yi), &fi) in self.residual.iter_mut().zip(y).zip(&self.fitted) {
            *r = if rescaled { yi - keep * fi } else { yi - fi };
        }
        let Some((index, selected_corr)) = select_atom(&self.residual, gram)? else {
            return Ok(None);
        };
        let atom = gram.column(index);
        let correlation = if rescaled {
            selected_corr
        } else {
            let s: f64 = y
                .iter()
                .zip(&self.fitted)
                .zip(atom)
                .map(|((&yi, &fi), &g)| (yi - keep * fi) * g)
                .sum();
            s / m as f64
        };
        let norm_sq = gram.atom_norms_sq()[index];
        let beta = match config.policy {
            VariantPolicy::KReBooT => compute_step(correlation, norm_sq, alpha, config.schedules.ell.at(k))?,
            VariantPolicy::Rboosting => compute_step(correlation, norm_sq, 1.0, f64::INFINITY)?,
            VariantPolicy::RtBoosting { cap_scale } => {
                compute_step(correlation, norm_sq, 1.0, cap_scale * (k as f64).powf(-2.0 / 3.0))?
            }
            VariantPolicy::EpsilonBoosting { eps } => {
                if correlation > 0.0 {
                    eps
                } else if correlation < 0.0 {
                    -eps
                } else {
                    0.0
                }
            }
        };

        if alpha != 0.0 {
            self.coefficients.iter_mut().for_each(|a| *a *= keep);
            self.fitted.iter_mut().for_each(|f| *f *= keep);
        }
        self.coefficients[index] += beta;
        if beta != 0.0 {
            for (f, &g) in self.fitted.iter_mut().zip(atom) {
                *f += beta * g;
            }
        }
        self.k = k;

        let l1_norm = self.l1_norm();
        if config.policy == VariantPolicy::KReBooT {
            let bound = config.schedules.ell.at(k);
            debug_assert!(
                l1_norm <= bound + 1e-12 * bound,
                "l1 norm {l1_norm} exceeds step-size cap {bound} at k = {k}"
            );
        }
        let record = StepRecord {
            k,
            index,
            alpha,
            beta,
            correlation,
            risk: empirical_risk(self, y)?,
            l1_norm,
        };
        if config.thinning.records(k) {
            self.history.push(record);
        }
        Ok(Some(record))
    }
}

/// Atom maximising `|c_j|` with `c_j = (1/m) sum_i residual[i] G[i][j]`,
/// ignoring atoms of zero empirical norm. Ties go to the smallest index.
/// `None` when every atom is degenerate.
pub fn select_atom(residual: &[f64], gram: &GramMatrix) -> Result<Option<(usize, f64)>> {
    let m = gram.size();
    check_len(m, residual.len(), "residual")?;
    let inv_m = 1.0 / m as f64;
    let mut best: Option<(usize, f64)> = None;
    for (j, &norm_sq) in gram.atom_norms_sq().iter().enumerate() {
        if norm_sq <= 0.0 {
            continue;
        }
        let c = dot(gram.column(j), residual) * inv_m;
        match best {
            Some((_, b)) if c.abs() <= b.abs() => {}
            _ => best = Some((j, c)),
        }
    }
    Ok(best)
}

/// Minimiser of `|r - beta g|_m^2` over `beta` in `[-alpha_k l_k, alpha_k l_k]`,
/// given `corr = <r, g>_m` and `atom_norm_sq = |g|_m^2`.
pub fn compute_step(corr: f64, atom_norm_sq: f64, alpha_k: f64, ell_k: f64) -> Result<f64> {
    if !(atom_norm_sq > 0.0) {
        return Err(Error::DegenerateAtom(format!(
            "squared empirical norm is {atom_norm_sq}"
        )));
    }
    let bound = if alpha_k == 0.0 { 0.0 } else { alpha_k * ell_k };
    let magnitude = (corr.abs() / atom_norm_sq).min(bound);
    Ok(if corr < 0.0 { -magnitude } else { magnitude })
}

/// `(1/m) sum_i (y_i - f(x_i))^2`.
pub fn empirical_risk(state: &BoostingState, y: &[f64]) -> Result<f64> {
    check_len(state.fitted.len(), y.len(), "responses")?;
    Ok(mean_squared_difference(y, &state.fitted))
}

pub(crate) fn mean_squared_difference(a: &[f64], b: &[f64]) -> f64 {
    let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    s / a.len().max(1) as f64
}

/// Runs `k_max` steps from `f_0 = 0` on a precomputed Gram matrix. `observer`
/// sees every step, including the ones thinned out of the history. Stops
/// early if every atom is degenerate.
pub fn fit_gram_observed<F>(
    gram: &GramMatrix,
    y: &[f64],
    config: &BoostConfig,
    k_max: usize,
    mut observer: F,
) -> Result<BoostingState>
where
    F: FnMut(&BoostingState, &StepRecord),
{
    if k_max == 0 {
        return Err(Error::InvalidInput("k_max must be >= 1".into()));
    }
    config.validate()?;
    check_len(gram.size(), y.len(), "responses")?;
    let mut state = BoostingState::zero(gram.size());
    for _ in 0..k_max {
        match state.advance(y, gram, config)? {
            Some(record) => observer(&state, &record),
            None => break,
        }
    }
    Ok(state)
}

pub fn fit_gram(gram: &GramMatrix, y: &[f64], config: &BoostConfig, k_max: usize) -> Result<BoostingState> {
    fit_gram_observed(gram, y, config, k_max, |_, _| {})
}

/// Builds the dictionary over `data.x` and runs `k_max` steps.
pub fn fit(data: &Dataset, kernel: &RadialKernel, config: &BoostConfig, k_max: usize) -> Result<BoostingState> {
    let g = gram(&data.x, kernel)?;
    fit_gram(&g, &data.y, config, k_max)
}

/// `out[t] = sum_j a[j] phi(|x_new_t - anchor_j|)`.
pub fn predict(coefficients: &[f64], anchors: &Points, kernel: &RadialKernel, x_new: &Points) -> Result<Vec<f64>> {
    check_len(anchors.len(), coefficients.len(), "coefficient count")?;
    check_len(anchors.dim(), x_new.dim(), "query dimension")?;
    kernel.validate()?;
    let active: Vec<(usize, f64)> = coefficients
        .iter()
        .copied()
        .enumerate()
        .filter(|&(_, a)| a != 0.0)
        .collect();
    Ok(x_new
        .rows()
        .map(|q| {
            active
                .iter()
                .fold(0.0, |acc, &(j, a)| acc + a * kernel.between(anchors.row(j), q))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate, DataGenConfig};
    use proptest::prelude::*;

    fn equilateral_gram() -> GramMatrix {
        let h = 0.5 * 3f64.sqrt() / 2.0;
        let p = Points::from_rows(&[vec![0.0, 0.0, 0.0], vec![0.5, 0.0, 0.0], vec![0.25, h, 0.0]]).unwrap();
        gram(&p, &RadialKernel::Wendland31).unwrap()
    }

    /// Minimises the line-search quadratic over a uniform grid on the box.
    fn grid_minimiser(corr: f64, norm_sq: f64, bound: f64, cells: usize) -> (f64, f64) {
        // |r - beta g|^2 = const - 2 beta corr + beta^2 norm_sq
        let objective = |b: f64| b * b * norm_sq - 2.0 * b * corr;
        let width = 2.0 * bound;
        let cell = width / cells as f64;
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..=cells {
            let b = -bound + i as f64 * cell;
            let v = objective(b);
            if v < best.0 {
                best = (v, b);
            }
        }
        (best.1, cell)
    }

    #[test]
    fn zero_residual_selects_first_atom() {
        let g = equilateral_gram();
        assert_eq!(select_atom(&[0.0; 3], &g).unwrap(), Some((0, 0.0)));
    }

    #[test]
    fn identity_gram_selection() {
        let g = GramMatrix::identity(3);
        assert_eq!(select_atom(&[0.0, 2.0, -3.0], &g).unwrap(), Some((2, -1.0)));
    }

    #[test]
    fn equilateral_selection() {
        let g = equilateral_gram();
        let (j, c) = select_atom(&[1.0, 0.0, 0.0], &g).unwrap().unwrap();
        assert_eq!(j, 0);
        assert!((c - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn selection_ties_go_to_smallest_index() {
        let g = GramMatrix::identity(4);
        assert_eq!(select_atom(&[1.0, -1.0, 1.0, 0.5], &g).unwrap().unwrap().0, 0);
        assert_eq!(select_atom(&[0.5, -1.0, 1.0, 0.5], &g).unwrap().unwrap().0, 1);
    }

    #[test]
    fn selection_skips_degenerate_atoms() {
        let g = GramMatrix::from_row_major(2, vec![0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(select_atom(&[5.0, 0.0], &g).unwrap(), Some((1, 0.0)));
        let zero = GramMatrix::from_row_major(2, vec![0.0; 4]).unwrap();
        assert_eq!(select_atom(&[1.0, 1.0], &zero).unwrap(), None);
        assert!(select_atom(&[1.0], &g).is_err());
    }

    #[test]
    fn step_closed_form_cases() {
        assert_eq!(compute_step(0.0, 1.0, 0.5, 3.0).unwrap(), 0.0);
        assert_eq!(compute_step(0.5, 1.0, 1.0, 10.0).unwrap(), 0.5);
        assert_eq!(compute_step(-5.0, 1.0, 0.2, 1.0).unwrap(), -0.2);
        assert_eq!(compute_step(3.0, 2.0, 0.0, f64::INFINITY).unwrap(), 0.0);
        assert!(matches!(
            compute_step(1.0, 0.0, 0.5, 1.0),
            Err(Error::DegenerateAtom(_))
        ));
    }

    #[test]
    fn step_matches_grid_oracle_on_fixed_cases() {
        for (corr, bound) in [(0.5, 10.0), (-5.0, 0.2)] {
            let (b, cell) = grid_minimiser(corr, 1.0, bound, 200_000);
            let closed = compute_step(corr, 1.0, 1.0, bound).unwrap();
            assert!((closed - b).abs() <= cell, "{closed} vs {b}");
        }
    }

    proptest! {
        #[test]
        fn step_matches_grid_oracle(corr in -5.0f64..5.0, norm in 0.05f64..2.0, bound in 0.01f64..5.0) {
            let (b, cell) = grid_minimiser(corr, norm, bound, 100_000);
            let closed = compute_step(corr, norm, 1.0, bound).unwrap();
            prop_assert!((closed - b).abs() <= cell);
        }

        #[test]
        fn l1_norm_stays_below_cap(seed in 0u64..1000, m in 2usize..25, c0 in 0.1f64..80.0) {
            let d = generate(&DataGenConfig::new(m, 1.0, seed)).unwrap();
            let g = gram(&d.x, &RadialKernel::Wendland31).unwrap();
            let cfg = BoostConfig::kreboot(c0);
            let mut worst = f64::NEG_INFINITY;
            fit_gram_observed(&g, &d.y, &cfg, 300, |_, r| {
                let cap = cfg.schedules.ell.at(r.k);
                worst = worst.max(r.l1_norm - cap * (1.0 + 1e-12));
                assert!(r.beta.abs() <= r.alpha * cap * (1.0 + 1e-15));
            }).unwrap();
            prop_assert!(worst <= 0.0);
        }

        #[test]
        fn one_step_never_increases_rescaled_risk(seed in 0u64..1000, c0 in 0.1f64..20.0) {
            let d = generate(&DataGenConfig::new(15, 1.0, seed)).unwrap();
            let g = gram(&d.x, &RadialKernel::Wendland31).unwrap();
            let cfg = BoostConfig::kreboot(c0);
            let mut state = BoostingState::zero(15);
            for _ in 0..50 {
                let keep = 1.0 - cfg.alpha_at(state.k + 1);
                let shrunk: Vec<f64> = state.fitted.iter().map(|f| keep * f).collect();
                let before = mean_squared_difference(&d.y, &shrunk);
                state.step(&d.y, &g, &cfg).unwrap();
                let after = empirical_risk(&state, &d.y).unwrap();
                prop_assert!(after <= before + 1e-12 * before.max(1.0));
            }
        }
    }

    #[test]
    fn zero_response_leaves_state_at_origin() {
        let d = generate(&DataGenConfig::new(8, 0.0, 1)).unwrap();
        let g = gram(&d.x, &RadialKernel::Wendland31).unwrap();
        for policy in [
            VariantPolicy::KReBooT,
            VariantPolicy::Rboosting,
            VariantPolicy::RtBoosting { cap_scale: 1.0 },
            VariantPolicy::EpsilonBoosting { eps: 0.01 },
        ] {
            let cfg = BoostConfig::new(Schedules::logarithmic(1.0), policy);
            let s = fit_gram(&g, &[0.0; 8], &cfg, 25).unwrap();
            assert_eq!(s.k, 25);
            assert!(s.coefficients.iter().all(|&a| a == 0.0));
            assert!(s.history.iter().all(|r| r.beta == 0.0));
        }
    }

    #[test]
    fn single_atom_closed_form() {
        let g = GramMatrix::identity(1);
        let cfg = BoostConfig::kreboot(10.0);
        let s = fit_gram(&g, &[1.0], &cfg, 1).unwrap();
        assert_eq!(s.coefficients, vec![1.0]);
        assert_eq!(s.history[0].risk, 0.0);
        assert!((s.history[0].alpha - 2.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn one_step_gives_at_most_one_nonzero() {
        let d = generate(&DataGenConfig::new(30, 1.0, 4)).unwrap();
        let s = fit(&d, &RadialKernel::Wendland31, &BoostConfig::kreboot(0.5), 1).unwrap();
        assert!(s.coefficients.iter().filter(|&&a| a != 0.0).count() <= 1);
        assert!(fit(&d, &RadialKernel::Wendland31, &BoostConfig::kreboot(0.5), 0).is_err());
    }

    #[test]
    fn seeded_five_point_instance_respects_cap_for_100_steps() {
        let d = generate(&DataGenConfig::new(5, 1.0, 42)).unwrap();
        let cfg = BoostConfig::kreboot(0.5);
        let s = fit(&d, &RadialKernel::Wendland31, &cfg, 100).unwrap();
        assert_eq!(s.history.len(), 100);
        for r in &s.history {
            assert!(r.l1_norm <= cfg.schedules.ell.at(r.k) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn fitted_cache_matches_recomputation() {
        let d = generate(&DataGenConfig::new(60, 1.0, 9)).unwrap();
        let g = gram(&d.x, &RadialKernel::Wendland31).unwrap();
        for policy in [
            VariantPolicy::KReBooT,
            VariantPolicy::Rboosting,
            VariantPolicy::RtBoosting { cap_scale: 1.0 },
            VariantPolicy::EpsilonBoosting { eps: 0.01 },
        ] {
            for selection in [SelectionResidual::Plain, SelectionResidual::Rescaled] {
                let cfg = BoostConfig::new(Schedules::logarithmic(2.0), policy).with_selection(selection);
                let s = fit_gram(&g, &d.y, &cfg, 2000).unwrap();
                let direct = g.mul_vec(&s.coefficients);
                let scale = direct.iter().fold(1.0f64, |a, v| a.max(v.abs()));
                for (a, b) in s.fitted.iter().zip(&direct) {
                    assert!((a - b).abs() <= 1e-10 * scale, "{policy:?}/{selection:?}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn epsilon_boosting_takes_fixed_steps() {
        let d = generate(&DataGenConfig::new(20, 1.0, 2)).unwrap();
        let cfg = BoostConfig::new(
            Schedules::logarithmic(1.0),
            VariantPolicy::EpsilonBoosting { eps: 0.05 },
        );
        let s = fit(&d, &RadialKernel::Wendland31, &cfg, 40).unwrap();
        assert!(s.history.iter().all(|r| r.alpha == 0.0 && r.beta.abs() == 0.05));
    }

    #[test]
    fn truncated_boosting_respects_decaying_cap() {
        let d = generate(&DataGenConfig::new(20, 1.0, 2)).unwrap();
        let cfg = BoostConfig::new(
            Schedules::logarithmic(1.0),
            VariantPolicy::RtBoosting { cap_scale: 0.3 },
        );
        let s = fit(&d, &RadialKernel::Wendland31, &cfg, 500).unwrap();
        for r in &s.history {
            assert_eq!(r.alpha, 0.0);
            assert!(r.beta.abs() <= 0.3 * (r.k as f64).powf(-2.0 / 3.0) + 1e-15);
        }
        assert!(s.l1_norm() <= 3.0 * 0.3 * 500f64.powf(1.0 / 3.0));
    }

    #[test]
    fn rescaled_selection_differs_but_respects_cap() {
        let d = generate(&DataGenConfig::new(40, 1.0, 12)).unwrap();
        let g = gram(&d.x, &RadialKernel::Wendland31).unwrap();
        let plain = fit_gram(&g, &d.y, &BoostConfig::kreboot(1.0), 200).unwrap();
        let cfg = BoostConfig::kreboot(1.0).with_selection(SelectionResidual::Rescaled);
        let rescaled = fit_gram(&g, &d.y, &cfg, 200).unwrap();
        assert_ne!(plain.coefficients, rescaled.coefficients);
        assert!(rescaled.l1_norm() <= cfg.schedules.ell.at(200) * (1.0 + 1e-12));
    }

    #[test]
    fn zero_alpha_keeps_kreboot_at_origin() {
        let d = generate(&DataGenConfig::new(10, 1.0, 3)).unwrap();
        let cfg = BoostConfig::new(
            Schedules {
                alpha: AlphaSchedule::Constant { value: 0.0 },
                ell: EllSchedule::Unbounded,
            },
            VariantPolicy::KReBooT,
        );
        let s = fit(&d, &RadialKernel::Wendland31, &cfg, 50).unwrap();
        assert!(s.coefficients.iter().all(|&a| a == 0.0));
    }

    #[test]
    fn thinning_keeps_dense_prefix_then_every_tenth() {
        let d = generate(&DataGenConfig::new(10, 1.0, 3)).unwrap();
        let cfg = BoostConfig::kreboot(0.5).with_thinning(HistoryThinning {
            dense_until: 20,
            every: 10,
        });
        let mut seen = 0;
        let s = fit_gram_observed(
            &gram(&d.x, &RadialKernel::Wendland31).unwrap(),
            &d.y,
            &cfg,
            55,
            |_, _| seen += 1,
        )
        .unwrap();
        assert_eq!(seen, 55);
        let ks: Vec<usize> = s.history.iter().map(|r| r.k).collect();
        let mut expected: Vec<usize> = (1..=20).collect();
        expected.extend([30, 40, 50]);
        assert_eq!(ks, expected);
    }

    #[test]
    fn fitting_is_deterministic() {
        let d = generate(&DataGenConfig::new(50, 1.0, 77)).unwrap();
        let a = fit(&d, &RadialKernel::Wendland31, &BoostConfig::kreboot(0.5), 500).unwrap();
        let b = fit(&d, &RadialKernel::Wendland31, &BoostConfig::kreboot(0.5), 500).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn predict_reproduces_fitted_values_on_anchors() {
        let d = generate(&DataGenConfig::new(40, 1.0, 5)).unwrap();
        let k = RadialKernel::Wendland31;
        let s = fit(&d, &k, &BoostConfig::kreboot(0.5), 300).unwrap();
        let p = predict(&s.coefficients, &d.x, &k, &d.x).unwrap();
        for (a, b) in p.iter().zip(&s.fitted) {
            assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0));
        }
        assert!(predict(&[0.0; 40], &d.x, &k, &d.x).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn predict_single_anchor() {
        let anchors = Points::from_rows(&[vec![0.0, 0.0, 0.0]]).unwrap();
        let q = Points::from_rows(&[vec![0.0, 0.0, 0.5]]).unwrap();
        assert_eq!(
            predict(&[2.0], &anchors, &RadialKernel::Wendland31, &q).unwrap(),
            vec![0.25]
        );
        let bad = Points::from_rows(&[vec![0.0, 0.5]]).unwrap();
        assert!(predict(&[2.0], &anchors, &RadialKernel::Wendland31, &bad).is_err());
    }

    #[test]
    fn empirical_risk_cases() {
        let mut s = BoostingState::zero(2);
        assert_eq!(empirical_risk(&s, &[1.0, -1.0]).unwrap(), 1.0);
        s.fitted = vec![1.0, -1.0];
        assert_eq!(empirical_risk(&s, &[1.0, -1.0]).unwrap(), 0.0);
        assert!(empirical_risk(&s, &[1.0]).is_err());
    }

    #[test]
    fn schedules_validate() {
        assert!(Schedules::logarithmic(0.0).validate().is_err());
        assert!(AlphaSchedule::Constant { value: 1.0 }.validate().is_err());
        assert!(VariantPolicy::EpsilonBoosting { eps: 0.0 }.validate().is_err());
        let a = AlphaSchedule::Harmonic;
        let l = EllSchedule::Logarithmic { c0: 0.5 };
        for k in 1..1000 {
            assert!(a.at(k + 1) <= a.at(k) && a.at(k) < 1.0);
            assert!(l.at(k + 1) >= l.at(k));
        }
    }
}
