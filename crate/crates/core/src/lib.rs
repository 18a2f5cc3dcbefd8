//! Kernel-based re-scaled L2-boosting with truncation (KReBooT).
//!
//! The crate is organised bottom-up:
//!
//! * [`kernels`]: radial kernels and Gram matrices of the kernel dictionary.
//! * [`boosting`]: the boosting iteration and its variants.
//! * [`baselines`]: kernel ridge regression and l1-constrained kernel least squares.
//! * [`datagen`]: seeded synthetic regression data.
//! * [`experiments`]: simulation harness, model selection and CSV reports.
//! * [`model`]: JSON model files.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod boosting;
pub mod datagen;
pub mod error;
pub mod experiments;
pub mod kernels;
pub mod model;
pub mod stats;

pub use boosting::{
    compute_step, empirical_risk, fit, fit_gram, fit_gram_observed, predict, select_atom, AlphaSchedule, BoostConfig,
    BoostingState, EllSchedule, HistoryThinning, Schedules, SelectionResidual, StepOutcome, StepRecord, VariantPolicy,
};
pub use datagen::{generate, read_inputs_csv, target_g, DataGenConfig, Dataset, InputLaw};
pub use error::{Error, Result};
pub use kernels::{eval_radial, gram, GramMatrix, Points, RadialKernel};
pub use model::FittedModel;
