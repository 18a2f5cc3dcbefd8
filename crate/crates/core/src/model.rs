//! Fitted-model files.
//!
//! A model is stored as one JSON object:
//!
//! ```json
//! {
//!   "anchors": [[x1, x2, x3], ...],
//!   "coefficients": [a1, ...],
//!   "kernel": {"profile": "wendland31"},
//!   "alpha_schedule": {"kind": "harmonic"},
//!   "ell_schedule": {"kind": "logarithmic", "c0": 0.5}
//! }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::boosting::{predict, AlphaSchedule, EllSchedule, Schedules};
use crate::error::{check_len, Result};
use crate::kernels::{Points, RadialKernel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub anchors: Vec<Vec<f64>>,
    pub coefficients: Vec<f64>,
    pub kernel: RadialKernel,
    pub alpha_schedule: AlphaSchedule,
    pub ell_schedule: EllSchedule,
}

impl FittedModel {
    pub fn new(anchors: &Points, coefficients: Vec<f64>, kernel: RadialKernel, schedules: Schedules) -> Result<Self> {
        check_len(anchors.len(), coefficients.len(), "coefficient count")?;
        Ok(Self {
            anchors: anchors.to_rows(),
            coefficients,
            kernel,
            alpha_schedule: schedules.alpha,
            ell_schedule: schedules.ell,
        })
    }

    pub fn anchor_points(&self) -> Result<Points> {
        Points::from_rows(&self.anchors)
    }

    pub fn predict(&self, x_new: &Points) -> Result<Vec<f64>> {
        predict(&self.coefficients, &self.anchor_points()?, &self.kernel, x_new)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(text)?;
        check_len(model.anchors.len(), model.coefficients.len(), "coefficient count")?;
        model.kernel.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_layout_uses_documented_field_names() {
        let anchors = Points::from_rows(&[vec![0.0, 0.0, 0.0], vec![0.5, 0.0, 0.0]]).unwrap();
        let m = FittedModel::new(
            &anchors,
            vec![2.0, 0.0],
            RadialKernel::Wendland31,
            Schedules::logarithmic(0.5),
        )
        .unwrap();
        let v: serde_json::Value = serde_json::from_str(&m.to_json().unwrap()).unwrap();
        let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        keys.sort();
        assert_eq!(
            keys,
            ["alpha_schedule", "anchors", "coefficients", "ell_schedule", "kernel"]
        );
        assert_eq!(v["kernel"]["profile"], "wendland31");
        assert_eq!(v["ell_schedule"]["c0"], 0.5);
        assert_eq!(FittedModel::from_json(&m.to_json().unwrap()).unwrap(), m);
    }

    #[test]
    fn mismatched_model_is_rejected() {
        let text = r#"{"anchors": [[0,0,0]], "coefficients": [1, 2], "kernel": {"profile": "wendland31"},
            "alpha_schedule": {"kind": "harmonic"}, "ell_schedule": {"kind": "unbounded"}}"#;
        assert!(FittedModel::from_json(text).is_err());
    }
}
