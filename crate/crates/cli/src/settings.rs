//! Run parameters: a flat JSON config file, overridden by command-line flags,
//! resolved against per-command defaults.

use std::path::{Path, PathBuf};

use kreboot::experiments::Method;
use kreboot::AlphaSchedule;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

/// Keys a manifest carries besides the parameters. They are ignored when a
/// manifest is read back as a config.
const MANIFEST_KEYS: [&str; 5] = ["command", "version", "prng", "trial_seeds", "outputs"];

/// Every field is optional; `None` falls back to the config file, then to the
/// command's default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// Master seed for every random draw.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses every logical CPU.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Paper scale: 100 trials and, for sim2, m up to 12000.
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    pub full: Option<bool>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub c0: Option<f64>,
    #[arg(long, global = true)]
    pub kmax: Option<usize>,
    /// Noise variance.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub noise: Option<f64>,
    /// Training-set size.
    #[arg(long, global = true)]
    pub m: Option<usize>,
    /// Method name, or a comma-separated list for sim3 and sim45.
    #[arg(long, global = true)]
    pub method: Option<String>,
    /// `harmonic` for 2/(k+2), or a constant in [0, 1).
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub alpha: Option<String>,
    /// l1 radius for Klasso.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub radius: Option<f64>,
    /// Ridge weight for KRR.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    /// Step length of eps-Kboosting.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub eps: Option<f64>,
    /// Dataset CSV with columns x1..xd[,y[,clean]].
    #[arg(long, global = true)]
    pub data: Option<PathBuf>,
    /// Model JSON written by `fit`.
    #[arg(long, global = true)]
    pub model: Option<PathBuf>,
}

impl Settings {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let mut doc: Map<String, Value> = serde_json::from_str(text)?;
        for key in MANIFEST_KEYS {
            doc.remove(key);
        }
        serde_json::from_value(Value::Object(doc))
    }

    /// Fields set in `self` win over `base`.
    pub fn over(self, base: Settings) -> Settings {
        Settings {
            seed: self.seed.or(base.seed),
            jobs: self.jobs.or(base.jobs),
            out: self.out.or(base.out),
            trials: self.trials.or(base.trials),
            full: self.full.or(base.full),
            c0: self.c0.or(base.c0),
            kmax: self.kmax.or(base.kmax),
            noise: self.noise.or(base.noise),
            m: self.m.or(base.m),
            method: self.method.or(base.method),
            alpha: self.alpha.or(base.alpha),
            radius: self.radius.or(base.radius),
            lambda: self.lambda.or(base.lambda),
            eps: self.eps.or(base.eps),
            data: self.data.or(base.data),
            model: self.model.or(base.model),
        }
    }
}

pub fn parse_alpha(text: &str) -> Result<AlphaSchedule, CliError> {
    if text.eq_ignore_ascii_case("harmonic") {
        return Ok(AlphaSchedule::Harmonic);
    }
    let value: f64 = text
        .parse()
        .map_err(|_| CliError::Usage(format!("alpha: expected `harmonic` or a number, got `{text}`")))?;
    if !(0.0..1.0).contains(&value) {
        return Err(CliError::Usage(format!(
            "alpha: constant must lie in [0, 1), got {value}"
        )));
    }
    Ok(AlphaSchedule::Constant { value })
}

pub fn parse_methods(text: &str) -> Result<Vec<Method>, CliError> {
    text.split(',')
        .map(|name| Method::parse(name.trim()).map_err(|e| CliError::Usage(format!("method: {e}"))))
        .collect()
}

/// Checks that an optional numeric field satisfies `ok`, naming the field
/// otherwise.
pub fn check<T: Copy + std::fmt::Display>(
    field: &str,
    value: Option<T>,
    ok: impl Fn(T) -> bool,
    rule: &str,
) -> Result<(), CliError> {
    match value {
        Some(v) if !ok(v) => Err(CliError::Usage(format!("{field} must be {rule}, got {v}"))),
        _ => Ok(()),
    }
}

impl Settings {
    pub fn validate(&self) -> Result<(), CliError> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        check("c0", self.c0, positive, "positive")?;
        check("kmax", self.kmax, |v| v >= 1, ">= 1")?;
        check("trials", self.trials, |v| v >= 1, ">= 1")?;
        check("m", self.m, |v| v >= 1, ">= 1")?;
        check("noise", self.noise, |v: f64| v >= 0.0 && v.is_finite(), "non-negative")?;
        check("radius", self.radius, positive, "positive")?;
        check("lambda", self.lambda, positive, "positive")?;
        check("eps", self.eps, positive, "positive")?;
        if let Some(a) = &self.alpha {
            parse_alpha(a)?;
        }
        if let Some(m) = &self.method {
            parse_methods(m)?;
        }
        Ok(())
    }
}
