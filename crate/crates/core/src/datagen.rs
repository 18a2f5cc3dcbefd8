//! Seeded synthetic regression data: `y = g(x) + eps` on the unit ball of R^3.
//!
//! Randomness comes from ChaCha20 (`rand_chacha`), seeded with
//! `seed_from_u64(seed)`. Input points are drawn from stream 0 and the
//! standard-normal noise from stream 1, so two configs that differ only in
//! the noise variance share their inputs and their (scaled) noise draws.

use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::kernels::Points;

/// Identifies the generator in run manifests.
pub const PRNG_NAME: &str = "chacha20/rand_chacha-0.9/seed_from_u64;stream0=inputs;stream1=noise";

const INPUT_STREAM: u64 = 0;
const NOISE_STREAM: u64 = 1;

/// SplitMix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the `index`-th child of `master`: `mix64(master + index)`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix64(master.wrapping_add(index))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputLaw {
    /// Uniform on the closed unit ball of R^3.
    #[default]
    UniformBall3,
    /// Uniform on `[-1, 1]^3`.
    UniformCube3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataGenConfig {
    pub m: usize,
    pub noise_variance: f64,
    pub seed: u64,
    #[serde(default)]
    pub input_law: InputLaw,
}

impl DataGenConfig {
    pub fn new(m: usize, noise_variance: f64, seed: u64) -> Self {
        Self {
            m,
            noise_variance,
            seed,
            input_law: InputLaw::UniformBall3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidInput("m must be >= 1".into()));
        }
        if !(self.noise_variance >= 0.0 && self.noise_variance.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "noise variance must be finite and >= 0, got {}",
                self.noise_variance
            )));
        }
        Ok(())
    }
}

/// Sample pairs `(x_i, y_i)` plus the noiseless targets `g(x_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Points,
    pub y: Vec<f64>,
    pub clean: Vec<f64>,
}

impl Dataset {
    pub fn new(x: Points, y: Vec<f64>, clean: Vec<f64>) -> Result<Self> {
        check_len(x.len(), y.len(), "responses")?;
        check_len(x.len(), clean.len(), "clean targets")?;
        Ok(Self { x, y, clean })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let dim = self.x.dim();
        let mut header: Vec<String> = (1..=dim).map(|c| format!("x{c}")).collect();
        header.push("y".into());
        header.push("clean".into());
        w.write_record(&header)?;
        for (i, row) in self.x.rows().enumerate() {
            let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            rec.push(self.y[i].to_string());
            rec.push(self.clean[i].to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads `x1..xd,y[,clean]`. A missing `clean` column is filled with `y`.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        let y_col = header
            .iter()
            .position(|h| h.trim() == "y")
            .ok_or_else(|| Error::InvalidInput("dataset CSV has no `y` column".into()))?;
        let clean_col = header.iter().position(|h| h.trim() == "clean");
        let x_cols = x_columns(&header)?;
        let (mut xs, mut y, mut clean) = (Vec::new(), Vec::new(), Vec::new());
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let line = line + 2;
            for &c in &x_cols {
                xs.push(parse_field(&rec[c], line)?);
            }
            let yi = parse_field(&rec[y_col], line)?;
            y.push(yi);
            clean.push(match clean_col {
                Some(c) => parse_field(&rec[c], line)?,
                None => yi,
            });
        }
        if y.is_empty() {
            return Err(Error::InvalidInput("dataset CSV has no rows".into()));
        }
        Dataset::new(Points::new(x_cols.len(), xs)?, y, clean)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_csv(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

fn x_columns(header: &csv::StringRecord) -> Result<Vec<usize>> {
    let cols: Vec<usize> = header
        .iter()
        .enumerate()
        .filter(|(_, h)| {
            let h = h.trim();
            h.len() > 1 && h.starts_with('x') && h[1..].chars().all(|c| c.is_ascii_digit())
        })
        .map(|(i, _)| i)
        .collect();
    if cols.is_empty() {
        return Err(Error::InvalidInput("CSV has no x columns".into()));
    }
    Ok(cols)
}

fn parse_field(s: &str, line: usize) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| Error::InvalidInput(format!("line {line}: `{s}`: {e}")))
}

/// Reads the `x1..xd` columns of a CSV, ignoring every other column.
pub fn read_inputs_csv<R: Read>(reader: R) -> Result<Points> {
    let mut r = csv::Reader::from_reader(reader);
    let x_cols = x_columns(&r.headers()?.clone())?;
    let mut xs = Vec::new();
    let mut rows = 0;
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        for &c in &x_cols {
            xs.push(parse_field(&rec[c], line + 2)?);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::InvalidInput("input CSV has no rows".into()));
    }
    Points::new(x_cols.len(), xs)
}

/// `h2(r) = (1 - r)^6 (35 r^2 + 18 r + 3)` on `[0, 1]`, zero beyond.
pub fn target_profile(r: f64) -> f64 {
    if r > 1.0 {
        0.0
    } else {
        let s = 1.0 - r;
        let s3 = s * s * s;
        s3 * s3 * (35.0 * r * r + 18.0 * r + 3.0)
    }
}

/// Regression function `g(x) = h2(|x|_2)`. At the origin this is the
/// continuous extension, 3.
pub fn target_g(x: &[f64]) -> f64 {
    target_profile(x.iter().map(|v| v * v).sum::<f64>().sqrt())
}

fn sample_inputs(rng: &mut ChaCha20Rng, m: usize, law: InputLaw) -> Vec<f64> {
    let mut data = Vec::with_capacity(3 * m);
    for _ in 0..m {
        match law {
            InputLaw::UniformBall3 => loop {
                let d: [f64; 3] = [
                    rng.sample(StandardNormal),
                    rng.sample(StandardNormal),
                    rng.sample(StandardNormal),
                ];
                let norm = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
                if norm == 0.0 {
                    continue;
                }
                let radius = rng.random::<f64>().cbrt();
                let mut p = d.map(|v| v * radius / norm);
                let len = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
                if len > 1.0 {
                    p = p.map(|v| v / len);
                }
                data.extend_from_slice(&p);
                break;
            },
            InputLaw::UniformCube3 => {
                for _ in 0..3 {
                    data.push(rng.random_range(-1.0..=1.0));
                }
            }
        }
    }
    data
}

pub fn generate(config: &DataGenConfig) -> Result<Dataset> {
    config.validate()?;
    let mut input_rng = ChaCha20Rng::seed_from_u64(config.seed);
    input_rng.set_stream(INPUT_STREAM);
    let x = Points::new(3, sample_inputs(&mut input_rng, config.m, config.input_law))?;
    let clean: Vec<f64> = x.rows().map(target_g).collect();

    let mut noise_rng = ChaCha20Rng::seed_from_u64(config.seed);
    noise_rng.set_stream(NOISE_STREAM);
    let sigma = config.noise_variance.sqrt();
    let y = clean
        .iter()
        .map(|&c| {
            let z: f64 = noise_rng.sample(StandardNormal);
            if sigma == 0.0 {
                c
            } else {
                c + sigma * z
            }
        })
        .collect();
    Dataset::new(x, y, clean)
}
