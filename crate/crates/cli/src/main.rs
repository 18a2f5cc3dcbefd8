//! `kreboot` command-line tool.
//!
//! Exit codes: 0 success, 2 usage error, 3 I/O error, 4 numerical failure.

mod settings;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kreboot::baselines::{krr_fit, lasso_fit, KrrConfig, LassoConfig};
use kreboot::datagen::PRNG_NAME;
use kreboot::experiments::*;
use kreboot::{fit_gram_observed, gram, read_inputs_csv, Dataset, FittedModel, RadialKernel, Schedules, StepRecord};
use serde_json::{json, Map, Value};

use settings::{parse_alpha, parse_methods, Settings};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] kreboot::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use kreboot::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Core(E::InvalidInput(_) | E::DimensionMismatch { .. }) => 2,
            CliError::Core(E::Io(_) | E::Csv(_) | E::Json(_)) => 3,
            CliError::Core(_) => 4,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "kreboot", version, about = "Kernel re-scaled boosting with truncation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Flat JSON file with the same keys as the flags; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    settings: Settings,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
enum Command {
    /// Fit one model to a dataset (generated from --m/--noise/--seed when --data is absent).
    Fit,
    /// Evaluate a fitted model on the inputs of --data.
    Predict,
    /// Test MSE over the (iteration, c0) plane.
    Sim1,
    /// Test MSE against training-set size.
    Sim2,
    /// Method comparison table.
    Sim3,
    /// Test MSE and l1 norm along the iteration path.
    Sim45,
    /// Convergence rate of the training risk.
    Rates,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Fit => "fit",
            Command::Predict => "predict",
            Command::Sim1 => "sim1",
            Command::Sim2 => "sim2",
            Command::Sim3 => "sim3",
            Command::Sim45 => "sim45",
            Command::Rates => "rates",
        }
    }

    fn is_simulation(self) -> bool {
        !matches!(self, Command::Fit | Command::Predict | Command::Rates)
    }

    /// Values used when neither a flag nor the config sets a parameter. The
    /// simulations take `m` and the noise level from their own grids unless
    /// one is set explicitly.
    fn defaults(self) -> Settings {
        let mut s = Settings {
            seed: Some(42),
            jobs: Some(0),
            out: Some(PathBuf::from("out")),
            trials: Some(20),
            full: Some(false),
            c0: Some(0.5),
            alpha: Some("harmonic".into()),
            eps: Some(kreboot::VariantPolicy::DEFAULT_EPS),
            ..Settings::default()
        };
        match self {
            Command::Fit | Command::Predict => {
                s.m = Some(500);
                s.noise = Some(1.0);
                s.kmax = Some(2000);
                s.method = Some("KReBooT".into());
                s.lambda = Some(1e-2);
                s.radius = Some(1.0);
            }
            Command::Sim1 => s.kmax = Some(2000),
            Command::Sim2 => s.kmax = Some(1000),
            Command::Sim3 => {
                s.kmax = Some(3000);
                s.method = Some(names(&Method::ALL));
            }
            Command::Sim45 => {
                s.kmax = Some(5000);
                s.method = Some(names(&[Method::KReBooT, Method::KRboosting, Method::KRTboosting]));
            }
            Command::Rates => {
                s.kmax = Some(10_000);
                s.c0 = Some(5.0);
                s.noise = Some(0.1);
                s.m = Some(50);
            }
        }
        s
    }
}

fn names(methods: &[Method]) -> String {
    methods.iter().map(|m| m.name()).collect::<Vec<_>>().join(",")
}

/// Fully resolved parameters; every field of `settings` that the command
/// reads is `Some`.
struct Run {
    command: Command,
    settings: Settings,
    outputs: Vec<String>,
}

impl Run {
    fn seed(&self) -> u64 {
        self.settings.seed.expect("resolved")
    }
    fn jobs(&self) -> usize {
        self.settings.jobs.expect("resolved")
    }
    fn kmax(&self) -> usize {
        self.settings.kmax.expect("resolved")
    }
    fn c0(&self) -> f64 {
        self.settings.c0.expect("resolved")
    }
    fn noise(&self) -> f64 {
        self.settings.noise.expect("resolved")
    }
    fn m(&self) -> usize {
        self.settings.m.expect("resolved")
    }
    fn eps(&self) -> f64 {
        self.settings.eps.expect("resolved")
    }
    fn full(&self) -> bool {
        self.settings.full.expect("resolved")
    }
    fn trials(&self) -> usize {
        self.settings.trials.expect("resolved")
    }
    fn out_dir(&self) -> &Path {
        self.settings.out.as_deref().expect("resolved")
    }
    fn methods(&self) -> Result<Vec<Method>, CliError> {
        parse_methods(self.settings.method.as_deref().expect("resolved"))
    }

    fn options(&self) -> HarnessOptions {
        HarnessOptions {
            master_seed: self.seed(),
            trials: self.trials(),
            jobs: self.jobs(),
            ..HarnessOptions::default()
        }
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>, CliError> {
        let path = self.out_dir().join(name);
        let file = File::create(&path).map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))?;
        self.outputs.push(name.to_string());
        Ok(BufWriter::new(file))
    }

    fn write_manifest(&mut self) -> Result<(), CliError> {
        let mut doc = match serde_json::to_value(&self.settings).expect("settings serialise") {
            Value::Object(map) => map,
            _ => Map::new(),
        };
        doc.retain(|_, v| !v.is_null());
        doc.insert("command".into(), json!(self.command.name()));
        doc.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        doc.insert("prng".into(), json!(PRNG_NAME));
        if self.command.is_simulation() {
            let options = self.options();
            let trial_seeds: Vec<u64> = (0..self.trials()).map(|t| options.trial_seed(t)).collect();
            doc.insert("trial_seeds".into(), json!(trial_seeds));
        }
        self.outputs.push("manifest.json".into());
        doc.insert("outputs".into(), json!(self.outputs));
        let path = self.out_dir().join("manifest.json");
        let text = serde_json::to_string_pretty(&Value::Object(doc)).expect("manifest serialises");
        std::fs::write(&path, text + "\n").map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
    }
}

fn resolve(cli: Cli) -> Result<Run, CliError> {
    let file = match &cli.config {
        Some(path) => Settings::from_file(path)?,
        None => Settings::default(),
    };
    let explicit = cli.settings.over(file);
    explicit.validate()?;
    let trials_given = explicit.trials.is_some();
    let mut settings = explicit.over(cli.command.defaults());
    if settings.full == Some(true) && !trials_given {
        settings.trials = Some(100);
    }
    let out = settings.out.clone().expect("resolved");
    std::fs::create_dir_all(&out)
        .map_err(|e| CliError::Io(format!("cannot create output directory {}: {e}", out.display())))?;
    Ok(Run {
        command: cli.command,
        settings,
        outputs: Vec::new(),
    })
}

fn fit(run: &mut Run) -> Result<(), CliError> {
    let data = match run.settings.data.clone() {
        Some(path) => Dataset::load(&path).map_err(|e| with_path(e, &path))?,
        None => {
            let data = run.options().dataset(0, DataRole::Train, run.m(), run.noise())?;
            data.write_csv(run.create("train.csv")?)?;
            data
        }
    };
    let methods = run.methods()?;
    let [method] = methods[..] else {
        return Err(CliError::Usage(format!(
            "method: fit takes exactly one method, got {}",
            methods.len()
        )));
    };
    let kernel = RadialKernel::Wendland31;
    let alpha = parse_alpha(run.settings.alpha.as_deref().expect("resolved"))?;
    let schedules = Schedules {
        alpha,
        ..Schedules::logarithmic(run.c0())
    };
    let coefficients = match method.boost_config(run.c0(), run.eps()) {
        Some(mut cfg) => {
            cfg.schedules = schedules;
            let g = gram(&data.x, &kernel)?;
            let mut history: Vec<StepRecord> = Vec::new();
            let state = fit_gram_observed(&g, &data.y, &cfg, run.kmax(), |_, r| history.push(*r))?;
            write_history(run.create("history.csv")?, &history)?;
            if let Some(last) = history.last() {
                println!("{}: k={} risk={} l1={}", method.name(), last.k, last.risk, last.l1_norm);
            }
            state.coefficients
        }
        None if method == Method::Krr => krr_fit(
            &data,
            &kernel,
            &KrrConfig {
                lambda: run.settings.lambda.expect("resolved"),
            },
        )?,
        None => {
            let fit = lasso_fit(
                &data,
                &kernel,
                &LassoConfig::new(run.settings.radius.expect("resolved")),
            )?;
            println!("Klasso: objective={} iterations={}", fit.objective, fit.iterations);
            fit.coefficients
        }
    };
    let model = FittedModel::new(&data.x, coefficients, kernel, schedules)?;
    let mut w = run.create("model.json")?;
    w.write_all(model.to_json()?.as_bytes())?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Prefixes I/O and parse failures with the file they concern.
fn with_path(e: kreboot::Error, path: &Path) -> CliError {
    match e {
        kreboot::Error::Io(e) => CliError::Io(format!("{}: {e}", path.display())),
        kreboot::Error::Json(e) => CliError::Io(format!("{}: {e}", path.display())),
        kreboot::Error::Csv(e) => CliError::Io(format!("{}: {e}", path.display())),
        other => CliError::Core(other),
    }
}

fn write_history<W: Write>(writer: W, history: &[StepRecord]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["k", "index", "alpha", "beta", "correlation", "risk", "l1_norm"])
        .map_err(kreboot::Error::from)?;
    for r in history {
        w.write_record([
            r.k.to_string(),
            r.index.to_string(),
            r.alpha.to_string(),
            r.beta.to_string(),
            r.correlation.to_string(),
            r.risk.to_string(),
            r.l1_norm.to_string(),
        ])
        .map_err(kreboot::Error::from)?;
    }
    w.flush()?;
    Ok(())
}

fn predict(run: &mut Run) -> Result<(), CliError> {
    let model_path = run
        .settings
        .model
        .clone()
        .ok_or_else(|| CliError::Usage("model: predict needs --model".into()))?;
    let data_path = run
        .settings
        .data
        .clone()
        .ok_or_else(|| CliError::Usage("data: predict needs --data".into()))?;
    let model = FittedModel::load(&model_path).map_err(|e| with_path(e, &model_path))?;
    let file = File::open(&data_path).map_err(|e| CliError::Io(format!("{}: {e}", data_path.display())))?;
    let x = read_inputs_csv(file).map_err(|e| with_path(e, &data_path))?;
    let predictions = model.predict(&x)?;
    let mut w = csv::Writer::from_writer(run.create("predictions.csv")?);
    let mut header: Vec<String> = (1..=x.dim()).map(|c| format!("x{c}")).collect();
    header.push("prediction".into());
    w.write_record(&header).map_err(kreboot::Error::from)?;
    for (row, p) in x.rows().zip(&predictions) {
        let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        rec.push(p.to_string());
        w.write_record(&rec).map_err(kreboot::Error::from)?;
    }
    w.flush()?;
    Ok(())
}

fn sim1(run: &mut Run) -> Result<(), CliError> {
    let mut cfg = Sim1Config::paper(run.trials(), run.kmax())?;
    if let Some(m) = run.settings.m {
        cfg.m_train = m;
    }
    if let Some(noise) = run.settings.noise {
        cfg.noise_variances = vec![noise];
    }
    let rows = simulation_1(&cfg, &run.options())?;
    write_sim1_csv(run.create("sim1.csv")?, &rows, run.seed())?;
    Ok(())
}

fn sim2(run: &mut Run) -> Result<(), CliError> {
    let mut cfg = Sim2Config::new(run.full(), run.kmax());
    cfg.c0 = run.c0();
    if let Some(m) = run.settings.m {
        cfg.m_grid = vec![m];
    }
    if let Some(noise) = run.settings.noise {
        cfg.noise_variances = vec![noise];
    }
    let rows = simulation_2(&cfg, &run.options())?;
    write_sim2_csv(run.create("sim2.csv")?, &rows, &cfg, run.seed())?;
    Ok(())
}

fn sim3(run: &mut Run) -> Result<(), CliError> {
    let mut cfg = Sim3Config::paper(run.kmax());
    cfg.methods = run.methods()?;
    cfg.c0 = run.c0();
    cfg.eps = run.eps();
    if let Some(m) = run.settings.m {
        cfg.settings.retain(|s| s.m == m);
    }
    if let Some(noise) = run.settings.noise {
        cfg.settings.retain(|s| s.noise_variance == noise);
    }
    if cfg.settings.is_empty() {
        return Err(CliError::Usage(
            "m/noise: sim3 settings are m in {300, 1000} and noise in {1, 2}".into(),
        ));
    }
    let report = simulation_3(&cfg, &run.options())?;
    write_sim3_table_csv(run.create("sim3_table.csv")?, &report, run.seed())?;
    write_sim3_cells_csv(run.create("sim3_cells.csv")?, &report, run.seed())?;
    Ok(())
}

fn sim45(run: &mut Run) -> Result<(), CliError> {
    let mut cfg = Sim45Config::new(run.kmax());
    cfg.methods = run.methods()?;
    cfg.c0 = run.c0();
    if let Some(m) = run.settings.m {
        cfg.m_train = m;
    }
    if let Some(noise) = run.settings.noise {
        cfg.noise_variances = vec![noise];
    }
    let rows = simulation_4_5(&cfg, &run.options())?;
    write_sim45_csv(run.create("sim45.csv")?, &rows, &cfg, run.seed())?;
    Ok(())
}

fn rates_cmd(run: &mut Run) -> Result<(), CliError> {
    let k_max = run.kmax();
    let cfg = RateConfig {
        m: run.m(),
        noise_variance: run.noise(),
        seed: run.seed(),
        c0: run.c0(),
        alpha: parse_alpha(run.settings.alpha.as_deref().expect("resolved"))?,
        k_max,
        window: (RateConfig::default().window.0.min(k_max), k_max),
        ..RateConfig::default()
    };
    let report = rates(&cfg)?;
    write_rates_csv(run.create("rates.csv")?, &report)?;
    let mut w = run.create("rates_report.json")?;
    serde_json::to_writer_pretty(&mut w, &report).map_err(kreboot::Error::from)?;
    w.write_all(b"\n")?;
    w.flush()?;
    println!("slope={} r_squared={}", report.slope, report.r_squared);
    for warning in &report.warnings {
        eprintln!("warning: {warning}");
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let mut run = resolve(cli)?;
    match run.command {
        Command::Fit => fit(&mut run)?,
        Command::Predict => predict(&mut run)?,
        Command::Sim1 => sim1(&mut run)?,
        Command::Sim2 => sim2(&mut run)?,
        Command::Sim3 => sim3(&mut run)?,
        Command::Sim45 => sim45(&mut run)?,
        Command::Rates => rates_cmd(&mut run)?,
    }
    run.write_manifest()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
