//! The `hmmic` command line.
//!
//! Every subcommand accepts `--config FILE`; flags override file values.
//! Exit status: 0 on success, 2 for usage and configuration errors, 3 for
//! numerical failures.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use hmmic_core::fit::{fit_online_with, OnlineOptions, StepSchedule};
use hmmic_core::kalman::{kalman_loglik, kalman_mle, kalman_score, MleOptions};
use hmmic_core::models::{simulate, AnyModel, Theta};
use hmmic_core::HmmModel;

use crate::config::{parse_checkpoints, parse_sizes, RunConfig};
use crate::io;
use crate::study::{self, CompareOptions, ExperimentConfig, Scenario};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "hmmic",
    version,
    about = "Particle MLE and information-criterion model selection for HMMs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a trajectory and write `t,x,y`.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        params: Params,
        #[arg(long)]
        model: Option<String>,
        /// Number of observations.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Fit one model online and report the estimate.
    Fit {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        fitting: Fitting,
        #[arg(long)]
        model: Option<String>,
        /// Observation file (column `y`).
        #[arg(long)]
        data: Option<PathBuf>,
        /// Write the iterate after every observation.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Exact linear-Gaussian log-likelihood, score and MLE.
    Oracle {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        params: Params,
        #[arg(long)]
        data: Option<PathBuf>,
        /// Also maximise the exact likelihood.
        #[arg(long)]
        mle: bool,
    },
    /// Fit several models on one data set and write their criteria.
    Compare {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        fitting: Fitting,
        #[arg(long)]
        data: Option<PathBuf>,
        /// Comma-separated model names.
        #[arg(long)]
        models: Option<String>,
        /// Add Laplace log-evidence.
        #[arg(long)]
        evidence: bool,
        /// Fit the linear-Gaussian model by exact maximum likelihood.
        #[arg(long)]
        mle: bool,
    },
    /// Replication study on the SV/SVJ pair (resumable).
    Replicate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        fitting: Fitting,
        #[command(flatten)]
        params: Params,
        #[command(flatten)]
        study: StudyArgs,
        /// Sample sizes, comma-separated.
        #[arg(long)]
        n: Option<String>,
        /// Replications.
        #[arg(long = "r", visible_alias = "replications")]
        replications: Option<usize>,
        /// Record the wall time of every replication.
        #[arg(long)]
        wall_time: bool,
    },
    /// IC differences along one realisation.
    Path {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        fitting: Fitting,
        #[command(flatten)]
        params: Params,
        #[command(flatten)]
        study: StudyArgs,
        /// `start:end:step` or a comma-separated list.
        #[arg(long)]
        checkpoints: Option<String>,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// Configuration file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; standard output if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Params {
    #[arg(long)]
    phi: Option<f64>,
    #[arg(long = "sigma-x", visible_alias = "sigma_x")]
    sigma_x: Option<f64>,
    #[arg(long = "sigma-v", visible_alias = "sigma_v")]
    sigma_v: Option<f64>,
    #[arg(long = "sigma-j", visible_alias = "sigma_j")]
    sigma_j: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
}

#[derive(Debug, Args)]
pub struct Fitting {
    /// Particles.
    #[arg(long = "N", visible_alias = "particles")]
    particles: Option<usize>,
    #[arg(long = "schedule-c", visible_alias = "schedule_c")]
    schedule_c: Option<f64>,
    #[arg(long = "schedule-a", visible_alias = "schedule_a")]
    schedule_a: Option<f64>,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    /// 1: SVJ true, 2: SV true.
    #[arg(long)]
    scenario: Option<u8>,
    #[arg(long = "out-dir", visible_alias = "out_dir")]
    out_dir: Option<PathBuf>,
}

impl Common {
    fn apply(&self, c: &mut RunConfig) {
        c.seed = self.seed;
        c.out = self.out.clone();
    }
}

impl Params {
    fn apply(&self, c: &mut RunConfig) {
        c.phi = self.phi;
        c.sigma_x = self.sigma_x;
        c.sigma_v = self.sigma_v;
        c.sigma_j = self.sigma_j;
        c.p = self.p;
    }
}

impl Fitting {
    fn apply(&self, c: &mut RunConfig) {
        c.particles = self.particles;
        c.schedule_c = self.schedule_c;
        c.schedule_a = self.schedule_a;
    }
}

impl StudyArgs {
    fn apply(&self, c: &mut RunConfig) {
        c.scenario = self.scenario;
        c.out_dir = self.out_dir.clone();
    }
}

fn flag(on: bool) -> Option<bool> {
    on.then_some(true)
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Simulate { common, .. }
            | Command::Fit { common, .. }
            | Command::Oracle { common, .. }
            | Command::Compare { common, .. }
            | Command::Replicate { common, .. }
            | Command::Path { common, .. } => common,
        }
    }

    /// Settings given on the command line.
    fn flags(&self) -> Result<RunConfig> {
        let mut c = RunConfig::default();
        self.common().apply(&mut c);
        match self {
            Command::Simulate {
                params, model, n, ..
            } => {
                params.apply(&mut c);
                c.model = model.clone();
                c.n = n.map(|n| vec![n]);
            }
            Command::Fit {
                fitting,
                model,
                data,
                trace,
                ..
            } => {
                fitting.apply(&mut c);
                c.model = model.clone();
                c.data = data.clone();
                c.trace = trace.clone();
            }
            Command::Oracle {
                params, data, mle, ..
            } => {
                params.apply(&mut c);
                c.data = data.clone();
                c.mle = flag(*mle);
            }
            Command::Compare {
                fitting,
                data,
                models,
                evidence,
                mle,
                ..
            } => {
                fitting.apply(&mut c);
                c.data = data.clone();
                c.models = models
                    .as_ref()
                    .map(|m| m.split(',').map(|s| s.trim().to_string()).collect());
                c.evidence = flag(*evidence);
                c.mle = flag(*mle);
            }
            Command::Replicate {
                fitting,
                params,
                study,
                n,
                replications,
                wall_time,
                ..
            } => {
                fitting.apply(&mut c);
                params.apply(&mut c);
                study.apply(&mut c);
                c.n = n.as_deref().map(|v| parse_sizes("n", v)).transpose()?;
                c.replications = *replications;
                c.wall_time = flag(*wall_time);
            }
            Command::Path {
                fitting,
                params,
                study,
                checkpoints,
                ..
            } => {
                fitting.apply(&mut c);
                params.apply(&mut c);
                study.apply(&mut c);
                c.checkpoints = checkpoints.as_deref().map(parse_checkpoints).transpose()?;
            }
        }
        Ok(c)
    }
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed subcommand.
pub fn execute(command: &Command) -> Result<()> {
    let flags = command.flags()?;
    let file = match &command.common().config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    let c = flags.over(file);
    match command {
        Command::Simulate { .. } => simulate_cmd(&c),
        Command::Fit { .. } => fit_cmd(&c),
        Command::Oracle { .. } => oracle_cmd(&c),
        Command::Compare { .. } => compare_cmd(&c),
        Command::Replicate { .. } => replicate_cmd(&c),
        Command::Path { .. } => path_cmd(&c),
    }
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => io::write_text(
            path,
            std::str::from_utf8(bytes).expect("CSV output is UTF-8"),
        ),
        None => std::io::stdout()
            .lock()
            .write_all(bytes)
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn model_of(c: &RunConfig) -> Result<AnyModel> {
    let name = RunConfig::require(&c.model, "model")?;
    AnyModel::from_name(name).map_err(|_| Error::Config(format!("unknown model `{name}`")))
}

/// `base` with every parameter set in `c` replaced.
fn theta_with_overrides(c: &RunConfig, model: &AnyModel, base: Theta) -> Result<Theta> {
    let given = [
        ("phi", c.phi),
        ("sigma_x", c.sigma_x),
        ("sigma_v", c.sigma_v),
        ("sigma_j", c.sigma_j),
        ("p", c.p),
    ];
    let names = model.param_names();
    let mut theta = base.into_vec();
    for (key, value) in given {
        let Some(v) = value else { continue };
        let i = names.iter().position(|n| *n == key).ok_or_else(|| {
            Error::Config(format!("model `{}` has no parameter `{key}`", model.name()))
        })?;
        theta[i] = v;
    }
    Ok(Theta::new(theta))
}

fn schedule_of(c: &RunConfig) -> Result<StepSchedule> {
    let d = StepSchedule::default();
    StepSchedule::new(
        c.schedule_c.unwrap_or(d.scale()),
        c.schedule_a.unwrap_or(d.exponent()),
    )
    .map_err(|e| Error::Config(e.to_string()))
}

fn particles_of(c: &RunConfig) -> Result<usize> {
    match c.particles.unwrap_or(200) {
        0 => Err(Error::Config("`N` must be positive".into())),
        n => Ok(n),
    }
}

fn data_of(c: &RunConfig) -> Result<Vec<f64>> {
    io::read_observations(RunConfig::require(&c.data, "data")?)
}

fn csv_bytes(
    f: impl FnOnce(&mut Vec<u8>) -> std::result::Result<(), csv::Error>,
) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(|e| Error::csv("<output>", e))?;
    Ok(buf)
}

fn simulate_cmd(c: &RunConfig) -> Result<()> {
    let model = model_of(c)?;
    let theta = theta_with_overrides(c, &model, study::default_truth(&model))?;
    let n = c
        .single_n()?
        .ok_or_else(|| Error::Config("missing `n`".into()))?;
    let traj = simulate(&model, &theta, n, c.seed.unwrap_or(0))?;
    emit(
        c.out.as_deref(),
        &csv_bytes(|b| io::write_trajectory(b, &traj))?,
    )
}

fn fit_cmd(c: &RunConfig) -> Result<()> {
    let model = model_of(c)?;
    let y = data_of(c)?;
    let seed = c.seed.unwrap_or(0);
    let options = OnlineOptions {
        particles: particles_of(c)?,
        schedule: schedule_of(c)?,
        ..OnlineOptions::default()
    };
    let mut trace = c
        .trace
        .as_deref()
        .map(|p| io::TraceWriter::create(p, &model.param_names()))
        .transpose()?;
    let mut trace_error = None;
    let report = fit_online_with(
        &model,
        &y,
        &options,
        &study::default_init(&model),
        seed,
        hmmic_core::fit::default_eval_seed(seed),
        |point| {
            if let (Some(w), None) = (trace.as_mut(), &trace_error) {
                trace_error = w.push(point).err();
            }
        },
    )?;
    if let Some(e) = trace_error {
        return Err(e);
    }
    if let Some(w) = trace {
        w.finish()?;
    }
    let ic =
        hmmic_core::criteria::IcResult::new(model.name(), model.dim(), y.len(), report.loglik_hat);
    let mut rows = vec![
        ("model".to_string(), model.name().to_string()),
        ("n".into(), y.len().to_string()),
        ("particles".into(), report.particles.to_string()),
        ("fit_seed".into(), report.fit_seed.to_string()),
        ("eval_seed".into(), report.eval_seed.to_string()),
    ];
    for (name, v) in model.param_names().iter().zip(report.theta_hat.iter()) {
        rows.push((name.to_string(), v.to_string()));
    }
    rows.extend([
        ("loglik".into(), report.loglik_hat.to_string()),
        ("aic".into(), ic.aic.to_string()),
        ("bic".into(), ic.bic.to_string()),
        ("clipped_steps".into(), report.clipped_steps.to_string()),
    ]);
    emit(
        c.out.as_deref(),
        &csv_bytes(|b| io::write_key_values(b, &rows))?,
    )
}

fn oracle_cmd(c: &RunConfig) -> Result<()> {
    let model = AnyModel::from_name("lg")?;
    if c.sigma_j.is_some() || c.p.is_some() {
        return Err(Error::Config(
            "the oracle takes phi, sigma_x and sigma_v only".into(),
        ));
    }
    let theta = theta_with_overrides(c, &model, study::lg_truth())?;
    model
        .check_theta(&theta)
        .map_err(|e| Error::Config(e.to_string()))?;
    let y = data_of(c)?;
    let names = model.param_names();
    let mut rows = vec![
        ("n".to_string(), y.len().to_string()),
        ("loglik".into(), kalman_loglik(&theta, &y)?.to_string()),
    ];
    for (name, s) in names.iter().zip(kalman_score(&theta, &y)?) {
        rows.push((format!("score_{name}"), s.to_string()));
    }
    if c.mle.unwrap_or(false) {
        let fit = kalman_mle(&y, &theta, &MleOptions::default())?;
        for (name, v) in names.iter().zip(fit.theta.iter()) {
            rows.push((format!("mle_{name}"), v.to_string()));
        }
        rows.extend([
            ("mle_loglik".into(), fit.loglik.to_string()),
            ("mle_score_norm".into(), fit.score_norm.to_string()),
            ("mle_iterations".into(), fit.iterations.to_string()),
            ("mle_converged".into(), fit.converged.to_string()),
        ]);
    }
    emit(
        c.out.as_deref(),
        &csv_bytes(|b| io::write_key_values(b, &rows))?,
    )
}

fn compare_cmd(c: &RunConfig) -> Result<()> {
    let names = c
        .models
        .clone()
        .unwrap_or_else(|| vec!["sv".into(), "svj".into()]);
    let models = names
        .iter()
        .map(|n| AnyModel::from_name(n).map_err(|_| Error::Config(format!("unknown model `{n}`"))))
        .collect::<Result<Vec<_>>>()?;
    if models.is_empty() {
        return Err(Error::Config("`models` is empty".into()));
    }
    let y = data_of(c)?;
    let options = CompareOptions {
        particles: particles_of(c)?,
        schedule: schedule_of(c)?,
        seed: c.seed.unwrap_or(0),
        evidence: c.evidence.unwrap_or(false),
        exact_lg: c.mle.unwrap_or(false),
    };
    let results: Vec<_> = study::compare_models(&models, &y, &options)?
        .into_iter()
        .map(|r| r.ic)
        .collect();
    emit(
        c.out.as_deref(),
        &csv_bytes(|b| io::write_ic_results(b, &results))?,
    )
}

fn experiment_of(c: &RunConfig, default_scenario: u8) -> Result<ExperimentConfig> {
    let scenario = Scenario::from_number(c.scenario.unwrap_or(default_scenario))?;
    let mut e = ExperimentConfig::new(scenario);
    e.truth = theta_with_overrides(c, &scenario.true_model(), e.truth)?;
    e.particles = particles_of(c)?;
    e.schedule = schedule_of(c)?;
    e.master_seed = c.seed.unwrap_or(0);
    if let Some(dir) = &c.out_dir {
        e.out_dir = dir.clone();
    }
    Ok(e)
}

fn replicate_cmd(c: &RunConfig) -> Result<()> {
    let mut e = experiment_of(c, 1)?;
    if let Some(n) = &c.n {
        e.n_values = n.clone();
    }
    if let Some(r) = c.replications {
        e.replications = r;
    }
    e.wall_time = c.wall_time.unwrap_or(false);
    study::run_replication_study(&e)?;
    let table = std::fs::read(e.out_dir.join(study::FRACTIONS_FILE))
        .map_err(|err| Error::io(&e.out_dir, err))?;
    emit(c.out.as_deref(), &table)
}

fn path_cmd(c: &RunConfig) -> Result<()> {
    let mut e = experiment_of(c, 2)?;
    e.n_values = c
        .checkpoints
        .clone()
        .unwrap_or_else(|| (1000..=10_000).step_by(1000).collect());
    study::run_path_study(&e)?;
    let rows = std::fs::read(e.out_dir.join(study::PATH_FILE))
        .map_err(|err| Error::io(&e.out_dir, err))?;
    emit(c.out.as_deref(), &rows)
}
