//! Simulation studies on the stochastic volatility pair (SV nested in SVJ).
//!
//! Replication `r` simulates its data with `derive_seed(master, r)` and fits
//! both models with `derive_seed(data_seed, 1)`, so SV and SVJ see common
//! random numbers. The online fit is causal: the iterate after `m`
//! observations depends on the first `m` only. One pass over the longest
//! series therefore yields the fits on every shorter prefix, and each
//! prefix log-likelihood is evaluated exactly as [`fit_online`] would.
//!
//! [`fit_online`]: hmmic_core::fit::fit_online

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::Instant;

use hmmic_core::criteria::{laplace_log_evidence, select, Criterion, IcResult, LaplaceConfig};
use hmmic_core::fit::{default_eval_seed, OnlineFit, OnlineOptions, StepSchedule};
use hmmic_core::kalman::{kalman_mle, MleOptions};
use hmmic_core::models::{
    simulate, AnyModel, StochasticVolatility, StochasticVolatilityJumps, Theta,
};
use hmmic_core::rng::derive_seed;
use hmmic_core::smc::{run_filter, FilterConfig};
use hmmic_core::HmmModel;
use rayon::prelude::*;

use crate::io;
use crate::{Error, Result};

/// Environment variable holding the worker count; unset or `0` means one
/// worker per core.
pub const WORKERS_ENV: &str = "HMMIC_WORKERS";

pub const RECORDS_FILE: &str = "records.csv";
pub const FRACTIONS_FILE: &str = "fractions.csv";
pub const RUN_FILE: &str = "run.csv";
pub const PATH_FILE: &str = "path.csv";
pub const PATH_SCRIPT: &str = "path.gp";

pub fn sv_truth() -> Theta {
    Theta::new(vec![0.9, 0.3f64.sqrt()])
}

pub fn svj_truth() -> Theta {
    Theta::new(vec![0.9, 0.3f64.sqrt(), 0.6f64.sqrt(), 0.6])
}

pub fn lg_truth() -> Theta {
    Theta::new(vec![0.9, 0.3f64.sqrt(), 1.0])
}

/// Parameters used by `simulate` when none are given.
pub fn default_truth(model: &AnyModel) -> Theta {
    match model {
        AnyModel::LinearGaussian(_) => lg_truth(),
        AnyModel::Sv(_) => sv_truth(),
        AnyModel::Svj(_) => svj_truth(),
    }
}

/// Starting point of every online fit.
pub fn default_init(model: &AnyModel) -> Theta {
    match model {
        AnyModel::LinearGaussian(_) => Theta::new(vec![0.5, 1.0, 1.0]),
        AnyModel::Sv(_) => Theta::new(vec![0.5, 1.0]),
        AnyModel::Svj(_) => Theta::new(vec![0.5, 1.0, 1.0, 0.5]),
    }
}

/// Log prior density: φ uniform on (-1, 1), scales log-normal(0, 1), jump
/// probability uniform on (0, 1).
pub fn default_log_prior(model: &AnyModel, theta: &[f64]) -> f64 {
    let log_normal =
        |s: f64| -s.ln() - 0.5 * s.ln().powi(2) - 0.5 * (2.0 * std::f64::consts::PI).ln();
    model
        .param_names()
        .iter()
        .zip(theta)
        .map(|(name, &v)| match *name {
            "phi" => 0.5f64.ln(),
            "p" => 0.0,
            _ => log_normal(v),
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    SvjTrue,
    SvTrue,
}

impl Scenario {
    pub fn from_number(k: u8) -> Result<Self> {
        match k {
            1 => Ok(Scenario::SvjTrue),
            2 => Ok(Scenario::SvTrue),
            _ => Err(Error::Config(format!("scenario must be 1 or 2, got {k}"))),
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Scenario::SvjTrue => 1,
            Scenario::SvTrue => 2,
        }
    }

    pub fn true_model(self) -> AnyModel {
        match self {
            Scenario::SvjTrue => AnyModel::Svj(StochasticVolatilityJumps),
            Scenario::SvTrue => AnyModel::Sv(StochasticVolatility),
        }
    }

    pub fn default_truth(self) -> Theta {
        default_truth(&self.true_model())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub truth: Theta,
    /// Sample sizes; for the path study, the checkpoints.
    pub n_values: Vec<usize>,
    pub particles: usize,
    pub replications: usize,
    pub master_seed: u64,
    pub schedule: StepSchedule,
    pub out_dir: PathBuf,
    /// Adds a `wall_time` column, which makes the records nondeterministic.
    pub wall_time: bool,
}

impl ExperimentConfig {
    /// The published design: N = 200, R = 200, n ∈ {2500, 5000, 7500, 10000},
    /// γ_k = k^(-2/3).
    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario,
            truth: scenario.default_truth(),
            n_values: vec![2500, 5000, 7500, 10000],
            particles: 200,
            replications: 200,
            master_seed: 0,
            schedule: StepSchedule::default(),
            out_dir: PathBuf::from("."),
            wall_time: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let model = self.scenario.true_model();
        model
            .check_theta(&self.truth)
            .map_err(|e| Error::Config(format!("true parameters: {e}")))?;
        if self.n_values.is_empty() || self.n_values.iter().any(|&n| n < 2) {
            return Err(Error::Config("sample sizes must be at least 2".into()));
        }
        if self.particles == 0 {
            return Err(Error::Config("`N` must be positive".into()));
        }
        Ok(())
    }

    fn online_options(&self) -> OnlineOptions {
        OnlineOptions {
            particles: self.particles,
            schedule: self.schedule,
            ..OnlineOptions::default()
        }
    }

    fn sorted_sizes(&self) -> Vec<usize> {
        let mut v = self.n_values.clone();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Settings that must match for records to be reused on resume.
    fn fingerprint(&self) -> Vec<(String, String)> {
        let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(";");
        vec![
            ("scenario".into(), self.scenario.number().to_string()),
            ("truth".into(), join(&self.truth)),
            (
                "n".into(),
                self.sorted_sizes()
                    .iter()
                    .map(usize::to_string)
                    .collect::<Vec<_>>()
                    .join(";"),
            ),
            ("particles".into(), self.particles.to_string()),
            ("seed".into(), self.master_seed.to_string()),
            ("schedule_c".into(), self.schedule.scale().to_string()),
            ("schedule_a".into(), self.schedule.exponent().to_string()),
            ("wall_time".into(), self.wall_time.to_string()),
        ]
    }
}

/// Fitted parameters and criteria of one model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFit {
    pub theta: Theta,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
}

impl ModelFit {
    fn new(theta: Theta, loglik: f64, n: usize) -> Self {
        let ic = IcResult::new("", theta.len(), n, loglik);
        Self {
            theta,
            loglik,
            aic: ic.aic,
            bic: ic.bic,
        }
    }

    fn ic(&self, name: &str) -> IcResult {
        IcResult {
            model: name.to_string(),
            d: self.theta.len(),
            n: 0,
            loglik: self.loglik,
            aic: self.aic,
            bic: self.bic,
            generalized_ic: None,
            log_evidence: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairFit {
    pub sv: ModelFit,
    pub svj: ModelFit,
}

impl PairFit {
    fn selected(&self, criterion: Criterion) -> &'static str {
        let pair = [self.sv.ic("sv"), self.svj.ic("svj")];
        match select(&pair, criterion) {
            Some(1) => "svj",
            _ => "sv",
        }
    }

    /// Recomputed from the stored AIC values; ties go to SV.
    pub fn selected_by_aic(&self) -> &'static str {
        self.selected(Criterion::Aic)
    }

    pub fn selected_by_bic(&self) -> &'static str {
        self.selected(Criterion::Bic)
    }

    /// AIC(SV) − AIC(SVJ) and BIC(SV) − BIC(SVJ).
    pub fn differences(&self) -> (f64, f64) {
        (self.sv.aic - self.svj.aic, self.sv.bic - self.svj.bic)
    }
}

/// One row of the replication CSV; `outcome` holds the error text of a
/// failed fit.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRecord {
    pub scenario: u8,
    pub replication: usize,
    pub n: usize,
    pub data_seed: u64,
    pub outcome: std::result::Result<PairFit, String>,
    pub wall_time: Option<f64>,
}

/// Online fit of `model` over `observations[..max(checkpoints)]`, reported
/// at each checkpoint as if fitted on that prefix alone.
pub fn fit_at_checkpoints(
    model: &AnyModel,
    observations: &[f64],
    checkpoints: &[usize],
    options: &OnlineOptions,
    init: &Theta,
    seed: u64,
) -> Vec<std::result::Result<ModelFit, hmmic_core::Error>> {
    let mut out: Vec<std::result::Result<ModelFit, hmmic_core::Error>> =
        Vec::with_capacity(checkpoints.len());
    let mut fit = match OnlineFit::new(model, init, options.clone(), seed) {
        Ok(f) => f,
        Err(e) => return checkpoints.iter().map(|_| Err(e.clone())).collect(),
    };
    let eval = FilterConfig {
        particles: options.particles,
        scheme: options.scheme,
        resample_threshold: options.resample_threshold,
        track_score: false,
    };
    let eval_seed = default_eval_seed(seed);
    let mut failure: Option<hmmic_core::Error> = None;
    for &m in checkpoints {
        if m < 2 || m > observations.len() {
            out.push(Err(hmmic_core::Error::InvalidInput(
                "checkpoint outside the data",
            )));
            continue;
        }
        while failure.is_none() && fit.steps() < m {
            if let Err(e) = fit.step(observations[fit.steps()]) {
                failure = Some(e);
            }
        }
        if let Some(e) = &failure {
            out.push(Err(e.clone()));
            continue;
        }
        let theta = fit.theta().clone();
        out.push(
            run_filter(model, &theta, &observations[..m], &eval, eval_seed)
                .map(|r| ModelFit::new(theta, r.loglik, m)),
        );
    }
    out
}

/// SV and SVJ fits at each checkpoint with a shared fit seed.
pub fn fit_pair(
    observations: &[f64],
    checkpoints: &[usize],
    options: &OnlineOptions,
    seed: u64,
) -> Vec<std::result::Result<PairFit, hmmic_core::Error>> {
    let sv_model = AnyModel::Sv(StochasticVolatility);
    let svj_model = AnyModel::Svj(StochasticVolatilityJumps);
    let (sv, svj) = rayon::join(
        || {
            fit_at_checkpoints(
                &sv_model,
                observations,
                checkpoints,
                options,
                &default_init(&sv_model),
                seed,
            )
        },
        || {
            fit_at_checkpoints(
                &svj_model,
                observations,
                checkpoints,
                options,
                &default_init(&svj_model),
                seed,
            )
        },
    );
    sv.into_iter()
        .zip(svj)
        .map(|(a, b)| Ok(PairFit { sv: a?, svj: b? }))
        .collect()
}

/// Seed of the data of replication `r`.
pub fn data_seed(master: u64, replication: usize) -> u64 {
    derive_seed(master, replication as u64)
}

/// Seed of both fits on data simulated with `data_seed`.
pub fn fit_seed(data_seed: u64) -> u64 {
    derive_seed(data_seed, 1)
}

/// All rows of replication `r`, one per sample size.
pub fn run_replication(config: &ExperimentConfig, replication: usize) -> Vec<ReplicationRecord> {
    let started = Instant::now();
    let sizes = config.sorted_sizes();
    let seed = data_seed(config.master_seed, replication);
    let longest = *sizes.last().expect("validated sizes");
    let outcomes: Vec<std::result::Result<PairFit, String>> =
        match simulate(&config.scenario.true_model(), &config.truth, longest, seed) {
            Ok(traj) => fit_pair(
                &traj.observations,
                &sizes,
                &config.online_options(),
                fit_seed(seed),
            )
            .into_iter()
            .map(|r| r.map_err(|e| e.to_string()))
            .collect(),
            Err(e) => sizes.iter().map(|_| Err(e.to_string())).collect(),
        };
    let wall = config.wall_time.then(|| started.elapsed().as_secs_f64());
    sizes
        .iter()
        .zip(outcomes)
        .map(|(&n, outcome)| ReplicationRecord {
            scenario: config.scenario.number(),
            replication,
            n,
            data_seed: seed,
            outcome,
            wall_time: wall,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FractionRow {
    pub criterion: &'static str,
    pub model: &'static str,
    pub n: usize,
    pub selected: usize,
    pub successful: usize,
    pub failures: usize,
}

/// Selection counts by criterion, model and sample size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FractionTable {
    pub rows: Vec<FractionRow>,
}

impl FractionTable {
    pub fn from_records(records: &[ReplicationRecord]) -> Self {
        let mut sizes: Vec<usize> = records.iter().map(|r| r.n).collect();
        sizes.sort_unstable();
        sizes.dedup();
        let mut rows = Vec::new();
        for criterion in ["aic", "bic"] {
            for model in ["sv", "svj"] {
                for &n in &sizes {
                    let at_n = records.iter().filter(|r| r.n == n);
                    let (mut selected, mut successful, mut failures) = (0, 0, 0);
                    for r in at_n {
                        match &r.outcome {
                            Ok(pair) => {
                                successful += 1;
                                let pick = if criterion == "aic" {
                                    pair.selected_by_aic()
                                } else {
                                    pair.selected_by_bic()
                                };
                                selected += usize::from(pick == model);
                            }
                            Err(_) => failures += 1,
                        }
                    }
                    rows.push(FractionRow {
                        criterion,
                        model,
                        n,
                        selected,
                        successful,
                        failures,
                    });
                }
            }
        }
        Self { rows }
    }

    pub fn count(&self, criterion: &str, model: &str, n: usize) -> Option<&FractionRow> {
        self.rows
            .iter()
            .find(|r| r.criterion == criterion && r.model == model && r.n == n)
    }
}

/// Worker count from [`WORKERS_ENV`].
pub fn configured_workers() -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(0),
        Ok(v) if v.trim().is_empty() => Ok(0),
        Ok(v) => v.trim().parse().map_err(|_| {
            Error::Config(format!(
                "{WORKERS_ENV} must be a non-negative integer, got `{v}`"
            ))
        }),
    }
}

fn pool() -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(configured_workers()?)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

/// Records of earlier runs that can be kept, keyed by replication.
fn resumable(config: &ExperimentConfig) -> Result<BTreeMap<usize, Vec<ReplicationRecord>>> {
    let run_path = config.out_dir.join(RUN_FILE);
    let records_path = config.out_dir.join(RECORDS_FILE);
    let mut kept = BTreeMap::new();
    if !run_path.exists() || !records_path.exists() {
        return Ok(kept);
    }
    let mut expected = Vec::new();
    io::write_key_values(&mut expected, &config.fingerprint())
        .map_err(|e| Error::csv(&run_path, e))?;
    let found = std::fs::read(&run_path).map_err(|e| Error::io(&run_path, e))?;
    if found != expected {
        return Err(Error::Config(format!(
            "{} was produced with different settings; use another out_dir",
            config.out_dir.display()
        )));
    }
    let sizes = config.sorted_sizes();
    let mut by_rep: BTreeMap<usize, Vec<ReplicationRecord>> = BTreeMap::new();
    for r in io::read_records(&records_path)? {
        by_rep.entry(r.replication).or_default().push(r);
    }
    for (rep, mut rows) in by_rep {
        rows.sort_by_key(|r| r.n);
        let complete = rows.iter().map(|r| r.n).eq(sizes.iter().copied())
            && rows
                .iter()
                .all(|r| r.data_seed == data_seed(config.master_seed, rep));
        if complete && rep < config.replications {
            kept.insert(rep, rows);
        }
    }
    Ok(kept)
}

/// Runs (or resumes) the replication study and writes `records.csv`,
/// `fractions.csv` and `run.csv` into `out_dir`.
pub fn run_replication_study(
    config: &ExperimentConfig,
) -> Result<(FractionTable, Vec<ReplicationRecord>)> {
    config.validate()?;
    std::fs::create_dir_all(&config.out_dir).map_err(|e| Error::io(&config.out_dir, e))?;
    let mut done = resumable(config)?;

    let run_path = config.out_dir.join(RUN_FILE);
    let mut fingerprint = Vec::new();
    io::write_key_values(&mut fingerprint, &config.fingerprint())
        .map_err(|e| Error::csv(&run_path, e))?;
    io::write_text(
        &run_path,
        std::str::from_utf8(&fingerprint).expect("CSV output is UTF-8"),
    )?;

    let records_path = config.out_dir.join(RECORDS_FILE);
    let kept: Vec<ReplicationRecord> = done.values().flatten().cloned().collect();
    io::write_records(&records_path, &kept, config.wall_time)?;

    let pending: Vec<usize> = (0..config.replications)
        .filter(|r| !done.contains_key(r))
        .collect();
    let file = OpenOptions::new()
        .append(true)
        .open(&records_path)
        .map_err(|e| Error::io(&records_path, e))?;
    let appender = Mutex::new(
        csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(file),
    );
    let append = |rows: &[ReplicationRecord]| -> Result<()> {
        let mut w = appender.lock().expect("appender lock");
        for r in rows {
            w.write_record(io::record_row(r, config.wall_time))
                .map_err(|e| Error::csv(&records_path, e))?;
        }
        w.flush().map_err(|e| Error::io(&records_path, e))
    };

    let fresh: Vec<(usize, Vec<ReplicationRecord>)> = pool()?.install(|| {
        pending
            .par_iter()
            .map(|&rep| {
                let rows = run_replication(config, rep);
                append(&rows).map(|_| (rep, rows))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    drop(appender);
    done.extend(fresh);

    let records: Vec<ReplicationRecord> = done.into_values().flatten().collect();
    io::write_records(&records_path, &records, config.wall_time)?;
    let table = FractionTable::from_records(&records);
    io::write_fraction_table(&config.out_dir.join(FRACTIONS_FILE), &table)?;
    Ok((table, records))
}

/// One row of the path study: `(n, AIC(SV) − AIC(SVJ), BIC(SV) − BIC(SVJ))`.
pub type PathRow = (usize, f64, f64);

/// Differences along one realisation at every checkpoint (`n_values`).
/// Writes `path.csv` and a gnuplot script `path.gp` into `out_dir`.
pub fn run_path_study(config: &ExperimentConfig) -> Result<Vec<PathRow>> {
    config.validate()?;
    let checkpoints = config.sorted_sizes();
    let seed = data_seed(config.master_seed, 0);
    let longest = *checkpoints.last().expect("validated sizes");
    let traj = simulate(&config.scenario.true_model(), &config.truth, longest, seed)?;
    let fits = fit_pair(
        &traj.observations,
        &checkpoints,
        &config.online_options(),
        fit_seed(seed),
    );
    let rows = checkpoints
        .iter()
        .zip(fits)
        .map(|(&n, fit)| {
            let (a, b) = fit?.differences();
            Ok((n, a, b))
        })
        .collect::<Result<Vec<_>>>()?;
    io::write_path(&config.out_dir.join(PATH_FILE), &rows)?;
    io::write_text(
        &config.out_dir.join(PATH_SCRIPT),
        &io::path_plot_script(PATH_FILE, "path.png"),
    )?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareOptions {
    pub particles: usize,
    pub schedule: StepSchedule,
    pub seed: u64,
    /// Adds Laplace log-evidence under [`default_log_prior`].
    pub evidence: bool,
    /// Fits the linear-Gaussian model by exact maximum likelihood.
    pub exact_lg: bool,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self {
            particles: 200,
            schedule: StepSchedule::default(),
            seed: 0,
            evidence: false,
            exact_lg: false,
        }
    }
}

/// A fitted model with its criteria.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub theta: Theta,
    pub ic: IcResult,
}

/// Fits every model on the same data with a shared fit seed.
pub fn compare_models(
    models: &[AnyModel],
    observations: &[f64],
    options: &CompareOptions,
) -> Result<Vec<Comparison>> {
    let n = observations.len();
    let online = OnlineOptions {
        particles: options.particles,
        schedule: options.schedule,
        ..OnlineOptions::default()
    };
    models
        .iter()
        .map(|model| {
            let (theta, loglik) = match model {
                AnyModel::LinearGaussian(_) if options.exact_lg => {
                    let fit =
                        kalman_mle(observations, &default_init(model), &MleOptions::default())?;
                    (fit.theta, fit.loglik)
                }
                _ => {
                    let fit = hmmic_core::fit::fit_online(
                        model,
                        observations,
                        &online,
                        &default_init(model),
                        options.seed,
                    )?;
                    (fit.theta_hat, fit.loglik_hat)
                }
            };
            let mut ic = IcResult::new(model.name(), model.dim(), n, loglik);
            if options.evidence {
                let config = LaplaceConfig {
                    filter: FilterConfig {
                        particles: options.particles,
                        ..LaplaceConfig::default().filter
                    },
                    seed: derive_seed(options.seed, 2),
                    ..LaplaceConfig::default()
                };
                let ev = laplace_log_evidence(
                    loglik,
                    &theta,
                    observations,
                    model,
                    |t| default_log_prior(model, t),
                    &config,
                )?;
                ic = ic.with_log_evidence(ev.log_evidence);
            }
            Ok(Comparison { theta, ic })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use hmmic_core::fit::fit_online;

    #[test]
    fn checkpoint_fits_equal_prefix_fits() {
        let model = AnyModel::Svj(StochasticVolatilityJumps);
        let y = simulate(&model, &svj_truth(), 300, 4).unwrap().observations;
        let options = OnlineOptions {
            particles: 40,
            ..OnlineOptions::default()
        };
        let init = default_init(&model);
        let snapshots = fit_at_checkpoints(&model, &y, &[50, 120, 300], &options, &init, 9);
        for (m, snap) in [50, 120, 300].into_iter().zip(snapshots) {
            let direct = fit_online(&model, &y[..m], &options, &init, 9).unwrap();
            let snap = snap.unwrap();
            assert_eq!(snap.theta, direct.theta_hat);
            assert_eq!(snap.loglik, direct.loglik_hat);
        }
    }

    #[test]
    fn selections_follow_stored_criteria() {
        let fit = |d: usize, ll: f64| ModelFit::new(Theta::new(vec![0.5; d]), ll, 1000);
        let pair = PairFit {
            sv: fit(2, -100.0),
            svj: fit(4, -97.0),
        };
        // AIC: 204 vs 202; BIC: 200 + 2 ln 1000 vs 194 + 4 ln 1000.
        assert_eq!(pair.selected_by_aic(), "svj");
        assert_eq!(pair.selected_by_bic(), "sv");
        let tie = PairFit {
            sv: fit(2, -100.0),
            svj: fit(4, -98.0),
        };
        assert_eq!(tie.selected_by_aic(), "sv");
    }

    #[test]
    fn fraction_columns_sum_to_successes() {
        let pair = |ll_svj: f64| PairFit {
            sv: ModelFit::new(Theta::new(vec![0.9, 0.5]), -100.0, 500),
            svj: ModelFit::new(Theta::new(vec![0.9, 0.5, 0.7, 0.5]), ll_svj, 500),
        };
        let rec = |rep: usize, outcome| ReplicationRecord {
            scenario: 2,
            replication: rep,
            n: 500,
            data_seed: rep as u64,
            outcome,
            wall_time: None,
        };
        let records = vec![
            rec(0, Ok(pair(-99.0))),
            rec(1, Ok(pair(-80.0))),
            rec(2, Err("boom".into())),
        ];
        let table = FractionTable::from_records(&records);
        for c in ["aic", "bic"] {
            let sv = table.count(c, "sv", 500).unwrap();
            let svj = table.count(c, "svj", 500).unwrap();
            assert_eq!(sv.selected + svj.selected, 2);
            assert_eq!((sv.successful, sv.failures), (2, 1));
        }
    }

    #[test]
    fn priors_are_proper_densities_at_known_points() {
        let sv = AnyModel::Sv(StochasticVolatility);
        let expected = 0.5f64.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((default_log_prior(&sv, &[0.3, 1.0]) - expected).abs() < 1e-15);
    }
}
