//! Flat `key = value` configuration.
//!
//! Lines are `key = value`; `#` starts a comment. Recognised keys:
//!
//! | key | meaning |
//! |-----|---------|
//! | `model` | `lg`, `sv` or `svj` |
//! | `models` | comma-separated model list for `compare` |
//! | `phi`, `sigma_x`, `sigma_v`, `sigma_j`, `p` | natural parameters |
//! | `n` | sample size, or a comma-separated list for `replicate` |
//! | `N` | particles |
//! | `R` | replications |
//! | `seed` | (master) seed |
//! | `scenario` | `1` (SVJ true) or `2` (SV true) |
//! | `schedule_c`, `schedule_a` | step sizes `c · k^(-a)` |
//! | `checkpoints` | `start:end:step` or a comma-separated list |
//! | `data`, `out`, `out_dir`, `trace` | file paths |
//! | `evidence`, `mle`, `wall_time` | `true` / `false` |
//!
//! Command-line flags override values read from a file.

use std::path::{Path, PathBuf};

use crate::{Error, Result};

/// Every setting a subcommand may read; `None` means unset.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    pub model: Option<String>,
    pub models: Option<Vec<String>>,
    pub phi: Option<f64>,
    pub sigma_x: Option<f64>,
    pub sigma_v: Option<f64>,
    pub sigma_j: Option<f64>,
    pub p: Option<f64>,
    pub n: Option<Vec<usize>>,
    pub particles: Option<usize>,
    pub replications: Option<usize>,
    pub seed: Option<u64>,
    pub scenario: Option<u8>,
    pub schedule_c: Option<f64>,
    pub schedule_a: Option<f64>,
    pub checkpoints: Option<Vec<usize>>,
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub trace: Option<PathBuf>,
    pub evidence: Option<bool>,
    pub mle: Option<bool>,
    pub wall_time: Option<bool>,
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("invalid value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!(
            "invalid value `{value}` for `{key}`"
        ))),
    }
}

/// Comma-separated positive integers.
pub fn parse_sizes(key: &str, value: &str) -> Result<Vec<usize>> {
    let sizes = value
        .split(',')
        .map(|s| parse::<usize>(key, s))
        .collect::<Result<Vec<_>>>()?;
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(Error::Config(format!("`{key}` needs positive sizes")));
    }
    Ok(sizes)
}

/// `start:end:step` (inclusive) or a comma-separated list.
pub fn parse_checkpoints(value: &str) -> Result<Vec<usize>> {
    let parts: Vec<&str> = value.split(':').collect();
    let points = match parts.as_slice() {
        [start, end, step] => {
            let (start, end, step) = (
                parse::<usize>("checkpoints", start)?,
                parse::<usize>("checkpoints", end)?,
                parse::<usize>("checkpoints", step)?,
            );
            if step == 0 || start == 0 || end < start {
                return Err(Error::Config(format!("invalid checkpoint range `{value}`")));
            }
            (start..=end).step_by(step).collect()
        }
        [list] => parse_sizes("checkpoints", list)?,
        _ => return Err(Error::Config(format!("invalid checkpoints `{value}`"))),
    };
    if !points.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::Config("checkpoints must increase".into()));
    }
    Ok(points)
}

impl RunConfig {
    /// Parses configuration text; unknown keys are errors.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut c = RunConfig::default();
        for (number, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", number + 1))
            })?;
            c.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", number + 1)))?;
        }
        Ok(c)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_str(&text)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "model" => self.model = Some(value.to_string()),
            "models" => {
                self.models = Some(value.split(',').map(|m| m.trim().to_string()).collect())
            }
            "phi" => self.phi = Some(parse(key, value)?),
            "sigma_x" => self.sigma_x = Some(parse(key, value)?),
            "sigma_v" => self.sigma_v = Some(parse(key, value)?),
            "sigma_j" => self.sigma_j = Some(parse(key, value)?),
            "p" => self.p = Some(parse(key, value)?),
            "n" => self.n = Some(parse_sizes(key, value)?),
            "N" | "particles" => self.particles = Some(parse(key, value)?),
            "R" | "replications" => self.replications = Some(parse(key, value)?),
            "seed" => self.seed = Some(parse(key, value)?),
            "scenario" => self.scenario = Some(parse(key, value)?),
            "schedule_c" => self.schedule_c = Some(parse(key, value)?),
            "schedule_a" => self.schedule_a = Some(parse(key, value)?),
            "checkpoints" => self.checkpoints = Some(parse_checkpoints(value)?),
            "data" => self.data = Some(value.into()),
            "out" => self.out = Some(value.into()),
            "out_dir" => self.out_dir = Some(value.into()),
            "trace" => self.trace = Some(value.into()),
            "evidence" => self.evidence = Some(parse_bool(key, value)?),
            "mle" => self.mle = Some(parse_bool(key, value)?),
            "wall_time" => self.wall_time = Some(parse_bool(key, value)?),
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Values set in `self` win over those in `base`.
    pub fn over(self, base: RunConfig) -> RunConfig {
        RunConfig {
            model: self.model.or(base.model),
            models: self.models.or(base.models),
            phi: self.phi.or(base.phi),
            sigma_x: self.sigma_x.or(base.sigma_x),
            sigma_v: self.sigma_v.or(base.sigma_v),
            sigma_j: self.sigma_j.or(base.sigma_j),
            p: self.p.or(base.p),
            n: self.n.or(base.n),
            particles: self.particles.or(base.particles),
            replications: self.replications.or(base.replications),
            seed: self.seed.or(base.seed),
            scenario: self.scenario.or(base.scenario),
            schedule_c: self.schedule_c.or(base.schedule_c),
            schedule_a: self.schedule_a.or(base.schedule_a),
            checkpoints: self.checkpoints.or(base.checkpoints),
            data: self.data.or(base.data),
            out: self.out.or(base.out),
            out_dir: self.out_dir.or(base.out_dir),
            trace: self.trace.or(base.trace),
            evidence: self.evidence.or(base.evidence),
            mle: self.mle.or(base.mle),
            wall_time: self.wall_time.or(base.wall_time),
        }
    }

    /// The single sample size, if exactly one is set.
    pub fn single_n(&self) -> Result<Option<usize>> {
        match self.n.as_deref() {
            None => Ok(None),
            Some([n]) => Ok(Some(*n)),
            Some(_) => Err(Error::Config("expected a single value for `n`".into())),
        }
    }

    pub fn require<'a, T>(value: &'a Option<T>, key: &str) -> Result<&'a T> {
        value
            .as_ref()
            .ok_or_else(|| Error::Config(format!("missing `{key}`")))
    }
}
