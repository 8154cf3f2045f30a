//! Configured end-to-end experiments for sparse designs, with verdicts
//! against the guaranteed probability levels.
//!
//! A config file holds a list of experiments. Every experiment is a pure
//! function of its config: designs, targets and noise are all derived from
//! the seeds it carries.

mod runs;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::certify::Premise;
use crate::error::{Error, Result};
use crate::model::io::{read_matrix, schema_error};
use crate::model::DesignMatrix;
use crate::rng;

pub use runs::{run_compat_lower, run_experiment, run_sandwich, run_small_lambda};

/// Clopper–Pearson confidence used by every frequency verdict.
pub const CP_CONFIDENCE: f64 = 0.99;
/// Subtracted from each guaranteed probability level.
pub const LEVEL_SLACK: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    CompatLower,
    Sandwich,
    SmallLambda,
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ExperimentKind::CompatLower => "compat_lower",
            ExperimentKind::Sandwich => "sandwich",
            ExperimentKind::SmallLambda => "small_lambda",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    GaussianIid,
    Rademacher,
    /// √n·I_n; requires p = n.
    ScaledIdentity,
    FromFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    pub generator: Generator,
    pub n: usize,
    pub p: usize,
    #[serde(default)]
    pub seed: u64,
    /// CSV path for `from_file`, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

impl DesignConfig {
    pub fn build(&self, base_dir: &Path) -> Result<DesignMatrix> {
        let (n, p) = (self.n, self.p);
        if n == 0 || p == 0 {
            return Err(Error::Config(format!("design needs n, p >= 1, got {n}x{p}")));
        }
        match self.generator {
            Generator::GaussianIid => {
                let mut r = rng::rng_from_seed(self.seed);
                DesignMatrix::from_row_slice(n, p, &rng::gaussian_vec(&mut r, n * p, 1.0))
            }
            Generator::Rademacher => {
                use rand::Rng as _;
                let mut r = rng::rng_from_seed(self.seed);
                let e: Vec<f64> = (0..n * p)
                    .map(|_| if r.random::<bool>() { 1.0 } else { -1.0 })
                    .collect();
                DesignMatrix::from_row_slice(n, p, &e)
            }
            Generator::ScaledIdentity => {
                if n != p {
                    return Err(Error::Config(format!(
                        "scaled_identity needs n = p, got {n}x{p}"
                    )));
                }
                Ok(DesignMatrix::scaled_identity(n))
            }
            Generator::FromFile => {
                let rel = self
                    .path
                    .as_ref()
                    .ok_or_else(|| Error::Config("from_file design needs a path".into()))?;
                let m = read_matrix(&base_dir.join(rel))?;
                if m.nrows() != n || m.ncols() != p {
                    return Err(Error::dim("design file shape", n * p, m.nrows() * m.ncols()));
                }
                DesignMatrix::new(m)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum LambdaRule {
    Explicit { value: f64 },
    /// σ(1+2γ)√(2 log(p/s))
    Asymptotic,
    /// σ(1+γ)(1+δ_s)(1 + √(2 log(9ep/s))) with the estimated δ_s.
    Threshold,
    /// A multiple of the small-λ premise level ((1−δ_{2d})/8)σ√(log(p/(5d))).
    PremiseFraction { fraction: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseConfig {
    Gaussian,
    /// The same vector in every replication. Not symmetric, so rejected
    /// where symmetry is a premise.
    Fixed { vector: Vec<f64> },
}

fn default_noise() -> NoiseConfig {
    NoiseConfig::Gaussian
}

fn default_q_prob() -> f64 {
    0.99
}

fn default_beta_min_scale() -> f64 {
    1.05
}

fn default_restarts() -> usize {
    4
}

fn default_rip_exhaustive_limit() -> u64 {
    30_000_000
}

fn default_rip_samples() -> u64 {
    20_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: ExperimentKind,
    /// Report file stem; defaults to the experiment name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub design: DesignConfig,
    /// Support of β* (compat_lower) as 0-based indices.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    pub lambda: LambdaRule,
    pub sigma: f64,
    pub reps: usize,
    pub master_seed: u64,
    #[serde(default = "default_noise")]
    pub noise: NoiseConfig,
    #[serde(default = "default_q_prob")]
    pub q_prob: f64,
    /// Nonzeros of β* are planted at this multiple of the beta-min level.
    #[serde(default = "default_beta_min_scale")]
    pub beta_min_scale: f64,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_rip_exhaustive_limit")]
    pub rip_exhaustive_limit: u64,
    #[serde(default = "default_rip_samples")]
    pub rip_samples: u64,
    /// Self-test mode: premise guards are recorded but do not stop the
    /// run, so a corrupted premise can produce FAIL.
    #[serde(default)]
    pub fail_injection: bool,
}

impl ExperimentConfig {
    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.name.to_string())
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps < 2 {
            return Err(Error::Config(format!(
                "{}: reps must be at least 2 for a confidence band, got {}",
                self.label(),
                self.reps
            )));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Config(format!("{}: sigma must be positive", self.label())));
        }
        if !(self.q_prob > 0.0 && self.q_prob < 1.0) {
            return Err(Error::Config(format!("{}: q_prob must lie in (0, 1)", self.label())));
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0) {
                return Err(Error::Config(format!("{}: gamma must be positive", self.label())));
            }
        }
        if let LambdaRule::Explicit { value } = self.lambda {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::Config(format!("{}: lambda must be >= 0", self.label())));
            }
        }
        let label = self.label();
        if label.is_empty() || label.contains(['/', '\\']) {
            return Err(Error::Config(format!("invalid label {label:?}")));
        }
        Ok(())
    }

    pub(crate) fn need<T: Copy>(&self, v: Option<T>, field: &str) -> Result<T> {
        v.ok_or_else(|| Error::Config(format!("{}: missing field {field}", self.label())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ExperimentVerdict {
    Pass,
    Fail,
    Skipped,
    /// Computed, but a premise is unmet so it carries no verdict.
    Advisory,
}

impl std::fmt::Display for ExperimentVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ExperimentVerdict::Pass => "PASS",
            ExperimentVerdict::Fail => "FAIL",
            ExperimentVerdict::Skipped => "SKIPPED",
            ExperimentVerdict::Advisory => "ADVISORY",
        })
    }
}

/// One verdict-bearing comparison inside an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub verdict: ExperimentVerdict,
    /// Event count and frequency (probability checks).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub successes: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cp_lower: Option<f64>,
    /// Value the statistic is compared against.
    pub threshold: f64,
    /// The compared statistic (the CP lower bound, or mean + 3 stderr).
    pub statistic: f64,
    /// Names of the premises this verdict depends on.
    pub premises: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub index: usize,
    pub risk: f64,
    /// One indicator per check, in the order of `checks`.
    pub events: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub label: String,
    pub config: ExperimentConfig,
    /// Seconds since the epoch; the only field that varies between runs.
    pub generated_at: u64,
    pub verdict: ExperimentVerdict,
    pub premises: Vec<Premise>,
    /// Design constants and derived quantities, by name.
    pub estimates: std::collections::BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub failed_replications: usize,
    pub replications: Vec<ReplicationRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

impl ExperimentReport {
    /// FAIL if any check fails; PASS if at least one passes; else SKIPPED.
    pub(crate) fn overall(checks: &[Check]) -> ExperimentVerdict {
        if checks.iter().any(|c| c.verdict == ExperimentVerdict::Fail) {
            ExperimentVerdict::Fail
        } else if checks.iter().any(|c| c.verdict == ExperimentVerdict::Pass) {
            ExperimentVerdict::Pass
        } else {
            ExperimentVerdict::Skipped
        }
    }

    pub fn summary_rows(&self) -> Vec<SummaryRow> {
        if self.checks.is_empty() {
            return vec![SummaryRow {
                name: self.label.clone(),
                verdict: self.verdict,
                frequency: None,
                cp_lower: None,
                threshold: None,
            }];
        }
        self.checks
            .iter()
            .map(|c| SummaryRow {
                name: format!("{}:{}", self.label, c.name),
                verdict: c.verdict,
                frequency: c.frequency,
                cp_lower: c.cp_lower,
                threshold: Some(c.threshold),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub name: String,
    pub verdict: ExperimentVerdict,
    pub frequency: Option<f64>,
    pub cp_lower: Option<f64>,
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSuite {
    pub experiments: Vec<ExperimentConfig>,
}

/// Parses and validates a suite. Accepts `{"experiments": [...]}` or a
/// bare list.
pub fn parse_suite(json: &str) -> Result<ExperimentSuite> {
    let value: serde_json::Value = serde_json::from_str(json).map_err(schema_error)?;
    let suite: ExperimentSuite = if value.is_array() {
        ExperimentSuite {
            experiments: serde_json::from_value(value).map_err(schema_error)?,
        }
    } else {
        serde_json::from_value(value).map_err(schema_error)?
    };
    let mut seen = std::collections::BTreeSet::new();
    for e in &suite.experiments {
        e.validate()?;
        if !seen.insert(e.label()) {
            return Err(Error::Config(format!("duplicate experiment label {:?}", e.label())));
        }
    }
    Ok(suite)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub reports: Vec<ExperimentReport>,
    pub any_fail: bool,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        i32::from(self.any_fail)
    }
}

pub fn write_summary_csv(reports: &[ExperimentReport], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(e.into()))?;
    w.write_record(["name", "verdict", "frequency", "cp_lower", "threshold"])
        .map_err(|e| Error::Io(e.into()))?;
    let fmt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
    for r in reports {
        for row in r.summary_rows() {
            w.write_record([
                row.name,
                row.verdict.to_string(),
                fmt(row.frequency),
                fmt(row.cp_lower),
                fmt(row.threshold),
            ])
            .map_err(|e| Error::Io(e.into()))?;
        }
    }
    w.flush().map_err(|e| Error::Io(e.into()))
}

/// Runs every experiment of the suite in order and writes
/// `out_dir/LABEL.json` plus `out_dir/summary.csv`.
pub fn run_suite(suite: &ExperimentSuite, base_dir: &Path, out_dir: &Path) -> Result<RunOutcome> {
    fs::create_dir_all(out_dir)?;
    let mut reports = Vec::with_capacity(suite.experiments.len());
    for cfg in &suite.experiments {
        log::info!("running {}", cfg.label());
        let report = run_experiment(cfg, base_dir)?;
        log::info!("{} -> {:?}", report.label, report.verdict);
        let path = out_dir.join(format!("{}.json", report.label));
        let body = serde_json::to_string_pretty(&report).map_err(|e| Error::Internal(e.to_string()))?;
        fs::write(&path, body + "\n")?;
        reports.push(report);
    }
    write_summary_csv(&reports, &out_dir.join("summary.csv"))?;
    let any_fail = reports.iter().any(|r| r.verdict == ExperimentVerdict::Fail);
    Ok(RunOutcome { reports, any_fail })
}

/// Loads a config file and runs it; schema errors abort before any
/// experiment starts.
pub fn run_all(config_path: &Path, out_dir: &Path) -> Result<RunOutcome> {
    let text = fs::read_to_string(config_path)?;
    let suite = parse_suite(&text)?;
    let base = config_path.parent().unwrap_or(Path::new("."));
    run_suite(&suite, base, out_dir)
}
