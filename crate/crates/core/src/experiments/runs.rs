use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use super::{
    Check, ExperimentConfig, ExperimentKind, ExperimentReport, ExperimentVerdict, LambdaRule,
    NoiseConfig, ReplicationRecord, CP_CONFIDENCE, LEVEL_SLACK,
};
use crate::certify::Premise;
use crate::diagnostics::{
    binomial, c0_from_gamma, construct_compatibility_adversary_with, lambda_asymptotic,
    lasso_constants_for, re_constant_with, rip_delta_with, vg_packing, ConeOptions, RipMethod,
    RipOptions, RipReport,
};
use crate::error::{Error, Result};
use crate::mc::replication_noise;
use crate::model::{DesignMatrix, NoiseSpec, PenaltySpec, ProblemInstance, TargetVector};
use crate::par::{map_indexed, pairwise_mean, sample_variance, Execution};
use crate::solver::{solve, SolverConfig};
use crate::special::clopper_pearson_lower;

pub fn run_experiment(cfg: &ExperimentConfig, base_dir: &Path) -> Result<ExperimentReport> {
    cfg.validate()?;
    match cfg.name {
        ExperimentKind::CompatLower => run_compat_lower(cfg, base_dir),
        ExperimentKind::Sandwich => run_sandwich(cfg, base_dir),
        ExperimentKind::SmallLambda => run_small_lambda(cfg, base_dir),
    }
}

fn now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Solves every replication; convergence failures are dropped and counted.
fn replicate(inst: &ProblemInstance, cfg: &ExperimentConfig) -> Result<(Vec<(usize, f64)>, usize)> {
    let solver = SolverConfig::default();
    let out: Vec<Result<f64>> = map_indexed(Execution::Parallel, cfg.reps, |i| {
        let eps = replication_noise(inst, cfg.master_seed, i)?;
        let y = inst.response_for(&eps)?;
        Ok(solve(inst, &y, &solver)?.risk)
    });
    let mut risks = Vec::with_capacity(cfg.reps);
    let mut failed = 0;
    for (i, r) in out.into_iter().enumerate() {
        match r {
            Ok(v) => risks.push((i, v)),
            Err(Error::Convergence { .. }) | Err(Error::Numeric(_)) => failed += 1,
            Err(e) => return Err(e),
        }
    }
    if risks.len() < 2 {
        return Err(Error::Numeric(format!(
            "only {} of {} replications solved",
            risks.len(),
            cfg.reps
        )));
    }
    Ok((risks, failed))
}

fn noise_spec(cfg: &ExperimentConfig) -> Result<NoiseSpec> {
    match &cfg.noise {
        NoiseConfig::Gaussian => NoiseSpec::gaussian(cfg.sigma, cfg.master_seed),
        NoiseConfig::Fixed { vector } => Ok(NoiseSpec::FixedVector(vector.clone())),
    }
}

/// Frequency check against `level − LEVEL_SLACK` using the one-sided
/// Clopper–Pearson lower bound. Non-bearing checks are reported as
/// advisory.
fn probability_check(name: &str, events: &[bool], level: f64, premises: &[&str], bearing: bool) -> Check {
    let n = events.len() as u64;
    let k = events.iter().filter(|e| **e).count() as u64;
    let cp = clopper_pearson_lower(k, n, CP_CONFIDENCE);
    let threshold = level - LEVEL_SLACK;
    let verdict = match (bearing, cp >= threshold) {
        (false, _) => ExperimentVerdict::Advisory,
        (true, true) => ExperimentVerdict::Pass,
        (true, false) => ExperimentVerdict::Fail,
    };
    Check {
        name: name.into(),
        verdict,
        successes: Some(k),
        frequency: Some(k as f64 / n as f64),
        cp_lower: Some(cp),
        threshold,
        statistic: cp,
        premises: premises.iter().map(|s| s.to_string()).collect(),
        flags: Vec::new(),
    }
}

fn skipped(name: &str, premises: &[&str], threshold: f64) -> Check {
    Check {
        name: name.into(),
        verdict: ExperimentVerdict::Skipped,
        successes: None,
        frequency: None,
        cp_lower: None,
        threshold,
        statistic: f64::NAN,
        premises: premises.iter().map(|s| s.to_string()).collect(),
        flags: Vec::new(),
    }
}

fn failed_names(premises: &[Premise]) -> Vec<String> {
    premises
        .iter()
        .filter(|p| !p.satisfied)
        .map(|p| format!("premise_failed:{}", p.name))
        .collect()
}

fn estimate_rip(x: &DesignMatrix, s: usize, cfg: &ExperimentConfig, salt: u64) -> Result<RipReport> {
    let total = binomial(x.p(), s);
    let budget = if total <= cfg.rip_exhaustive_limit as u128 {
        total as u64
    } else {
        cfg.rip_samples
    };
    rip_delta_with(
        x,
        s,
        &RipOptions {
            budget,
            seed: cfg.master_seed ^ salt,
            exec: Execution::Parallel,
        },
    )
}

fn cone_options(cfg: &ExperimentConfig) -> ConeOptions {
    ConeOptions {
        restarts: cfg.restarts,
        seed: cfg.master_seed,
        ..ConeOptions::default()
    }
}

fn records(risks: &[(usize, f64)], events: &[Vec<bool>]) -> Vec<ReplicationRecord> {
    risks
        .iter()
        .enumerate()
        .map(|(j, &(index, risk))| ReplicationRecord {
            index,
            risk,
            events: events.iter().map(|e| e[j]).collect(),
        })
        .collect()
}

/// Adversarial target on T and the event r̂ ≥ 0.99·λ√|T|/φ(T, 1), which
/// must have probability at least 0.49.
pub fn run_compat_lower(cfg: &ExperimentConfig, base_dir: &Path) -> Result<ExperimentReport> {
    cfg.validate()?;
    if let NoiseConfig::Fixed { .. } = cfg.noise {
        return Err(Error::Config(format!(
            "{}: compat_lower needs symmetric noise; a fixed vector is not symmetric",
            cfg.label()
        )));
    }
    let x = cfg.design.build(base_dir)?;
    let support: Vec<usize> = match (&cfg.support, cfg.s) {
        (Some(t), _) => t.clone(),
        (None, Some(s)) => (0..s).collect(),
        (None, None) => return Err(Error::Config(format!("{}: needs support or s", cfg.label()))),
    };
    let lam = match cfg.lambda {
        LambdaRule::Explicit { value } => value,
        LambdaRule::Asymptotic => lambda_asymptotic(
            cfg.sigma,
            cfg.need(cfg.gamma, "gamma")?,
            x.p(),
            support.len(),
        ),
        other => {
            return Err(Error::Config(format!(
                "{}: lambda rule {other:?} is not available for compat_lower",
                cfg.label()
            )))
        }
    };
    if !(lam > 0.0) {
        return Err(Error::Config(format!("{}: compat_lower needs lambda > 0", cfg.label())));
    }
    let adv = construct_compatibility_adversary_with(&x, &support, lam, cfg.sigma, cfg.q_prob, &cone_options(cfg))?;
    let inst = ProblemInstance::new(
        x,
        TargetVector(adv.beta_star.clone()),
        noise_spec(cfg)?,
        PenaltySpec::ScaledL1 { lam },
    )?;
    let premises = vec![
        Premise::ge("symmetric_noise", 1.0, 1.0),
        Premise::ge("compatibility_positive", adv.phi, 1e-10),
    ];
    let level = 0.99 * lam * (support.len() as f64).sqrt() / adv.phi;
    let (risks, failed) = replicate(&inst, cfg)?;
    let events: Vec<bool> = risks.iter().map(|&(_, r)| r >= level).collect();
    let mut check = probability_check(
        "risk_above_compatibility_level",
        &events,
        0.49,
        &["symmetric_noise", "compatibility_positive"],
        true,
    );
    check.flags.push("estimate_conditional".into());
    let rvals: Vec<f64> = risks.iter().map(|r| r.1).collect();
    let estimates = BTreeMap::from([
        ("lambda".to_string(), lam),
        ("phi".to_string(), adv.phi),
        ("gamma".to_string(), adv.gamma),
        ("t0".to_string(), adv.t0),
        ("q".to_string(), adv.q),
        ("risk_level".to_string(), level),
        ("mean_risk".to_string(), pairwise_mean(&rvals)),
    ]);
    let checks = vec![check];
    Ok(ExperimentReport {
        label: cfg.label(),
        config: cfg.clone(),
        generated_at: now(),
        verdict: ExperimentReport::overall(&checks),
        premises,
        estimates,
        replications: records(&risks, &[events]),
        checks,
        failed_replications: failed,
        flags: Vec::new(),
    })
}

/// Estimates of κ below this are treated as zero. It sits well above the
/// premise tolerance so that a numerically zero κ fails the premise.
const KAPPA_FLOOR: f64 = 1e-6;

/// Upper event r̂ ≤ C̄λ√s (level 0.76) and the two-sided event with the
/// lower end C_λ√s(1 − √(C̄/C_ − 1)) (level 0.25), on an s-sparse target
/// planted at the beta-min level.
pub fn run_sandwich(cfg: &ExperimentConfig, base_dir: &Path) -> Result<ExperimentReport> {
    cfg.validate()?;
    let x = cfg.design.build(base_dir)?;
    let (n, p) = (x.n(), x.p());
    let s = cfg.need(cfg.s, "s")?;
    let gamma = cfg.need(cfg.gamma, "gamma")?;
    if s == 0 || s > p {
        return Err(Error::Config(format!("{}: need 1 <= s <= p", cfg.label())));
    }
    let c0 = c0_from_gamma(gamma);
    let rip = estimate_rip(&x, s, cfg, 0x51)?;
    let kappa = re_constant_with(&x, s, c0, &cone_options(cfg))?;
    let delta = rip.delta_s;
    let lam = match cfg.lambda {
        LambdaRule::Explicit { value } => value,
        LambdaRule::Asymptotic => lambda_asymptotic(cfg.sigma, gamma, p, s),
        LambdaRule::Threshold => lasso_constants_for(p, s, gamma, cfg.sigma, 1.0, 1.0, delta)?.lambda_threshold,
        LambdaRule::PremiseFraction { .. } => {
            return Err(Error::Config(format!(
                "{}: premise_fraction applies to small_lambda only",
                cfg.label()
            )))
        }
    };
    if !(lam > 0.0) {
        return Err(Error::Config(format!("{}: sandwich needs lambda > 0", cfg.label())));
    }
    // κ only enters C̄; with κ ≈ 0 the constant is infinite
    let kappa_ok = kappa.value > KAPPA_FLOOR;
    let consts = lasso_constants_for(p, s, gamma, cfg.sigma, lam, kappa.value.max(1e-300), delta)?;
    let c_bar = if kappa_ok { consts.c_bar } else { f64::INFINITY };
    let c_under = consts.c_under;
    let beta_min = (2.0 * c_under - c_bar) * c_under * lam / (n as f64).sqrt();
    let planted = if beta_min.is_finite() && beta_min > 0.0 {
        cfg.beta_min_scale * beta_min
    } else {
        0.0
    };
    let mut premises = vec![
        Premise::ge("re_constant_positive", kappa.value, KAPPA_FLOOR),
        Premise::ge("lambda_above_tuning_threshold", lam, consts.lambda_threshold),
        Premise::le("c_bar_at_most_twice_c_under", c_bar, 2.0 * c_under),
    ];
    if beta_min.is_finite() && beta_min > 0.0 {
        premises.push(Premise::ge("beta_min", planted, beta_min));
    } else {
        premises.push(Premise::ge("beta_min", f64::NEG_INFINITY, 0.0));
    }
    let sat = |name: &str| premises.iter().any(|p| p.name == name && p.satisfied);
    let sqrt_s = (s as f64).sqrt();
    let upper = c_bar * lam * sqrt_s;
    let lower = c_under * lam * sqrt_s * (1.0 - (c_bar / c_under - 1.0).max(0.0).sqrt());
    let mut estimates = BTreeMap::from([
        ("lambda".to_string(), lam),
        ("delta_s".to_string(), delta),
        ("kappa".to_string(), kappa.value),
        ("c0".to_string(), c0),
        ("c_bar".to_string(), c_bar),
        ("c_under".to_string(), c_under),
        ("lambda_threshold".to_string(), consts.lambda_threshold),
        ("beta_min".to_string(), beta_min),
        ("planted_magnitude".to_string(), planted),
        ("upper_level".to_string(), upper),
        ("lower_level".to_string(), lower),
    ]);
    let mut flags = failed_names(&premises);
    if rip.method == RipMethod::Sampled {
        flags.push("delta_s_sampled".into());
    }
    flags.push("kappa_upper_estimate".into());
    let upper_premises = ["re_constant_positive", "lambda_above_tuning_threshold"];
    let sandwich_premises = [
        "re_constant_positive",
        "lambda_above_tuning_threshold",
        "c_bar_at_most_twice_c_under",
        "beta_min",
    ];
    if !(sat("re_constant_positive") && sat("lambda_above_tuning_threshold")) {
        let checks = vec![
            skipped("upper", &upper_premises, 0.76 - LEVEL_SLACK),
            skipped("sandwich", &sandwich_premises, 0.25 - LEVEL_SLACK),
        ];
        return Ok(ExperimentReport {
            label: cfg.label(),
            config: cfg.clone(),
            generated_at: now(),
            verdict: ExperimentVerdict::Skipped,
            premises,
            estimates,
            checks,
            failed_replications: 0,
            replications: Vec::new(),
            flags,
        });
    }
    let mut beta_star = vec![0.0; p];
    beta_star[..s].iter_mut().for_each(|b| *b = planted);
    let inst = ProblemInstance::new(
        x,
        TargetVector(beta_star),
        noise_spec(cfg)?,
        PenaltySpec::ScaledL1 { lam },
    )?;
    let (risks, failed) = replicate(&inst, cfg)?;
    let up: Vec<bool> = risks.iter().map(|&(_, r)| r <= upper).collect();
    let both: Vec<bool> = risks.iter().map(|&(_, r)| r <= upper && r >= lower).collect();
    let upper_check = probability_check("upper", &up, 0.76, &upper_premises, true);
    let mut sandwich_check = if !sat("c_bar_at_most_twice_c_under") {
        skipped("sandwich", &sandwich_premises, 0.25 - LEVEL_SLACK)
    } else {
        probability_check("sandwich", &both, 0.25, &sandwich_premises, sat("beta_min"))
    };
    sandwich_check.flags.push("estimate_conditional".into());
    let rvals: Vec<f64> = risks.iter().map(|r| r.1).collect();
    estimates.insert("mean_risk".into(), pairwise_mean(&rvals));
    let checks = vec![upper_check, sandwich_check];
    Ok(ExperimentReport {
        label: cfg.label(),
        config: cfg.clone(),
        generated_at: now(),
        verdict: ExperimentReport::overall(&checks),
        premises,
        estimates,
        replications: records(&risks, &[up, both]),
        checks,
        failed_replications: failed,
        flags,
    })
}

/// E r̂ ≥ ((1−δ_{2d})/(8(1+δ_d)))σ√(d log(p/(5d))) whenever
/// λ ≤ ((1−δ_{2d})/8)σ√(log(p/(5d))); the target defaults to 0.
pub fn run_small_lambda(cfg: &ExperimentConfig, base_dir: &Path) -> Result<ExperimentReport> {
    cfg.validate()?;
    let x = cfg.design.build(base_dir)?;
    let (n, p) = (x.n(), x.p());
    let d = cfg.need(cfg.d, "d")?;
    let packing = vg_packing(p, d)?;
    if 2 * d > p {
        return Err(Error::Config(format!("{}: need 2d <= p", cfg.label())));
    }
    let rip_d = estimate_rip(&x, d, cfg, 0xd1)?;
    let rip_2d = estimate_rip(&x, 2 * d, cfg, 0xd2)?;
    let log_term = (p as f64 / (5.0 * d as f64)).ln();
    let premise_level = (1.0 - rip_2d.delta_s) / 8.0 * cfg.sigma * log_term.sqrt();
    let lam = match cfg.lambda {
        LambdaRule::Explicit { value } => value,
        LambdaRule::PremiseFraction { fraction } => {
            if !(fraction >= 0.0) {
                return Err(Error::Config(format!("{}: fraction must be >= 0", cfg.label())));
            }
            fraction * premise_level
        }
        other => {
            return Err(Error::Config(format!(
                "{}: lambda rule {other:?} is not available for small_lambda",
                cfg.label()
            )))
        }
    };
    let premises = vec![
        Premise::le("lambda_below_small_lambda_level", lam, premise_level),
        Premise::ge("packing_exists", packing.log_card, packing.log_bound()),
    ];
    if !premises[0].satisfied && !cfg.fail_injection {
        return Err(Error::Config(format!(
            "{}: lambda = {lam} exceeds the small-lambda premise level {premise_level}",
            cfg.label()
        )));
    }
    let bound = (1.0 - rip_2d.delta_s) / (8.0 * (1.0 + rip_d.delta_s))
        * cfg.sigma
        * (d as f64 * log_term).sqrt();
    let inst = ProblemInstance::new(
        x,
        TargetVector::zeros(p),
        noise_spec(cfg)?,
        PenaltySpec::ScaledL1 { lam },
    )?;
    let (risks, failed) = replicate(&inst, cfg)?;
    let rvals: Vec<f64> = risks.iter().map(|r| r.1).collect();
    let mean = pairwise_mean(&rvals);
    let stderr = (sample_variance(&rvals) / rvals.len() as f64).sqrt();
    let statistic = mean + 3.0 * stderr;
    let mut flags = failed_names(&premises);
    if cfg.fail_injection {
        flags.push("fail_injection".into());
    }
    if rip_d.method == RipMethod::Sampled || rip_2d.method == RipMethod::Sampled {
        flags.push("delta_sampled".into());
    }
    let check = Check {
        name: "mean_risk_lower".into(),
        verdict: if statistic >= bound {
            ExperimentVerdict::Pass
        } else {
            ExperimentVerdict::Fail
        },
        successes: None,
        frequency: None,
        cp_lower: None,
        threshold: bound,
        statistic,
        premises: vec!["lambda_below_small_lambda_level".into(), "packing_exists".into()],
        flags: vec!["estimate_conditional".into()],
    };
    let estimates = BTreeMap::from([
        ("lambda".to_string(), lam),
        ("delta_d".to_string(), rip_d.delta_s),
        ("delta_2d".to_string(), rip_2d.delta_s),
        ("premise_level".to_string(), premise_level),
        ("bound".to_string(), bound),
        ("mean_risk".to_string(), mean),
        ("stderr".to_string(), stderr),
        ("packing_log_card".to_string(), packing.log_card),
        ("n".to_string(), n as f64),
    ]);
    let checks = vec![check];
    Ok(ExperimentReport {
        label: cfg.label(),
        config: cfg.clone(),
        generated_at: now(),
        verdict: ExperimentReport::overall(&checks),
        premises,
        estimates,
        replications: records(&risks, &[]),
        checks,
        failed_replications: failed,
        flags,
    })
}
