//! Acceptance suite. Runs every criterion, prints one line each and exits
//! non-zero if any criterion fails. Skipped criteria do not fail the run.

use std::fmt;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use rand::Rng as _;
use riskscope::certify::{
    almost_fixed_point_lower_with, fixed_point_upper, fixed_point_upper_with, norm_dual_lower,
    CertifyConfig,
};
use riskscope::curves::{Curve, CurveConfig, CurveEvaluator};
use riskscope::diagnostics::{compatibility_constant, re_constant, rip_delta, vg_packing};
use riskscope::experiments::{parse_suite, run_experiment, ExperimentReport, ExperimentVerdict};
use riskscope::mc::{
    concentration_check, estimate_f_curve, sample_risks, tf_proximity_check, GridSpec, McConfig,
};
use riskscope::model::{ConvexSet, DesignMatrix, NoiseSpec, PenaltySpec, ProblemInstance, TargetVector};
use riskscope::rng::{gaussian_vec, replication_rng, rng_from_seed};
use riskscope::solver::{solve, SolverConfig};
use riskscope::special::{clopper_pearson_lower, clopper_pearson_upper, normal_sf};

// Tolerances.
const ARGMAX_REL_STEP: f64 = 1e-3;
const ARGMAX_ABS: f64 = 1e-6;
const CONCAVITY_SLACK: f64 = 1e-6;
const BOUND_SLACK: f64 = 1e-6;
const LS_TOL: f64 = 1e-8;
const DELTA_TOL: f64 = 1e-8;
const CONE_TOL: f64 = 1e-6;
const CP_CONFIDENCE: f64 = 0.99;
const COMPAT_THRESHOLD: f64 = 0.46;
const SANDWICH_UPPER_THRESHOLD: f64 = 0.73;
const SANDWICH_THRESHOLD: f64 = 0.22;
/// 2Φ̄(Φ⁻¹(3/4) + 1): the upper tail P(|ε| ≥ med + 1) of a half-normal.
const HALF_NORMAL_TAIL_AT_ONE: f64 = 0.0940;

#[derive(Clone, Copy, PartialEq)]
enum Status {
    Pass,
    Fail,
    Skipped,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIPPED",
        })
    }
}

struct Outcome {
    status: Status,
    detail: String,
}

fn outcome(ok: bool, detail: String) -> Outcome {
    Outcome {
        status: if ok { Status::Pass } else { Status::Fail },
        detail,
    }
}

fn random_design(r: &mut riskscope::rng::Rng, n: usize, p: usize) -> DesignMatrix {
    DesignMatrix::from_row_slice(n, p, &gaussian_vec(r, n * p, 1.0)).unwrap()
}

/// Instance `idx` of the shared random family: n ≤ 20, p ≤ 30 and a penalty
/// rotating through zero, scaled ℓ1, squared ℓ2 and a box indicator.
fn random_instance(idx: u64) -> ProblemInstance {
    let mut r = rng_from_seed(1000 + idx);
    let n = r.random_range(5..=20);
    let p = r.random_range(3..=30);
    let x = random_design(&mut r, n, p);
    let mut beta = vec![0.0; p];
    for b in beta.iter_mut().take(3) {
        *b = r.random_range(-1.5..1.5);
    }
    let penalty = match idx % 4 {
        0 => PenaltySpec::Zero,
        1 => PenaltySpec::ScaledL1 {
            lam: r.random_range(0.05..1.0),
        },
        2 => PenaltySpec::SquaredL2 {
            lam: r.random_range(0.1..5.0),
        },
        _ => PenaltySpec::Indicator {
            set: ConvexSet::Box {
                lower: -2.0,
                upper: 2.0,
            },
        },
    };
    ProblemInstance::new(x, TargetVector(beta), NoiseSpec::gaussian(1.0, idx).unwrap(), penalty).unwrap()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn linspace(a: f64, b: f64, k: usize) -> Vec<f64> {
    (0..k).map(|i| a + (b - a) * i as f64 / (k - 1) as f64).collect()
}

/// Argmax of F over a grid of step `step` on [0, hi], located by a coarse
/// pass and refined around the coarse maximum (F is concave).
fn grid_argmax_f(ev: &CurveEvaluator<'_>, hi: f64, step: f64) -> f64 {
    let coarse = linspace(0.0, hi, 101);
    let vals = ev.sweep(Curve::F, &coarse, None).unwrap();
    let k = argmax(vals.iter().map(|e| e.value));
    let lo = coarse[k.saturating_sub(1)];
    let top = coarse[(k + 1).min(coarse.len() - 1)];
    let fine: Vec<f64> = (0..)
        .map(|i| lo + step * i as f64)
        .take_while(|t| *t <= top)
        .collect();
    let vals = ev.sweep(Curve::F, &fine, None).unwrap();
    fine[argmax(vals.iter().map(|e| e.value))]
}

fn argmax(it: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in it.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Criteria 1 and 3 share the 50 × 5 instance/noise pairs.
fn maximizer_and_sandwich() -> (Outcome, Outcome) {
    let cfg = CertifyConfig::default();
    let (mut worst_gap, mut argmax_fail) = (0.0f64, 0usize);
    let (mut upper_fail, mut lower_verified, mut lower_fail) = (0usize, 0usize, 0usize);
    for idx in 0..50u64 {
        let inst = random_instance(idx);
        for draw in 0..5u64 {
            let eps = gaussian_vec(&mut replication_rng(idx, draw), inst.n(), 1.0);
            let y = inst.response_for(&eps).unwrap();
            let risk = solve(&inst, &y, &cfg.curve.solver).unwrap().risk;
            let ev = CurveEvaluator::new(&inst, &eps, &cfg.curve).unwrap();
            let en = norm(&eps);
            let step = ARGMAX_REL_STEP * en;
            let hi = 2.0 * en + (2.0 * ev.h_star()).sqrt() + 1.0;
            let t_hat = grid_argmax_f(&ev, hi, step);
            let gap = (t_hat - risk).abs();
            worst_gap = worst_gap.max(gap / (step + ARGMAX_ABS));
            if gap > step + ARGMAX_ABS {
                argmax_fail += 1;
            }

            let up = fixed_point_upper_with(&ev, &cfg).unwrap();
            if !(up.bound >= risk - BOUND_SLACK) {
                upper_fail += 1;
            }
            for scale in [0.5, 0.8, 0.95, 1.0, 1.05] {
                for alpha in [0.05, 0.2] {
                    let r = scale * up.bound;
                    if r <= 0.0 {
                        continue;
                    }
                    let c = almost_fixed_point_lower_with(&ev, r, alpha).unwrap();
                    if c.is_verified() {
                        lower_verified += 1;
                        if c.bound > risk + BOUND_SLACK {
                            lower_fail += 1;
                        }
                    }
                }
            }
        }
    }
    (
        outcome(
            argmax_fail == 0,
            format!("250 pairs, {argmax_fail} outside one grid step; worst gap {worst_gap:.3} steps"),
        ),
        outcome(
            upper_fail == 0 && lower_fail == 0 && lower_verified > 0,
            format!(
                "fixed-point upper below risk: {upper_fail}/250; verified almost-fixed-point lower bounds above risk: {lower_fail}/{lower_verified}"
            ),
        ),
    )
}

fn strong_concavity() -> Outcome {
    let cfg = CurveConfig::default();
    let mut violations = 0usize;
    let mut worst = f64::NEG_INFINITY;
    for idx in 0..50u64 {
        let inst = random_instance(idx);
        let eps = inst.noise_vector().unwrap();
        let ev = CurveEvaluator::new(&inst, &eps, &cfg).unwrap();
        let hi = 2.0 * norm(&eps) + 1.0;
        let mut r = rng_from_seed(77 + idx);
        for _ in 0..1000 {
            let a = r.random_range(0.0..hi);
            let b = r.random_range(0.0..hi);
            let th: f64 = r.random_range(0.0..1.0);
            let m = th * a + (1.0 - th) * b;
            let f = |t: f64| ev.f(t).unwrap().value;
            // 1-strong concavity of F
            let excess = th * f(a) + (1.0 - th) * f(b) + 0.5 * th * (1.0 - th) * (a - b).powi(2) - f(m);
            worst = worst.max(excess);
            if excess > CONCAVITY_SLACK {
                violations += 1;
            }
        }
    }
    outcome(
        violations == 0,
        format!("50 × 1000 triples, {violations} violations; largest excess {worst:.2e}"),
    )
}

fn norm_dual() -> Outcome {
    let cfg = CertifyConfig::default();
    let lams = [0.01, 0.05, 0.2, 1.0, 100.0];
    let (mut fail, mut zero_large, mut positive_small) = (0usize, 0usize, 0usize);
    for idx in 0..100u64 {
        let mut r = rng_from_seed(5000 + idx);
        let n = r.random_range(5..=30);
        let p = r.random_range(3..=40);
        let x = random_design(&mut r, n, p);
        let mut beta = vec![0.0; p];
        beta[0] = r.random_range(-2.0..2.0);
        let lam = lams[idx as usize % lams.len()];
        let inst = ProblemInstance::new(
            x,
            TargetVector(beta),
            NoiseSpec::gaussian(1.0, idx).unwrap(),
            PenaltySpec::ScaledL1 { lam },
        )
        .unwrap();
        let eps = inst.noise_vector().unwrap();
        let risk = solve(&inst, &inst.response_for(&eps).unwrap(), &cfg.curve.solver).unwrap().risk;
        let c = norm_dual_lower(&inst, &eps, &cfg).unwrap();
        if !c.is_verified() || c.bound > risk + BOUND_SLACK {
            fail += 1;
        }
        if lam == 100.0 && c.bound == 0.0 {
            zero_large += 1;
        }
        if lam == 0.01 && c.bound > 0.0 {
            positive_small += 1;
        }
    }
    outcome(
        fail == 0 && zero_large == 20,
        format!("100 instances, {fail} above risk; λ=100 bound 0 in {zero_large}/20; λ=0.01 bound > 0 in {positive_small}/20"),
    )
}

fn least_squares() -> Outcome {
    let n = 12;
    let inst = ProblemInstance::new(
        DesignMatrix::identity(n),
        TargetVector::zeros(n),
        NoiseSpec::gaussian(1.0, 3).unwrap(),
        PenaltySpec::Zero,
    )
    .unwrap();
    let eps = inst.noise_vector().unwrap();
    let en = norm(&eps);
    let cfg = CertifyConfig::default();
    let risk = solve(&inst, &inst.response().unwrap(), &cfg.curve.solver).unwrap().risk;
    let up = fixed_point_upper(&inst, &eps, &cfg).unwrap().bound;
    let ev = CurveEvaluator::new(&inst, &eps, &cfg.curve).unwrap();
    let grid = GridSpec::Geometric {
        start: 0.01 * en,
        stop: 10.0 * en,
        points: 31,
    }
    .points()
    .unwrap();
    let h_dev = ev
        .sweep(Curve::H, &grid, None)
        .unwrap()
        .iter()
        .map(|e| (e.value - en).abs())
        .fold(0.0, f64::max);
    let (du, dr) = ((up - en).abs(), (risk - en).abs());
    outcome(
        du <= LS_TOL && dr <= LS_TOL && h_dev <= LS_TOL,
        format!("|upper − ‖ε‖| = {du:.1e}, |risk − ‖ε‖| = {dr:.1e}, max |H − ‖ε‖| over 3 decades = {h_dev:.1e}"),
    )
}

fn run(json: &str) -> ExperimentReport {
    let suite = parse_suite(json).unwrap();
    run_experiment(&suite.experiments[0], Path::new(".")).unwrap()
}

fn check_line(r: &ExperimentReport) -> String {
    r.checks
        .iter()
        .map(|c| {
            format!(
                "{}={} (freq {:.3}, stat {:.3} vs {:.3})",
                c.name,
                c.verdict,
                c.frequency.unwrap_or(f64::NAN),
                c.statistic,
                c.threshold
            )
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn compat_lower() -> Outcome {
    let identity = r#"[{"name": "compat_lower", "label": "compat_identity",
        "design": {"generator": "scaled_identity", "n": 50, "p": 50},
        "support": [0, 1, 2], "lambda": {"rule": "asymptotic"}, "gamma": 0.5,
        "sigma": 1.0, "reps": 2000, "master_seed": 11}]"#;
    let gaussian = r#"[{"name": "compat_lower", "label": "compat_gaussian",
        "design": {"generator": "gaussian_iid", "n": 50, "p": 20, "seed": 12},
        "support": [0, 1, 2], "lambda": {"rule": "asymptotic"}, "gamma": 0.5,
        "sigma": 1.0, "reps": 2000, "master_seed": 13}]"#;
    let mut ok = true;
    let mut parts = Vec::new();
    for cfg in [identity, gaussian] {
        let r = run(cfg);
        for c in &r.checks {
            ok &= c.verdict == ExperimentVerdict::Pass
                && (c.threshold - COMPAT_THRESHOLD).abs() < 1e-12
                && c.cp_lower.is_some_and(|v| v >= COMPAT_THRESHOLD);
        }
        ok &= !r.checks.is_empty();
        parts.push(format!("{}: {}", r.label, check_line(&r)));
    }
    outcome(ok, parts.join(" | "))
}

fn sandwich() -> Outcome {
    let main = r#"[{"name": "sandwich", "label": "sandwich_desk",
        "design": {"generator": "gaussian_iid", "n": 100, "p": 500, "seed": 21},
        "s": 3, "gamma": 0.5, "lambda": {"rule": "asymptotic"},
        "sigma": 1.0, "reps": 500, "master_seed": 22}]"#;
    let r = run(main);
    let unmet: Vec<String> = r
        .premises
        .iter()
        .filter(|p| !p.satisfied)
        .map(|p| format!("{} ({:.3e} vs {:.3e})", p.name, p.lhs, p.rhs))
        .collect();
    let thresholds_ok = r.checks.iter().all(|c| match c.name.as_str() {
        "upper" => (c.threshold - SANDWICH_UPPER_THRESHOLD).abs() < 1e-12,
        "sandwich" => (c.threshold - SANDWICH_THRESHOLD).abs() < 1e-12,
        _ => true,
    });
    // n > p design on which the upper event is checkable
    let supp = run(
        r#"[{"name": "sandwich", "label": "sandwich_tall",
        "design": {"generator": "gaussian_iid", "n": 200, "p": 100, "seed": 23},
        "s": 3, "gamma": 0.5, "lambda": {"rule": "threshold"},
        "sigma": 1.0, "reps": 500, "master_seed": 24}]"#,
    );
    let supp_line = format!("supplementary n=200 p=100 threshold λ: {} [{}]", supp.verdict, check_line(&supp));
    let status = match r.verdict {
        ExperimentVerdict::Pass if thresholds_ok => Status::Pass,
        ExperimentVerdict::Skipped | ExperimentVerdict::Advisory => Status::Skipped,
        _ => Status::Fail,
    };
    let detail = if status == Status::Skipped {
        format!("premises unmet: {}; {supp_line}", unmet.join(", "))
    } else {
        format!("{}; {supp_line}", check_line(&r))
    };
    Outcome { status, detail }
}

fn small_lambda() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (label, lambda) in [
        ("zero", r#"{"rule": "explicit", "value": 0.0}"#),
        ("half", r#"{"rule": "premise_fraction", "fraction": 0.5}"#),
    ] {
        let r = run(&format!(
            r#"[{{"name": "small_lambda", "label": "small_lambda_{label}",
            "design": {{"generator": "gaussian_iid", "n": 100, "p": 400, "seed": 31}},
            "d": 5, "lambda": {lambda}, "sigma": 1.0, "reps": 300, "master_seed": 32}}]"#
        ));
        ok &= r.verdict == ExperimentVerdict::Pass;
        parts.push(format!("λ {label}: {}", check_line(&r)));
    }
    outcome(ok, parts.join(" | "))
}

fn mc_config(reps: usize, seed: u64, grid: GridSpec) -> McConfig {
    McConfig::new(reps, seed, grid)
}

fn concentration() -> Outcome {
    let solver = SolverConfig::default();
    let mut r = rng_from_seed(41);
    let x = random_design(&mut r, 20, 10);
    let mut beta = vec![0.0; 10];
    beta[0] = 1.0;
    let zero = ProblemInstance::new(
        x.clone(),
        TargetVector(beta.clone()),
        NoiseSpec::gaussian(1.0, 0).unwrap(),
        PenaltySpec::Zero,
    )
    .unwrap();
    let lasso = ProblemInstance::new(
        random_design(&mut r, 30, 50),
        TargetVector({
            let mut b = vec![0.0; 50];
            b[..3].copy_from_slice(&[2.0, -1.0, 1.0]);
            b
        }),
        NoiseSpec::gaussian(1.0, 0).unwrap(),
        PenaltySpec::ScaledL1 { lam: 0.5 },
    )
    .unwrap();
    let grid = GridSpec::Linear {
        start: 0.0,
        stop: 1.0,
        points: 2,
    };
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, inst) in [("zero", &zero), ("lasso", &lasso)] {
        let sample = sample_risks(inst, &mc_config(5000, 42, grid.clone()), &solver).unwrap();
        let rep = concentration_check(&sample, 1.0, &[0.5, 1.0, 2.0], CP_CONFIDENCE).unwrap();
        ok &= rep.pass && sample.failed_replications == 0;
        let worst = rep
            .rows
            .iter()
            .map(|t| t.upper_cp_lower.max(t.lower_cp_lower) - t.gaussian_tail)
            .fold(f64::NEG_INFINITY, f64::max);
        parts.push(format!("{name}: {} (largest CP-lower minus tail {worst:.4})", if rep.pass { "within" } else { "outside" }));
    }
    // n = 1, X = 1: r̂ = |ε|, median Φ⁻¹(3/4)
    let single = ProblemInstance::new(
        DesignMatrix::identity(1),
        TargetVector::zeros(1),
        NoiseSpec::gaussian(1.0, 0).unwrap(),
        PenaltySpec::Zero,
    )
    .unwrap();
    let sample = sample_risks(&single, &mc_config(5000, 43, grid), &solver).unwrap();
    let med = 0.674_489_750_196_081_7;
    let k = sample.risks.iter().filter(|&&v| v >= med + 1.0).count() as u64;
    let lo = clopper_pearson_lower(k, 5000, CP_CONFIDENCE);
    let hi = clopper_pearson_upper(k, 5000, CP_CONFIDENCE);
    let analytic = 2.0 * normal_sf(med + 1.0);
    let hit = lo <= HALF_NORMAL_TAIL_AT_ONE && HALF_NORMAL_TAIL_AT_ONE <= hi && (analytic - HALF_NORMAL_TAIL_AT_ONE).abs() < 5e-4;
    ok &= hit;
    parts.push(format!(
        "half-normal tail at x=1: freq {:.4}, band [{lo:.4}, {hi:.4}], analytic {analytic:.4}",
        k as f64 / 5000.0
    ));
    outcome(ok, parts.join(" | "))
}

fn proximity() -> Outcome {
    let solver = SolverConfig::default();
    let curve = CurveConfig::default();
    let mut r = rng_from_seed(51);
    let mut beta = vec![0.0; 12];
    beta[..2].copy_from_slice(&[1.5, -1.0]);
    let box_set = ConvexSet::Box {
        lower: -2.0,
        upper: 2.0,
    };
    let penalties = [
        ("zero", PenaltySpec::Zero),
        ("l1", PenaltySpec::ScaledL1 { lam: 0.3 }),
        ("ridge", PenaltySpec::SquaredL2 { lam: 1.0 }),
        ("box", PenaltySpec::Indicator { set: box_set }),
        ("l1_large", PenaltySpec::ScaledL1 { lam: 2.0 }),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, (name, pen)) in penalties.into_iter().enumerate() {
        let inst = ProblemInstance::new(
            random_design(&mut r, 25, 12),
            TargetVector(beta.clone()),
            NoiseSpec::gaussian(1.0, 0).unwrap(),
            pen,
        )
        .unwrap();
        let grid = GridSpec::Linear {
            start: 0.0,
            stop: 12.0,
            points: 49,
        };
        let mc = mc_config(1000, 60 + k as u64, grid);
        let fc = estimate_f_curve(&inst, &mc, &curve).unwrap();
        let sample = sample_risks(&inst, &mc, &solver).unwrap();
        let rep = tf_proximity_check(&fc, &sample, 1.0, CP_CONFIDENCE).unwrap();
        ok &= rep.pass;
        parts.push(format!(
            "{name}: median gap {:.3}/{:.3}, mean gap {:.3}/{:.3}",
            rep.median_gap, rep.median_bound + rep.median_slack, rep.mean_gap, rep.mean_bound + rep.mean_slack
        ));
    }
    // n = 1, σ = 1: f(t) = t·E|ε| − t²/2, so t_f = √(2/π)
    let single = ProblemInstance::new(
        DesignMatrix::identity(1),
        TargetVector::zeros(1),
        NoiseSpec::gaussian(1.0, 0).unwrap(),
        PenaltySpec::Zero,
    )
    .unwrap();
    let grid = GridSpec::Linear {
        start: 0.0,
        stop: 3.0,
        points: 31,
    };
    let fc = estimate_f_curve(&single, &mc_config(2000, 70, grid), &curve).unwrap();
    let exact = (2.0 / std::f64::consts::PI).sqrt();
    let dev = (fc.t_f_hat - exact).abs();
    let hit = dev <= 3.0 * fc.t_f_stderr;
    ok &= hit;
    parts.push(format!(
        "n=1: t_f_hat {:.4} vs {exact:.4}, |dev| {dev:.4} vs 3·stderr {:.4}",
        fc.t_f_hat,
        3.0 * fc.t_f_stderr
    ));
    outcome(ok, parts.join(" | "))
}

fn packing() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (p, d) in [(10, 1), (25, 2), (100, 5), (200, 10)] {
        let t = Instant::now();
        let pk = vg_packing(p, d).unwrap();
        let w = pk.to_binary();
        let mut pairs_ok = w.iter().all(|v| v.len() == p && v.iter().filter(|&&b| b == 1).count() == d);
        for i in 0..w.len() {
            for j in i + 1..w.len() {
                let dist: usize = w[i].iter().zip(&w[j]).filter(|(a, b)| a != b).count();
                pairs_ok &= dist > d;
            }
        }
        let card = (w.len() as f64).ln();
        let bound = 0.5 * d as f64 * (p as f64 / (5.0 * d as f64)).ln();
        ok &= pairs_ok && card >= bound - 1e-12;
        parts.push(format!(
            "({p},{d}): |Ω|={} log {card:.3} ≥ {bound:.3}, pairs {} in {:.2?}",
            w.len(),
            if pairs_ok { "ok" } else { "BAD" },
            t.elapsed()
        ));
    }
    outcome(ok, parts.join("; "))
}

fn diagnostics_oracles() -> Outcome {
    // orthonormal columns of X/√n
    let ortho = DesignMatrix::scaled_identity(8);
    let d_ortho = rip_delta(&ortho, 3, 1_000_000).unwrap().delta_s;
    let n = 2.0f64;
    let c = 0.5f64;
    let two = DesignMatrix::from_row_slice(
        2,
        2,
        &[n.sqrt(), n.sqrt() * c, 0.0, n.sqrt() * (1.0 - c * c).sqrt()],
    )
    .unwrap();
    let d_two = rip_delta(&two, 2, 1_000_000).unwrap().delta_s;
    let want = 1.0 - 0.5f64.sqrt();
    let ident = DesignMatrix::scaled_identity(6);
    let phi = compatibility_constant(&ident, &[0, 1], 3.0, 4).unwrap().value;
    let kappa = re_constant(&ident, 2, 3.0, 4).unwrap().value;
    let ok = d_ortho == 0.0 && (d_two - want).abs() <= DELTA_TOL && (phi - 1.0).abs() <= CONE_TOL && (kappa - 1.0).abs() <= CONE_TOL;
    outcome(
        ok,
        format!("δ₃(orthonormal) = {d_ortho:e}, δ₂(ρ=0.5) − (1−√0.5) = {:.1e}, φ = {phi:.9}, κ = {kappa:.9}", d_two - want),
    )
}

fn main() -> ExitCode {
    let mut results: Vec<(u8, Outcome, std::time::Duration)> = Vec::new();
    let mut timed = |id: u8, f: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let o = f();
        let el = t.elapsed();
        println!("criterion {id:>2}: {:<7} [{el:.1?}] {}", o.status, o.detail);
        results.push((id, o, el));
    };
    let t = Instant::now();
    let (c1, c3) = maximizer_and_sandwich();
    let el = t.elapsed();
    println!("criterion  1: {:<7} [{el:.1?}] {}", c1.status, c1.detail);
    println!("criterion  3: {:<7} [{el:.1?}] {}", c3.status, c3.detail);
    timed(2, &strong_concavity);
    timed(4, &norm_dual);
    timed(5, &least_squares);
    timed(6, &compat_lower);
    timed(7, &sandwich);
    timed(8, &small_lambda);
    timed(9, &concentration);
    timed(10, &proximity);
    timed(11, &packing);
    timed(12, &diagnostics_oracles);
    results.push((1, c1, el));
    results.push((3, c3, el));
    let failed: Vec<u8> = results
        .iter()
        .filter(|(_, o, _)| o.status == Status::Fail)
        .map(|(id, _, _)| *id)
        .collect();
    let skipped = results.iter().filter(|(_, o, _)| o.status == Status::Skipped).count();
    println!(
        "acceptance: {} passed, {} failed {:?}, {} skipped",
        results.len() - failed.len() - skipped,
        failed.len(),
        failed,
        skipped
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
