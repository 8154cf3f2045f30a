//! Monte Carlo over Gaussian noise: f(t) = E[F(t)], its maximizer t_f,
//! and the concentration of r̂ around its median and mean.
//!
//! Replication `i` draws its noise from `replication_seed(master_seed, i)`,
//! so every estimate is a pure function of the instance and the config.
//! The same draws are shared across all t (common random numbers).

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::certify::{Certificate, CertificateKind, Direction, Premise};
use crate::curves::{critical_radius_with, CriticalRadius, CurveConfig, CurveEvaluator};
use crate::error::{Error, Result};
use crate::model::{materialize_noise, ProblemInstance};
use crate::par::{map_indexed, pairwise_mean, sample_variance, Execution};
use crate::rng;
use crate::solver::{solve, SolverConfig};
use crate::special::{clopper_pearson_lower, normal_quantile, normal_sf};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridSpec {
    Linear { start: f64, stop: f64, points: usize },
    Geometric { start: f64, stop: f64, points: usize },
}

impl GridSpec {
    pub fn points(&self) -> Result<Vec<f64>> {
        let (start, stop, points, geometric) = match *self {
            GridSpec::Linear { start, stop, points } => (start, stop, points, false),
            GridSpec::Geometric { start, stop, points } => (start, stop, points, true),
        };
        if points < 2 {
            return Err(Error::arg("a grid needs at least 2 points"));
        }
        if !(start >= 0.0 && stop > start && stop.is_finite()) {
            return Err(Error::arg(format!("grid needs 0 <= start < stop, got {start}..{stop}")));
        }
        if geometric && start <= 0.0 {
            return Err(Error::arg("geometric grid needs start > 0"));
        }
        let last = (points - 1) as f64;
        Ok((0..points)
            .map(|k| {
                let w = k as f64 / last;
                if k == points - 1 {
                    stop
                } else if geometric {
                    start * (stop / start).powf(w)
                } else {
                    start + w * (stop - start)
                }
            })
            .collect())
    }
}

/// `start:stop:points` (linear) or `geom:start:stop:points`.
impl FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::arg(format!("cannot parse grid {s:?} (expected start:stop:points)"));
        let (geometric, rest) = match parts.as_slice() {
            ["geom", rest @ ..] => (true, rest),
            ["lin", rest @ ..] => (false, rest),
            rest => (false, rest),
        };
        let [a, b, c] = rest else { return Err(bad()) };
        let start: f64 = a.parse().map_err(|_| bad())?;
        let stop: f64 = b.parse().map_err(|_| bad())?;
        let points: usize = c.parse().map_err(|_| bad())?;
        let g = if geometric {
            GridSpec::Geometric { start, stop, points }
        } else {
            GridSpec::Linear { start, stop, points }
        };
        g.points()?;
        Ok(g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub reps: usize,
    pub master_seed: u64,
    pub t_grid: GridSpec,
    pub confidence: f64,
    #[serde(default = "default_bootstrap")]
    pub bootstrap: usize,
    #[serde(skip)]
    pub exec: Execution,
}

fn default_bootstrap() -> usize {
    200
}

impl McConfig {
    pub fn new(reps: usize, master_seed: u64, t_grid: GridSpec) -> Self {
        McConfig {
            reps,
            master_seed,
            t_grid,
            confidence: 0.99,
            bootstrap: default_bootstrap(),
            exec: Execution::Parallel,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps < 2 {
            return Err(Error::Config(format!("reps must be at least 2, got {}", self.reps)));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::Config(format!(
                "confidence must lie in (0, 1), got {}",
                self.confidence
            )));
        }
        self.t_grid.points()?;
        Ok(())
    }
}

/// Noise of replication `i`. A fixed noise vector is reused verbatim.
pub fn replication_noise(inst: &ProblemInstance, master_seed: u64, i: usize) -> Result<Vec<f64>> {
    let spec = inst
        .noise
        .with_seed(rng::replication_seed(master_seed, i as u64));
    materialize_noise(&spec, inst.n())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FCurveEstimate {
    pub grid: Vec<f64>,
    /// MC mean of F(t); −∞ (null) below the critical radius.
    pub f_hat: Vec<f64>,
    pub stderr: Vec<f64>,
    pub t_f_hat: f64,
    pub t_f_ci: (f64, f64),
    /// Bootstrap standard deviation of the maximizer.
    pub t_f_stderr: f64,
    pub reps_used: usize,
    pub failed_replications: usize,
    /// Interior grid points where f_hat falls below the chord of its
    /// neighbors by more than 2 stderr.
    pub concavity_violations: usize,
    /// Replications in which M decreased along the grid.
    pub monotonicity_violations: usize,
    pub spot_checks: usize,
    pub spot_check_failures: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

struct Replication {
    f: Vec<f64>,
    monotone: bool,
    spot: Option<bool>,
}

fn evaluator<'a>(
    inst: &'a ProblemInstance,
    crit: &CriticalRadius,
    mc: &McConfig,
    cfg: &CurveConfig,
    i: usize,
) -> Result<CurveEvaluator<'a>> {
    let eps = replication_noise(inst, mc.master_seed, i)?;
    CurveEvaluator::with_critical(inst, &eps, cfg, crit.clone())
}

fn is_convergence(e: &Error) -> bool {
    matches!(e, Error::Convergence { .. } | Error::Numeric(_))
}

/// Widest gap between t_k and its neighbors.
fn local_step(grid: &[f64], k: usize) -> f64 {
    let left = if k > 0 { grid[k] - grid[k - 1] } else { 0.0 };
    let right = if k + 1 < grid.len() { grid[k + 1] - grid[k] } else { 0.0 };
    left.max(right)
}

fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (k, v) in values.iter().enumerate() {
        if v.is_finite() && best.is_none_or(|b| *v > values[b]) {
            best = Some(k);
        }
    }
    best
}

/// Vertex of the parabola through three neighbors of the grid argmax,
/// clamped to the bracket; the argmax itself at a boundary.
fn parabolic_vertex(grid: &[f64], f: &[f64], k: usize) -> f64 {
    if k == 0 || k + 1 >= grid.len() || !f[k - 1].is_finite() || !f[k + 1].is_finite() {
        return grid[k];
    }
    let (x0, x1, x2) = (grid[k - 1], grid[k], grid[k + 1]);
    let (y0, y1, y2) = (f[k - 1], f[k], f[k + 1]);
    let num = (x1 - x0).powi(2) * (y1 - y2) - (x1 - x2).powi(2) * (y1 - y0);
    let den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
    if den == 0.0 || !num.is_finite() {
        return x1;
    }
    (x1 - 0.5 * num / den).clamp(x0, x2)
}

/// Estimates f on the grid and its maximizer t_f.
pub fn estimate_f_curve(inst: &ProblemInstance, mc: &McConfig, cfg: &CurveConfig) -> Result<FCurveEstimate> {
    inst.validate()?;
    mc.validate()?;
    cfg.validate()?;
    let grid = mc.t_grid.points()?;
    let crit = critical_radius_with(inst, &cfg.solver)?;
    let mut flags = Vec::new();
    let below: usize = grid.iter().filter(|&&t| t < crit.t_c - cfg.solver.tol).count();
    if below > 0 {
        flags.push(format!("grid_below_critical_radius:{below}"));
    }
    let reps: Vec<Result<Replication>> = map_indexed(mc.exec, mc.reps, |i| {
        let ev = evaluator(inst, &crit, mc, cfg, i)?;
        let evals = ev.sweep(crate::curves::Curve::M, &grid, None)?;
        let mut monotone = true;
        let mut prev = f64::NEG_INFINITY;
        let mut f = Vec::with_capacity(grid.len());
        for e in &evals {
            if e.value.is_finite() && e.value < prev - 1e-9 * prev.abs().max(1.0) {
                monotone = false;
            }
            prev = prev.max(e.value);
            f.push(e.value - 0.5 * e.t * e.t);
        }
        let spot = if i % 100 == 0 {
            let y = inst.response_for(ev.eps())?;
            let sol = solve(inst, &y, &cfg.solver)?;
            argmax(&f).map(|k| {
                // a risk beyond the grid can only be located at its edge
                let r = sol.risk.clamp(grid[0], grid[grid.len() - 1]);
                (grid[k] - r).abs() <= local_step(&grid, k) + 1e-6
            })
        } else {
            None
        };
        Ok(Replication { f, monotone, spot })
    });
    let mut rows: Vec<(usize, Replication)> = Vec::with_capacity(mc.reps);
    let mut failed = 0;
    for (i, r) in reps.into_iter().enumerate() {
        match r {
            Ok(rep) => rows.push((i, rep)),
            Err(e) if is_convergence(&e) => failed += 1,
            Err(e) => return Err(e),
        }
    }
    if rows.len() < 2 {
        return Err(Error::Numeric(format!(
            "only {} of {} replications succeeded",
            rows.len(),
            mc.reps
        )));
    }
    if failed > 0 {
        flags.push(format!("failed_replications:{failed}"));
    }
    let used = rows.len();
    let column = |k: usize, pick: &dyn Fn(usize) -> usize| -> Vec<f64> {
        (0..used).map(|j| rows[pick(j)].1.f[k]).collect()
    };
    let mut f_hat = Vec::with_capacity(grid.len());
    let mut stderr = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let col = column(k, &|j| j);
        if col.iter().all(|v| v.is_finite()) {
            f_hat.push(pairwise_mean(&col));
            stderr.push((sample_variance(&col) / used as f64).sqrt());
        } else {
            f_hat.push(f64::NEG_INFINITY);
            stderr.push(f64::NAN);
        }
    }
    let k_star = argmax(&f_hat).ok_or_else(|| Error::Numeric("f is −∞ on the whole grid".into()))?;

    let mut concavity_violations = 0;
    for k in 1..grid.len().saturating_sub(1) {
        if f_hat[k - 1].is_finite() && f_hat[k + 1].is_finite() {
            let w = (grid[k] - grid[k - 1]) / (grid[k + 1] - grid[k - 1]);
            let chord = (1.0 - w) * f_hat[k - 1] + w * f_hat[k + 1];
            if f_hat[k] < chord - 2.0 * stderr[k] {
                concavity_violations += 1;
            }
        }
    }
    if concavity_violations > 0 {
        flags.push("concavity_advisory".into());
    }
    let monotonicity_violations = rows.iter().filter(|(_, r)| !r.monotone).count();
    if monotonicity_violations > 0 {
        flags.push("monotonicity_violation".into());
    }
    let spots: Vec<bool> = rows.iter().filter_map(|(_, r)| r.spot).collect();
    let spot_check_failures = spots.iter().filter(|ok| !**ok).count();
    if spot_check_failures > 0 {
        flags.push("argmax_spot_check".into());
    }

    // golden-section on the frozen-seed mean between the argmax neighbors
    let ids: Vec<usize> = rows.iter().map(|(i, _)| *i).collect();
    let mean_f = |t: f64| -> Result<f64> {
        let vals: Vec<Result<f64>> = map_indexed(mc.exec, ids.len(), |j| {
            Ok(evaluator(inst, &crit, mc, cfg, ids[j])?.f(t)?.value)
        });
        let vals: Vec<f64> = vals.into_iter().collect::<Result<_>>()?;
        Ok(pairwise_mean(&vals))
    };
    let mut lo = if k_star > 0 && f_hat[k_star - 1].is_finite() { grid[k_star - 1] } else { grid[k_star] };
    let mut hi = if k_star + 1 < grid.len() { grid[k_star + 1] } else { grid[k_star] };
    let mut t_f_hat = grid[k_star];
    if hi > lo {
        const INV_PHI: f64 = 0.618_033_988_749_894_9;
        let mut a = hi - INV_PHI * (hi - lo);
        let mut b = lo + INV_PHI * (hi - lo);
        let mut fa = mean_f(a)?;
        let mut fb = mean_f(b)?;
        for _ in 0..80 {
            if hi - lo <= 1e-7 * hi.max(1.0) {
                break;
            }
            if fa >= fb {
                hi = b;
                b = a;
                fb = fa;
                a = hi - INV_PHI * (hi - lo);
                fa = mean_f(a)?;
            } else {
                lo = a;
                a = b;
                fa = fb;
                b = lo + INV_PHI * (hi - lo);
                fb = mean_f(b)?;
            }
        }
        let (t_best, f_best) = if fa >= fb { (a, fa) } else { (b, fb) };
        if f_best >= f_hat[k_star] {
            t_f_hat = t_best;
        }
    }

    // replication bootstrap of the parabolic maximizer
    let mut r = rng::rng_from_seed(rng::replication_seed(mc.master_seed, u64::MAX - 1));
    let mut boots = Vec::with_capacity(mc.bootstrap);
    for _ in 0..mc.bootstrap {
        use rand::Rng as _;
        let pick: Vec<usize> = (0..used).map(|_| r.random_range(0..used)).collect();
        let fb: Vec<f64> = (0..grid.len())
            .map(|k| {
                if f_hat[k].is_finite() {
                    pairwise_mean(&column(k, &|j| pick[j]))
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        if let Some(kb) = argmax(&fb) {
            boots.push(parabolic_vertex(&grid, &fb, kb));
        }
    }
    let (t_f_ci, t_f_stderr) = if boots.len() >= 2 {
        let mut sorted = boots.clone();
        sorted.sort_by(f64::total_cmp);
        let alpha = 1.0 - mc.confidence;
        let q = |p: f64| sorted[((p * (sorted.len() - 1) as f64).round() as usize).min(sorted.len() - 1)];
        (
            (q(alpha / 2.0).min(t_f_hat), q(1.0 - alpha / 2.0).max(t_f_hat)),
            sample_variance(&boots).sqrt(),
        )
    } else {
        ((t_f_hat, t_f_hat), 0.0)
    };

    Ok(FCurveEstimate {
        grid,
        f_hat,
        stderr,
        t_f_hat,
        t_f_ci,
        t_f_stderr,
        reps_used: used,
        failed_replications: failed,
        concavity_violations,
        monotonicity_violations,
        spot_checks: spots.len(),
        spot_check_failures,
        flags,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskSample {
    /// One risk per successful replication, in replication order.
    pub risks: Vec<f64>,
    pub median_hat: f64,
    pub mean_hat: f64,
    pub mean_stderr: f64,
    pub failed_replications: usize,
}

impl RiskSample {
    pub fn from_risks(risks: Vec<f64>, failed_replications: usize) -> Result<Self> {
        if risks.is_empty() {
            return Err(Error::arg("risk sample is empty"));
        }
        let sorted = sorted_copy(&risks);
        let m = sorted.len();
        let median_hat = if m % 2 == 1 {
            sorted[m / 2]
        } else {
            0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
        };
        let mean_stderr = if m >= 2 {
            (sample_variance(&risks) / m as f64).sqrt()
        } else {
            0.0
        };
        Ok(RiskSample {
            median_hat,
            mean_hat: pairwise_mean(&risks),
            mean_stderr,
            failed_replications,
            risks,
        })
    }

    pub fn sorted(&self) -> Vec<f64> {
        sorted_copy(&self.risks)
    }
}

fn sorted_copy(xs: &[f64]) -> Vec<f64> {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// Solves one problem per replication and collects the risks. Failed
/// solves are excluded and counted.
pub fn sample_risks(inst: &ProblemInstance, mc: &McConfig, solver_cfg: &SolverConfig) -> Result<RiskSample> {
    inst.validate()?;
    mc.validate()?;
    solver_cfg.validate()?;
    let out: Vec<Result<f64>> = map_indexed(mc.exec, mc.reps, |i| {
        let eps = replication_noise(inst, mc.master_seed, i)?;
        let y = inst.response_for(&eps)?;
        Ok(solve(inst, &y, solver_cfg)?.risk)
    });
    let mut risks = Vec::with_capacity(mc.reps);
    let mut failed = 0;
    for r in out {
        match r {
            Ok(v) => risks.push(v),
            Err(e) if is_convergence(&e) => failed += 1,
            Err(e) => return Err(e),
        }
    }
    if risks.is_empty() {
        return Err(Error::Numeric(format!("all {} replications failed", mc.reps)));
    }
    RiskSample::from_risks(risks, failed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub x: f64,
    /// P(N(0,1) ≥ x)
    pub gaussian_tail: f64,
    pub upper_count: u64,
    pub upper_freq: f64,
    pub upper_cp_lower: f64,
    pub upper_pass: bool,
    pub lower_count: u64,
    pub lower_freq: f64,
    pub lower_cp_lower: f64,
    pub lower_pass: bool,
    /// Replications at which the band half-width around the Gaussian tail
    /// drops to `resolution`.
    pub reps_for_resolution: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub reps: usize,
    pub median_hat: f64,
    pub sigma: f64,
    pub confidence: f64,
    pub resolution: f64,
    pub rows: Vec<TailRow>,
    pub pass: bool,
}

/// Compares P(r̂ ≥ m + σx) and P(r̂ ≤ m − σx) with the Gaussian tail. A
/// side fails only when the one-sided Clopper–Pearson lower bound of its
/// frequency exceeds the tail.
pub fn concentration_check(
    sample: &RiskSample,
    sigma: f64,
    x_list: &[f64],
    confidence: f64,
) -> Result<ConcentrationReport> {
    if !(sigma > 0.0) {
        return Err(Error::arg(format!("sigma must be positive, got {sigma}")));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::arg(format!("confidence must lie in (0, 1), got {confidence}")));
    }
    let n = sample.risks.len() as u64;
    let m = sample.median_hat;
    let resolution = 0.01;
    let z = normal_quantile(confidence);
    let rows: Vec<TailRow> = x_list
        .iter()
        .map(|&x| {
            let tail = normal_sf(x);
            let upper_count = sample.risks.iter().filter(|&&r| r >= m + sigma * x).count() as u64;
            let lower_count = sample.risks.iter().filter(|&&r| r <= m - sigma * x).count() as u64;
            let upper_cp_lower = clopper_pearson_lower(upper_count, n, confidence);
            let lower_cp_lower = clopper_pearson_lower(lower_count, n, confidence);
            let need = (z * z * tail * (1.0 - tail) / (resolution * resolution)).ceil();
            TailRow {
                x,
                gaussian_tail: tail,
                upper_count,
                upper_freq: upper_count as f64 / n as f64,
                upper_cp_lower,
                upper_pass: upper_cp_lower <= tail,
                lower_count,
                lower_freq: lower_count as f64 / n as f64,
                lower_cp_lower,
                lower_pass: lower_cp_lower <= tail,
                reps_for_resolution: need as u64,
            }
        })
        .collect();
    let pass = rows.iter().all(|r| r.upper_pass && r.lower_pass);
    Ok(ConcentrationReport {
        reps: sample.risks.len(),
        median_hat: m,
        sigma,
        confidence,
        resolution,
        rows,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProximityReport {
    pub t_f_hat: f64,
    pub median_hat: f64,
    pub mean_hat: f64,
    pub median_gap: f64,
    pub median_bound: f64,
    pub median_slack: f64,
    pub mean_gap: f64,
    pub mean_bound: f64,
    pub mean_slack: f64,
    pub pass: bool,
}

/// Largest move of √v when v ranges over [lo, hi].
fn sqrt_spread(center: f64, lo: f64, hi: f64) -> f64 {
    let c = center.max(0.0).sqrt();
    (hi.max(0.0).sqrt() - c).abs().max((c - lo.max(0.0).sqrt()).abs())
}

/// |√t_f − √m| ≤ 3.25√σ and |√t_f − √E r̂| ≤ 4.40√σ, each with a slack
/// made of the t_f interval and the MC band of the median or mean,
/// mapped through the square root.
pub fn tf_proximity_check(
    fcurve: &FCurveEstimate,
    sample: &RiskSample,
    sigma: f64,
    confidence: f64,
) -> Result<ProximityReport> {
    if !(sigma > 0.0) {
        return Err(Error::arg(format!("sigma must be positive, got {sigma}")));
    }
    let n = sample.risks.len();
    let z = normal_quantile(0.5 + 0.5 * confidence);
    let sorted = sample.sorted();
    let half = 0.5 * z * (n as f64).sqrt();
    let lo_idx = ((n as f64 / 2.0 - half).floor().max(0.0) as usize).min(n - 1);
    let hi_idx = ((n as f64 / 2.0 + half).ceil() as usize).min(n - 1);
    let tf_slack = sqrt_spread(fcurve.t_f_hat, fcurve.t_f_ci.0, fcurve.t_f_ci.1);
    let median_slack = tf_slack + sqrt_spread(sample.median_hat, sorted[lo_idx], sorted[hi_idx]);
    let se = z * sample.mean_stderr;
    let mean_slack = tf_slack + sqrt_spread(sample.mean_hat, sample.mean_hat - se, sample.mean_hat + se);
    let root_tf = fcurve.t_f_hat.max(0.0).sqrt();
    let median_gap = (root_tf - sample.median_hat.max(0.0).sqrt()).abs();
    let mean_gap = (root_tf - sample.mean_hat.max(0.0).sqrt()).abs();
    let median_bound = 3.25 * sigma.sqrt();
    let mean_bound = 4.40 * sigma.sqrt();
    Ok(ProximityReport {
        t_f_hat: fcurve.t_f_hat,
        median_hat: sample.median_hat,
        mean_hat: sample.mean_hat,
        median_gap,
        median_bound,
        median_slack,
        mean_gap,
        mean_bound,
        mean_slack,
        pass: median_gap <= median_bound + median_slack && mean_gap <= mean_bound + mean_slack,
    })
}

/// Statistical certificate t_f ≤ s from f̂(s) + h(β*) + band ≤ s², where
/// band is the one-sided normal band z·stderr at the configured confidence.
pub fn tf_upper_condition(
    inst: &ProblemInstance,
    s_val: f64,
    mc: &McConfig,
    cfg: &CurveConfig,
) -> Result<Certificate> {
    inst.validate()?;
    mc.validate()?;
    let h_star = inst.penalty_at_target();
    if !h_star.is_finite() {
        return Err(Error::Capability("the t_f condition needs h(β*) < +∞".into()));
    }
    if !(s_val > 0.0 && s_val.is_finite()) {
        return Err(Error::arg(format!("s must be positive, got {s_val}")));
    }
    let crit = critical_radius_with(inst, &cfg.solver)?;
    if s_val < crit.t_c {
        return Err(Error::arg(format!(
            "s = {s_val} lies below the critical radius {}",
            crit.t_c
        )));
    }
    let vals: Vec<Result<f64>> = map_indexed(mc.exec, mc.reps, |i| {
        Ok(evaluator(inst, &crit, mc, cfg, i)?.f(s_val)?.value)
    });
    let vals: Vec<f64> = vals.into_iter().collect::<Result<_>>()?;
    let f_hat = pairwise_mean(&vals);
    let band = normal_quantile(mc.confidence) * (sample_variance(&vals) / vals.len() as f64).sqrt();
    let premise = Premise::le("f_hat_plus_h_star_plus_band", f_hat + h_star + band, s_val * s_val);
    Ok(Certificate::assemble(
        CertificateKind::TfUpper,
        Direction::Upper,
        s_val,
        vec![premise],
        vec!["statistical".into(), format!("band={band:e}"), format!("f_hat={f_hat:e}")],
        Vec::new(),
    ))
}
