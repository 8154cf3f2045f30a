//! Upper and lower bounds on the prediction error r̂ = ‖X(β̂ − β*)‖ read
//! off the curve H.

use serde::{Deserialize, Serialize};

use crate::curves::{CurveConfig, CurveEval, CurveEvaluator};
use crate::error::{Error, Result};
use crate::model::design::dot;
use crate::model::penalty::eval_unchecked;
use crate::model::{ProblemInstance, TargetVector};
use crate::solver::SolveResult;

/// Premises hold when their margin is at least −PREMISE_TOL.
pub const PREMISE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CertificateKind {
    FixedPointUpper,
    LimitLower,
    T0GammaLower,
    AlmostFixedPointLower,
    NormDualLower,
    /// Statistical bound t_f ≤ s from a Monte Carlo estimate of f(s).
    TfUpper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Upper,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Verified,
    NotApplicable,
}

/// A checked inequality lhs ≤ rhs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Premise {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// rhs − lhs
    pub margin: f64,
    pub satisfied: bool,
}

impl Premise {
    pub fn le(name: &str, lhs: f64, rhs: f64) -> Self {
        let margin = rhs - lhs;
        Premise {
            name: name.to_string(),
            lhs,
            rhs,
            margin,
            satisfied: margin >= -PREMISE_TOL,
        }
    }

    /// lhs ≥ rhs, stored as rhs ≤ lhs.
    pub fn ge(name: &str, lhs: f64, rhs: f64) -> Self {
        let margin = lhs - rhs;
        Premise {
            name: name.to_string(),
            lhs,
            rhs,
            margin,
            satisfied: margin >= -PREMISE_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub direction: Direction,
    pub bound: f64,
    pub premises: Vec<Premise>,
    /// Smallest premise margin plus the premise tolerance; ≥ 0 when
    /// every premise holds.
    pub slack: f64,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
    /// (t, H(t)) pairs evaluated on the way.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub evaluations: Vec<(f64, f64)>,
}

impl Certificate {
    pub(crate) fn assemble(
        kind: CertificateKind,
        direction: Direction,
        bound: f64,
        premises: Vec<Premise>,
        flags: Vec<String>,
        evaluations: Vec<(f64, f64)>,
    ) -> Certificate {
        let slack = premises
            .iter()
            .map(|p| p.margin)
            .fold(f64::INFINITY, f64::min)
            + PREMISE_TOL;
        let slack = if slack.is_finite() { slack } else { PREMISE_TOL };
        let ok = premises.iter().all(|p| p.satisfied) && bound.is_finite();
        Certificate {
            kind,
            direction,
            bound,
            premises,
            slack,
            verdict: if ok {
                Verdict::Verified
            } else {
                Verdict::NotApplicable
            },
            flags,
            evaluations,
        }
    }

    pub fn is_verified(&self) -> bool {
        self.verdict == Verdict::Verified
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifyConfig {
    pub curve: CurveConfig,
    /// Relative width at which the fixed-point bracket stops.
    pub fixed_point_rel_tol: f64,
    /// Stabilization threshold of the limit heuristic.
    pub stab_tol: f64,
    /// Number of doublings t_max·2^k probed by the limit heuristic.
    pub doublings: usize,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig {
            curve: CurveConfig::default(),
            fixed_point_rel_tol: 1e-10,
            stab_tol: 1e-6,
            doublings: 12,
        }
    }
}

fn require_finite_target(ev: &CurveEvaluator<'_>) -> Result<()> {
    if ev.h_star().is_finite() {
        Ok(())
    } else {
        Err(Error::Capability("certificates need h(β*) < +∞".into()))
    }
}

/// Evaluates H with warm starts carried between calls.
struct HProbe<'e, 'a> {
    ev: &'e CurveEvaluator<'a>,
    last: Option<CurveEval>,
    log: Vec<(f64, f64)>,
}

impl<'e, 'a> HProbe<'e, 'a> {
    fn new(ev: &'e CurveEvaluator<'a>) -> Self {
        HProbe {
            ev,
            last: None,
            log: Vec::new(),
        }
    }

    fn at(&mut self, t: f64) -> Result<f64> {
        let m = self.ev.m_with_hint(t, self.last.as_ref())?;
        let h = (m.value + self.ev.h_star()) / t;
        self.last = Some(m);
        self.log.push((t, h));
        Ok(h)
    }
}

/// Upper bound inf{r > 0 : H(r) ≤ r} ≥ r̂.
///
/// The root of H(r) − r is bracketed by exponential search from r = ‖ε‖ and
/// refined by regula falsi. The bound reported is the right end of the
/// final bracket, a point where H(r) ≤ r was observed.
pub fn fixed_point_upper(
    inst: &ProblemInstance,
    eps: &[f64],
    cfg: &CertifyConfig,
) -> Result<Certificate> {
    let ev = CurveEvaluator::new(inst, eps, &cfg.curve)?;
    fixed_point_upper_with(&ev, cfg)
}

pub fn fixed_point_upper_with(ev: &CurveEvaluator<'_>, cfg: &CertifyConfig) -> Result<Certificate> {
    require_finite_target(ev)?;
    let mut probe = HProbe::new(ev);
    let scale = dot(ev.eps(), ev.eps()).sqrt().max(1.0);
    let floor = 1e-12 * scale;
    let mut flags = Vec::new();
    let start = scale;
    let g0 = probe.at(start)? - start;
    let (mut lo, mut g_lo, mut hi, mut g_hi);
    if g0 > 0.0 {
        lo = start;
        g_lo = g0;
        hi = start;
        loop {
            hi *= 2.0;
            let g = probe.at(hi)? - hi;
            if g <= 0.0 {
                g_hi = g;
                break;
            }
            lo = hi;
            g_lo = g;
            if hi > 1e300 {
                return Err(Error::Numeric("H(r) > r on the whole search range".into()));
            }
        }
    } else {
        hi = start;
        g_hi = g0;
        loop {
            let r = hi * 0.5;
            if r < floor {
                // H(r) ≤ r down to the floor
                let h_floor = probe.at(floor)?;
                let (bound, flag) = if h_floor <= 1e-12 * scale {
                    (0.0, "zero_curve")
                } else {
                    (floor, "numerical_floor")
                };
                flags.push(flag.to_string());
                let premises = vec![Premise::le("fixed_point_bracket", h_floor, floor)];
                return Ok(Certificate::assemble(
                    CertificateKind::FixedPointUpper,
                    Direction::Upper,
                    bound,
                    premises,
                    flags,
                    probe.log,
                ));
            }
            let g = probe.at(r)? - r;
            if g > 0.0 {
                lo = r;
                g_lo = g;
                break;
            }
            hi = r;
            g_hi = g;
        }
    }
    // Illinois on g(r) = H(r) − r, decreasing, g(lo) > 0 ≥ g(hi)
    let mut side = 0i8;
    for _ in 0..500 {
        if hi - lo <= cfg.fixed_point_rel_tol * hi || g_hi == 0.0 {
            break;
        }
        let mut r = lo + g_lo * (hi - lo) / (g_lo - g_hi);
        if !(r > lo && r < hi) {
            r = 0.5 * (lo + hi);
        }
        let g = probe.at(r)? - r;
        if g > 0.0 {
            lo = r;
            g_lo = g;
            if side == 1 {
                g_hi *= 0.5;
            }
            side = 1;
        } else {
            hi = r;
            g_hi = g;
            if side == -1 {
                g_lo *= 0.5;
            }
            side = -1;
        }
    }
    let h_hi = probe
        .log
        .iter()
        .rev()
        .find(|(t, _)| *t == hi)
        .map(|p| p.1)
        .unwrap_or(hi + g_hi);
    let premises = vec![Premise::le("fixed_point_bracket", h_hi, hi)];
    Ok(Certificate::assemble(
        CertificateKind::FixedPointUpper,
        Direction::Upper,
        hi,
        premises,
        flags,
        probe.log,
    ))
}

/// ε'X(β̂ − β*) + h(β*) − h(β̂) − r̂²
fn t0_premise_lhs(inst: &ProblemInstance, eps: &[f64], sol: &SolveResult) -> Result<f64> {
    if sol.beta_hat.len() != inst.p() {
        return Err(Error::dim("solution length", inst.p(), sol.beta_hat.len()));
    }
    let bstar = inst.beta_star.as_slice();
    let d: Vec<f64> = sol.beta_hat.iter().zip(bstar).map(|(a, b)| a - b).collect();
    let xd = inst.design.apply(&d);
    let n = inst.n();
    Ok(dot(eps, &xd) + eval_unchecked(&inst.penalty, bstar, n)
        - eval_unchecked(&inst.penalty, &sol.beta_hat, n)
        - dot(&xd, &xd))
}

/// Lower bound r̂ ≥ H(t₀) − γ under ε'X(β̂−β*) + h(β*) − h(β̂) − r̂² ≤ t₀γ.
pub fn t0_gamma_lower(
    inst: &ProblemInstance,
    eps: &[f64],
    sol: &SolveResult,
    t0: f64,
    gamma: f64,
    cfg: &CertifyConfig,
) -> Result<Certificate> {
    let ev = CurveEvaluator::new(inst, eps, &cfg.curve)?;
    t0_gamma_lower_with(&ev, sol, t0, gamma)
}

pub fn t0_gamma_lower_with(
    ev: &CurveEvaluator<'_>,
    sol: &SolveResult,
    t0: f64,
    gamma: f64,
) -> Result<Certificate> {
    require_finite_target(ev)?;
    if !(t0 > 0.0 && t0.is_finite()) || !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::arg("t0 and gamma must be positive and finite"));
    }
    let lhs = t0_premise_lhs(ev.instance(), ev.eps(), sol)?;
    let premise = Premise::le("t0_gamma", lhs, t0 * gamma);
    let mut probe = HProbe::new(ev);
    let h = probe.at(t0)?;
    let raw = h - gamma;
    let mut flags = Vec::new();
    if raw <= 0.0 {
        flags.push("vacuous".to_string());
    }
    Ok(Certificate::assemble(
        CertificateKind::T0GammaLower,
        Direction::Lower,
        raw.max(0.0),
        vec![premise],
        flags,
        probe.log,
    ))
}

/// Lower bound from the limit of H at infinity.
///
/// With a solver result the bound is rigorous: it is the t₀-γ bound at
/// t₀ = t_max with the smallest γ that satisfies the premise. Without one,
/// H is probed at t_max·2^k and the bound is the last value minus the last
/// decrement (an extrapolation of the 1/t decay); it is reported as
/// verified only when that decrement is below the stabilization tolerance,
/// and flagged as heuristic.
pub fn limit_lower(
    inst: &ProblemInstance,
    eps: &[f64],
    t_max: f64,
    sol: Option<&SolveResult>,
    cfg: &CertifyConfig,
) -> Result<Certificate> {
    let ev = CurveEvaluator::new(inst, eps, &cfg.curve)?;
    limit_lower_with(&ev, t_max, sol, cfg)
}

pub fn limit_lower_with(
    ev: &CurveEvaluator<'_>,
    t_max: f64,
    sol: Option<&SolveResult>,
    cfg: &CertifyConfig,
) -> Result<Certificate> {
    require_finite_target(ev)?;
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::arg("t_max must be positive and finite"));
    }
    if let Some(sol) = sol {
        let lhs = t0_premise_lhs(ev.instance(), ev.eps(), sol)?;
        let gamma = lhs.max(0.0) / t_max + f64::MIN_POSITIVE;
        let mut cert = t0_gamma_lower_with(ev, sol, t_max, gamma)?;
        cert.kind = CertificateKind::LimitLower;
        cert.flags.push("via_t0_gamma".to_string());
        return Ok(cert);
    }
    let mut probe = HProbe::new(ev);
    let mut values = Vec::with_capacity(cfg.doublings + 1);
    let mut t = t_max;
    for _ in 0..=cfg.doublings {
        values.push(probe.at(t)?);
        t *= 2.0;
    }
    let last = *values.last().expect("at least one probe");
    let gap = if values.len() >= 2 {
        (values[values.len() - 2] - last).max(0.0)
    } else {
        f64::INFINITY
    };
    let premise = Premise::le("stabilization", gap, cfg.stab_tol);
    let bound = (last - gap).max(0.0);
    Ok(Certificate::assemble(
        CertificateKind::LimitLower,
        Direction::Lower,
        bound,
        vec![premise],
        vec!["heuristic".to_string()],
        probe.log,
    ))
}

/// Lower bound r̂ ≥ (1 − α)r when H((1−α)r) ≤ (1+α²)r and H((1−α²)r) ≥ r.
pub fn almost_fixed_point_lower(
    inst: &ProblemInstance,
    eps: &[f64],
    r: f64,
    alpha: f64,
    cfg: &CertifyConfig,
) -> Result<Certificate> {
    let ev = CurveEvaluator::new(inst, eps, &cfg.curve)?;
    almost_fixed_point_lower_with(&ev, r, alpha)
}

pub fn almost_fixed_point_lower_with(
    ev: &CurveEvaluator<'_>,
    r: f64,
    alpha: f64,
) -> Result<Certificate> {
    require_finite_target(ev)?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::arg("r must be positive and finite"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::arg(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let mut probe = HProbe::new(ev);
    let h_s = probe.at((1.0 - alpha) * r)?;
    let h_t = probe.at((1.0 - alpha * alpha) * r)?;
    let premises = vec![
        Premise::le("upper_probe", h_s, (1.0 + alpha * alpha) * r),
        Premise::ge("lower_probe", h_t, r),
    ];
    Ok(Certificate::assemble(
        CertificateKind::AlmostFixedPointLower,
        Direction::Lower,
        (1.0 - alpha) * r,
        premises,
        Vec::new(),
        probe.log,
    ))
}

/// Lower bound sup{ε'Xu − h(u) : ‖Xu‖ ≤ 1} ≤ r̂, valid when h is a norm.
pub fn norm_dual_lower(
    inst: &ProblemInstance,
    eps: &[f64],
    cfg: &CertifyConfig,
) -> Result<Certificate> {
    if !inst.penalty.is_norm() {
        return Err(Error::Capability(
            "the norm-dual bound needs a penalty that is a norm".into(),
        ));
    }
    let centered = inst.with_target(TargetVector::zeros(inst.p()))?;
    let ev = CurveEvaluator::new(&centered, eps, &cfg.curve)?;
    let m = ev.m(1.0)?;
    Ok(Certificate::assemble(
        CertificateKind::NormDualLower,
        Direction::Lower,
        m.value.max(0.0),
        Vec::new(),
        Vec::new(),
        vec![(1.0, m.value)],
    ))
}
