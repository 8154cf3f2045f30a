//! The curves M, F, G, H and the critical radius t_c.
//!
//! M(t) = sup { ε'X(β − β*) − h(β) : ‖X(β − β*)‖ ≤ t }, F = M − t²/2,
//! G = M − t·r̂, H = (M + h(β*))/t.
//!
//! M is evaluated through its Lagrangian dual. For a multiplier μ > 0 the
//! inner problem min (μ/2)‖X(β − β*)‖² − ε'Xβ + h(β) is a penalized
//! least-squares problem with response Xβ* + ε/μ and penalty h/μ; its
//! attained radius r(μ) is non-increasing in μ, and μ is tuned until
//! r(μ) = t.

pub mod oracle;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::design::dot;
use crate::model::penalty::eval_unchecked;
use crate::model::{PenaltySpec, ProblemInstance};
use crate::solver::kernel::Kernel;
use crate::solver::{SolveResult, SolverConfig};

/// One point of a curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveEval {
    pub t: f64,
    /// −∞ below the critical radius (serialized as null).
    pub value: f64,
    pub attaining_beta: Option<Vec<f64>>,
    /// Whether the constraint ‖X(β − β*)‖ ≤ t binds.
    pub active: bool,
    pub dual_mu: f64,
    /// ‖X(β − β*)‖ at `attaining_beta`.
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalRadius {
    pub t_c: f64,
    pub attaining_beta0: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Curve {
    M,
    F,
    G,
    H,
}

impl FromStr for Curve {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "M" | "m" => Ok(Curve::M),
            "F" | "f" => Ok(Curve::F),
            "G" | "g" => Ok(Curve::G),
            "H" | "h" => Ok(Curve::H),
            other => Err(Error::arg(format!("unknown curve {other:?} (expected F, G, H or M)"))),
        }
    }
}

impl fmt::Display for Curve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Curve::M => "M",
            Curve::F => "F",
            Curve::G => "G",
            Curve::H => "H",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveConfig {
    pub solver: SolverConfig,
    /// Radius tolerance: the search stops once |r(μ) − t| ≤ rad_tol·max(1, t).
    pub rad_tol: f64,
    pub max_search: usize,
}

impl Default for CurveConfig {
    fn default() -> Self {
        CurveConfig {
            solver: SolverConfig::default(),
            rad_tol: 1e-6,
            max_search: 200,
        }
    }
}

impl CurveConfig {
    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        if !(self.rad_tol > 0.0) {
            return Err(Error::arg("rad_tol must be positive"));
        }
        if self.max_search == 0 {
            return Err(Error::arg("max_search must be at least 1"));
        }
        Ok(())
    }
}

const MU_FLOOR: f64 = 1e-12;
const MU_CEIL: f64 = 1e30;

/// Solution of the inner problem at one multiplier.
struct Inner {
    mu: f64,
    beta: Vec<f64>,
    xb: Vec<f64>,
    /// ‖X(β − β*)‖
    r: f64,
    /// ε'X(β − β*) − h(β)
    primal: f64,
}

/// Evaluates the curves for one instance and one noise realization.
/// Shared quantities (X'ε, X'Xβ*, t_c) are computed once.
pub struct CurveEvaluator<'a> {
    inst: &'a ProblemInstance,
    eps: Vec<f64>,
    cfg: CurveConfig,
    xt_eps: Vec<f64>,
    xtx_bstar: Vec<f64>,
    signal: Vec<f64>,
    h_star: f64,
    critical: CriticalRadius,
}

impl<'a> CurveEvaluator<'a> {
    pub fn new(inst: &'a ProblemInstance, eps: &[f64], cfg: &CurveConfig) -> Result<Self> {
        inst.validate()?;
        cfg.validate()?;
        let critical = critical_radius_with(inst, &cfg.solver)?;
        Self::with_critical(inst, eps, cfg, critical)
    }

    /// Like [`CurveEvaluator::new`] but reuses a critical radius computed
    /// for the same instance, which does not depend on ε.
    pub fn with_critical(
        inst: &'a ProblemInstance,
        eps: &[f64],
        cfg: &CurveConfig,
        critical: CriticalRadius,
    ) -> Result<Self> {
        cfg.validate()?;
        if eps.len() != inst.n() {
            return Err(Error::dim("noise vector length", inst.n(), eps.len()));
        }
        if eps.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("noise vector has non-finite entries"));
        }
        if critical.attaining_beta0.len() != inst.p() {
            return Err(Error::dim("critical point length", inst.p(), critical.attaining_beta0.len()));
        }
        let signal = inst.signal();
        Ok(CurveEvaluator {
            xt_eps: inst.design.apply_t(eps),
            xtx_bstar: inst.design.apply_t(&signal),
            eps: eps.to_vec(),
            h_star: inst.penalty_at_target(),
            signal,
            critical,
            inst,
            cfg: *cfg,
        })
    }

    pub fn instance(&self) -> &ProblemInstance {
        self.inst
    }

    pub fn eps(&self) -> &[f64] {
        &self.eps
    }

    pub fn critical(&self) -> &CriticalRadius {
        &self.critical
    }

    /// h(β*)
    pub fn h_star(&self) -> f64 {
        self.h_star
    }

    fn inner(&self, mu: f64, start: Option<&[f64]>) -> Result<Inner> {
        let c: Vec<f64> = self
            .xtx_bstar
            .iter()
            .zip(&self.xt_eps)
            .map(|(a, b)| mu * a + b)
            .collect();
        let scale = c.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        let tol = self.cfg.solver.tol * scale;
        let k = Kernel {
            design: &self.inst.design,
            pen: &self.inst.penalty,
            a: mu,
            c,
        };
        let out = k.run(self.cfg.solver.method, start, tol, self.cfg.solver.max_iter, false)?;
        let diff: Vec<f64> = out.xb.iter().zip(&self.signal).map(|(a, b)| a - b).collect();
        let r = dot(&diff, &diff).sqrt();
        let h = eval_unchecked(&self.inst.penalty, &out.beta, self.inst.n());
        let primal = dot(&self.eps, &diff) - h;
        if !out.converged && !(out.residual <= 1e3 * tol) {
            return Err(Error::Convergence {
                iterations: out.iterations,
                residual: out.residual,
                best: Box::new(SolveResult {
                    beta_hat: out.beta,
                    risk: r,
                    objective: -primal,
                    opt_residual: out.residual,
                    iterations: out.iterations,
                    trace: None,
                }),
            });
        }
        Ok(Inner {
            mu,
            beta: out.beta,
            xb: out.xb,
            r,
            primal,
        })
    }

    /// M(t).
    pub fn m(&self, t: f64) -> Result<CurveEval> {
        self.m_with_hint(t, None)
    }

    /// M(t), seeding the multiplier search and the inner solver from a
    /// previous evaluation (typically the neighboring grid point).
    pub fn m_with_hint(&self, t: f64, hint: Option<&CurveEval>) -> Result<CurveEval> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::arg(format!("radius must be finite and >= 0, got {t}")));
        }
        let tol_r = self.cfg.rad_tol * t.max(1.0);
        if t < self.critical.t_c - tol_r {
            return Ok(CurveEval {
                t,
                value: f64::NEG_INFINITY,
                attaining_beta: None,
                active: false,
                dual_mu: 0.0,
                radius: f64::NAN,
            });
        }
        let (mu0, start) = match hint {
            Some(h) if h.dual_mu > 0.0 => (h.dual_mu, h.attaining_beta.as_deref()),
            Some(h) => (1.0, h.attaining_beta.as_deref()),
            None => (1.0, None),
        };
        let first = self.inner(mu0, start)?;
        if (first.r - t).abs() <= tol_r {
            return Ok(self.finish(t, first, true));
        }
        let (mut lo, mut hi);
        if first.r > t {
            // r too large: raise μ
            lo = first;
            loop {
                let mu = lo.mu * 2.0;
                if mu > MU_CEIL {
                    return Err(Error::Numeric(format!(
                        "no multiplier brings the radius down to {t} (r = {} at μ = {})",
                        lo.r, lo.mu
                    )));
                }
                let cand = self.inner(mu, Some(&lo.beta))?;
                if (cand.r - t).abs() <= tol_r {
                    return Ok(self.finish(t, cand, true));
                }
                if cand.r < t {
                    hi = cand;
                    break;
                }
                lo = cand;
            }
        } else {
            hi = first;
            loop {
                if hi.mu <= MU_FLOOR {
                    // the constraint does not bind
                    return Ok(self.finish(t, hi, false));
                }
                let mu = (hi.mu * 0.5).max(MU_FLOOR);
                let cand = self.inner(mu, Some(&hi.beta))?;
                if (cand.r - t).abs() <= tol_r {
                    return Ok(self.finish(t, cand, true));
                }
                if cand.r > t {
                    lo = cand;
                    break;
                }
                hi = cand;
            }
        }
        // Illinois iteration on ln μ for r(μ) − t, which is decreasing
        let mut f_lo = lo.r - t;
        let mut f_hi = hi.r - t;
        let mut side = 0i8;
        for _ in 0..self.cfg.max_search {
            let (x_lo, x_hi) = (lo.mu.ln(), hi.mu.ln());
            let mut x = x_lo + f_lo * (x_hi - x_lo) / (f_lo - f_hi);
            if !(x > x_lo && x < x_hi) {
                x = 0.5 * (x_lo + x_hi);
            }
            let start = if f_lo < -f_hi { &lo.beta } else { &hi.beta };
            let cand = self.inner(x.exp(), Some(start))?;
            let fc = cand.r - t;
            if fc.abs() <= tol_r || x_hi - x_lo <= 1e-14 * (1.0 + x_lo.abs()) {
                return Ok(self.finish(t, cand, true));
            }
            if fc > 0.0 {
                lo = cand;
                f_lo = fc;
                if side == 1 {
                    f_hi *= 0.5;
                }
                side = 1;
            } else {
                hi = cand;
                f_hi = fc;
                if side == -1 {
                    f_lo *= 0.5;
                }
                side = -1;
            }
        }
        Err(Error::Numeric(format!(
            "multiplier search for t = {t} stalled: r ∈ [{}, {}] for μ ∈ [{}, {}]",
            hi.r, lo.r, lo.mu, hi.mu
        )))
    }

    fn finish(&self, t: f64, inner: Inner, active: bool) -> CurveEval {
        let value = if active {
            // dual value: an upper bound on M(t), exact to second order
            inner.primal + 0.5 * inner.mu * (t * t - inner.r * inner.r)
        } else {
            inner.primal
        };
        let (beta, radius) = if inner.r <= t * (1.0 + 1e-8) {
            (inner.beta, inner.r)
        } else {
            self.pull_inside(t, inner.beta, &inner.xb)
        };
        CurveEval {
            t,
            value,
            attaining_beta: Some(beta),
            active,
            dual_mu: if active { inner.mu } else { 0.0 },
            radius,
        }
    }

    /// Moves β toward a feasible base point (β*, or β₀ when h(β*) = ∞)
    /// until ‖X(β − β*)‖ ≤ t.
    fn pull_inside(&self, t: f64, beta: Vec<f64>, xb: &[f64]) -> (Vec<f64>, f64) {
        let base: &[f64] = if self.h_star.is_finite() {
            self.inst.beta_star.as_slice()
        } else {
            &self.critical.attaining_beta0
        };
        let xbase = self.inst.design.apply(base);
        let radius_at = |theta: f64| {
            let d: Vec<f64> = (0..xb.len())
                .map(|i| (1.0 - theta) * xbase[i] + theta * xb[i] - self.signal[i])
                .collect();
            dot(&d, &d).sqrt()
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if radius_at(mid) <= t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let out: Vec<f64> = base
            .iter()
            .zip(&beta)
            .map(|(b0, b)| b0 + lo * (b - b0))
            .collect();
        (out, radius_at(lo))
    }

    /// F(t) = M(t) − t²/2
    pub fn f(&self, t: f64) -> Result<CurveEval> {
        self.transform(Curve::F, self.m(t)?, None)
    }

    /// G(t) = M(t) − t·risk
    pub fn g(&self, t: f64, risk: f64) -> Result<CurveEval> {
        self.transform(Curve::G, self.m(t)?, Some(risk))
    }

    /// H(t) = (M(t) + h(β*))/t, t > 0
    pub fn h(&self, t: f64) -> Result<CurveEval> {
        self.check_h(t)?;
        self.transform(Curve::H, self.m(t)?, None)
    }

    fn check_h(&self, t: f64) -> Result<()> {
        if !(t > 0.0) {
            return Err(Error::arg(format!("H is defined for t > 0 only, got {t}")));
        }
        if !self.h_star.is_finite() {
            return Err(Error::Capability("H needs h(β*) < +∞".into()));
        }
        Ok(())
    }

    /// Converts an evaluation of M into the requested curve.
    pub fn transform(&self, which: Curve, mut m: CurveEval, risk: Option<f64>) -> Result<CurveEval> {
        let t = m.t;
        m.value = match which {
            Curve::M => m.value,
            Curve::F => m.value - 0.5 * t * t,
            Curve::G => {
                let risk = risk.ok_or_else(|| Error::arg("G needs the solver risk"))?;
                m.value - t * risk
            }
            Curve::H => {
                self.check_h(t)?;
                (m.value + self.h_star) / t
            }
        };
        Ok(m)
    }

    /// Evaluates a curve on a grid in index order, warm-starting each point
    /// from its predecessor.
    pub fn sweep(&self, which: Curve, grid: &[f64], risk: Option<f64>) -> Result<Vec<CurveEval>> {
        if which == Curve::H {
            for &t in grid {
                self.check_h(t)?;
            }
        }
        if which == Curve::G && risk.is_none() {
            return Err(Error::arg("G needs the solver risk"));
        }
        let mut out: Vec<CurveEval> = Vec::with_capacity(grid.len());
        let mut prev: Option<CurveEval> = None;
        for &t in grid {
            let m = self.m_with_hint(t, prev.as_ref())?;
            if m.value.is_finite() {
                prev = Some(m.clone());
            }
            out.push(self.transform(which, m, risk)?);
        }
        Ok(out)
    }
}

/// M(t) for one realization.
#[allow(non_snake_case)]
pub fn eval_M(inst: &ProblemInstance, eps: &[f64], t: f64, cfg: &CurveConfig) -> Result<CurveEval> {
    CurveEvaluator::new(inst, eps, cfg)?.m(t)
}

#[allow(non_snake_case)]
pub fn eval_F(inst: &ProblemInstance, eps: &[f64], t: f64, cfg: &CurveConfig) -> Result<CurveEval> {
    CurveEvaluator::new(inst, eps, cfg)?.f(t)
}

#[allow(non_snake_case)]
pub fn eval_G(
    inst: &ProblemInstance,
    eps: &[f64],
    t: f64,
    risk: f64,
    cfg: &CurveConfig,
) -> Result<CurveEval> {
    CurveEvaluator::new(inst, eps, cfg)?.g(t, risk)
}

#[allow(non_snake_case)]
pub fn eval_H(inst: &ProblemInstance, eps: &[f64], t: f64, cfg: &CurveConfig) -> Result<CurveEval> {
    let ev = CurveEvaluator::new(inst, eps, cfg)?;
    ev.h(t)
}

/// t_c = min ‖X(β − β*)‖ over the domain of h, with a minimizer β₀.
pub fn critical_radius(inst: &ProblemInstance) -> Result<CriticalRadius> {
    inst.validate()?;
    critical_radius_with(inst, &SolverConfig::default())
}

pub(crate) fn critical_radius_with(inst: &ProblemInstance, cfg: &SolverConfig) -> Result<CriticalRadius> {
    let Some(set) = inst.penalty.domain_set() else {
        return Ok(CriticalRadius {
            t_c: 0.0,
            attaining_beta0: inst.beta_star.0.clone(),
        });
    };
    if set.contains(inst.beta_star.as_slice()) {
        return Ok(CriticalRadius {
            t_c: 0.0,
            attaining_beta0: inst.beta_star.0.clone(),
        });
    }
    let pen = PenaltySpec::Indicator { set: set.clone() };
    let signal = inst.signal();
    let c = inst.design.apply_t(&signal);
    let scale = c.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let k = Kernel {
        design: &inst.design,
        pen: &pen,
        a: 1.0,
        c,
    };
    let out = k.run(crate::solver::Method::Auto, None, cfg.tol * scale, cfg.max_iter, false)?;
    let diff: Vec<f64> = out.xb.iter().zip(&signal).map(|(a, b)| a - b).collect();
    Ok(CriticalRadius {
        t_c: dot(&diff, &diff).sqrt(),
        attaining_beta0: out.beta,
    })
}
