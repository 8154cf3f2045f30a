//! Penalty functions h : Rᵖ → [0, +∞] and their proximal maps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Norms available to [`PenaltySpec::ScaledLqNorm`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedNorm {
    L1,
    L2,
    Linf,
}

impl NamedNorm {
    pub fn eval(self, v: &[f64]) -> f64 {
        match self {
            NamedNorm::L1 => v.iter().map(|x| x.abs()).sum(),
            NamedNorm::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            NamedNorm::Linf => v.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }

    /// prox of τ·N.
    fn prox(self, z: &[f64], tau: f64) -> Vec<f64> {
        match self {
            NamedNorm::L1 => z.iter().map(|&v| soft_threshold(v, tau)).collect(),
            NamedNorm::L2 => {
                let nz = NamedNorm::L2.eval(z);
                if nz <= tau {
                    vec![0.0; z.len()]
                } else {
                    let s = 1.0 - tau / nz;
                    z.iter().map(|v| v * s).collect()
                }
            }
            // Moreau: prox of τ‖·‖∞ is z minus the projection onto the ℓ1 ball of radius τ
            NamedNorm::Linf => {
                let proj = project_l1_ball(z, tau);
                z.iter().zip(&proj).map(|(a, b)| a - b).collect()
            }
        }
    }
}

/// Closed convex sets for indicator penalties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum ConvexSet {
    /// [lower, upper]ᵖ
    Box { lower: f64, upper: f64 },
    /// Euclidean ball of the given radius centered at the origin.
    Ball { radius: f64 },
    Singleton { point: Vec<f64> },
}

const BALL_SLACK: f64 = 1e-12;

impl ConvexSet {
    fn validate(&self, p: usize) -> Result<()> {
        match self {
            ConvexSet::Box { lower, upper } => {
                if lower.is_nan() || upper.is_nan() || lower > upper {
                    return Err(Error::arg(format!("empty box [{lower}, {upper}]")));
                }
            }
            ConvexSet::Ball { radius } => {
                if !(*radius >= 0.0 && radius.is_finite()) {
                    return Err(Error::arg(format!("ball radius must be >= 0, got {radius}")));
                }
            }
            ConvexSet::Singleton { point } => {
                if point.len() != p {
                    return Err(Error::dim("singleton point length", p, point.len()));
                }
                if point.iter().any(|v| !v.is_finite()) {
                    return Err(Error::arg("singleton point has non-finite entries"));
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, beta: &[f64]) -> bool {
        match self {
            ConvexSet::Box { lower, upper } => beta.iter().all(|v| *lower <= *v && *v <= *upper),
            ConvexSet::Ball { radius } => {
                NamedNorm::L2.eval(beta) <= radius * (1.0 + BALL_SLACK) + f64::MIN_POSITIVE
            }
            ConvexSet::Singleton { point } => point.as_slice() == beta,
        }
    }

    pub fn project(&self, z: &[f64]) -> Vec<f64> {
        match self {
            ConvexSet::Box { lower, upper } => z.iter().map(|v| v.clamp(*lower, *upper)).collect(),
            ConvexSet::Ball { radius } => {
                let nz = NamedNorm::L2.eval(z);
                if nz <= *radius {
                    z.to_vec()
                } else {
                    let s = radius / nz;
                    z.iter().map(|v| v * s).collect()
                }
            }
            ConvexSet::Singleton { point } => point.clone(),
        }
    }
}

/// Declarative description of the penalty h.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PenaltySpec {
    Zero,
    /// h(β) = √n · lam · ‖β‖₁ (the Lasso scaling).
    ScaledL1 { lam: f64 },
    /// h(β) = lam · N(β)^q.
    ScaledLqNorm { lam: f64, q: u32, norm: NamedNorm },
    /// h(β) = lam · ‖β‖².
    SquaredL2 { lam: f64 },
    Indicator { set: ConvexSet },
    /// A finite penalty plus the indicator of a set.
    Sum {
        finite: Box<PenaltySpec>,
        set: ConvexSet,
    },
}

/// Separable form h(β) = Σⱼ w|βⱼ| + ρβⱼ² + δ_[lo,hi](βⱼ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ScalarPenalty {
    pub l1: f64,
    pub sq: f64,
    pub lo: f64,
    pub hi: f64,
}

impl ScalarPenalty {
    const FREE: ScalarPenalty = ScalarPenalty {
        l1: 0.0,
        sq: 0.0,
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    /// argmin_b ½(b − v)² + τ·h₁(b)
    #[inline]
    pub fn prox(&self, v: f64, tau: f64) -> f64 {
        let b = soft_threshold(v, tau * self.l1) / (1.0 + 2.0 * tau * self.sq);
        b.clamp(self.lo, self.hi)
    }

    /// Minimizer of h₁ alone (used for zero columns).
    pub fn argmin(&self) -> f64 {
        0.0_f64.clamp(self.lo, self.hi)
    }
}

impl PenaltySpec {
    pub fn scaled_l1(lam: f64) -> Self {
        PenaltySpec::ScaledL1 { lam }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        let check_lam = |lam: f64| {
            if lam >= 0.0 && lam.is_finite() {
                Ok(())
            } else {
                Err(Error::arg(format!("penalty level must be finite and >= 0, got {lam}")))
            }
        };
        match self {
            PenaltySpec::Zero => Ok(()),
            PenaltySpec::ScaledL1 { lam } | PenaltySpec::SquaredL2 { lam } => check_lam(*lam),
            PenaltySpec::ScaledLqNorm { lam, q, .. } => {
                check_lam(*lam)?;
                if *q == 0 {
                    return Err(Error::arg("norm exponent q must be >= 1"));
                }
                Ok(())
            }
            PenaltySpec::Indicator { set } => set.validate(p),
            PenaltySpec::Sum { finite, set } => {
                if matches!(**finite, PenaltySpec::Indicator { .. } | PenaltySpec::Sum { .. }) {
                    return Err(Error::arg("the first term of a sum penalty must be finite"));
                }
                finite.validate(p)?;
                set.validate(p)
            }
        }
    }

    /// True when h(β) < +∞ for every β.
    pub fn is_finite_everywhere(&self) -> bool {
        !matches!(self, PenaltySpec::Indicator { .. } | PenaltySpec::Sum { .. })
    }

    /// The constraint set, if any.
    pub fn domain_set(&self) -> Option<&ConvexSet> {
        match self {
            PenaltySpec::Indicator { set } | PenaltySpec::Sum { set, .. } => Some(set),
            _ => None,
        }
    }

    /// True when h is a norm on Rᵖ.
    pub fn is_norm(&self) -> bool {
        match self {
            PenaltySpec::ScaledL1 { lam } => *lam > 0.0,
            PenaltySpec::ScaledLqNorm { lam, q, .. } => *lam > 0.0 && *q == 1,
            _ => false,
        }
    }

    /// Weight w when h = w‖·‖₁ exactly.
    pub(crate) fn l1_weight(&self, n_obs: usize) -> Option<f64> {
        match self {
            PenaltySpec::ScaledL1 { lam } => Some((n_obs as f64).sqrt() * lam),
            PenaltySpec::ScaledLqNorm {
                lam,
                q: 1,
                norm: NamedNorm::L1,
            } => Some(*lam),
            _ => None,
        }
    }

    /// Per-coordinate form when h is separable with a box domain.
    pub(crate) fn separable(&self, n_obs: usize) -> Option<ScalarPenalty> {
        let mut s = ScalarPenalty::FREE;
        match self {
            PenaltySpec::Zero => {}
            PenaltySpec::ScaledL1 { .. }
            | PenaltySpec::ScaledLqNorm {
                q: 1,
                norm: NamedNorm::L1,
                ..
            } => s.l1 = self.l1_weight(n_obs)?,
            PenaltySpec::SquaredL2 { lam }
            | PenaltySpec::ScaledLqNorm {
                lam,
                q: 2,
                norm: NamedNorm::L2,
            } => s.sq = *lam,
            PenaltySpec::Indicator {
                set: ConvexSet::Box { lower, upper },
            } => {
                s.lo = *lower;
                s.hi = *upper;
            }
            PenaltySpec::Sum {
                finite,
                set: ConvexSet::Box { lower, upper },
            } => {
                s = finite.separable(n_obs)?;
                s.lo = *lower;
                s.hi = *upper;
            }
            _ => return None,
        }
        Some(s)
    }

    /// Radial finite penalties g(‖β‖₂).
    fn is_radial(&self) -> bool {
        matches!(
            self,
            PenaltySpec::Zero
                | PenaltySpec::SquaredL2 { .. }
                | PenaltySpec::ScaledLqNorm {
                    norm: NamedNorm::L2,
                    ..
                }
        )
    }
}

/// h(β), with +∞ outside the domain of indicator penalties.
///
/// `n_obs` is the number of observations; it enters through the √n factor
/// of [`PenaltySpec::ScaledL1`].
pub fn eval_penalty(pen: &PenaltySpec, beta: &[f64], n_obs: usize) -> Result<f64> {
    if let Some(ConvexSet::Singleton { point }) = pen.domain_set() {
        if point.len() != beta.len() {
            return Err(Error::dim("coefficient vector length", point.len(), beta.len()));
        }
    }
    Ok(eval_unchecked(pen, beta, n_obs))
}

pub(crate) fn eval_unchecked(pen: &PenaltySpec, beta: &[f64], n_obs: usize) -> f64 {
    match pen {
        PenaltySpec::Zero => 0.0,
        PenaltySpec::ScaledL1 { lam } => (n_obs as f64).sqrt() * lam * NamedNorm::L1.eval(beta),
        PenaltySpec::ScaledLqNorm { lam, q, norm } => lam * norm.eval(beta).powi(*q as i32),
        PenaltySpec::SquaredL2 { lam } => lam * beta.iter().map(|v| v * v).sum::<f64>(),
        PenaltySpec::Indicator { set } => {
            if set.contains(beta) {
                0.0
            } else {
                f64::INFINITY
            }
        }
        PenaltySpec::Sum { finite, set } => {
            if set.contains(beta) {
                eval_unchecked(finite, beta, n_obs)
            } else {
                f64::INFINITY
            }
        }
    }
}

/// argmin_b ½‖b − z‖² + step·h(b).
pub fn prox_penalty(pen: &PenaltySpec, z: &[f64], step: f64, n_obs: usize) -> Result<Vec<f64>> {
    if !(step > 0.0) {
        return Err(Error::arg(format!("prox step must be positive, got {step}")));
    }
    pen.validate(z.len())?;
    Ok(prox_unchecked(pen, z, step, n_obs))
}

pub(crate) fn prox_unchecked(pen: &PenaltySpec, z: &[f64], step: f64, n_obs: usize) -> Vec<f64> {
    if let Some(s) = pen.separable(n_obs) {
        return z.iter().map(|&v| s.prox(v, step)).collect();
    }
    match pen {
        PenaltySpec::Zero => z.to_vec(),
        PenaltySpec::ScaledL1 { .. } | PenaltySpec::SquaredL2 { .. } => {
            unreachable!("separable penalties handled above")
        }
        PenaltySpec::ScaledLqNorm { lam, q, norm } => prox_power_norm(*norm, *q, step * lam, z),
        PenaltySpec::Indicator { set } => set.project(z),
        PenaltySpec::Sum { finite, set } => match set {
            ConvexSet::Singleton { point } => point.clone(),
            ConvexSet::Ball { .. } if finite.is_radial() => {
                set.project(&prox_unchecked(finite, z, step, n_obs))
            }
            _ => dykstra_prox(finite, set, z, step, n_obs),
        },
    }
}

/// prox of c·N(·)^q. For q = 1 this is the prox of the norm itself; for
/// q ≥ 2 the prox equals prox_{τN} where τ = c·q·N(b)^{q−1} at the
/// solution b, found by bisection on τ.
fn prox_power_norm(norm: NamedNorm, q: u32, c: f64, z: &[f64]) -> Vec<f64> {
    if c == 0.0 {
        return z.to_vec();
    }
    if q == 1 {
        return norm.prox(z, c);
    }
    let gap = |tau: f64| {
        let b = norm.prox(z, tau);
        tau - c * q as f64 * norm.eval(&b).powi(q as i32 - 1)
    };
    let mut lo = 0.0;
    let mut hi = c * q as f64 * norm.eval(z).powi(q as i32 - 1);
    if hi == 0.0 {
        return z.to_vec();
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gap(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * hi {
            break;
        }
    }
    norm.prox(z, 0.5 * (lo + hi))
}

/// Dykstra-like splitting for prox_{step·(g + δ_K)} from the two
/// individual proximal maps.
fn dykstra_prox(
    finite: &PenaltySpec,
    set: &ConvexSet,
    z: &[f64],
    step: f64,
    n_obs: usize,
) -> Vec<f64> {
    let p = z.len();
    let mut x = z.to_vec();
    let mut pp = vec![0.0; p];
    let mut qq = vec![0.0; p];
    let scale = 1.0 + NamedNorm::L2.eval(z);
    for _ in 0..100_000 {
        let a: Vec<f64> = x.iter().zip(&pp).map(|(u, v)| u + v).collect();
        let y = prox_unchecked(finite, &a, step, n_obs);
        for j in 0..p {
            pp[j] = a[j] - y[j];
        }
        let b: Vec<f64> = y.iter().zip(&qq).map(|(u, v)| u + v).collect();
        let next = set.project(&b);
        for j in 0..p {
            qq[j] = b[j] - next[j];
        }
        let change = next
            .iter()
            .zip(&x)
            .map(|(u, v)| (u - v) * (u - v))
            .sum::<f64>()
            .sqrt();
        x = next;
        if change <= 1e-15 * scale {
            break;
        }
    }
    x
}

#[inline]
pub(crate) fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Euclidean projection onto {‖x‖₁ ≤ r} (sort-based).
fn project_l1_ball(z: &[f64], r: f64) -> Vec<f64> {
    if NamedNorm::L1.eval(z) <= r {
        return z.to_vec();
    }
    if r <= 0.0 {
        return vec![0.0; z.len()];
    }
    let mut mags: Vec<f64> = z.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, m) in mags.iter().enumerate() {
        cum += m;
        let t = (cum - r) / (k + 1) as f64;
        if *m > t {
            theta = t;
        } else {
            break;
        }
    }
    z.iter().map(|&v| soft_threshold(v, theta)).collect()
}
