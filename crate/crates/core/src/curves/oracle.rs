//! Slow independent evaluator of M(t) for cross-checking the dual search.
//!
//! Accelerated projected (sub)gradient ascent over d = β − β* on the
//! ellipsoidal cylinder {‖Xd‖ ≤ t}, with the penalty replaced by its Moreau
//! envelope and the smoothing parameter driven to zero in stages. The
//! projection solves a one-dimensional secular equation in the right
//! singular basis of X. The value reported is the exact objective at a
//! feasible point, so it is a lower bound on M(t).

use crate::error::{Error, Result};
use crate::linalg::ThinSvd;
use crate::model::design::dot;
use crate::model::penalty::{eval_unchecked, prox_unchecked};
use crate::model::ProblemInstance;

#[derive(Debug, Clone)]
pub struct OracleConfig {
    pub smoothing: Vec<f64>,
    pub iterations_per_stage: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            smoothing: (1..=9).map(|k| 10f64.powi(-k)).collect(),
            iterations_per_stage: 20_000,
        }
    }
}

/// Projection onto {d : ‖Xd‖ ≤ t}.
pub fn project_cylinder(svd: &ThinSvd, t: f64, z: &[f64]) -> Vec<f64> {
    let k = svd.rank();
    let p = z.len();
    let w: Vec<f64> = (0..k)
        .map(|i| svd.v.column(i).iter().zip(z).map(|(a, b)| a * b).sum())
        .collect();
    let s2: Vec<f64> = (0..k).map(|i| svd.singular[i] * svd.singular[i]).collect();
    let radius_sq = |nu: f64| -> f64 {
        (0..k)
            .map(|i| {
                let a = w[i] / (1.0 + nu * s2[i]);
                s2[i] * a * a
            })
            .sum()
    };
    if radius_sq(0.0) <= t * t {
        return z.to_vec();
    }
    let shrink: Vec<f64> = if t == 0.0 {
        vec![0.0; k]
    } else {
        let mut hi = 1.0;
        while radius_sq(hi) > t * t {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            if radius_sq(mid) > t * t {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-16 * hi {
                break;
            }
        }
        (0..k).map(|i| 1.0 / (1.0 + hi * s2[i])).collect()
    };
    let mut out = z.to_vec();
    for i in 0..k {
        let vi = svd.v.column(i);
        let delta = w[i] * (shrink[i] - 1.0);
        for j in 0..p {
            out[j] += delta * vi[j];
        }
    }
    out
}

/// Lower bound on M(t) from a feasible point, and that point β.
pub fn projected_ascent_m(
    inst: &ProblemInstance,
    eps: &[f64],
    t: f64,
    cfg: &OracleConfig,
) -> Result<(f64, Vec<f64>)> {
    inst.validate()?;
    if eps.len() != inst.n() {
        return Err(Error::dim("noise vector length", inst.n(), eps.len()));
    }
    if !(t >= 0.0) {
        return Err(Error::arg("t must be >= 0"));
    }
    let n = inst.n();
    let pen = &inst.penalty;
    let bstar = inst.beta_star.as_slice();
    if !eval_unchecked(pen, bstar, n).is_finite() {
        return Err(Error::Capability("the ascent oracle needs h(β*) < +∞".into()));
    }
    let svd = ThinSvd::new(inst.design.matrix());
    let xt_eps = inst.design.apply_t(eps);
    let p = inst.p();
    let grad = |d: &[f64], nu: f64| -> Vec<f64> {
        let b: Vec<f64> = (0..p).map(|j| bstar[j] + d[j]).collect();
        let pb = prox_unchecked(pen, &b, nu, n);
        (0..p).map(|j| xt_eps[j] - (b[j] - pb[j]) / nu).collect()
    };
    let mut d = vec![0.0; p];
    for &nu in &cfg.smoothing {
        let mut y = d.clone();
        let mut tk = 1.0_f64;
        for _ in 0..cfg.iterations_per_stage {
            let g = grad(&y, nu);
            let z: Vec<f64> = (0..p).map(|j| y[j] + nu * g[j]).collect();
            let next = project_cylinder(&svd, t, &z);
            let step: f64 = (0..p).map(|j| (next[j] - d[j]).powi(2)).sum::<f64>().sqrt();
            let restart = (0..p).map(|j| (z[j] - next[j]) * (next[j] - d[j])).sum::<f64>() < 0.0
                && (0..p).map(|j| (y[j] - next[j]) * (next[j] - d[j])).sum::<f64>() > 0.0;
            if restart {
                tk = 1.0;
                y = next.clone();
            } else {
                let t_next = 0.5 * (1.0 + (1.0 + 4.0 * tk * tk).sqrt());
                let wgt = (tk - 1.0) / t_next;
                y = (0..p).map(|j| next[j] + wgt * (next[j] - d[j])).collect();
                tk = t_next;
            }
            d = next;
            if step <= 1e-15 * (1.0 + dot(&d, &d).sqrt()) {
                break;
            }
        }
    }
    // move into dom h, then back inside the constraint along the segment to β*
    let nu_last = *cfg.smoothing.last().unwrap_or(&1e-9);
    let b: Vec<f64> = (0..p).map(|j| bstar[j] + d[j]).collect();
    let b = prox_unchecked(pen, &b, nu_last, n);
    let dd: Vec<f64> = (0..p).map(|j| b[j] - bstar[j]).collect();
    let xd = inst.design.apply(&dd);
    let r = dot(&xd, &xd).sqrt();
    let scale = if r > t { t / r } else { 1.0 };
    let beta: Vec<f64> = (0..p).map(|j| bstar[j] + scale * dd[j]).collect();
    let value = scale * dot(eps, &xd) - eval_unchecked(pen, &beta, n);
    Ok((value, beta))
}
