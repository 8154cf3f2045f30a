//! Compatibility constant φ(T, c₀) and restricted eigenvalue κ(c₀, s).
//!
//! Both are infima over cones and are reported as upper estimates: the
//! value attained at a feasible point that is returned with the report.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::design::dot;
use crate::model::penalty::soft_threshold;
use crate::model::DesignMatrix;
use crate::par::{map_indexed, Execution};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeConstantReport {
    pub value: f64,
    pub minimizer_u: Vec<f64>,
    pub c0: f64,
    /// Always "upper_estimate".
    pub certificate_side: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeOptions {
    pub restarts: usize,
    /// Largest number of sign patterns enumerated for φ.
    pub sign_budget: usize,
    pub max_iter: usize,
    pub seed: u64,
    pub exec: Execution,
}

impl Default for ConeOptions {
    fn default() -> Self {
        ConeOptions {
            restarts: 4,
            sign_budget: 1 << 12,
            max_iter: 20_000,
            seed: 0,
            exec: Execution::Parallel,
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// √|T|‖Xu‖ / (√n(‖u_T‖₁ − ‖u_{T^c}‖₁/c₀)), or None outside the cone.
pub fn compatibility_ratio(x: &DesignMatrix, t: &[usize], c0: f64, u: &[f64]) -> Option<f64> {
    let in_t = membership(x.p(), t);
    let (mut l1_t, mut l1_c) = (0.0, 0.0);
    for (j, v) in u.iter().enumerate() {
        if in_t[j] {
            l1_t += v.abs();
        } else {
            l1_c += v.abs();
        }
    }
    let denom = l1_t - l1_c / c0;
    if !(l1_c < c0 * l1_t) || denom <= 0.0 {
        return None;
    }
    let xu = x.apply(u);
    Some((t.len() as f64).sqrt() * norm(&xu) / ((x.n() as f64).sqrt() * denom))
}

/// ‖Xα‖/(√n‖α‖), or None when α is outside the cone
/// Σ_{j>s} α*_j ≤ c₀√s‖α‖.
pub fn re_ratio(x: &DesignMatrix, s: usize, c0: f64, alpha: &[f64]) -> Option<f64> {
    let na = norm(alpha);
    if na == 0.0 {
        return None;
    }
    let mut mags: Vec<f64> = alpha.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let tail: f64 = mags[s.min(mags.len())..].iter().sum();
    if tail > c0 * (s as f64).sqrt() * na * (1.0 + 1e-12) {
        return None;
    }
    let xa = x.apply(alpha);
    Some(norm(&xa) / ((x.n() as f64).sqrt() * na))
}

fn membership(p: usize, t: &[usize]) -> Vec<bool> {
    let mut m = vec![false; p];
    for &j in t {
        m[j] = true;
    }
    m
}

/// Projection onto {σ∘u_T ≥ 0, σ'u_T − ‖u_{T^c}‖₁/c₀ ≥ 1}.
fn project_compat(z: &[f64], in_t: &[bool], sign: &[f64], c0: f64) -> Vec<f64> {
    // a = σ∘u_T, b = u_{T^c}; with multiplier θ: a = max(a₀ + θ, 0),
    // b = S(b₀, θ/c₀); θ solves 1'a − ‖b‖₁/c₀ = 1
    let lhs = |theta: f64| -> f64 {
        let mut acc = 0.0;
        for j in 0..z.len() {
            if in_t[j] {
                acc += (sign[j] * z[j] + theta).max(0.0);
            } else {
                acc -= soft_threshold(z[j], theta / c0).abs() / c0;
            }
        }
        acc
    };
    let theta = if lhs(0.0) >= 1.0 {
        0.0
    } else {
        let mut hi = 1.0;
        while lhs(hi) < 1.0 {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if lhs(mid) < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-16 * hi {
                break;
            }
        }
        hi
    };
    (0..z.len())
        .map(|j| {
            if in_t[j] {
                sign[j] * (sign[j] * z[j] + theta).max(0.0)
            } else {
                soft_threshold(z[j], theta / c0)
            }
        })
        .collect()
}

/// Accelerated projected gradient on ‖Xu‖² over the sign-constrained
/// slice of the cone.
fn solve_pattern(
    x: &DesignMatrix,
    in_t: &[bool],
    sign: &[f64],
    c0: f64,
    start: &[f64],
    max_iter: usize,
) -> Vec<f64> {
    let p = x.p();
    let l = 2.0 * x.sigma_max_sq().max(1e-300) * (1.0 + 1e-9);
    let mut u = project_compat(start, in_t, sign, c0);
    let mut y = u.clone();
    let mut tk = 1.0_f64;
    for _ in 0..max_iter {
        let xy = x.apply(&y);
        let g = x.apply_t(&xy);
        let z: Vec<f64> = (0..p).map(|j| y[j] - 2.0 * g[j] / l).collect();
        let next = project_compat(&z, in_t, sign, c0);
        let restart = (0..p).map(|j| (y[j] - next[j]) * (next[j] - u[j])).sum::<f64>() > 0.0;
        let step: f64 = (0..p).map(|j| (next[j] - u[j]).powi(2)).sum::<f64>().sqrt();
        if restart {
            tk = 1.0;
            y = next.clone();
        } else {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * tk * tk).sqrt());
            let w = (tk - 1.0) / t_next;
            y = (0..p).map(|j| next[j] + w * (next[j] - u[j])).collect();
            tk = t_next;
        }
        u = next;
        if step <= 1e-14 * (1.0 + norm(&u)) {
            break;
        }
    }
    u
}

/// Upper estimate of φ(T, c₀) by minimizing over every sign pattern of
/// u_T (or a random subset of `sign_budget` patterns when there are more).
pub fn compatibility_constant(
    x: &DesignMatrix,
    t: &[usize],
    c0: f64,
    restarts: usize,
) -> Result<ConeConstantReport> {
    compatibility_constant_with(
        x,
        t,
        c0,
        &ConeOptions {
            restarts,
            ..ConeOptions::default()
        },
    )
}

pub fn compatibility_constant_with(
    x: &DesignMatrix,
    t: &[usize],
    c0: f64,
    opts: &ConeOptions,
) -> Result<ConeConstantReport> {
    let p = x.p();
    if t.is_empty() {
        return Err(Error::arg("support T must be nonempty"));
    }
    if let Some(&j) = t.iter().find(|&&j| j >= p) {
        return Err(Error::arg(format!("index {j} outside [0, {p})")));
    }
    let mut sorted = t.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != t.len() {
        return Err(Error::arg("support T has repeated indices"));
    }
    if !(c0 >= 1.0) {
        return Err(Error::arg(format!("c0 must be >= 1, got {c0}")));
    }
    let k = t.len();
    let in_t = membership(p, t);
    let mut flags = Vec::new();
    // u and −u give the same ratio, so the first sign is fixed to +
    let half_patterns: u128 = if k - 1 >= 127 { u128::MAX } else { 1u128 << (k - 1) };
    let patterns: Vec<u128> = if half_patterns <= opts.sign_budget as u128 {
        (0..half_patterns).collect()
    } else {
        flags.push("sampled_signs".to_string());
        let mut r = rng::rng_from_seed(rng::replication_seed(opts.seed, u64::MAX));
        (0..opts.sign_budget)
            .map(|_| {
                use rand::Rng as _;
                r.random::<u128>() & (half_patterns - 1)
            })
            .collect()
    };
    let restarts = opts.restarts.max(1);
    let tasks = patterns.len() * restarts;
    let results = map_indexed(opts.exec, tasks, |task| {
        let bits = patterns[task / restarts];
        let rs = task % restarts;
        let mut sign = vec![0.0; p];
        for (pos, &j) in t.iter().enumerate() {
            let neg = pos > 0 && (bits >> (pos - 1)) & 1 == 1;
            sign[j] = if neg { -1.0 } else { 1.0 };
        }
        let start: Vec<f64> = if rs == 0 {
            (0..p).map(|j| sign[j] / k as f64).collect()
        } else {
            let mut r = rng::replication_rng(opts.seed, task as u64);
            rng::gaussian_vec(&mut r, p, 1.0)
        };
        let u = solve_pattern(x, &in_t, &sign, c0, &start, opts.max_iter);
        let v = compatibility_ratio(x, t, c0, &u).unwrap_or(f64::INFINITY);
        (v, u)
    });
    let (value, u) = results
        .into_iter()
        .reduce(|a, b| if b.0 < a.0 { b } else { a })
        .expect("at least one task");
    Ok(ConeConstantReport {
        value,
        minimizer_u: u,
        c0,
        certificate_side: "upper_estimate".into(),
        flags,
    })
}

/// Shrinks the tail (entries outside the s largest) by soft-thresholding
/// until Σ_{j>s} α*_j ≤ c₀√s‖α‖, then rescales to the unit sphere.
fn into_re_cone(alpha: &[f64], s: usize, c0: f64) -> Vec<f64> {
    let p = alpha.len();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| alpha[b].abs().total_cmp(&alpha[a].abs()).then(a.cmp(&b)));
    let head = &order[..s.min(p)];
    let tail = &order[s.min(p)..];
    let head_sq: f64 = head.iter().map(|&j| alpha[j] * alpha[j]).sum();
    let excess = |tau: f64| -> f64 {
        let mut l1 = 0.0;
        let mut sq = head_sq;
        for &j in tail {
            let v = soft_threshold(alpha[j], tau);
            l1 += v.abs();
            sq += v * v;
        }
        l1 - c0 * (s as f64).sqrt() * sq.sqrt()
    };
    let mut out = alpha.to_vec();
    if excess(0.0) > 0.0 {
        let mut lo = 0.0;
        let mut hi = tail.iter().fold(0.0_f64, |m, &j| m.max(alpha[j].abs()));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if excess(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        for &j in tail {
            out[j] = soft_threshold(alpha[j], hi);
        }
    }
    let nrm = norm(&out);
    if nrm > 0.0 {
        out.iter_mut().for_each(|v| *v /= nrm);
    }
    out
}

/// Projected gradient on the sphere for ‖Xα‖², kept inside the cone.
fn descend_re(x: &DesignMatrix, s: usize, c0: f64, start: &[f64], max_iter: usize) -> Vec<f64> {
    let p = x.p();
    let step = 1.0 / (2.0 * x.sigma_max_sq().max(1e-300));
    let mut a = into_re_cone(start, s, c0);
    let mut xa = x.apply(&a);
    let mut val = dot(&xa, &xa);
    for _ in 0..max_iter {
        let g = x.apply_t(&xa);
        let z: Vec<f64> = (0..p).map(|j| a[j] - 2.0 * step * (g[j] - val * a[j])).collect();
        let cand = into_re_cone(&z, s, c0);
        let cxa = x.apply(&cand);
        let cval = dot(&cxa, &cxa);
        if !(cval < val - 1e-15 * val.max(1e-300)) {
            if cval < val {
                a = cand;
            }
            break;
        }
        a = cand;
        xa = cxa;
        val = cval;
    }
    a
}

/// Upper estimate of κ(c₀, s) by multi-start descent. Starts: e_j for the
/// `restarts` columns of smallest norm, `restarts` Gaussian vectors and,
/// when X has a nontrivial kernel, `restarts` random kernel vectors.
pub fn re_constant(x: &DesignMatrix, s: usize, c0: f64, restarts: usize) -> Result<ConeConstantReport> {
    re_constant_with(
        x,
        s,
        c0,
        &ConeOptions {
            restarts,
            max_iter: 2000,
            ..ConeOptions::default()
        },
    )
}

pub fn re_constant_with(
    x: &DesignMatrix,
    s: usize,
    c0: f64,
    opts: &ConeOptions,
) -> Result<ConeConstantReport> {
    let p = x.p();
    if s == 0 || s > p {
        return Err(Error::arg(format!("sparsity must satisfy 1 <= s <= p = {p}, got {s}")));
    }
    if !(c0 > 0.0) {
        return Err(Error::arg(format!("c0 must be positive, got {c0}")));
    }
    let svd = x.svd();
    let restarts = opts.restarts.max(1);
    let mut by_norm: Vec<usize> = (0..p).collect();
    by_norm.sort_by(|&a, &b| x.col_sq_norm(a).total_cmp(&x.col_sq_norm(b)).then(a.cmp(&b)));
    let canonical = &by_norm[..restarts.min(p)];
    let kernel_starts = if svd.rank() < p { restarts } else { 0 };
    let tasks = canonical.len() + restarts + kernel_starts;
    let results = map_indexed(opts.exec, tasks, |task| {
        let start: Vec<f64> = if task < canonical.len() {
            let mut e = vec![0.0; p];
            e[canonical[task]] = 1.0;
            e
        } else {
            let mut r = rng::replication_rng(opts.seed, task as u64);
            let mut z = rng::gaussian_vec(&mut r, p, 1.0);
            if task >= canonical.len() + restarts {
                // remove the row-space component
                for i in 0..svd.rank() {
                    let vi = svd.v.column(i);
                    let w: f64 = vi.iter().zip(&z).map(|(a, b)| a * b).sum();
                    for j in 0..p {
                        z[j] -= w * vi[j];
                    }
                }
            }
            z
        };
        let a = descend_re(x, s, c0, &start, opts.max_iter);
        let v = re_ratio(x, s, c0, &a).unwrap_or(f64::INFINITY);
        (v, a)
    });
    let (value, u) = results
        .into_iter()
        .reduce(|a, b| if b.0 < a.0 { b } else { a })
        .expect("at least one start");
    Ok(ConeConstantReport {
        value,
        minimizer_u: u,
        c0,
        certificate_side: "upper_estimate".into(),
        flags: Vec::new(),
    })
}
