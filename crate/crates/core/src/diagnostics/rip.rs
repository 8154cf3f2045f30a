//! Restricted isometry constant δ_s of X/√n.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::jacobi_eigenvalues;
use crate::model::DesignMatrix;
use crate::par::{map_indexed, Execution};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RipMethod {
    Exhaustive,
    /// Random supports only; δ_s is then a lower estimate.
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RipReport {
    pub s: usize,
    pub delta_s: f64,
    pub worst_support: Vec<usize>,
    pub method: RipMethod,
    pub supports_inspected: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RipOptions {
    pub budget: u64,
    pub seed: u64,
    pub exec: Execution,
}

impl Default for RipOptions {
    fn default() -> Self {
        RipOptions {
            budget: 1_000_000,
            seed: 0,
            exec: Execution::Parallel,
        }
    }
}

/// C(p, s), saturating.
pub fn binomial(p: usize, s: usize) -> u128 {
    if s > p {
        return 0;
    }
    let s = s.min(p - s);
    let mut acc: u128 = 1;
    for i in 0..s {
        acc = match acc.checked_mul((p - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// (λ_min, λ_max) of a small symmetric matrix given by its upper triangle.
fn extreme_eigenvalues(g: &DMatrix<f64>) -> (f64, f64) {
    match g.nrows() {
        1 => (g[(0, 0)], g[(0, 0)]),
        2 => {
            let (a, b, d) = (g[(0, 0)], g[(0, 1)], g[(1, 1)]);
            let m = 0.5 * (a + d);
            let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
            (m - r, m + r)
        }
        3 => {
            let (a11, a12, a13) = (g[(0, 0)], g[(0, 1)], g[(0, 2)]);
            let (a22, a23, a33) = (g[(1, 1)], g[(1, 2)], g[(2, 2)]);
            let p1 = a12 * a12 + a13 * a13 + a23 * a23;
            if p1 == 0.0 {
                let lo = a11.min(a22).min(a33);
                let hi = a11.max(a22).max(a33);
                return (lo, hi);
            }
            let q = (a11 + a22 + a33) / 3.0;
            let p2 = (a11 - q).powi(2) + (a22 - q).powi(2) + (a33 - q).powi(2) + 2.0 * p1;
            let p = (p2 / 6.0).sqrt();
            let (b11, b22, b33) = ((a11 - q) / p, (a22 - q) / p, (a33 - q) / p);
            let (b12, b13, b23) = (a12 / p, a13 / p, a23 / p);
            let det = b11 * (b22 * b33 - b23 * b23) - b12 * (b12 * b33 - b23 * b13)
                + b13 * (b12 * b23 - b22 * b13);
            let r = (0.5 * det).clamp(-1.0, 1.0);
            let phi = r.acos() / 3.0;
            let hi = q + 2.0 * p * phi.cos();
            let lo = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
            (lo, hi)
        }
        _ => {
            let ev = jacobi_eigenvalues(g);
            (ev[0], ev[ev.len() - 1])
        }
    }
}

/// max(1 − σ_min, σ_max − 1) of X_S/√n, from the Gram matrix X'X/n.
pub fn support_delta(gram: &DMatrix<f64>, support: &[usize]) -> f64 {
    let k = support.len();
    let sub = DMatrix::from_fn(k, k, |i, j| gram[(support[i], support[j])]);
    let (lo, hi) = extreme_eigenvalues(&sub);
    let smin = lo.max(0.0).sqrt();
    let smax = hi.max(0.0).sqrt();
    (1.0 - smin).max(smax - 1.0)
}

/// X'X/n
pub fn normalized_gram(x: &DesignMatrix) -> DMatrix<f64> {
    let m = x.matrix();
    m.tr_mul(m) / x.n() as f64
}

/// Lexicographic combination of the given rank.
pub(crate) fn unrank(mut rank: u128, p: usize, s: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(s);
    let mut next = 0;
    for k in 0..s {
        let mut j = next;
        loop {
            let count = binomial(p - j - 1, s - k - 1);
            if rank < count {
                break;
            }
            rank -= count;
            j += 1;
        }
        out.push(j);
        next = j + 1;
    }
    out
}

pub(crate) fn advance(comb: &mut [usize], p: usize) -> bool {
    let s = comb.len();
    let mut i = s;
    while i > 0 {
        i -= 1;
        if comb[i] < p - s + i {
            comb[i] += 1;
            for k in i + 1..s {
                comb[k] = comb[k - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Keeps the larger δ; ties go to the earlier candidate.
fn better(a: (f64, Vec<usize>), b: (f64, Vec<usize>)) -> (f64, Vec<usize>) {
    if b.0 > a.0 {
        b
    } else {
        a
    }
}

pub fn rip_delta(x: &DesignMatrix, s: usize, budget: u64) -> Result<RipReport> {
    rip_delta_with(
        x,
        s,
        &RipOptions {
            budget,
            ..RipOptions::default()
        },
    )
}

/// δ_s by enumerating every support of size s when C(p, s) ≤ budget,
/// otherwise over `budget` uniformly random supports.
pub fn rip_delta_with(x: &DesignMatrix, s: usize, opts: &RipOptions) -> Result<RipReport> {
    let p = x.p();
    if s == 0 || s > p {
        return Err(Error::arg(format!("sparsity must satisfy 1 <= s <= p = {p}, got {s}")));
    }
    if opts.budget == 0 {
        return Err(Error::arg("RIP budget must be positive"));
    }
    let gram = normalized_gram(x);
    let total = binomial(p, s);
    let chunks = 256usize;
    if total <= opts.budget as u128 {
        let parts = map_indexed(opts.exec, chunks, |c| {
            let start = total * c as u128 / chunks as u128;
            let end = total * (c as u128 + 1) / chunks as u128;
            if start >= end {
                return (f64::NEG_INFINITY, Vec::new());
            }
            let mut comb = unrank(start, p, s);
            let mut best = (support_delta(&gram, &comb), comb.clone());
            for _ in start + 1..end {
                advance(&mut comb, p);
                let d = support_delta(&gram, &comb);
                if d > best.0 {
                    best = (d, comb.clone());
                }
            }
            best
        });
        let best = parts
            .into_iter()
            .reduce(better)
            .expect("at least one chunk");
        return Ok(RipReport {
            s,
            delta_s: best.0,
            worst_support: best.1,
            method: RipMethod::Exhaustive,
            supports_inspected: total as u64,
        });
    }
    let budget = opts.budget;
    let parts = map_indexed(opts.exec, chunks, |c| {
        let start = budget * c as u64 / chunks as u64;
        let end = budget * (c as u64 + 1) / chunks as u64;
        let mut r = rng::replication_rng(opts.seed, c as u64);
        let mut best = (f64::NEG_INFINITY, Vec::new());
        for _ in start..end {
            let mut supp = sample(&mut r, p, s).into_vec();
            supp.sort_unstable();
            let d = support_delta(&gram, &supp);
            if d > best.0 {
                best = (d, supp);
            }
        }
        best
    });
    let best = parts
        .into_iter()
        .reduce(better)
        .expect("at least one chunk");
    Ok(RipReport {
        s,
        delta_s: best.0,
        worst_support: best.1,
        method: RipMethod::Sampled,
        supports_inspected: budget,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_design(n: usize, p: usize, seed: u64) -> DesignMatrix {
        let mut r = rng::rng_from_seed(seed);
        DesignMatrix::from_row_slice(n, p, &rng::gaussian_vec(&mut r, n * p, 1.0)).unwrap()
    }

    #[test]
    fn small_eigen_forms_match_jacobi() {
        let x = random_design(6, 4, 1);
        let g = normalized_gram(&x);
        for supp in [vec![0, 2], vec![1, 2, 3], vec![0, 1, 2, 3]] {
            let k = supp.len();
            let sub = DMatrix::from_fn(k, k, |i, j| g[(supp[i], supp[j])]);
            let (lo, hi) = extreme_eigenvalues(&sub);
            let ev = jacobi_eigenvalues(&sub);
            assert!((lo - ev[0]).abs() < 1e-12 && (hi - ev[k - 1]).abs() < 1e-12);
        }
    }

    #[test]
    fn unrank_matches_iteration() {
        let (p, s) = (7, 3);
        let mut comb = unrank(0, p, s);
        for r in 1..binomial(p, s) {
            assert!(advance(&mut comb, p));
            assert_eq!(comb, unrank(r, p, s));
        }
        assert!(!advance(&mut comb, p));
    }

    #[test]
    fn orthonormal_design_is_isometric() {
        let n = 4;
        let x = DesignMatrix::scaled_identity(n);
        for s in 1..=n {
            assert!(rip_delta(&x, s, 1000).unwrap().delta_s.abs() < 1e-15);
        }
    }

    #[test]
    fn two_correlated_columns() {
        // unit columns of X/√n at inner product 0.5
        let n = 3.0_f64;
        let c = 0.5_f64;
        let x = DesignMatrix::from_row_slice(
            3,
            2,
            &[n.sqrt(), n.sqrt() * c, 0.0, n.sqrt() * (1.0 - c * c).sqrt(), 0.0, 0.0],
        )
        .unwrap();
        let r = rip_delta(&x, 2, 10).unwrap();
        assert!((r.delta_s - (1.0 - 0.5f64.sqrt())).abs() < 1e-12, "{}", r.delta_s);
    }

    #[test]
    fn sampled_with_full_budget_equals_exhaustive() {
        let x = random_design(8, 10, 3);
        let ex = rip_delta(&x, 2, 45).unwrap();
        assert_eq!(ex.method, RipMethod::Exhaustive);
        let sampled = rip_delta_with(
            &x,
            2,
            &RipOptions {
                budget: 20_000,
                ..RipOptions::default()
            },
        )
        .unwrap();
        // budget above C(10,2) still enumerates
        assert_eq!(sampled.method, RipMethod::Exhaustive);
        let forced = rip_delta(&x, 2, 44).unwrap();
        assert_eq!(forced.method, RipMethod::Sampled);
        assert!(forced.delta_s <= ex.delta_s);
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let x = random_design(10, 12, 4);
        let a = rip_delta_with(&x, 3, &RipOptions { exec: Execution::Sequential, ..Default::default() }).unwrap();
        let b = rip_delta_with(&x, 3, &RipOptions { exec: Execution::Parallel, ..Default::default() }).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn s_above_p_rejected() {
        assert!(rip_delta(&DesignMatrix::identity(2), 3, 10).is_err());
    }
}
