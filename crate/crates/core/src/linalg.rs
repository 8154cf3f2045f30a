//! Small dense linear-algebra kernels.

use nalgebra::{DMatrix, DVector};

/// Largest eigenvalue of `XᵀX` (i.e. σ_max(X)²) by power iteration.
///
/// Stops when the relative change of the Rayleigh quotient drops below
/// `tol` or after `max_iter` iterations.
pub fn sigma_max_sq(x: &DMatrix<f64>, tol: f64, max_iter: usize) -> f64 {
    let p = x.ncols();
    if p == 0 || x.nrows() == 0 {
        return 0.0;
    }
    // deterministic, non-degenerate start
    let mut v = DVector::from_fn(p, |i, _| 1.0 + 0.01 * ((i * 7919) % 101) as f64);
    let nv = v.norm();
    v /= nv;
    let mut lambda = 0.0;
    for _ in 0..max_iter {
        let xv = x * &v;
        let w = x.tr_mul(&xv);
        let next = v.dot(&w);
        let nw = w.norm();
        if nw == 0.0 {
            return 0.0;
        }
        v = w / nw;
        if (next - lambda).abs() <= tol * next.abs() {
            lambda = next;
            break;
        }
        lambda = next;
    }
    // the Rayleigh quotient of the last iterate is a lower bound
    let xv = x * &v;
    lambda.max(xv.norm_squared())
}

/// Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations.
///
/// Only the upper triangle of `a` is read. Returned in ascending order.
pub fn jacobi_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    let mut m = a.clone();
    for i in 0..n {
        for j in 0..i {
            m[(i, j)] = m[(j, i)];
        }
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        let mut diag = 0.0;
        for i in 0..n {
            diag += m[(i, i)] * m[(i, i)];
            for j in (i + 1)..n {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        if off <= 1e-30 * diag.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Thin SVD `X = U Σ Vᵀ` truncated to the numerical rank.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub u: DMatrix<f64>,
    pub singular: DVector<f64>,
    pub v: DMatrix<f64>,
}

impl ThinSvd {
    pub fn new(x: &DMatrix<f64>) -> Self {
        let svd = x.clone().svd(true, true);
        let u = svd.u.expect("u requested");
        let vt = svd.v_t.expect("v_t requested");
        let s = svd.singular_values;
        let smax = s.iter().cloned().fold(0.0, f64::max);
        let cutoff = smax * (x.nrows().max(x.ncols()) as f64) * f64::EPSILON;
        let keep: Vec<usize> = (0..s.len()).filter(|&i| s[i] > cutoff).collect();
        let r = keep.len();
        let u_r = DMatrix::from_fn(x.nrows(), r, |i, k| u[(i, keep[k])]);
        let v_r = DMatrix::from_fn(x.ncols(), r, |j, k| vt[(keep[k], j)]);
        let s_r = DVector::from_fn(r, |k, _| s[keep[k]]);
        ThinSvd {
            u: u_r,
            singular: s_r,
            v: v_r,
        }
    }

    pub fn rank(&self) -> usize {
        self.singular.len()
    }
}
