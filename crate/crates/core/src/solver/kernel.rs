//! Minimizes Q(β) = a‖Xβ‖² − 2c'β + 2h(β) for a > 0.
//!
//! `solve` uses a = 1, c = X'y. The inner problems of the curve evaluators
//! use a = μ and c = μX'Xβ* + X'ε, which keeps them well scaled as μ → 0.

use nalgebra::{DMatrix, DVector};

use super::Method;
use crate::error::{Error, Result};
use crate::linalg::ThinSvd;
use crate::model::design::dot;
use crate::model::penalty::{eval_unchecked, prox_unchecked, ScalarPenalty};
use crate::model::{DesignMatrix, PenaltySpec};

/// Sweeps of coordinate descent between Newton steps.
const NEWTON_EVERY: usize = 16;

pub(crate) struct Kernel<'a> {
    pub design: &'a DesignMatrix,
    pub pen: &'a PenaltySpec,
    pub a: f64,
    pub c: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct KernelOutput {
    pub beta: Vec<f64>,
    pub xb: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Option<Vec<f64>>,
}

/// Method picked by `Method::Auto`.
pub(crate) fn resolve(pen: &PenaltySpec, n_obs: usize) -> Method {
    match pen {
        PenaltySpec::Zero | PenaltySpec::SquaredL2 { .. } => Method::ClosedForm,
        PenaltySpec::ScaledL1 { lam } if *lam == 0.0 => Method::ClosedForm,
        PenaltySpec::Indicator { .. } if pen.separable(n_obs).is_none() => {
            Method::ProjectedGradient
        }
        _ if pen.separable(n_obs).is_some() => Method::CoordinateDescent,
        _ => Method::Fista,
    }
}

impl Kernel<'_> {
    fn n_obs(&self) -> usize {
        self.design.n()
    }

    pub fn objective(&self, beta: &[f64], xb: &[f64]) -> f64 {
        self.a * dot(xb, xb) - 2.0 * dot(&self.c, beta)
            + 2.0 * eval_unchecked(self.pen, beta, self.n_obs())
    }

    fn gradient(&self, xb: &[f64]) -> Vec<f64> {
        let xtxb = self.design.apply_t(xb);
        xtxb.iter()
            .zip(&self.c)
            .map(|(g, c)| 2.0 * self.a * g - 2.0 * c)
            .collect()
    }

    fn lipschitz(&self) -> f64 {
        let l = 2.0 * self.a * self.design.sigma_max_sq() * (1.0 + 1e-9);
        if l > 0.0 {
            l
        } else {
            1.0
        }
    }

    /// Optimality residual at β. Separable penalties: max over coordinates
    /// of the distance from 0 to the coordinate subdifferential. Otherwise
    /// the Euclidean norm of the prox-gradient mapping.
    pub fn residual(&self, beta: &[f64], xb: &[f64]) -> f64 {
        let n = self.n_obs();
        if !eval_unchecked(self.pen, beta, n).is_finite() {
            return f64::INFINITY;
        }
        let grad = self.gradient(xb);
        match self.pen.separable(n) {
            Some(s) => beta
                .iter()
                .zip(&grad)
                .map(|(&b, &g)| coordinate_violation(&s, b, g))
                .fold(0.0, f64::max),
            None => {
                let l = self.lipschitz();
                prox_map_norm(self, beta, &grad, l)
            }
        }
    }

    pub fn run(
        &self,
        method: Method,
        start: Option<&[f64]>,
        tol: f64,
        max_iter: usize,
        record_trace: bool,
    ) -> Result<KernelOutput> {
        let p = self.design.p();
        if self.c.len() != p {
            return Err(Error::dim("linear term length", p, self.c.len()));
        }
        if let Some(s) = start {
            if s.len() != p {
                return Err(Error::dim("start vector length", p, s.len()));
            }
        }
        let method = match method {
            Method::Auto => resolve(self.pen, self.n_obs()),
            m => m,
        };
        match method {
            Method::ClosedForm => self.closed_form(tol, record_trace),
            Method::CoordinateDescent => {
                let s = self.pen.separable(self.n_obs()).ok_or_else(|| {
                    Error::Capability("coordinate descent needs a separable penalty".into())
                })?;
                Ok(self.coordinate_descent(&s, start, tol, max_iter, record_trace))
            }
            Method::ProjectedGradient => Ok(self.prox_gradient(false, start, tol, max_iter, record_trace)),
            Method::Fista => Ok(self.prox_gradient(true, start, tol, max_iter, record_trace)),
            Method::Auto => unreachable!(),
        }
    }

    fn closed_form(&self, tol: f64, record_trace: bool) -> Result<KernelOutput> {
        let rho = match self.pen {
            PenaltySpec::Zero => 0.0,
            PenaltySpec::ScaledL1 { lam } if *lam == 0.0 => 0.0,
            PenaltySpec::SquaredL2 { lam } => *lam,
            _ => {
                return Err(Error::Capability(
                    "closed form is available for zero and squared-l2 penalties only".into(),
                ))
            }
        };
        let svd = self.design.svd();
        let a = self.a;
        // solves (aX'X + 2ρI)β = rhs on the row space, plus rhs/(2ρ) off it
        let apply_inverse = |rhs: &[f64]| -> Vec<f64> {
            let k = svd.rank();
            let p = rhs.len();
            let mut out = vec![0.0; p];
            let mut proj = vec![0.0; p];
            for i in 0..k {
                let vi = svd.v.column(i);
                let w: f64 = vi.iter().zip(rhs).map(|(x, y)| x * y).sum();
                let sg = svd.singular[i];
                let coef = w / (a * sg * sg + 2.0 * rho);
                for j in 0..p {
                    out[j] += coef * vi[j];
                    proj[j] += w * vi[j];
                }
            }
            if rho > 0.0 {
                for j in 0..p {
                    out[j] += (rhs[j] - proj[j]) / (2.0 * rho);
                }
            }
            out
        };
        let mut beta = apply_inverse(&self.c);
        let mut xb = self.design.apply(&beta);
        let mut residual = self.residual(&beta, &xb);
        let mut refinements = 0;
        // iterative refinement
        while residual > tol && refinements < 3 {
            let xtxb = self.design.apply_t(&xb);
            let r: Vec<f64> = (0..beta.len())
                .map(|j| self.c[j] - a * xtxb[j] - 2.0 * rho * beta[j])
                .collect();
            let delta = apply_inverse(&r);
            let cand: Vec<f64> = beta.iter().zip(&delta).map(|(b, d)| b + d).collect();
            let cand_xb = self.design.apply(&cand);
            let cand_res = self.residual(&cand, &cand_xb);
            refinements += 1;
            if cand_res < residual {
                beta = cand;
                xb = cand_xb;
                residual = cand_res;
            } else {
                break;
            }
        }
        let trace = record_trace.then(|| vec![self.objective(&beta, &xb)]);
        Ok(KernelOutput {
            beta,
            xb,
            residual,
            iterations: 1 + refinements,
            // the linear solve is exact up to rounding
            converged: true,
            trace,
        })
    }

    fn coordinate_descent(
        &self,
        s: &ScalarPenalty,
        start: Option<&[f64]>,
        tol: f64,
        max_iter: usize,
        record_trace: bool,
    ) -> KernelOutput {
        let p = self.design.p();
        let mut beta: Vec<f64> = match start {
            Some(b) => b.iter().map(|v| v.clamp(s.lo, s.hi)).collect(),
            None if s.l1 > 0.0 && s.lo == f64::NEG_INFINITY && s.hi == f64::INFINITY => {
                self.l1_homotopy(s)
            }
            None => vec![s.argmin(); p],
        };
        let mut xb = self.design.apply(&beta);
        let mut trace = record_trace.then(|| vec![self.objective(&beta, &xb)]);
        let mut iterations = 0;
        let mut full = true;
        let mut active: Vec<usize> = (0..p).collect();
        let mut best: Option<(f64, Vec<f64>)> = None;
        while iterations < max_iter {
            let mut max_step = 0.0_f64;
            let mut sweep = |j: usize, beta: &mut [f64], xb: &mut [f64]| {
                let col = self.design.column(j);
                let sq = self.design.col_sq_norm(j);
                let aj = self.a * sq;
                let old = beta[j];
                let new = if aj > 0.0 {
                    let g = self.c[j] - self.a * (dot(col, xb) - sq * old);
                    s.prox(g / aj, 1.0 / aj)
                } else if s.l1 > 0.0 || s.sq > 0.0 {
                    s.argmin()
                } else {
                    old
                };
                if new != old {
                    let d = new - old;
                    for (v, x) in xb.iter_mut().zip(col) {
                        *v += d * x;
                    }
                    beta[j] = new;
                    max_step = max_step.max(2.0 * aj * d.abs());
                }
            };
            if full {
                for j in 0..p {
                    sweep(j, &mut beta, &mut xb);
                }
            } else {
                for &j in &active {
                    sweep(j, &mut beta, &mut xb);
                }
            }
            iterations += 1;
            if let Some(t) = trace.as_mut() {
                t.push(self.objective(&beta, &xb));
            }
            if max_step <= 0.5 * tol {
                if full {
                    xb = self.design.apply(&beta);
                    let residual = self.residual(&beta, &xb);
                    if best.as_ref().is_none_or(|(r, _)| residual < *r) {
                        best = Some((residual, beta.clone()));
                    }
                    if residual <= tol {
                        return KernelOutput {
                            beta,
                            xb,
                            residual,
                            iterations,
                            converged: true,
                            trace,
                        };
                    }
                } else {
                    full = true;
                }
            } else if full {
                let next: Vec<usize> = (0..p)
                    .filter(|&j| {
                        let b = beta[j];
                        !((b == 0.0 && s.l1 > 0.0) || b <= s.lo || b >= s.hi)
                    })
                    .collect();
                active = next;
                full = active.is_empty();
            }
            if iterations % NEWTON_EVERY == 0 {
                if let Some((b, x)) = self.newton_step(s, &beta, &xb) {
                    beta = b;
                    xb = x;
                    full = true;
                }
            }
        }
        xb = self.design.apply(&beta);
        let last = self.residual(&beta, &xb);
        if let Some((r, b)) = best {
            if r < last {
                let bxb = self.design.apply(&b);
                return KernelOutput {
                    beta: b,
                    xb: bxb,
                    residual: r,
                    iterations,
                    converged: false,
                    trace,
                };
            }
        }
        KernelOutput {
            beta,
            xb,
            residual: last,
            iterations,
            converged: false,
            trace,
        }
    }

    /// Newton step on the coordinates strictly inside their smooth piece
    /// (off the box faces and, with an ℓ1 term, off zero), signs held
    /// fixed. Coordinate descent alone crawls when the free columns are
    /// nearly collinear.
    ///
    /// Without a ridge term the ℓ1 slope can have a component g⊥ in the
    /// null space of the free columns; the objective then falls linearly
    /// along −g⊥ at fixed Xβ, so that move is taken first, up to the first
    /// zero crossing. The Newton step is cut at the first face or sign
    /// change and kept only if it lowers the objective.
    fn newton_step(&self, s: &ScalarPenalty, beta: &[f64], xb: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        let x = self.design.matrix();
        let mut cur = beta.to_vec();
        let mut moved = false;
        for _ in 0..=beta.len() {
            let free: Vec<usize> = (0..cur.len())
                .filter(|&j| {
                    let b = cur[j];
                    b > s.lo && b < s.hi && !(s.l1 > 0.0 && b == 0.0) && self.design.col_sq_norm(j) > 0.0
                })
                .collect();
            if free.is_empty() {
                break;
            }
            let xf = DMatrix::from_fn(x.nrows(), free.len(), |i, m| x[(i, free[m])]);
            let g = DVector::from_iterator(
                free.len(),
                free.iter().map(|&j| {
                    let b = cur[j];
                    2.0 * self.a * dot(self.design.column(j), xb) - 2.0 * self.c[j]
                        + 2.0 * s.l1 * b.signum()
                        + 4.0 * s.sq * b
                }),
            );
            let svd = ThinSvd::new(&xf);
            let vtg = svd.v.transpose() * &g;
            let perp = &g - &svd.v * &vtg;
            let null_move = s.sq == 0.0 && s.l1 > 0.0 && perp.norm() > 1e-9 * s.l1;
            let (d, cap) = if null_move {
                (-perp, f64::INFINITY)
            } else {
                let mut d = DVector::zeros(free.len());
                for k in 0..svd.rank() {
                    let curv = 2.0 * self.a * svd.singular[k].powi(2) + 4.0 * s.sq;
                    d -= svd.v.column(k) * (vtg[k] / curv);
                }
                if s.sq > 0.0 {
                    d -= perp / (4.0 * s.sq);
                }
                (d, 1.0)
            };
            let mut theta = cap;
            for (m, &j) in free.iter().enumerate() {
                let (b, dj) = (cur[j], d[m]);
                if dj > 0.0 && s.hi.is_finite() {
                    theta = theta.min((s.hi - b) / dj);
                }
                if dj < 0.0 && s.lo.is_finite() {
                    theta = theta.min((s.lo - b) / dj);
                }
                if s.l1 > 0.0 && b * dj < 0.0 {
                    theta = theta.min(-b / dj);
                }
            }
            if !(theta > 0.0 && theta.is_finite()) {
                break;
            }
            let mut out = cur.clone();
            for (m, &j) in free.iter().enumerate() {
                let b = cur[j];
                let mut v = (b + theta * d[m]).clamp(s.lo, s.hi);
                if s.l1 > 0.0 && (v * b <= 0.0 || v.abs() <= 1e-12 * b.abs()) {
                    v = 0.0;
                }
                out[j] = v;
            }
            if null_move {
                cur = out;
                moved = true;
                continue;
            }
            let out_xb = self.design.apply(&out);
            let cur_xb = self.design.apply(&cur);
            if self.objective(&out, &out_xb) < self.objective(&cur, &cur_xb) {
                return Some((out, out_xb));
            }
            break;
        }
        moved.then(|| {
            let cur_xb = self.design.apply(&cur);
            (cur, cur_xb)
        })
    }

    /// Follows the piecewise-linear solution path of
    /// a‖Xβ‖² − 2c'β + 2ℓ‖β‖₁ + 2q‖β‖² from ℓ = ‖c‖∞ down to ℓ = s.l1
    /// (LARS with drops). Used as the starting point of coordinate descent;
    /// on numerical trouble the path stops early and the current point is
    /// returned.
    fn l1_homotopy(&self, s: &ScalarPenalty) -> Vec<f64> {
        let p = self.design.p();
        let mut beta = vec![0.0; p];
        if self.a <= 0.0 {
            return beta;
        }
        let (mut l_cur, first) = self
            .c
            .iter()
            .enumerate()
            .fold((0.0_f64, 0), |acc, (j, v)| if v.abs() > acc.0 { (v.abs(), j) } else { acc });
        if l_cur <= s.l1 {
            return beta;
        }
        let mut active: Vec<usize> = Vec::new();
        let mut signs: Vec<f64> = Vec::new();
        let mut chol = Chol::default();
        let entry = |i: usize, j: usize| -> f64 {
            let g = self.a * dot(self.design.column(i), self.design.column(j));
            if i == j {
                g + 2.0 * s.sq
            } else {
                g
            }
        };
        if !chol.push(&active, first, &entry) {
            return beta;
        }
        active.push(first);
        signs.push(self.c[first].signum());
        let n = self.design.n();
        for _ in 0..4 * (p + n) {
            let ca: Vec<f64> = active.iter().map(|&j| self.c[j]).collect();
            let u = chol.solve(&ca);
            let v = chol.solve(&signs);
            let mut w = vec![0.0; n];
            let mut z = vec![0.0; n];
            for (k, &j) in active.iter().enumerate() {
                for ((wi, zi), x) in w.iter_mut().zip(z.iter_mut()).zip(self.design.column(j)) {
                    *wi += u[k] * x;
                    *zi += v[k] * x;
                }
            }
            let floor = s.l1.max(0.0);
            let ceiling = l_cur * (1.0 - 1e-12);
            // (event level, index, joining sign or 0 for a drop)
            let mut event: Option<(f64, usize, f64)> = None;
            let mut consider = |l: f64, j: usize, sign: f64| {
                if l.is_finite() && l > floor && l < ceiling && event.is_none_or(|e| l > e.0) {
                    event = Some((l, j, sign));
                }
            };
            let mut in_active = vec![false; p];
            active.iter().for_each(|&j| in_active[j] = true);
            for j in 0..p {
                if in_active[j] {
                    continue;
                }
                let col = self.design.column(j);
                let pj = self.c[j] - self.a * dot(col, &w);
                let qj = self.a * dot(col, &z);
                // r_j(ℓ) = p_j + ℓq_j reaches ±ℓ
                consider(pj / (1.0 - qj), j, 1.0);
                consider(-pj / (1.0 + qj), j, -1.0);
            }
            for (k, &j) in active.iter().enumerate() {
                if v[k] != 0.0 {
                    consider(u[k] / v[k], j, 0.0);
                }
            }
            let Some((l_next, j, sign)) = event else {
                for (k, &j) in active.iter().enumerate() {
                    beta[j] = u[k] - floor * v[k];
                }
                return beta;
            };
            for (k, &j) in active.iter().enumerate() {
                beta[j] = u[k] - l_next * v[k];
            }
            l_cur = l_next;
            if sign == 0.0 {
                let k = active.iter().position(|&a| a == j).expect("active index");
                active.remove(k);
                signs.remove(k);
                beta[j] = 0.0;
                chol = Chol::default();
                let mut rebuilt = Vec::with_capacity(active.len());
                for &a in &active {
                    if !chol.push(&rebuilt, a, &entry) {
                        return beta;
                    }
                    rebuilt.push(a);
                }
            } else {
                if !chol.push(&active, j, &entry) {
                    return beta;
                }
                active.push(j);
                signs.push(sign);
            }
        }
        beta
    }

    /// Proximal gradient with step 1/L, accelerated (with gradient restart)
    /// when `accelerate` is set.
    fn prox_gradient(
        &self,
        accelerate: bool,
        start: Option<&[f64]>,
        tol: f64,
        max_iter: usize,
        record_trace: bool,
    ) -> KernelOutput {
        let p = self.design.p();
        let n = self.n_obs();
        let l = self.lipschitz();
        let step = 2.0 / l;
        let init = start.map(|b| b.to_vec()).unwrap_or_else(|| vec![0.0; p]);
        let mut x = prox_unchecked(self.pen, &init, step, n);
        let mut xb = self.design.apply(&x);
        let mut y = x.clone();
        let mut yb = xb.clone();
        let mut tk = 1.0_f64;
        let mut trace = record_trace.then(|| vec![self.objective(&x, &xb)]);
        let mut best = (f64::INFINITY, x.clone());
        for it in 1..=max_iter {
            let grad = self.gradient(&yb);
            let z: Vec<f64> = y.iter().zip(&grad).map(|(v, g)| v - g / l).collect();
            let x_new = prox_unchecked(self.pen, &z, step, n);
            let mapping = l * dist(&y, &x_new);
            if !accelerate {
                // mapping at y = x is the exact residual at x
                if mapping < best.0 {
                    best = (mapping, x.clone());
                }
                if mapping <= tol {
                    let res = self.residual(&x, &xb);
                    return KernelOutput {
                        beta: x,
                        xb,
                        residual: res,
                        iterations: it - 1,
                        converged: res <= tol,
                        trace,
                    };
                }
            }
            let xb_new = self.design.apply(&x_new);
            if accelerate {
                let restart = (0..p)
                    .map(|j| (y[j] - x_new[j]) * (x_new[j] - x[j]))
                    .sum::<f64>()
                    > 0.0;
                if restart {
                    tk = 1.0;
                    y = x_new.clone();
                    yb = xb_new.clone();
                } else {
                    let t_next = 0.5 * (1.0 + (1.0 + 4.0 * tk * tk).sqrt());
                    let w = (tk - 1.0) / t_next;
                    y = (0..p).map(|j| x_new[j] + w * (x_new[j] - x[j])).collect();
                    yb = (0..xb_new.len())
                        .map(|i| xb_new[i] + w * (xb_new[i] - xb[i]))
                        .collect();
                    tk = t_next;
                }
            } else {
                y = x_new.clone();
                yb = xb_new.clone();
            }
            x = x_new;
            xb = xb_new;
            if let Some(t) = trace.as_mut() {
                t.push(self.objective(&x, &xb));
            }
            if accelerate && (mapping <= tol || it % 50 == 0) {
                let res = self.residual(&x, &xb);
                if res < best.0 {
                    best = (res, x.clone());
                }
                if res <= tol {
                    return KernelOutput {
                        beta: x,
                        xb,
                        residual: res,
                        iterations: it,
                        converged: true,
                        trace,
                    };
                }
            }
        }
        let res = self.residual(&x, &xb);
        let (beta, residual) = if best.0 < res { (best.1, best.0) } else { (x, res) };
        let xb = self.design.apply(&beta);
        KernelOutput {
            converged: residual <= tol,
            beta,
            xb,
            residual,
            iterations: max_iter,
            trace,
        }
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn prox_map_norm(k: &Kernel<'_>, beta: &[f64], grad: &[f64], l: f64) -> f64 {
    let z: Vec<f64> = beta.iter().zip(grad).map(|(b, g)| b - g / l).collect();
    let pz = prox_unchecked(k.pen, &z, 2.0 / l, k.n_obs());
    l * dist(beta, &pz)
}

/// Distance from 0 to g + ∂(2h₁)(b) for one coordinate, including the
/// normal cone of the box.
fn coordinate_violation(s: &ScalarPenalty, b: f64, g: f64) -> f64 {
    if b < s.lo || b > s.hi {
        return f64::INFINITY;
    }
    let smooth = g + 4.0 * s.sq * b;
    let (mut lo, mut hi) = if s.l1 > 0.0 && b == 0.0 {
        (smooth - 2.0 * s.l1, smooth + 2.0 * s.l1)
    } else {
        let v = smooth + 2.0 * s.l1 * b.signum() * (s.l1 > 0.0) as u8 as f64;
        (v, v)
    };
    if b <= s.lo {
        lo = f64::NEG_INFINITY;
    }
    if b >= s.hi {
        hi = f64::INFINITY;
    }
    if lo > 0.0 {
        lo
    } else if hi < 0.0 {
        -hi
    } else {
        0.0
    }
}

/// Cholesky factor grown one row at a time.
#[derive(Default)]
struct Chol {
    rows: Vec<Vec<f64>>,
}

impl Chol {
    /// Appends index `j` after `current`; false when the new pivot is not
    /// numerically positive.
    fn push(&mut self, current: &[usize], j: usize, entry: &dyn Fn(usize, usize) -> f64) -> bool {
        let g: Vec<f64> = current.iter().map(|&i| entry(i, j)).collect();
        let w = self.forward(&g);
        let diag = entry(j, j);
        let d2 = diag - w.iter().map(|x| x * x).sum::<f64>();
        if !(d2 > 1e-12 * diag.abs()) {
            return false;
        }
        let mut row = w;
        row.push(d2.sqrt());
        self.rows.push(row);
        true
    }

    fn forward(&self, b: &[f64]) -> Vec<f64> {
        let mut y = Vec::with_capacity(b.len());
        for (i, row) in self.rows.iter().enumerate() {
            let acc: f64 = row[..i].iter().zip(&y).map(|(l, v)| l * v).sum();
            y.push((b[i] - acc) / row[i]);
        }
        y
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = self.forward(b);
        for i in (0..x.len()).rev() {
            let mut acc = x[i];
            for (k, row) in self.rows.iter().enumerate().skip(i + 1) {
                acc -= row[i] * x[k];
            }
            x[i] = acc / self.rows[i][i];
        }
        x
    }
}
