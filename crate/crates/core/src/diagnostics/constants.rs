//! Lasso constants and the adversarial target for the compatibility lower
//! bound.

use serde::{Deserialize, Serialize};

use super::cone::{compatibility_constant_with, ConeOptions};
use crate::error::{Error, Result};
use crate::model::DesignMatrix;
use crate::special::chi_quantile;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoConstants {
    pub gamma: f64,
    pub c0: f64,
    pub c_bar: f64,
    pub c_under: f64,
    pub lambda_threshold: f64,
}

pub fn c0_from_gamma(gamma: f64) -> f64 {
    (1.0 + gamma + 3f64.sqrt()) / gamma
}

/// λ = σ(1+2γ)√(2 log(p/s)), the tuning used in the asymptotic regime.
pub fn lambda_asymptotic(sigma: f64, gamma: f64, p: usize, s: usize) -> f64 {
    sigma * (1.0 + 2.0 * gamma) * (2.0 * (p as f64 / s as f64).ln()).sqrt()
}

/// Pure arithmetic on supplied estimates of κ(c₀, s) and δ_s.
#[allow(clippy::too_many_arguments)]
pub fn lasso_constants(
    x: &DesignMatrix,
    s: usize,
    gamma: f64,
    sigma: f64,
    lam: f64,
    kappa_est: f64,
    delta_s_est: f64,
) -> Result<LassoConstants> {
    lasso_constants_for(x.p(), s, gamma, sigma, lam, kappa_est, delta_s_est)
}

pub fn lasso_constants_for(
    p: usize,
    s: usize,
    gamma: f64,
    sigma: f64,
    lam: f64,
    kappa_est: f64,
    delta_s_est: f64,
) -> Result<LassoConstants> {
    for (name, v) in [("gamma", gamma), ("sigma", sigma), ("lambda", lam), ("kappa", kappa_est)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::arg(format!("{name} must be positive and finite, got {v}")));
        }
    }
    if !(delta_s_est >= 0.0) || !delta_s_est.is_finite() {
        return Err(Error::arg(format!("delta_s must be nonnegative, got {delta_s_est}")));
    }
    if s == 0 || s > p {
        return Err(Error::arg(format!("sparsity must satisfy 1 <= s <= p = {p}, got {s}")));
    }
    let arg = 9.0 * std::f64::consts::E * p as f64 / s as f64;
    let log_term = arg.ln();
    if !(arg > 1.0) {
        return Err(Error::arg(format!("log(9ep/s) must be positive, got 9ep/s = {arg}")));
    }
    let c0 = c0_from_gamma(gamma);
    let sqrt_s = (s as f64).sqrt();
    let c_bar = sigma / kappa_est
        * (1.0
            + sigma * kappa_est * (sqrt_s + 2.0 * 3f64.ln().sqrt()) / (lam * sqrt_s)
            + 3f64.sqrt() / log_term.sqrt());
    Ok(LassoConstants {
        gamma,
        c0,
        c_bar,
        c_under: sigma / (1.0 + delta_s_est),
        lambda_threshold: sigma
            * (1.0 + gamma)
            * (1.0 + delta_s_est)
            * (1.0 + (2.0 * log_term).sqrt()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adversary {
    pub beta_star: Vec<f64>,
    pub t0: f64,
    pub gamma: f64,
    /// Compatibility estimate φ(T, 1) at the returned direction.
    pub phi: f64,
    /// Direction u with ‖Xu‖ = 1.
    pub u: Vec<f64>,
    pub q: f64,
}

/// β* supported on T with β*_T = −t₀u_T, where u nearly minimizes the
/// compatibility program at c₀ = 1.
pub fn construct_compatibility_adversary(
    x: &DesignMatrix,
    t: &[usize],
    lam: f64,
    sigma: f64,
    q_prob: f64,
) -> Result<Adversary> {
    construct_compatibility_adversary_with(x, t, lam, sigma, q_prob, &ConeOptions::default())
}

pub fn construct_compatibility_adversary_with(
    x: &DesignMatrix,
    t: &[usize],
    lam: f64,
    sigma: f64,
    q_prob: f64,
    opts: &ConeOptions,
) -> Result<Adversary> {
    if !(lam > 0.0) || !(sigma > 0.0) {
        return Err(Error::arg("lambda and sigma must be positive"));
    }
    if !(q_prob > 0.0 && q_prob < 1.0) {
        return Err(Error::arg(format!("q_prob must lie in (0, 1), got {q_prob}")));
    }
    let rep = compatibility_constant_with(x, t, 1.0, opts)?;
    let phi = rep.value;
    if !(phi > 1e-10) {
        return Err(Error::DegenerateDesign(format!(
            "compatibility estimate {phi:.3e} on T = {t:?} is numerically zero"
        )));
    }
    let xu = x.apply(&rep.minimizer_u);
    let scale = xu.iter().map(|v| v * v).sum::<f64>().sqrt();
    let u: Vec<f64> = rep.minimizer_u.iter().map(|v| v / scale).collect();
    let q = sigma * chi_quantile(x.n(), q_prob)?;
    let root_t = (t.len() as f64).sqrt();
    let gamma = lam * root_t / (200.0 * phi);
    let t0 = (q + lam * root_t / phi).powi(2) / gamma;
    let mut beta_star = vec![0.0; x.p()];
    for &j in t {
        beta_star[j] = -t0 * u[j];
    }
    Ok(Adversary {
        beta_star,
        t0,
        gamma,
        phi,
        u,
        q,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn c0_at_gamma_one() {
        assert!((c0_from_gamma(1.0) - (2.0 + 3f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn c_bar_large_lambda_limit() {
        let c = lasso_constants_for(100, 3, 0.5, 1.0, 1e12, 1.0, 0.0).unwrap();
        let log_term = (9.0 * std::f64::consts::E * 100.0 / 3.0).ln();
        assert!((c.c_bar - (1.0 + 3f64.sqrt() / log_term.sqrt())).abs() < 1e-9);
        assert_eq!(c.c_under, 1.0);
    }

    #[test]
    fn guards() {
        assert!(lasso_constants_for(10, 2, 0.0, 1.0, 1.0, 1.0, 0.0).is_err());
        assert!(lasso_constants_for(10, 2, 1.0, 1.0, 1.0, -1.0, 0.0).is_err());
        assert!(lasso_constants_for(10, 11, 1.0, 1.0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn identity_adversary() {
        let x = DesignMatrix::scaled_identity(1);
        let a = construct_compatibility_adversary(&x, &[0], 1.0, 1.0, 0.99).unwrap();
        let q = chi_quantile(1, 0.99).unwrap();
        assert!((a.phi - 1.0).abs() < 1e-9);
        assert!((a.gamma - 1.0 / 200.0).abs() < 1e-12);
        assert!((a.t0 - (q + 1.0).powi(2) * 200.0).abs() < 1e-6 * a.t0);
        assert!((a.beta_star[0] + a.t0).abs() < 1e-6 * a.t0);
    }

    #[test]
    fn duplicated_column_is_degenerate() {
        let mut r = rng::rng_from_seed(4);
        let mut e = rng::gaussian_vec(&mut r, 6 * 3, 1.0);
        for i in 0..6 {
            e[i * 3 + 2] = e[i * 3];
        }
        let x = DesignMatrix::from_row_slice(6, 3, &e).unwrap();
        let err = construct_compatibility_adversary(&x, &[0, 2], 1.0, 1.0, 0.99).unwrap_err();
        assert!(matches!(err, Error::DegenerateDesign(_)), "{err}");
    }
}
