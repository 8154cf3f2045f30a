//! Penalized least squares: β̂ ∈ argmin ‖Xβ − y‖² + 2h(β).

pub(crate) mod kernel;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::design::dot;
use crate::model::{eval_penalty, ProblemInstance};
use kernel::Kernel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Auto,
    Fista,
    CoordinateDescent,
    ProjectedGradient,
    ClosedForm,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "auto" => Method::Auto,
            "fista" => Method::Fista,
            "coordinate_descent" | "cd" => Method::CoordinateDescent,
            "projected_gradient" | "pg" => Method::ProjectedGradient,
            "closed_form" => Method::ClosedForm,
            other => return Err(Error::arg(format!("unknown solver method {other:?}"))),
        })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Method::Auto => "auto",
            Method::Fista => "fista",
            Method::CoordinateDescent => "coordinate_descent",
            Method::ProjectedGradient => "projected_gradient",
            Method::ClosedForm => "closed_form",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    #[serde(default)]
    pub method: Method,
    /// Record the objective after every iteration (sweep for coordinate
    /// descent).
    #[serde(default)]
    pub record_trace: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-9,
            max_iter: 100_000,
            method: Method::Auto,
            record_trace: false,
        }
    }
}

impl SolverConfig {
    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::arg(format!("solver tolerance must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::arg("max_iter must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub beta_hat: Vec<f64>,
    /// ‖X(β̂ − β*)‖
    pub risk: f64,
    /// ‖Xβ̂ − y‖² + 2h(β̂)
    pub objective: f64,
    pub opt_residual: f64,
    pub iterations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<f64>>,
}

fn check_response(inst: &ProblemInstance, y: &[f64]) -> Result<()> {
    inst.validate()?;
    if y.len() != inst.n() {
        return Err(Error::dim("response length", inst.n(), y.len()));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::arg("response has non-finite entries"));
    }
    Ok(())
}

fn response_kernel<'a>(inst: &'a ProblemInstance, y: &[f64]) -> Kernel<'a> {
    Kernel {
        design: &inst.design,
        pen: &inst.penalty,
        a: 1.0,
        c: inst.design.apply_t(y),
    }
}

/// Minimizes ‖Xβ − y‖² + 2h(β) and reports the prediction error against
/// the instance's β*.
pub fn solve(inst: &ProblemInstance, y: &[f64], cfg: &SolverConfig) -> Result<SolveResult> {
    check_response(inst, y)?;
    cfg.validate()?;
    let k = response_kernel(inst, y);
    // scale the tolerance is stated on: gradient entries are 2X'(Xβ − y)
    let out = k.run(cfg.method, None, cfg.tol, cfg.max_iter, cfg.record_trace)?;
    let result = finish(inst, y, out.beta, &out.xb, out.residual, out.iterations, out.trace);
    if !out.converged || !(result.opt_residual <= cfg.tol) {
        return Err(Error::Convergence {
            iterations: result.iterations,
            residual: result.opt_residual,
            best: Box::new(result),
        });
    }
    Ok(result)
}

fn finish(
    inst: &ProblemInstance,
    y: &[f64],
    beta: Vec<f64>,
    xb: &[f64],
    residual: f64,
    iterations: usize,
    trace: Option<Vec<f64>>,
) -> SolveResult {
    let n = inst.n();
    let signal = inst.signal();
    let diff: Vec<f64> = xb.iter().zip(&signal).map(|(a, b)| a - b).collect();
    let fit: Vec<f64> = xb.iter().zip(y).map(|(a, b)| a - b).collect();
    let h = eval_penalty(&inst.penalty, &beta, n).unwrap_or(f64::INFINITY);
    // trace values are Q(β) = ‖Xβ‖² − 2y'Xβ + 2h; shift by ‖y‖² to match
    let shift = dot(y, y);
    SolveResult {
        risk: dot(&diff, &diff).sqrt(),
        objective: dot(&fit, &fit) + 2.0 * h,
        opt_residual: residual,
        iterations,
        trace: trace.map(|t| t.into_iter().map(|v| v + shift).collect()),
        beta_hat: beta,
    }
}

/// Distance from 0 to the subdifferential of ‖Xβ − y‖² + 2h(β) at β.
///
/// For separable penalties (ℓ1, ridge, box) this is the largest
/// coordinatewise violation; otherwise it is the norm of the
/// prox-gradient mapping with step 1/(2σmax(X)²).
pub fn kkt_residual(inst: &ProblemInstance, y: &[f64], beta: &[f64]) -> Result<f64> {
    check_response(inst, y)?;
    if beta.len() != inst.p() {
        return Err(Error::dim("coefficient vector length", inst.p(), beta.len()));
    }
    let k = response_kernel(inst, y);
    let xb = inst.design.apply(beta);
    Ok(k.residual(beta, &xb))
}

/// ‖Xβ − y‖² + 2h(β)
pub fn objective(inst: &ProblemInstance, y: &[f64], beta: &[f64]) -> Result<f64> {
    check_response(inst, y)?;
    if beta.len() != inst.p() {
        return Err(Error::dim("coefficient vector length", inst.p(), beta.len()));
    }
    let xb = inst.design.apply(beta);
    let fit: Vec<f64> = xb.iter().zip(y).map(|(a, b)| a - b).collect();
    Ok(dot(&fit, &fit) + 2.0 * eval_penalty(&inst.penalty, beta, inst.n())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ConvexSet, DesignMatrix, NoiseSpec, PenaltySpec, TargetVector};
    use crate::rng;

    fn inst(x: DesignMatrix, pen: PenaltySpec) -> ProblemInstance {
        let p = x.p();
        ProblemInstance::new(x, TargetVector::zeros(p), NoiseSpec::gaussian(1.0, 0).unwrap(), pen)
            .unwrap()
    }

    fn random_design(n: usize, p: usize, seed: u64) -> DesignMatrix {
        let mut r = rng::rng_from_seed(seed);
        DesignMatrix::from_row_slice(n, p, &rng::gaussian_vec(&mut r, n * p, 1.0)).unwrap()
    }

    #[test]
    fn zero_penalty_identity() {
        let i = inst(DesignMatrix::identity(2), PenaltySpec::Zero);
        let r = solve(&i, &[3.0, -1.0], &SolverConfig::default()).unwrap();
        assert!((r.beta_hat[0] - 3.0).abs() < 1e-12 && (r.beta_hat[1] + 1.0).abs() < 1e-12);
        assert!(r.objective.abs() < 1e-20);
    }

    #[test]
    fn scalar_lasso() {
        let x = DesignMatrix::from_row_slice(1, 1, &[1.0]).unwrap();
        let i = inst(x, PenaltySpec::ScaledL1 { lam: 0.5 });
        let r = solve(&i, &[2.0], &SolverConfig::default()).unwrap();
        assert!((r.beta_hat[0] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn ridge_closed_form() {
        let i = inst(DesignMatrix::identity(2), PenaltySpec::SquaredL2 { lam: 0.5 });
        let r = solve(&i, &[2.0, 4.0], &SolverConfig::default()).unwrap();
        assert!((r.beta_hat[0] - 1.0).abs() < 1e-12 && (r.beta_hat[1] - 2.0).abs() < 1e-12);
        assert!(kkt_residual(&i, &[2.0, 4.0], &r.beta_hat).unwrap() <= 1e-10);
        let mut off = r.beta_hat.clone();
        off[0] += 0.1;
        assert!(kkt_residual(&i, &[2.0, 4.0], &off).unwrap() > 0.0);
    }

    #[test]
    fn singleton_forces_solution() {
        let x = random_design(4, 3, 1);
        let bstar = TargetVector(vec![1.0, -1.0, 0.5]);
        let i = ProblemInstance::new(
            x.clone(),
            bstar.clone(),
            NoiseSpec::gaussian(1.0, 0).unwrap(),
            PenaltySpec::Indicator {
                set: ConvexSet::Singleton { point: vec![0.0; 3] },
            },
        )
        .unwrap();
        let r = solve(&i, &[1.0, 2.0, 3.0, 4.0], &SolverConfig::default()).unwrap();
        assert_eq!(r.beta_hat, vec![0.0; 3]);
        let xb = x.apply(bstar.as_slice());
        assert!((r.risk - dot(&xb, &xb).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn lasso_cd_and_fista_agree_on_risk() {
        let x = random_design(6, 12, 5);
        let mut r = rng::rng_from_seed(9);
        let y = rng::gaussian_vec(&mut r, 6, 1.0);
        let i = inst(x, PenaltySpec::ScaledL1 { lam: 0.3 });
        let cd = solve(&i, &y, &SolverConfig::default().with_method(Method::CoordinateDescent))
            .unwrap();
        let fista = solve(&i, &y, &SolverConfig::default().with_method(Method::Fista)).unwrap();
        assert!((cd.risk - fista.risk).abs() < 1e-6, "{} vs {}", cd.risk, fista.risk);
        assert!(cd.opt_residual <= 1e-9);
        assert!(kkt_residual(&i, &y, &cd.beta_hat).unwrap() <= 1e-9);
    }

    #[test]
    fn objectives_are_monotone() {
        let x = random_design(8, 5, 2);
        let mut r = rng::rng_from_seed(3);
        let y = rng::gaussian_vec(&mut r, 8, 2.0);
        for (pen, method) in [
            (PenaltySpec::ScaledL1 { lam: 0.2 }, Method::CoordinateDescent),
            (
                PenaltySpec::Indicator {
                    set: ConvexSet::Ball { radius: 0.3 },
                },
                Method::ProjectedGradient,
            ),
        ] {
            let i = inst(x.clone(), pen);
            let cfg = SolverConfig {
                record_trace: true,
                method,
                ..SolverConfig::default()
            };
            let res = solve(&i, &y, &cfg).unwrap();
            let t = res.trace.unwrap();
            for w in t.windows(2) {
                assert!(w[1] <= w[0] + 1e-12 * (1.0 + w[0].abs()), "{} > {}", w[1], w[0]);
            }
        }
    }

    #[test]
    fn objective_field_matches_recomputation() {
        let x = random_design(5, 8, 11);
        let y = vec![1.0, -2.0, 0.5, 0.0, 3.0];
        let i = inst(x, PenaltySpec::ScaledL1 { lam: 0.1 });
        let r = solve(&i, &y, &SolverConfig::default()).unwrap();
        let o = objective(&i, &y, &r.beta_hat).unwrap();
        assert!((o - r.objective).abs() <= 1e-9 * o.abs().max(1.0));
    }

    #[test]
    fn box_and_nonseparable_penalties_converge() {
        let x = random_design(7, 4, 21);
        let y = vec![3.0, -2.0, 1.0, 0.5, -1.5, 2.5, 0.0];
        let pens = [
            PenaltySpec::Indicator {
                set: ConvexSet::Box {
                    lower: -0.2,
                    upper: 0.4,
                },
            },
            PenaltySpec::Sum {
                finite: Box::new(PenaltySpec::ScaledL1 { lam: 0.1 }),
                set: ConvexSet::Ball { radius: 0.5 },
            },
            PenaltySpec::ScaledLqNorm {
                lam: 0.7,
                q: 1,
                norm: crate::model::NamedNorm::L2,
            },
        ];
        for pen in pens {
            let i = inst(x.clone(), pen.clone());
            let auto = solve(&i, &y, &SolverConfig::default()).unwrap();
            let fista = solve(&i, &y, &SolverConfig::default().with_method(Method::Fista)).unwrap();
            assert!((auto.objective - fista.objective).abs() < 1e-8, "{pen:?}");
        }
    }

    #[test]
    fn closed_form_rejects_lasso() {
        let i = inst(DesignMatrix::identity(2), PenaltySpec::ScaledL1 { lam: 1.0 });
        let err = solve(&i, &[1.0, 1.0], &SolverConfig::default().with_method(Method::ClosedForm));
        assert!(matches!(err, Err(Error::Capability(_))));
    }

    #[test]
    fn convergence_error_carries_best_iterate() {
        let x = random_design(10, 20, 4);
        let mut r = rng::rng_from_seed(1);
        let y = rng::gaussian_vec(&mut r, 10, 1.0);
        let i = inst(x, PenaltySpec::ScaledL1 { lam: 0.05 });
        let cfg = SolverConfig {
            max_iter: 1,
            method: Method::Fista,
            ..SolverConfig::default()
        };
        match solve(&i, &y, &cfg) {
            Err(Error::Convergence { best, .. }) => assert_eq!(best.beta_hat.len(), 20),
            other => panic!("expected convergence error, got {other:?}"),
        }
    }
}
