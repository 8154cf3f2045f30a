use proptest::prelude::*;

use riskscope::certify::{fixed_point_upper, CertifyConfig};
use riskscope::curves::{CurveConfig, CurveEvaluator};
use riskscope::model::{
    eval_penalty, prox_penalty, ConvexSet, DesignMatrix, NamedNorm, NoiseSpec, PenaltySpec,
    ProblemInstance, TargetVector,
};
use riskscope::solver::{kkt_residual, solve, SolverConfig};

fn finite_penalty() -> impl Strategy<Value = PenaltySpec> {
    prop_oneof![
        Just(PenaltySpec::Zero),
        (0.0..3.0f64).prop_map(|lam| PenaltySpec::ScaledL1 { lam }),
        (0.0..3.0f64).prop_map(|lam| PenaltySpec::SquaredL2 { lam }),
        (0.0..3.0f64, 1u32..=3, prop_oneof![Just(NamedNorm::L1), Just(NamedNorm::L2), Just(NamedNorm::Linf)])
            .prop_map(|(lam, q, norm)| PenaltySpec::ScaledLqNorm { lam, q, norm }),
    ]
}

fn any_penalty() -> impl Strategy<Value = PenaltySpec> {
    prop_oneof![
        4 => finite_penalty(),
        1 => (0.1..2.0f64).prop_map(|r| PenaltySpec::Indicator { set: ConvexSet::Ball { radius: r } }),
        1 => (0.1..2.0f64).prop_map(|u| PenaltySpec::Indicator {
            set: ConvexSet::Box { lower: -u, upper: u }
        }),
    ]
}

fn vec_of(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, len)
}

fn objective(pen: &PenaltySpec, z: &[f64], b: &[f64], step: f64) -> f64 {
    let d: f64 = z.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    0.5 * d + step * eval_penalty(pen, b, 9).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn penalties_are_convex(pen in finite_penalty(), a in vec_of(5), b in vec_of(5), th in 0.0..1.0f64) {
        let m: Vec<f64> = a.iter().zip(&b).map(|(x, y)| th * x + (1.0 - th) * y).collect();
        let lhs = eval_penalty(&pen, &m, 9).unwrap();
        let rhs = th * eval_penalty(&pen, &a, 9).unwrap() + (1.0 - th) * eval_penalty(&pen, &b, 9).unwrap();
        prop_assert!(lhs <= rhs + 1e-9 * (1.0 + rhs.abs()), "{lhs} > {rhs}");
    }

    #[test]
    fn prox_beats_perturbations(
        pen in any_penalty(),
        z in vec_of(4),
        step in 0.05..2.0f64,
        dirs in prop::collection::vec(vec_of(4), 8),
    ) {
        let x = prox_penalty(&pen, &z, step, 9).unwrap();
        let best = objective(&pen, &z, &x, step);
        prop_assert!(best.is_finite());
        for d in &dirs {
            for scale in [1e-3, 1e-1] {
                let y: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + scale * b).collect();
                let v = objective(&pen, &z, &y, step);
                prop_assert!(v >= best - 1e-9, "perturbation improved {best} to {v}");
            }
        }
    }

    #[test]
    fn lasso_solution_is_stationary(
        entries in vec_of(8 * 12),
        y in vec_of(8),
        lam in 0.01..1.0f64,
    ) {
        let x = DesignMatrix::from_row_slice(8, 12, &entries).unwrap();
        let inst = ProblemInstance::new(
            x,
            TargetVector::zeros(12),
            NoiseSpec::FixedVector(y.clone()),
            PenaltySpec::ScaledL1 { lam },
        ).unwrap();
        let cfg = SolverConfig::default();
        let sol = solve(&inst, &y, &cfg).unwrap();
        let r = kkt_residual(&inst, &y, &sol.beta_hat).unwrap();
        prop_assert!(r <= 10.0 * cfg.tol, "kkt residual {r}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn fixed_point_bounds_risk(
        entries in vec_of(10 * 6),
        beta in vec_of(6),
        eps in vec_of(10),
        pen in finite_penalty(),
    ) {
        let x = DesignMatrix::from_row_slice(10, 6, &entries).unwrap();
        let inst = ProblemInstance::new(x, TargetVector(beta), NoiseSpec::FixedVector(eps.clone()), pen).unwrap();
        let cfg = CertifyConfig::default();
        let risk = solve(&inst, &inst.response().unwrap(), &cfg.curve.solver).unwrap().risk;
        let up = fixed_point_upper(&inst, &eps, &cfg).unwrap();
        prop_assert!(up.bound >= risk - 1e-6, "upper {} < risk {risk}", up.bound);
    }

    #[test]
    fn m_is_concave_in_t(
        entries in vec_of(6 * 4),
        eps in vec_of(6),
        lam in 0.0..2.0f64,
        a in 0.0..5.0f64,
        b in 0.0..5.0f64,
    ) {
        let x = DesignMatrix::from_row_slice(6, 4, &entries).unwrap();
        let inst = ProblemInstance::new(
            x,
            TargetVector(vec![1.0, 0.0, -1.0, 0.0]),
            NoiseSpec::FixedVector(eps.clone()),
            PenaltySpec::ScaledL1 { lam },
        ).unwrap();
        let ev = CurveEvaluator::new(&inst, &eps, &CurveConfig::default()).unwrap();
        let m = |t: f64| ev.m(t).unwrap().value;
        let mid = m(0.5 * (a + b));
        prop_assert!(mid >= 0.5 * (m(a) + m(b)) - 1e-6);
    }
}
