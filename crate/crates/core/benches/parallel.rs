use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use riskscope::diagnostics::{rip_delta_with, RipOptions};
use riskscope::mc::{sample_risks, GridSpec, McConfig};
use riskscope::model::{DesignMatrix, NoiseSpec, PenaltySpec, ProblemInstance, TargetVector};
use riskscope::par::Execution;
use riskscope::rng::{gaussian_vec, rng_from_seed};
use riskscope::solver::SolverConfig;

fn design(n: usize, p: usize, seed: u64) -> DesignMatrix {
    let mut r = rng_from_seed(seed);
    DesignMatrix::from_row_slice(n, p, &gaussian_vec(&mut r, n * p, 1.0)).unwrap()
}

fn lasso() -> ProblemInstance {
    let mut beta = vec![0.0; 60];
    beta[..3].copy_from_slice(&[2.0, -1.0, 1.5]);
    ProblemInstance::new(
        design(40, 60, 1),
        TargetVector(beta),
        NoiseSpec::gaussian(1.0, 0).unwrap(),
        PenaltySpec::ScaledL1 { lam: 0.5 },
    )
    .unwrap()
}

fn bench_risks(c: &mut Criterion) {
    let inst = lasso();
    let solver = SolverConfig::default();
    let mut group = c.benchmark_group("sample_risks");
    group.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        let mut mc = McConfig::new(
            200,
            7,
            GridSpec::Linear {
                start: 0.0,
                stop: 1.0,
                points: 2,
            },
        );
        mc.exec = exec;
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &mc, |b, mc| {
            b.iter(|| sample_risks(&inst, mc, &solver).unwrap())
        });
    }
    group.finish();
}

fn bench_rip(c: &mut Criterion) {
    let x = design(40, 60, 2);
    let mut group = c.benchmark_group("rip_delta");
    group.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        let opts = RipOptions {
            budget: 1_000_000,
            seed: 0,
            exec,
        };
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &opts, |b, opts| {
            b.iter(|| rip_delta_with(&x, 3, opts).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_risks, bench_rip);
criterion_main!(benches);
