use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use rpfkit_bench::full_shift_workload;
use rpfkit_core::cms::{cms_eigendata, CmsMethod, CmsPotential, GeometricWeights, TailMatrixSpec, DEFAULT_LEVELS};
use rpfkit_core::involution::build_kernel;
use rpfkit_core::zerotemp::{max_mean_cycle, temperature_sweep};
use rpfkit_core::{assemble_operator, power_iterate, DEFAULT_MAX_ITER, DEFAULT_TOL};

fn power_iteration(c: &mut Criterion) {
    let mut group = c.benchmark_group("power_iterate");
    for (n, depth) in [(2, 2), (4, 2), (4, 3), (6, 3)] {
        let (model, phi) = full_shift_workload(n, depth);
        let op = assemble_operator(&model, &phi).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(format!("n{n}_k{depth}")), &op, |b, op| {
            b.iter(|| power_iterate(op, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap())
        });
    }
    group.finish();
}

fn karp(c: &mut Criterion) {
    let (model, phi) = full_shift_workload(5, 3);
    c.bench_function("max_mean_cycle_n5_k3", |b| b.iter(|| max_mean_cycle(&model, &phi).unwrap()));
}

fn sweep(c: &mut Criterion) {
    let (model, phi) = full_shift_workload(3, 2);
    let t = [1.0, 2.0, 5.0, 10.0, 20.0, 50.0];
    c.bench_function("temperature_sweep_n3", |b| {
        b.iter(|| temperature_sweep(&model, &phi, &t, 3, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap())
    });
}

fn kernel(c: &mut Criterion) {
    let (model, phi) = full_shift_workload(4, 3);
    c.bench_function("involution_n4_k3", |b| {
        b.iter(|| {
            let mut inv = build_kernel(&model, &phi).unwrap();
            inv.attach_eigendata(DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
            inv
        })
    });
}

fn countable(c: &mut Criterion) {
    let spec = TailMatrixSpec::star(GeometricWeights::default());
    c.bench_function("cms_star_sweep", |b| {
        b.iter(|| {
            cms_eigendata(&spec, &CmsPotential::Zero, CmsMethod::Aggregate, &DEFAULT_LEVELS, false, DEFAULT_TOL, DEFAULT_MAX_ITER)
                .unwrap()
        })
    });
}

criterion_group!(benches, power_iteration, karp, sweep, kernel, countable);
criterion_main!(benches);
