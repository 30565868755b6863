use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;

use hodgeloc::fixtures;
use hodgeloc::locus::enumerate_classes;
use hodgeloc::orbits::decay_check;
use hodgeloc::par::Execution;
use hodgeloc::scalar::{gi, rat};
use hodgeloc::sl2::norm_asymptotics_check;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn enumeration(c: &mut Criterion) {
    let orbit = fixtures::by_name("tensor_ee_twisted").unwrap().to_orbit().unwrap();
    let z = [gi(0, 1), gi(0, 1)];
    let mut group = c.benchmark_group("enumerate_classes");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::new(name, 200), &exec, |b, &exec| {
            b.iter(|| enumerate_classes(black_box(&orbit), &z, 200, exec).unwrap())
        });
    }
    group.finish();
}

fn decay_grid(c: &mut Criterion) {
    let sample = fixtures::rank2_family();
    let grid: Vec<f64> = (0..64).map(|k| 2.0 + 6.0 * k as f64 / 63.0).collect();
    let mut group = c.benchmark_group("decay_check");
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::new(name, grid.len()), &exec, |b, &exec| {
            b.iter(|| decay_check(&sample, &[Complex64::new(0.0, 0.0)], &[1.0], black_box(&grid), exec).unwrap())
        });
    }
    group.finish();
}

fn norm_grid(c: &mut Criterion) {
    let rep = fixtures::tensor_e_sym2();
    let vectors: Vec<Vec<_>> = (0..rep.rank())
        .map(|i| (0..rep.rank()).map(|j| rat((i == j) as i64, 1)).collect())
        .collect();
    let grid: Vec<f64> = (1..=32).map(|k| 2f64.powf(k as f64 / 8.0)).collect();
    let mut group = c.benchmark_group("norm_asymptotics_check");
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::new(name, grid.len()), &exec, |b, &exec| {
            b.iter(|| norm_asymptotics_check(&rep, &vectors, &[0.5, 0.25], black_box(&grid), exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, enumeration, decay_grid, norm_grid);
criterion_main!(benches);
