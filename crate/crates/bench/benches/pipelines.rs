use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gaussmanin::spectrum::char_poly;
use gaussmanin::{involution_suite, joint_spectrum, newton_multistart, NewtonOptions, QuotientAlgebra, SpectrumOptions};
use gaussmanin_bench::{Fixture, SHAPES};

fn algebra(c: &mut Criterion) {
    let mut group = c.benchmark_group("algebra_build");
    for (n, k) in SHAPES {
        let fx = Fixture::new(n, k, 1);
        group.bench_with_input(BenchmarkId::from_parameter(format!("{n}_{k}")), &fx, |b, fx| {
            b.iter(|| QuotientAlgebra::new(black_box(&fx.spec), black_box(&fx.z), 0).unwrap())
        });
    }
    group.finish();
}

fn charpoly(c: &mut Criterion) {
    let mut group = c.benchmark_group("char_poly");
    for (n, k) in SHAPES {
        let fx = Fixture::new(n, k, 1);
        let alg = QuotientAlgebra::new(&fx.spec, &fx.z, 0).unwrap();
        let m = alg.weighted_position_sum();
        group.bench_with_input(BenchmarkId::from_parameter(format!("{n}_{k}")), &m, |b, m| {
            b.iter(|| char_poly(black_box(m)))
        });
    }
    group.finish();
}

fn spectrum(c: &mut Criterion) {
    let mut group = c.benchmark_group("joint_spectrum");
    for (n, k) in SHAPES {
        let fx = Fixture::new(n, k, 1);
        let alg = QuotientAlgebra::new(&fx.spec, &fx.z, 0).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(format!("{n}_{k}")), &alg, |b, alg| {
            b.iter(|| joint_spectrum(black_box(alg.operators()), &SpectrumOptions::default()).unwrap())
        });
    }
    group.finish();
}

fn involution(c: &mut Criterion) {
    let mut group = c.benchmark_group("involution_suite");
    group.sample_size(10);
    for (n, k) in [(5, 2), (6, 3)] {
        let fx = Fixture::new(n, k, 1);
        group.bench_with_input(BenchmarkId::from_parameter(format!("{n}_{k}")), &fx, |b, fx| {
            b.iter(|| involution_suite(black_box(&fx.spec)))
        });
    }
    group.finish();
}

fn newton(c: &mut Criterion) {
    let mut group = c.benchmark_group("newton_multistart");
    group.sample_size(10);
    for (n, k) in SHAPES {
        let fx = Fixture::new(n, k, 1);
        let z = fx.z_complex();
        group.bench_with_input(BenchmarkId::from_parameter(format!("{n}_{k}")), &z, |b, z| {
            b.iter(|| newton_multistart(black_box(&fx.spec), black_box(z), &NewtonOptions::default()).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, algebra, charpoly, spectrum, involution, newton);
criterion_main!(benches);
