use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use qgraph::stats::weyl_moments;
use qgraph::*;

fn star() -> MetricGraph {
    make_star(&incommensurate_lengths(4, 1.0)).unwrap()
}

fn tetrahedron() -> MetricGraph {
    let lengths: [f64; 6] = incommensurate_lengths(6, 1.0).try_into().unwrap();
    make_complete4(&lengths).unwrap()
}

fn unitary(c: &mut Criterion) {
    let g = tetrahedron();
    let r = RobinSpec::new(&g, &[0, 1, 2, 3], 2.0).unwrap();
    c.bench_function("unitary/tetrahedron", |b| {
        b.iter(|| build_unitary(&g, &r, black_box(50.3)).unwrap())
    });
    let system = ScatteringSystem::new(&g, &r).unwrap();
    c.bench_function("counting/tetrahedron", |b| {
        b.iter(|| system.counting(black_box(50.3)).unwrap())
    });
}

fn spectra(c: &mut Criterion) {
    let mut group = c.benchmark_group("spectrum");
    group.sample_size(10);
    let g = star();
    let r = RobinSpec::new(&g, &[0], 2.0).unwrap();
    group.bench_function("star/500", |b| {
        b.iter(|| compute_spectrum(&g, &r, SpectrumTarget::Count(black_box(500))).unwrap())
    });
    let t = tetrahedron();
    let rt = RobinSpec::new(&t, &[0, 1, 2, 3], 2.0).unwrap();
    group.bench_function("tetrahedron/500", |b| {
        b.iter(|| compute_spectrum(&t, &rt, SpectrumTarget::Count(black_box(500))).unwrap())
    });
    group.finish();
}

fn statistics(c: &mut Criterion) {
    let mut group = c.benchmark_group("statistics");
    group.sample_size(10);
    let g = star();
    group.bench_function("gaps/star/500", |b| {
        b.iter(|| rng_sequence(&g, &[0], 2.0, black_box(500)).unwrap())
    });
    group.bench_function("weyl/star/300", |b| {
        b.iter(|| weyl_moments(&g, black_box(300)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, unitary, spectra, statistics);
criterion_main!(benches);
