use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use num_complex::Complex64;
use slelab_core::analytic::{barycentric, HitMap, Triangle};
use slelab_core::experiments::dyadic_grid;
use slelab_core::loewner::{hull_distance, sample_driver, swallow_times_grid, AdaptiveSweep, SweepConfig};
use slelab_core::rng;
use slelab_core::SleParams;

fn analytic(c: &mut Criterion) {
    let h = HitMap::new(1.0 / 3.0).unwrap();
    let tri = Triangle::new(&h).unwrap();
    c.bench_function("f_real", |b| b.iter(|| h.f_real(black_box(0.37)).unwrap()));
    c.bench_function("map_f interior", |b| {
        b.iter(|| h.map_f(black_box(Complex64::new(0.4, 0.3))).unwrap())
    });
    c.bench_function("barycentric far", |b| {
        b.iter(|| barycentric(black_box(Complex64::new(-6.0, 9.0)), &tri, &h).unwrap())
    });
}

fn loewner(c: &mut Criterion) {
    let params = SleParams::for_hitting(6.0).unwrap();
    let driver = sample_driver(&params, 1.0, 1e-4, 3, usize::MAX).unwrap();
    c.bench_function("grid sweep n=8, 10^4 steps", |b| {
        b.iter(|| swallow_times_grid(&driver, 8, params.a, 16).unwrap())
    });
    let short = sample_driver(&params, 0.05, 1e-4, 4, usize::MAX).unwrap();
    c.bench_function("hull distance, 500 steps", |b| {
        b.iter(|| hull_distance(&short, short.horizon(), black_box(1.0), params.a, 0.5).unwrap())
    });

    let mut group = c.benchmark_group("adaptive sweep");
    group.sample_size(20);
    let pair = [0.5, 1.0];
    group.bench_function("one interval", |b| {
        let mut i = 0;
        b.iter_batched(
            || {
                i += 1;
                rng::stream(9, i)
            },
            |mut r| {
                let mut sw = AdaptiveSweep::new(&pair, params.a, SweepConfig::default()).unwrap();
                sw.run(&mut r);
                sw.groups()[0] != sw.groups()[1]
            },
            BatchSize::SmallInput,
        )
    });
    let grid = dyadic_grid(8);
    group.bench_function("level 8 grid", |b| {
        let mut i = 0;
        b.iter_batched(
            || {
                i += 1;
                rng::stream(10, i)
            },
            |mut r| {
                let mut sw = AdaptiveSweep::new(&grid, params.a, SweepConfig::default()).unwrap();
                sw.run(&mut r);
                sw.steps()
            },
            BatchSize::SmallInput,
        )
    });
    group.finish();
}

criterion_group!(benches, analytic, loewner);
criterion_main!(benches);
