use std::hint::black_box;

use coulomb3::eigen::{dense_spectrum, lanczos_spectrum, BandedLdl, LanczosMode, LanczosOptions};
use coulomb3::observables::apply_momentum;
use coulomb3_bench::{operator, probe_vector};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn apply(c: &mut Criterion) {
    let mut group = c.benchmark_group("operator_apply");
    for (n_r, n_rho, n_theta) in [(12, 12, 8), (24, 24, 16)] {
        let op = operator(n_r, n_rho, n_theta);
        let x = probe_vector(op.dim());
        let mut y = vec![0.0; op.dim()];
        group.bench_with_input(BenchmarkId::from_parameter(op.dim()), &op, |b, op| {
            b.iter(|| op.matrix.mul_into(black_box(&x), &mut y))
        });
    }
    group.finish();
}

fn momentum(c: &mut Criterion) {
    let op = operator(24, 24, 16);
    let u = probe_vector(op.dim());
    c.bench_function("momentum_apply/9216", |b| {
        b.iter(|| apply_momentum(&op.grid, black_box(&u)).unwrap())
    });
}

fn banded(c: &mut Criterion) {
    let op = operator(12, 16, 12);
    let (lo, _) = op.matrix.gershgorin_bounds();
    let sigma = lo - 1.0;
    c.bench_function("banded_factor/2304", |b| {
        b.iter(|| BandedLdl::factor(black_box(&op.matrix), sigma).unwrap())
    });
    let ldl = BandedLdl::factor(&op.matrix, sigma).unwrap();
    let rhs = probe_vector(op.dim());
    c.bench_function("banded_solve/2304", |b| {
        b.iter(|| {
            let mut x = rhs.clone();
            ldl.solve_in_place(black_box(&mut x));
            x
        })
    });
}

fn eigensolvers(c: &mut Criterion) {
    let mut group = c.benchmark_group("eigensolvers");
    group.sample_size(10);
    let op = operator(8, 10, 8);
    group.bench_function("dense/640", |b| b.iter(|| dense_spectrum(black_box(&op)).unwrap()));
    for (name, mode) in [
        ("lanczos_standard_k20/640", LanczosMode::Standard),
        ("lanczos_shift_invert_k20/640", LanczosMode::ShiftInvertLowest),
    ] {
        let opts = LanczosOptions {
            mode,
            ..LanczosOptions::default()
        };
        group.bench_function(name, |b| {
            b.iter(|| lanczos_spectrum(black_box(&op), 20, &opts).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, apply, momentum, banded, eigensolvers);
criterion_main!(benches);
