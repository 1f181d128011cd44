use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use ricci_forge::exprs::Expr;
use ricci_forge::parallel::Mode;
use ricci_forge::positivity::{check_pd_on_grid, min_p_with, GridSpec};
use ricci_forge::warped::{verify_against_oracle_with, WarpedFamilySpec};

const MODES: [(&str, Mode); 2] = [("sequential", Mode::Sequential), ("parallel", Mode::Parallel)];

fn grid_check(c: &mut Criterion) {
    let radii = GridSpec { points: 20_000, ..GridSpec::default() }.radii().unwrap();
    let mi = [1.0, 1.5, 2.0];
    let mut group = c.benchmark_group("pd_grid_20k");
    for (name, mode) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| check_pd_on_grid(black_box(1.0), &mi, 120, &radii, mode))
        });
    }
    group.finish();
}

fn search(c: &mut Criterion) {
    let mut group = c.benchmark_group("min_p_n3");
    group.sample_size(20);
    for (name, mode) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| min_p_with(3, black_box(1.0), &[1.0; 3], GridSpec::default(), mode).unwrap())
        });
    }
    group.finish();
}

fn oracle_sweep(c: &mut Criterion) {
    let spec = WarpedFamilySpec::flat(
        Expr::parse("r*(1+r^2)^(-1/4)").unwrap(),
        vec![Expr::parse("(1+r^2)^(-1)").unwrap(), Expr::parse("(1+r^2)^(-2)").unwrap()],
    );
    let rs: Vec<f64> = (1..=32).map(|k| 0.125 * k as f64).collect();
    let mut group = c.benchmark_group("oracle_verify_32r");
    group.sample_size(10);
    for (name, mode) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| verify_against_oracle_with(&spec, 4, &rs, 1e-5, mode).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, grid_check, search, oracle_sweep);
criterion_main!(benches);
