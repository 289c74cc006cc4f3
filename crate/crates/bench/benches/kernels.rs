use bicfreeze::quadrature;
use bicfreeze::susy::{SeedSpec, TransformChain};
use bicfreeze::tdse::{self, Laplacian};
use bicfreeze::{ComplexField, Grid, Jet, RealField};
use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;

fn sin_jet(grid: &Grid, k: f64) -> Jet<f64> {
    Jet::sample(grid, |y: f64| (k * y).sin(), |y: f64| k * (k * y).cos())
}

fn cumulative_integral(c: &mut Criterion) {
    let mut group = c.benchmark_group("cumulative_integral");
    for nodes in [10_001, 100_001] {
        let grid = Grid::new(0.0, 80.0, nodes).unwrap();
        let f: RealField = grid.sample(|y| (y.sin()).powi(2));
        group.bench_with_input(BenchmarkId::from_parameter(nodes), &f, |b, f| {
            b.iter(|| quadrature::cumulative_integral(black_box(f), 0.0).unwrap())
        });
    }
    group.finish();
}

fn chain_construction(c: &mut Criterion) {
    let grid = Grid::new(0.0, 80.0, 80_001).unwrap();
    let mut group = c.benchmark_group("chain_construction");
    group.sample_size(20);
    for steps in [1usize, 2] {
        group.bench_function(BenchmarkId::from_parameter(steps), |b| {
            b.iter(|| {
                let seeds = (1..=steps)
                    .map(|j| {
                        let k = (j as f64).sqrt();
                        SeedSpec::with_derivative(k * k, sin_jet(&grid, k), j as f64, 0.0).unwrap()
                    })
                    .collect();
                TransformChain::from_base_seeds(RealField::zeros(grid), seeds).unwrap()
            })
        });
    }
    group.finish();
}

fn crank_nicolson_step(c: &mut Criterion) {
    let grid = Grid::new(0.0, 80.0, 16_001).unwrap();
    let v: RealField = grid.sample(|x| 1.0 / (1.0 + x * x));
    let phi0: ComplexField = grid.sample(|x| Complex64::new((-(x - 20.0).powi(2)).exp(), 0.0));
    let mut group = c.benchmark_group("crank_nicolson_step");
    for (name, laplacian) in [("three-point", Laplacian::ThreePoint), ("numerov", Laplacian::Numerov)] {
        group.bench_function(name, |b| {
            b.iter(|| tdse::step_with(black_box(&phi0), &v, &v, 1e-4, laplacian).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, cumulative_integral, chain_construction, crank_nicolson_step);
criterion_main!(benches);
