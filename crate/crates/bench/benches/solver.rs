use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use gauss_polytope_core::grid::{build_grid, TruncationBox};
use gauss_polytope_core::kernel::LineKernel;
use gauss_polytope_core::{mc_estimate, solve_with, transition_row, PolytopeProblem, SolveOptions};

fn figure2() -> PolytopeProblem {
    PolytopeProblem::from_rows(&[[0.5, 0.7, 1.0, 0.9], [0.2, 0.7, 0.5, 1.0]], &[2.0, 0.5]).unwrap()
}

fn kernel(c: &mut Criterion) {
    let grid = build_grid(&TruncationBox::cube(5.0, 2).unwrap(), 0.005).unwrap();
    c.bench_function("transition_row", |b| {
        b.iter(|| transition_row(black_box(&[0.3, -0.7]), black_box(&[0.7, 0.7]), &grid).unwrap())
    });
    c.bench_function("line_kernel_build", |b| {
        b.iter(|| LineKernel::new(black_box(&[1.0, 0.5]), &[0.0035, 0.0035]))
    });
}

fn solver(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_figure2");
    group.sample_size(10);
    let p = figure2();
    for n in [25.0, 100.0] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| solve_with(&p, &SolveOptions::from_n(n)).unwrap().estimate)
        });
    }
    group.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let p = figure2();
    c.bench_function("mc_100k", |b| {
        b.iter(|| mc_estimate(&p, 100_000, 42).unwrap())
    });
}

criterion_group!(benches, kernel, solver, monte_carlo);
criterion_main!(benches);
