//! Compares the sequential and data-parallel sweep paths on a small
//! repeated-game battery.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use ffp::envs::uav_game;
use ffp::harness::{sweep_matrix, MatrixAlgo, MatrixSweepParams};
use ffp::learn::StepSchedule;

fn small_params() -> MatrixSweepParams {
    MatrixSweepParams {
        algos: vec![MatrixAlgo::Gwfp, MatrixAlgo::Ffp],
        eps_grid: vec![0.0, 0.2, 0.4],
        seeds: 8,
        base_seed: 11,
        iterations: 2_000,
        schedule: StepSchedule::classical(),
        assumed_eps: None,
        initial_joint: None,
        window: None,
        tol: None,
    }
}

fn bench_sweep(c: &mut Criterion) {
    let game = uav_game();
    let params = small_params();
    let mut group = c.benchmark_group("matrix_sweep");
    group.sample_size(10);
    for (label, workers) in [("sequential", 1usize), ("parallel", 0usize)] {
        group.bench_with_input(BenchmarkId::from_parameter(label), &workers, |b, &w| {
            b.iter(|| sweep_matrix(&game, &params, w).unwrap());
        });
    }
    group.finish();
}

criterion_group!(benches, bench_sweep);
criterion_main!(benches);
