use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use qpos_core::bwsim::{default_t_grid, gbr_norm_bound, BoundaryWeightSpec};
use qpos_core::corner::{max_corner_norm_rank_one, maximally_mixed};
use qpos_core::gen::Gen;
use qpos_core::qorder::{default_grid, is_q_positive, limit_map};
use qpos_core::qpure::classify_q_pure;
use qpos_core::superop::{choi, is_completely_positive, state_map, CP_TOL};

fn cp_check(c: &mut Criterion) {
    let mut g = c.benchmark_group("cp_check");
    for n in [2usize, 4, 8] {
        let phi = Gen::new(1).random_cp_map(n, 3);
        g.bench_with_input(BenchmarkId::from_parameter(n), &phi, |b, phi| {
            b.iter(|| is_completely_positive(black_box(phi), CP_TOL).unwrap())
        });
    }
    g.finish();
    let phi = Gen::new(2).random_cp_map(4, 3);
    c.bench_function("choi_4", |b| b.iter(|| choi(black_box(&phi)).unwrap()));
}

fn q_positivity(c: &mut Criterion) {
    let grid = default_grid();
    let mut g = c.benchmark_group("q_positive");
    g.sample_size(20);
    for n in [2usize, 3, 4] {
        let phi = Gen::new(3).random_q_positive(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &phi, |b, phi| {
            b.iter(|| is_q_positive(black_box(phi), &grid, CP_TOL).unwrap())
        });
    }
    g.finish();
    let phi = Gen::new(4).random_invertible_unital_q_positive(3);
    c.bench_function("limit_map_3", |b| b.iter(|| limit_map(black_box(&phi)).unwrap()));
    c.bench_function("classify_3", |b| b.iter(|| classify_q_pure(black_box(&phi)).unwrap()));
}

fn corner_norm(c: &mut Criterion) {
    let mut gen = Gen::new(5);
    let d1 = gen.random_faithful_density(3);
    let d2 = gen.random_faithful_density(3);
    let mut g = c.benchmark_group("corner_norm");
    g.sample_size(10);
    g.bench_function("rank_one_3", |b| b.iter(|| max_corner_norm_rank_one(black_box(&d1), &d2, 0).unwrap()));
    g.finish();
}

fn boundary_weights(c: &mut Criterion) {
    let phi = state_map(&maximally_mixed(2)).unwrap();
    let spec = BoundaryWeightSpec::indicator01();
    let grid = default_t_grid();
    c.bench_function("gbr_norm_bound_99", |b| b.iter(|| gbr_norm_bound(black_box(&phi), &spec, &grid).unwrap()));
}

criterion_group!(benches, cp_check, q_positivity, corner_norm, boundary_weights);
criterion_main!(benches);
