use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use kservice_bench::{blobs, cost_matrix};
use kservice_core::flow::min_cost_matching;
use kservice_core::instances::GenMode;
use kservice_core::list::build_list;
use kservice_core::solver::{solve_with_list, SolveOptions};
use kservice_core::streaming::{build_representative_graph, stream_solve, MemoryStream, StreamContext};
use kservice_core::{partition, AlgorithmParams, CenterSet, ConstraintSpec};

fn bench_matching(c: &mut Criterion) {
    let mut group = c.benchmark_group("matching");
    for n in [8usize, 32, 96] {
        let costs = cost_matrix(n, n + n / 2, 1);
        group.bench_with_input(BenchmarkId::from_parameter(n), &costs, |b, costs| {
            b.iter(|| min_cost_matching(black_box(costs), n).unwrap())
        });
    }
    group.finish();
}

fn bench_partition(c: &mut Criterion) {
    let mut group = c.benchmark_group("partition");
    let inst = blobs(200, 12, 3, GenMode::Euclidean, 2);
    let centers = CenterSet::new(vec![0, 4, 9], 12).unwrap();
    let specs = [
        ConstraintSpec::Unconstrained,
        ConstraintSpec::RGather { r: vec![60, 60, 50] },
        ConstraintSpec::RCapacity { r: vec![80, 80, 70] },
        ConstraintSpec::Outlier { m: 10 },
    ];
    for spec in &specs {
        group.bench_with_input(BenchmarkId::from_parameter(spec.name()), spec, |b, spec| {
            b.iter(|| partition(&inst, &centers, black_box(spec)).unwrap())
        });
    }
    group.finish();
}

fn bench_list_and_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("list");
    group.sample_size(10);
    let inst = blobs(300, 40, 3, GenMode::Euclidean, 3);
    let params = AlgorithmParams::practical(3, 0.5).unwrap();
    group.bench_function("build", |b| b.iter(|| build_list(&inst, 3, &params, black_box(7)).unwrap()));
    let inst = blobs(60, 12, 2, GenMode::Euclidean, 3);
    let params = params.with_eta(10).with_repetitions(2);
    let list = build_list(&inst, 2, &params, 7).unwrap();
    let spec = ConstraintSpec::RCapacity { r: vec![35, 35] };
    group.bench_function("solve_r_capacity", |b| {
        b.iter(|| solve_with_list(&inst, &list, black_box(&spec), 7, &SolveOptions::default()).unwrap())
    });
    group.finish();
}

fn bench_streaming(c: &mut Criterion) {
    let mut group = c.benchmark_group("streaming");
    group.sample_size(10);
    let inst = blobs(2000, 20, 4, GenMode::Euclidean, 4);
    let ctx = StreamContext::from_instance(&inst);
    let centers = CenterSet::new(vec![1, 6, 11, 16], 20).unwrap();
    for eps in [0.1, 0.5] {
        group.bench_with_input(BenchmarkId::new("representative_graph", eps), &eps, |b, &eps| {
            b.iter(|| build_representative_graph(&mut MemoryStream::from_instance(&inst), &ctx, &centers, eps).unwrap())
        });
    }
    let small = blobs(120, 10, 2, GenMode::Euclidean, 5);
    let small_ctx = StreamContext::from_instance(&small);
    let params = AlgorithmParams::practical(2, 0.5).unwrap().with_eta(10).with_repetitions(2);
    let spec = ConstraintSpec::RGather { r: vec![40, 40] };
    group.bench_function("solve_r_gather", |b| {
        b.iter(|| {
            stream_solve(&mut MemoryStream::from_instance(&small), &small_ctx, 2, &spec, &params, 0.25, None, black_box(3))
                .unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, bench_matching, bench_partition, bench_list_and_solve, bench_streaming);
criterion_main!(benches);
