//! Benchmarks for the stages of the design-and-verify pipeline: the design
//! SDP solve, the exact worst-case oracle, the dense eigensolver, and the
//! full verification run.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use beamsdr_bench::protocol_instance;
use beamsdr_core::complex::herm_eig;
use beamsdr_core::duality::verify_duality;
use beamsdr_core::formulations::{build_wsp_sdr, sinr_margin_matrix};
use beamsdr_core::oracle::{extract_beamformers, trs_min};
use beamsdr_core::solver::SolveOptions;

fn bench_design_solve(c: &mut Criterion) {
    let inst = protocol_instance(7);
    let opts = SolveOptions::default();
    let mut group = c.benchmark_group("design");
    group.sample_size(10);
    group.bench_function("wsp_solve_4x4", |b| {
        b.iter_batched(
            || build_wsp_sdr(&inst),
            |wsp| black_box(wsp.solve(&opts)),
            BatchSize::SmallInput,
        )
    });
    group.finish();
}

fn bench_worst_case_oracle(c: &mut Criterion) {
    let inst = protocol_instance(7);
    let wsp = build_wsp_sdr(&inst);
    let sol = wsp.solve(&SolveOptions::default());
    let design = wsp.design_from(&sol);
    let q = sinr_margin_matrix(&inst, &design.w, 0);
    c.bench_function("trs_min_ball_search", |b| {
        b.iter(|| black_box(trs_min(&q, inst.channel(0), inst.radius(0))))
    });
    c.bench_function("herm_eig_4x4", |b| b.iter(|| black_box(herm_eig(&q))));
}

fn bench_full_verification(c: &mut Criterion) {
    let inst = protocol_instance(7);
    let opts = SolveOptions::default();
    let mut group = c.benchmark_group("pipeline");
    group.sample_size(10);
    group.bench_function("verify_duality_4x4", |b| {
        b.iter(|| black_box(verify_duality(&inst, &opts)))
    });
    group.bench_function("extract_beamformers", |b| {
        let wsp = build_wsp_sdr(&inst);
        let sol = wsp.solve(&opts);
        let design = wsp.design_from(&sol);
        b.iter(|| black_box(extract_beamformers(&inst, &design)))
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_design_solve,
    bench_worst_case_oracle,
    bench_full_verification
);
criterion_main!(benches);
