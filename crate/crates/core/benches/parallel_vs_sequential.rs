use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mfv_core::mesh::{gen_distorted_quads, gen_uniform_squares, Distortion, Mesh};
use mfv_core::par::Execution;
use mfv_core::problem::{case_lepotier, mesh_cell_data, ProblemCase};
use mfv_core::scheme::{
    assemble_hybrid, back_substitute, local_systems, solve_mfv, PenalizationPolicy, SchemeOptions,
};
use mfv_core::solver::sparse_cholesky;

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn meshes() -> Vec<(&'static str, Mesh)> {
    vec![
        ("squares-100", gen_uniform_squares(100).unwrap()),
        (
            "distorted-100",
            gen_distorted_quads(
                100,
                Distortion::Jitter {
                    amplitude: 0.2,
                    seed: 1,
                },
            )
            .unwrap(),
        ),
    ]
}

fn bench_local(c: &mut Criterion, case: &ProblemCase) {
    let mut group = c.benchmark_group("local_systems");
    let policy = PenalizationPolicy::default();
    for (name, mesh) in meshes() {
        let data = mesh_cell_data(&mesh, case, 2, Execution::Sequential).unwrap();
        for (mode, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(mode, name), &exec, |b, &exec| {
                b.iter(|| local_systems(black_box(&mesh), &data, &policy, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn bench_back_substitution(c: &mut Criterion, case: &ProblemCase) {
    let mut group = c.benchmark_group("back_substitution");
    let policy = PenalizationPolicy::default();
    for (name, mesh) in meshes() {
        let data = mesh_cell_data(&mesh, case, 2, Execution::Sequential).unwrap();
        let sys = assemble_hybrid(
            &mesh,
            &data,
            &policy,
            &case.dirichlet,
            Execution::Sequential,
        )
        .unwrap();
        let x = sparse_cholesky(&sys.matrix).unwrap().solve(&sys.rhs);
        let traces = sys.traces(&x);
        for (mode, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(mode, name), &exec, |b, &exec| {
                b.iter(|| back_substitute(black_box(&mesh), &sys.locals, &data, &traces, exec))
            });
        }
    }
    group.finish();
}

fn bench_full_solve(c: &mut Criterion, case: &ProblemCase) {
    let mut group = c.benchmark_group("full_solve");
    group.sample_size(10);
    for (name, mesh) in meshes() {
        for (mode, exec) in MODES {
            let opts = SchemeOptions {
                exec,
                ..Default::default()
            };
            group.bench_with_input(BenchmarkId::new(mode, name), &opts, |b, opts| {
                b.iter(|| solve_mfv(black_box(&mesh), case, opts).unwrap())
            });
        }
    }
    group.finish();
}

fn benches(c: &mut Criterion) {
    let case = case_lepotier();
    bench_local(c, &case);
    bench_back_substitution(c, &case);
    bench_full_solve(c, &case);
}

criterion_group!(parallel_vs_sequential, benches);
criterion_main!(parallel_vs_sequential);
