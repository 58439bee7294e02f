use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use layerdg::{assemble, factor, DgSpace, ManufacturedSolution, MeshFamily, PenaltyParams};
use layerdg_bench::bench_mesh;

const EPS: f64 = 1e-8;

fn mesh_generation(c: &mut Criterion) {
    let mut g = c.benchmark_group("mesh");
    for family in [MeshFamily::Shishkin, MeshFamily::BakhvalovShishkin, MeshFamily::Bakhvalov] {
        g.bench_with_input(BenchmarkId::from_parameter(family), &family, |b, &f| {
            b.iter(|| bench_mesh(f, black_box(EPS), 256, 1))
        });
    }
    g.finish();
}

fn assembly(c: &mut Criterion) {
    let problem = ManufacturedSolution::new(EPS).unwrap();
    let mut g = c.benchmark_group("assemble");
    g.sample_size(10);
    for (k, n) in [(1, 16), (1, 32), (2, 16)] {
        let mesh = bench_mesh(MeshFamily::Shishkin, EPS, n, k);
        let space = DgSpace::new(&mesh, k).unwrap();
        g.bench_function(format!("k{k}_n{n}"), |b| {
            b.iter(|| assemble(&problem, &space, PenaltyParams::default_for(EPS)).unwrap())
        });
    }
    g.finish();
}

fn factorization(c: &mut Criterion) {
    let problem = ManufacturedSolution::new(EPS).unwrap();
    let mut g = c.benchmark_group("factor");
    g.sample_size(10);
    for (k, n) in [(1, 16), (1, 32), (2, 16)] {
        let mesh = bench_mesh(MeshFamily::Shishkin, EPS, n, k);
        let space = DgSpace::new(&mesh, k).unwrap();
        let system = assemble(&problem, &space, PenaltyParams::default_for(EPS)).unwrap();
        g.bench_function(format!("k{k}_n{n}"), |b| {
            b.iter(|| {
                let f = factor(&system).unwrap();
                f.solve(&system.rhs).unwrap()
            })
        });
    }
    g.finish();
}

criterion_group!(benches, mesh_generation, assembly, factorization);
criterion_main!(benches);
