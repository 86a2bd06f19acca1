use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use infosell::corpus::random_instance;
use infosell::lp_oracle;
use infosell::model::{three_type_example, uniform_product};
use infosell::optimal_mechanism::solve;

fn bench_solve(c: &mut Criterion) {
    let small = three_type_example();
    c.bench_function("solve/three_type", |b| b.iter(|| solve(&small).unwrap()));

    let mut group = c.benchmark_group("solve/uniform_product");
    for n in [100usize, 400, 1000] {
        let inst = uniform_product(0.0, 10.0, 0.0, 10.0, -30.0, n, n).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &inst, |b, inst| {
            b.iter(|| solve(inst).unwrap())
        });
    }
    group.finish();
}

fn bench_oracle(c: &mut Criterion) {
    let insts: Vec<_> = (0..8).map(random_instance).collect();
    c.bench_function("lp_oracle/random_small", |b| {
        b.iter(|| {
            for inst in &insts {
                lp_oracle::oracle(inst).unwrap();
            }
        })
    });
}

criterion_group!(benches, bench_solve, bench_oracle);
criterion_main!(benches);
