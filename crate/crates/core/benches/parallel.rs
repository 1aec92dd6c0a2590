use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use mscflp::clock::ClockKind;
use mscflp::engine::{Timeout, Variant};
use mscflp::generate::{generate_instance, GeneratorConfig};
use mscflp::harness::{run_benchmark, BenchmarkSpec};
use mscflp::oracle::solve_exact_with;
use mscflp::par::Execution;

fn modes() -> [(&'static str, Execution); 2] {
    [("sequential", Execution::Sequential), ("parallel", Execution::parallel())]
}

fn oracle(c: &mut Criterion) {
    let inst = generate_instance(3, &GeneratorConfig::new(6, 4, 0.2));
    let mut group = c.benchmark_group("oracle_6x4");
    for (name, exec) in modes() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| solve_exact_with(&inst, exec).unwrap())
        });
    }
    group.finish();
}

fn matrix(c: &mut Criterion) {
    let instances: Vec<_> = (0..4)
        .map(|k| (format!("g{k}"), generate_instance(k, &GeneratorConfig::new(25, 8, 0.05))))
        .collect();
    let mut group = c.benchmark_group("benchmark_matrix");
    group.sample_size(10);
    for (name, exec) in modes() {
        let mut spec = BenchmarkSpec::new(instances.clone(), vec![Variant::INIT_ACCEPT], 2, Timeout::Seconds(0.5));
        spec.clock = ClockKind::Logical { seconds_per_node: 1e-3 };
        spec.execution = exec;
        group.bench_function(name, |b| b.iter(|| run_benchmark(&spec)));
    }
    group.finish();
}

criterion_group!(benches, oracle, matrix);
criterion_main!(benches);
