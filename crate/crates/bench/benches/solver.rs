use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gossip_rel_core::{solve, Params, Policy};
use std::hint::black_box;

fn bench_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve");
    for n in [10usize, 100, 1000, 10_000] {
        for policy in Policy::ALL {
            let params = Params::baseline(n, policy);
            group.bench_with_input(BenchmarkId::new(policy.as_str(), n), &params, |b, p| {
                b.iter(|| solve(black_box(p)).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench_solve);
criterion_main!(benches);
