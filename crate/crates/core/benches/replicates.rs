use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use coda_lab::harness::{derive_stream, map_reps, with_execution, Execution, SETUP_STREAM};
use coda_lab::sequence::{least_favorable_sample, linear_estimate, sample_wn, LinearFunctional};

fn replicates(c: &mut Criterion) {
    let k = 2000;
    let beta = least_favorable_sample(0.8, k, &mut derive_stream(7, SETUP_STREAM)).unwrap();
    let g = LinearFunctional::new((1..=k).map(|i| 1.0 / i as f64).collect());
    let mut group = c.benchmark_group("sequence-model replicates");
    group.sample_size(20);
    let modes = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];
    for (name, mode) in modes {
        group.bench_with_input(BenchmarkId::new(name, 2000), &mode, |b, &mode| {
            b.iter(|| {
                with_execution(mode, || {
                    let v = map_reps(2000, |r| {
                        let obs = sample_wn(&beta, 1e4, &mut derive_stream(1, r as u64)).unwrap();
                        linear_estimate(&g, &obs).unwrap()
                    });
                    black_box(v.iter().sum::<f64>())
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, replicates);
criterion_main!(benches);
