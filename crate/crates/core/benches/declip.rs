use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use spade_core::experiments::{make_synthetic, SyntheticSpec};
use spade_core::{declip_segmented, hard_clip, Algorithm, Execution, SpadeParams, TransformConfig};

fn segmented(c: &mut Criterion) {
    let x = make_synthetic(&SyntheticSpec::sparse_sines(5).with_duration(1.0), 7).unwrap();
    let (y, mask) = hard_clip(&x, 0.3).unwrap();
    let cfg = TransformConfig::default();
    let params = SpadeParams::default();

    let mut group = c.benchmark_group("declip_segmented");
    group.sample_size(10);
    for algo in Algorithm::ALL {
        for exec in [Execution::Sequential, Execution::Parallel] {
            let id = BenchmarkId::new(algo.name(), format!("{exec:?}"));
            group.bench_with_input(id, &exec, |b, &exec| {
                b.iter(|| declip_segmented(&y, &mask, &cfg, algo, &params, exec).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, segmented);
criterion_main!(benches);
