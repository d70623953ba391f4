use criterion::{black_box, criterion_group, criterion_main, Criterion};
use po_miner_bench::{alphabet, random_lpo, two_consumer_place};
use po_miner_core::{classify_lpo, extend_with_endpoints, maxflow_classify};

fn bench_classify(c: &mut Criterion) {
    let sigma = alphabet(5);
    let lpo = extend_with_endpoints(&random_lpo(7, 200, &sigma, 0.05));
    let place = two_consumer_place(&sigma);
    let mut group = c.benchmark_group("tokenflow_200_nodes");
    group.bench_function("ladder", |b| {
        b.iter(|| classify_lpo(black_box(&place), black_box(&lpo)))
    });
    group.bench_function("maxflow", |b| {
        b.iter(|| maxflow_classify(black_box(&place), black_box(&lpo)))
    });
    group.finish();
}

criterion_group!(benches, bench_classify);
criterion_main!(benches);
