use criterion::{criterion_group, criterion_main, Criterion};

use dream_core::config::Config;
use dream_core::fingerprint::{build_query_set, collect_fingerprint};
use dream_core::par;
use dream_core::zoo::{gen_synthetic_domains, plan_zoo, train_model, AttributeGrid};

fn bench(c: &mut Criterion) {
    let mut cfg = Config::default();
    cfg.data.samples_per_class = 24;
    cfg.zoo.train.epochs = 1;
    let data = gen_synthetic_domains(1, &cfg.data.specs()).unwrap();
    let plan = plan_zoo(2, &AttributeGrid::full(), data.len(), 8, cfg.data.classes, cfg.data.side, cfg.zoo.train.widths())
        .unwrap();

    let mut g = c.benchmark_group("zoo_training");
    g.sample_size(10);
    g.bench_function("parallel", |b| {
        b.iter(|| par::map(&plan.models, |p| train_model(p, &data[p.domain], &cfg.zoo.train).unwrap().val_acc))
    });
    g.bench_function("sequential", |b| {
        b.iter(|| par::map_sequential(&plan.models, |p| train_model(p, &data[p.domain], &cfg.zoo.train).unwrap().val_acc))
    });
    g.finish();

    let nets: Vec<_> = plan
        .models
        .iter()
        .map(|p| train_model(p, &data[p.domain], &cfg.zoo.train).unwrap().network)
        .collect();
    let queries = build_query_set(&data, &[0, 1], cfg.fingerprint.queries, None, 3).unwrap();
    let mut g = c.benchmark_group("fingerprints");
    g.bench_function("parallel", |b| {
        b.iter(|| par::map(&nets, |n| collect_fingerprint(n, &queries, cfg.data.classes).unwrap()))
    });
    g.bench_function("sequential", |b| {
        b.iter(|| par::map_sequential(&nets, |n| collect_fingerprint(n, &queries, cfg.data.classes).unwrap()))
    });
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
