use criterion::{criterion_group, criterion_main, Criterion};
use drn_bench::short_scenario;
use drn_core::experiments::FleetKind;
use drn_core::run_episode;

fn episode(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_episode_50_steps");
    group.sample_size(20);
    for kind in [FleetKind::Dynamic, FleetKind::Fixed] {
        let mut config = short_scenario(50);
        config.fleet.kind = kind;
        group.bench_function(format!("{kind:?}"), |b| {
            b.iter(|| run_episode(&config, 7).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, episode);
criterion_main!(benches);
