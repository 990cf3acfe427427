use criterion::{black_box, criterion_group, criterion_main, Criterion};
use hybrid_inclusions::exec::Exec;
use hybrid_inclusions::fixtures;
use hybrid_inclusions::reach::{reach_interval, Initial, ReachConfig};
use hybrid_inclusions::sets::SetSpec;

fn reach_modes(c: &mut Criterion) {
    let h = fixtures::bouncing_ball(1.0, 0.5).unwrap().system;
    let x0 = Initial::Set { set: SetSpec::All(2), lo: vec![0.5, -0.5], hi: vec![1.5, 0.5] };
    let mut g = c.benchmark_group("reach_interval ball");
    g.sample_size(10);
    for (name, exec) in [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)] {
        let cfg = ReachConfig { exec, set_samples: 64, ..ReachConfig::default() };
        g.bench_function(name, |b| b.iter(|| reach_interval(&h, black_box(&x0), 0.0, 3.0, 2, &cfg, 7).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, reach_modes);
criterion_main!(benches);
