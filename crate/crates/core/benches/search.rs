use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use tablepruner::bench::evaluate;
use tablepruner::forge::{forge_all, parse_instances, EmitterConfig, Trajectory};
use tablepruner::par::ExecMode;
use tablepruner::scoring::ScoreConfig;
use tablepruner::search::{SearchConfig, Strategy};
use tablepruner::synth::{generate_instances, SynthConfig};

fn corpus(n: usize) -> String {
    generate_instances(n, 7, &SynthConfig::default())
        .iter()
        .map(|i| serde_json::to_string(i).unwrap())
        .collect::<Vec<_>>()
        .join("\n")
}

const MODES: [(&str, ExecMode); 2] = [("sequential", ExecMode::Sequential), ("parallel", ExecMode::Parallel)];

fn forge(c: &mut Criterion) {
    let parsed = parse_instances(&corpus(64));
    let cfg = EmitterConfig::default();
    let mut g = c.benchmark_group("forge_all");
    for (name, mode) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &mode, |bch, &mode| {
            bch.iter(|| forge_all(&parsed, &cfg, None, mode))
        });
    }
    g.finish();
}

fn search(c: &mut Criterion) {
    let parsed = parse_instances(&corpus(64));
    let trajs: Vec<Trajectory> = forge_all(&parsed, &EmitterConfig::default(), None, ExecMode::Parallel)
        .forged
        .into_iter()
        .map(|f| f.trajectory)
        .collect();
    let mut g = c.benchmark_group("beam_search");
    for (name, mode) in MODES {
        let cfg =
            SearchConfig { beam_width: 2, branching: 2, max_depth: 4, strategy: Strategy::Beam, rng_seed: 1, exec_mode: mode };
        g.bench_with_input(BenchmarkId::from_parameter(name), &mode, |bch, &mode| {
            bch.iter(|| evaluate(&trajs, &cfg, 0.5, 3, ScoreConfig::default(), mode).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, forge, search);
criterion_main!(benches);
