use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use torus_critical::constants::{estimate_dk, ScheduleRule};
use torus_critical::experiment::{run_trials, ExperimentConfig};
use torus_critical::parallel::Execution;
use torus_critical::sampling::substream;

fn config(n: f64, trials: u64) -> ExperimentConfig {
    let mut c = ExperimentConfig::minimal(2, 1, n, trials, 1);
    c.schedule = ScheduleRule::Custom {
        log_n: 1.0,
        log_log_n: 1.0,
        log_log_log_n: 0.0,
        constant: 0.0,
    };
    c
}

fn trials(c: &mut Criterion) {
    let mut g = c.benchmark_group("trials");
    g.sample_size(10);
    for n in [1000.0, 4000.0] {
        let cfg = config(n, 64);
        let w = cfg.validate().unwrap();
        for (name, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
            g.bench_with_input(BenchmarkId::new(name, n), &exec, |b, &exec| {
                b.iter(|| run_trials(&cfg, &w, exec).unwrap())
            });
        }
    }
    g.finish();
}

fn dk_monte_carlo(c: &mut Criterion) {
    let mut g = c.benchmark_group("d2_in_d3");
    g.sample_size(10);
    for (name, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        g.bench_function(name, |b| {
            b.iter(|| estimate_dk(3, 2, 1 << 20, &mut substream(0, 0), exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, trials, dk_monte_carlo);
criterion_main!(benches);
