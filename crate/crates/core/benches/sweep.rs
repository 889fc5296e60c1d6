use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use nld_stability::model::{make_model, Family};
use nld_stability::par::Exec;
use nld_stability::profile::Resolution;
use nld_stability::sweep::{open_grid, run_sweep, SpectrumOptions, SweepConfig};

fn config(exec: Exec, spectrum: bool) -> SweepConfig {
    SweepConfig {
        model: make_model(Family::Gn, 2.0, 1.0).unwrap(),
        omegas: open_grid(0.1, 0.9, 8),
        resolution: Resolution::with_points(129),
        spectrum: spectrum.then(SpectrumOptions::default),
        adaptive: false,
        refine_window: 0.05,
        exec,
        cache: None,
    }
}

fn sweeps(c: &mut Criterion) {
    faer::set_global_parallelism(faer::Par::Seq);
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    for (name, spectrum) in [("functionals", false), ("spectra", true)] {
        for exec in [Exec::Sequential, Exec::Parallel] {
            let cfg = config(exec, spectrum);
            group.bench_with_input(BenchmarkId::new(name, format!("{exec:?}")), &cfg, |b, cfg| {
                b.iter(|| run_sweep(cfg))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, sweeps);
criterion_main!(benches);
