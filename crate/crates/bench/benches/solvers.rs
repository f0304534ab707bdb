use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use irsdm::gai::{ga_optimize_theta, initial_precoders};
use irsdm::nsp::NspOptions;
use irsdm::{build_system, run_gai, run_nsp, sweep_sr_vs_m, BenchOptions, GaOptions, Scheme, SignalModel, SystemConfig};

fn solvers(c: &mut Criterion) {
    let mut g = c.benchmark_group("solver");
    g.sample_size(10);
    for m in [10usize, 40, 100] {
        let cfg = SystemConfig { m, ..SystemConfig::default() };
        let (_, ch) = build_system(&cfg).unwrap();
        g.bench_with_input(BenchmarkId::new("gai", m), &m, |b, _| {
            b.iter(|| run_gai(black_box(&cfg), &ch, &GaOptions::default()).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("nsp", m), &m, |b, _| {
            b.iter(|| run_nsp(black_box(&cfg), &ch, &NspOptions::default()).unwrap())
        });
    }
    g.finish();
}

fn phase_ascent(c: &mut Criterion) {
    let mut g = c.benchmark_group("ga_optimize_theta");
    for m in [10usize, 40, 100] {
        let cfg = SystemConfig { m, ..SystemConfig::default() };
        let (_, ch) = build_system(&cfg).unwrap();
        let model = SignalModel::new(&cfg, &ch).unwrap();
        let p = initial_precoders(&model);
        let pb = model.phase_blocks(&p.v1, &p.v2);
        g.bench_with_input(BenchmarkId::from_parameter(m), &m, |b, _| {
            b.iter(|| ga_optimize_theta(black_box(&p.theta), &pb, &GaOptions::default()).unwrap())
        });
    }
    g.finish();
}

fn sweep(c: &mut Criterion) {
    let mut g = c.benchmark_group("sweep");
    g.sample_size(10);
    let cfg = SystemConfig::default();
    let ms: Vec<usize> = (1..=10).map(|i| 10 * i).collect();
    g.bench_function("sr_vs_m_gai_nsp", |b| {
        b.iter(|| sweep_sr_vs_m(&cfg, &ms, &[Scheme::Gai, Scheme::Nsp], &BenchOptions::default()).unwrap())
    });
    g.finish();
}

criterion_group!(benches, solvers, phase_ascent, sweep);
criterion_main!(benches);
