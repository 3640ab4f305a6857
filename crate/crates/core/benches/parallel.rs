use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;
use shellfield::exec;
use shellfield::rf::{self, ModeSet};
use shellfield::shell::{self, KernelKind, ShellConfig};
use shellfield::testfn::{GridBump, TestFunction};

fn modes(set: &[(f64, f64)]) -> ModeSet {
    ModeSet::new(
        set.iter()
            .enumerate()
            .map(|(i, &(t, x))| {
                let f = TestFunction::gaussian(Complex64::new(1.0, 0.0), &[t, x], &[1.0, 0.9], &[0.0, 0.0]).unwrap();
                (format!("m{i}"), f)
            })
            .collect(),
    )
    .unwrap()
}

fn bench(c: &mut Criterion) {
    let cfg = ShellConfig::new(1.0, 2).unwrap();
    let f = TestFunction::grid(GridBump::standard_bump(&[0.0, 0.0], 1.0, 121).unwrap());
    let g = TestFunction::grid(GridBump::modulated_bump(&[5.0, 0.0], 1.0, 121, &[0.5, 0.3]).unwrap());
    let packets = [(0.0, 0.0), (0.5, 0.3), (-0.4, 1.0), (1.1, -0.7)];
    let gm = rf::gram(&modes(&packets), KernelKind::Classical, &cfg).unwrap();
    let cfg3 = ShellConfig::new(1.0, 3).unwrap();
    let p3 = TestFunction::gaussian(Complex64::new(1.0, 0.0), &[0.0; 3], &[1.0; 3], &[0.5, 0.2, 0.0]).unwrap();

    let mut group = c.benchmark_group("exec");
    for (name, parallel) in [("parallel", true), ("sequential", false)] {
        exec::set_parallel(parallel);
        group.bench_function(BenchmarkId::new("grid_bump_quantum_ip", name), |b| {
            b.iter(|| shell::quantum_ip(&f, &g, &cfg).unwrap())
        });
        group.bench_function(BenchmarkId::new("packet_quantum_ip_d3", name), |b| {
            b.iter(|| shell::quantum_ip(&p3, &p3, &cfg3).unwrap())
        });
        group.bench_function(BenchmarkId::new("sample_100k", name), |b| b.iter(|| rf::sample(&gm, 100_000, 1).unwrap()));
    }
    exec::set_parallel(true);
    group.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = bench
}
criterion_main!(benches);
