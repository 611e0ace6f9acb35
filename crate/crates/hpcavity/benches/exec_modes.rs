use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hpcavity::dipole::{steady_state_sweep, DriveField, SolveOptions};
use hpcavity::greens::{in_plane_collective_rates, RealSpaceSum};
use hpcavity::lattice::{build_bilayer, LatticeSpec};
use hpcavity::{Exec, Vec3, K};

fn modes() -> [(&'static str, Exec); 2] {
    [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)]
}

fn lattice_sum(c: &mut Criterion) {
    let mut g = c.benchmark_group("lattice_sum");
    g.sample_size(10);
    let lat = LatticeSpec::square(0.8);
    let opts = RealSpaceSum { damping: [10.0, 20.0, 40.0], ..Default::default() };
    for (name, exec) in modes() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| in_plane_collective_rates(black_box([0.0, 0.0]), &lat, &Vec3::x(), K, opts, exec).unwrap())
        });
    }
    g.finish();
}

fn detuning_sweep(c: &mut Criterion) {
    let mut g = c.benchmark_group("detuning_sweep");
    g.sample_size(10);
    let stack = build_bilayer(5.55, 0.8, 12, f64::INFINITY, Vec3::x()).unwrap();
    let drive = DriveField::plane_wave(DriveField::linear_x());
    let deltas: Vec<f64> = (0..32).map(|i| -0.5 + i as f64 / 31.0).collect();
    for (name, exec) in modes() {
        let opts = SolveOptions { exec, ..Default::default() };
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| steady_state_sweep(&stack, &drive, black_box(&deltas), opts).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, lattice_sum, detuning_sweep);
criterion_main!(benches);
