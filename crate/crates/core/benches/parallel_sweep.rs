//! Region sweeps through the crate's data-parallel map against a hand-rolled
//! sequential loop over the same predicate evaluations. Built with the
//! default `parallel` feature the first series uses rayon; built with
//! `--no-default-features` both series run sequentially and should coincide.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ghzpurify::metrics::{region_sweep, GridSpec, RegionPredicate, SweepPoint};

fn sequential_sweep(
    f1_axis: &GridSpec,
    f2_axis: &GridSpec,
    predicate: RegionPredicate,
) -> Vec<SweepPoint> {
    let mut out = Vec::new();
    for f1 in f1_axis.points() {
        for f2 in f2_axis.points() {
            out.push(SweepPoint { f1, f2, value: predicate.evaluate(f1, f2).unwrap() });
        }
    }
    out
}

fn bench_sweeps(c: &mut Criterion) {
    let cases = [
        ("residual_gain", RegionPredicate::ResidualGain, 101u32),
        ("either_recovery_gain", RegionPredicate::EitherRecoveryGain, 101),
        ("multiround_r3", RegionPredicate::MultiroundGain(3), 61),
    ];
    for (name, predicate, steps) in cases {
        let axis = GridSpec::new(0.0, 1.0, steps).unwrap();
        let mut group = c.benchmark_group(name);
        group.bench_with_input(BenchmarkId::new("par_map", steps), &axis, |b, axis| {
            b.iter(|| region_sweep(axis, axis, predicate).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("sequential", steps), &axis, |b, axis| {
            b.iter(|| sequential_sweep(axis, axis, predicate))
        });
        group.finish();
    }
}

criterion_group!(benches, bench_sweeps);
criterion_main!(benches);
