//! Compare the parallel replica driver against the sequential reference on
//! a representative workload: independent occupancy-chain replicas with
//! per-replica seeded streams, the exact shape the experiment harness uses.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use quasilab::occupancy::{LumpedKernel, Occupancy};
use quasilab::par;
use quasilab::params::ModelParams;
use quasilab::stream::replica_rng;

fn replica_workload(kern: &LumpedKernel, steps: usize, seed: u64, rep: usize) -> usize {
    let mut rng = replica_rng(seed, rep as u64);
    let mut o = Occupancy::all_at_class(kern.ell, kern.m, 0);
    for _ in 0..steps {
        o = kern.step(&o, &mut rng);
    }
    o[0]
}

fn bench_drivers(c: &mut Criterion) {
    let params = ModelParams::new(20, 200, 2, 0.005, 2.0, 2, 0.1, 10.0).unwrap();
    let kern = LumpedKernel::new(&params).unwrap();
    let steps = 200;
    let mut group = c.benchmark_group("replica_map");
    for &replicas in &[4usize, 16] {
        group.bench_with_input(
            BenchmarkId::new("parallel", replicas),
            &replicas,
            |b, &n| {
                b.iter(|| {
                    par::map_indexed(n, |rep| replica_workload(&kern, steps, 7, rep))
                        .iter()
                        .sum::<usize>()
                })
            },
        );
        group.bench_with_input(
            BenchmarkId::new("sequential", replicas),
            &replicas,
            |b, &n| {
                b.iter(|| {
                    par::map_indexed_seq(n, |rep| replica_workload(&kern, steps, 7, rep))
                        .iter()
                        .sum::<usize>()
                })
            },
        );
    }
    group.finish();
}

criterion_group!(benches, bench_drivers);
criterion_main!(benches);
