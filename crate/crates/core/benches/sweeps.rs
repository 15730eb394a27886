//! Sequential vs rayon execution of the main sweeps. Outputs are identical
//! either way; only the wall clock differs.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gmplab::gentle::{gmp_sweep, lemma_sweep};
use gmplab::info::lemma35_sweep;
use gmplab::vandam::{simulate, ProtocolConfig, Targets};
use gmplab::Execution;

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn vandam_mc(c: &mut Criterion) {
    let mut g = c.benchmark_group("vandam_mc");
    g.sample_size(10);
    for n in [4u32, 8] {
        let cfg = ProtocolConfig::new(n, 0.5, 20_000, 1).unwrap();
        for (name, exec) in MODES {
            g.bench_with_input(BenchmarkId::new(name, n), &cfg, |b, cfg| {
                b.iter(|| simulate(black_box(cfg), &Targets::All, exec).unwrap())
            });
        }
    }
    g.finish();
}

fn gentle_lemma(c: &mut Criterion) {
    let mut g = c.benchmark_group("gentle_lemma_sweep");
    g.sample_size(10);
    for dim in [2usize, 6] {
        for (name, exec) in MODES {
            g.bench_with_input(BenchmarkId::new(name, dim), &dim, |b, &dim| {
                b.iter(|| lemma_sweep(dim, 1000, black_box(7), exec).unwrap())
            });
        }
    }
    g.finish();
}

fn disturbance(c: &mut Criterion) {
    let mut g = c.benchmark_group("gmp_sweep");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| gmp_sweep(200, black_box(3), exec).unwrap()));
    }
    g.finish();
}

fn averaging(c: &mut Criterion) {
    let mut g = c.benchmark_group("lemma35_sweep");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| lemma35_sweep(2000, black_box(5), exec).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, vandam_mc, gentle_lemma, disturbance, averaging);
criterion_main!(benches);
