use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion, Throughput};

use nfcsim_bench::payload;
use nfcsim_core::roleswitch::{run_disabling_enabling, run_enabling_disabling, ProtocolConfig, Simulation};
use nfcsim_core::transfer::{assemble, fragment};
use nfcsim_core::workloads::nqueens_count;
use nfcsim_core::{SimClock, SimTime};

fn nqueens(c: &mut Criterion) {
    let mut g = c.benchmark_group("nqueens");
    for n in [8u32, 10, 12] {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| b.iter(|| nqueens_count(n).unwrap()));
    }
    g.finish();
}

fn clock(c: &mut Criterion) {
    c.bench_function("clock/schedule_pop_10k", |b| {
        b.iter_batched(
            SimClock::<u32>::new,
            |mut clock| {
                for i in 0..10_000u64 {
                    clock.schedule(SimTime::from_micros((i * 7919) % 100_000), i as u32).unwrap();
                }
                while clock.pop().is_some() {}
                clock
            },
            BatchSize::SmallInput,
        )
    });
}

fn protocols(c: &mut Criterion) {
    let sim = Simulation::deterministic();
    let de = ProtocolConfig::disabling_enabling(700);
    let ed = ProtocolConfig::enabling_disabling(310, 100);
    let mut g = c.benchmark_group("round_trips_50");
    g.bench_function("disabling_enabling", |b| b.iter(|| run_disabling_enabling(&de, &sim, 50, 2048).unwrap()));
    g.bench_function("enabling_disabling", |b| b.iter(|| run_enabling_disabling(&ed, &sim, 50, 2048).unwrap()));
    g.finish();
}

fn chunking(c: &mut Criterion) {
    let mut g = c.benchmark_group("fragment_assemble");
    for len in [2048usize, 65_536, 204_800] {
        let m = payload(len);
        g.throughput(Throughput::Bytes(len as u64));
        g.bench_with_input(BenchmarkId::from_parameter(len), &m, |b, m| b.iter(|| assemble(&fragment(m).unwrap())));
    }
    g.finish();
}

criterion_group!(benches, nqueens, clock, protocols, chunking);
criterion_main!(benches);
