use criterion::{black_box, criterion_group, criterion_main, Criterion};

use lab_bench::{random_ring, random_rule};
use lab_core::coding::{GfContext, RsCode};
use lab_core::colony::{ColonyLayout, ColonySimulator, Variant};
use lab_core::dynamics::step_deterministic;
use lab_core::fault::{perturbed_step, FaultModel};
use lab_core::toom::{toom_step, ToomGrid, ToomRun};
use lab_core::{CellStreams, Configuration, MasterSeed};

fn bench_ring_step(c: &mut Criterion) {
    let tr = random_rule(2, 1);
    let cfg = random_ring(2, 256, 2);
    c.bench_function("step_deterministic/ring256", |b| {
        b.iter(|| step_deterministic(black_box(&cfg), &tr).unwrap())
    });
}

fn bench_perturbed_step(c: &mut Criterion) {
    let tr = random_rule(2, 3);
    let cfg = random_ring(2, 256, 4);
    let fm = FaultModel::uniform_wrong(0.01, 2).unwrap();
    c.bench_function("perturbed_step/ring256_eps0.01", |b| {
        let mut streams = CellStreams::new(MasterSeed(5), 0, 256);
        b.iter(|| perturbed_step(black_box(&cfg), &tr, &fm, &mut streams).unwrap())
    });
}

fn bench_toom(c: &mut Criterion) {
    let grid = ToomGrid::new(50).with_triangle(10, 10, 20);
    c.bench_function("toom_step/50x50", |b| {
        b.iter(|| toom_step(black_box(&grid)))
    });
    c.bench_function("toom_noisy_step/50x50_eps0.01", |b| {
        let fm = FaultModel::uniform_wrong(0.01, 1).unwrap();
        let mut run = ToomRun::new(ToomGrid::filled(50, 0), fm, MasterSeed(6), 0);
        b.iter(|| run.step())
    });
}

fn bench_rs(c: &mut Criterion) {
    let rs = RsCode::new(GfContext::standard(1).unwrap(), 10, 3).unwrap();
    let info = vec![5u64, 20, 33, 1];
    let word = rs.encode(&info).unwrap();
    let mut corrupted = word.clone();
    corrupted[1] ^= 9;
    corrupted[4] ^= 61;
    corrupted[8] ^= 2;
    c.bench_function("rs_encode/n10_t3", |b| {
        b.iter(|| rs.encode(black_box(&info)).unwrap())
    });
    c.bench_function("rs_decode/n10_t3_3errors", |b| {
        b.iter(|| rs.decode(black_box(&corrupted)).unwrap())
    });
}

fn bench_colony(c: &mut Criterion) {
    let layout = ColonyLayout::new(30, 2, Variant::SingleFaultTolerant).unwrap();
    let sim = ColonySimulator::build(layout, random_rule(2, 7)).unwrap();
    let xi2 = Configuration::from_states(&[1, 3, 2]).unwrap();
    let host = sim.encode_ring(&xi2).unwrap();
    c.bench_function("colony_step/ftol_q30x3", |b| {
        b.iter(|| sim.step(black_box(&host)).unwrap())
    });
}

criterion_group!(
    benches,
    bench_ring_step,
    bench_perturbed_step,
    bench_toom,
    bench_rs,
    bench_colony
);
criterion_main!(benches);
