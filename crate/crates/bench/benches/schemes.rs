use cachelab::schemes::{
    coded_deliver, coded_place, cp_deliver, cp_place, decode, uncoded_deliver, uncoded_place,
};
use cachelab_bench::{corner_memory, cyclic_demand, library_for};
use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

fn coded(c: &mut Criterion) {
    let mut group = c.benchmark_group("coded");
    for (n, k, t) in [(4, 4, 1), (6, 6, 2), (8, 8, 3)] {
        let library = library_for(n, k, t, 64);
        let demand = cyclic_demand(n, k);
        let id = format!("N{n}_K{k}_t{t}");
        group.bench_with_input(BenchmarkId::new("place", &id), &(), |b, _| {
            b.iter(|| coded_place(black_box(&library), k, t).unwrap())
        });
        let inst = coded_place(&library, k, t).unwrap();
        group.bench_with_input(BenchmarkId::new("deliver", &id), &(), |b, _| {
            b.iter(|| coded_deliver(&inst, &library, black_box(&demand)).unwrap())
        });
        let result = coded_deliver(&inst, &library, &demand).unwrap();
        group.bench_with_input(BenchmarkId::new("decode_all", &id), &(), |b, _| {
            b.iter(|| {
                (1..=k)
                    .map(|u| decode(&inst, u, black_box(&result)).unwrap().len())
                    .sum::<usize>()
            })
        });
    }
    group.finish();
}

fn uncoded(c: &mut Criterion) {
    let (n, k, t) = (6, 6, 2);
    let library = library_for(n, k, t, 64);
    let inst = uncoded_place(&library, k, corner_memory(n, k, t)).unwrap();
    let demand = cyclic_demand(n, k);
    c.bench_function("uncoded/deliver/N6_K6", |b| {
        b.iter(|| uncoded_deliver(&inst, &library, black_box(&demand)).unwrap())
    });
}

fn coded_placement(c: &mut Criterion) {
    let mut group = c.benchmark_group("cp");
    for n in [3u32, 6, 10] {
        let library = library_for(n, n, 1, 64);
        let inst = cp_place(&library, n).unwrap();
        let demand = cyclic_demand(n, n);
        group.bench_with_input(BenchmarkId::new("deliver", n), &(), |b, _| {
            b.iter(|| cp_deliver(&inst, &library, black_box(&demand)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, coded, uncoded, coded_placement);
criterion_main!(benches);
