use cachelab::model::{make_library, DemandVector};
use cachelab::rational::{binomial, int, ratio};
use cachelab::schemes::{
    coded_deliver, coded_place, cp_deliver, cp_place, decode, delivery_decodes, sweep_demands,
    uncoded_place, DemandSearch,
};
use cachelab::Error;
use proptest::prelude::*;

fn demand_strategy(n: u32, k: u32) -> impl Strategy<Value = Vec<u32>> {
    proptest::collection::vec(1..=n, k as usize)
}

fn params() -> impl Strategy<Value = (u32, u32, u32, Vec<u32>, u64)> {
    (1u32..=5, 1u32..=5)
        .prop_flat_map(|(n, k)| (Just(n), Just(k), 0..=k, demand_strategy(n, k), any::<u64>()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn coded_delivery_decodes_at_block_count_rate((n, k, t, d, seed) in params()) {
        let parts = binomial(k, t) as usize;
        let library = make_library(n, parts * 3, seed).unwrap();
        let inst = coded_place(&library, k, t).unwrap();
        let demand = DemandVector::new(d, n, k).unwrap();
        let (result, ok) = delivery_decodes(&inst, &library, &demand).unwrap();
        prop_assert!(ok);
        // one part-sized block per (t+1)-subset of users
        let blocks = binomial(k, t + 1) as i128;
        prop_assert_eq!(result.measured_rate, ratio(blocks, parts as i128));
        prop_assert_eq!(result.transmission.blocks.len() as i128, blocks);
        for cache in &inst.caches {
            prop_assert_eq!(cache.stored_bits() * n as usize, cache.capacity_bits * n as usize);
            prop_assert_eq!(cache.stored_bits() * k as usize, n as usize * t as usize * library.file_size_bits());
        }
    }

    #[test]
    fn uncoded_delivery_sends_each_missing_suffix_once((n, k, t, d, seed) in params()) {
        let library = make_library(n, k as usize * 4, seed).unwrap();
        let memory = ratio(i128::from(n * t), i128::from(k));
        let inst = uncoded_place(&library, k, memory).unwrap();
        let demand = DemandVector::new(d.clone(), n, k).unwrap();
        let (result, ok) = delivery_decodes(&inst, &library, &demand).unwrap();
        prop_assert!(ok);
        let mut distinct = d;
        distinct.sort_unstable();
        distinct.dedup();
        let want = int(distinct.len() as i128) * (int(1) - memory / int(n as i128));
        prop_assert_eq!(result.measured_rate, want);
    }

    #[test]
    fn coded_placement_decodes_any_demand(n in 2u32..=5, seed in any::<u64>(), raw in proptest::collection::vec(0u32..100, 5)) {
        let library = make_library(n, n as usize * 4, seed).unwrap();
        let inst = cp_place(&library, n).unwrap();
        let d: Vec<u32> = raw.iter().take(n as usize).map(|x| x % n + 1).collect();
        let demand = DemandVector::new(d, n, n).unwrap();
        let result = cp_deliver(&inst, &library, &demand).unwrap();
        for user in 1..=n {
            let bits = decode(&inst, user, &result).unwrap();
            prop_assert_eq!(bits.as_bitslice(), library.file(demand.of(user)).unwrap());
        }
        if demand.is_distinct() {
            prop_assert_eq!(result.measured_rate, int(n as i128 - 1));
        }
        prop_assert!(result.measured_rate <= int(n as i128));
    }
}

#[test]
fn three_file_coded_placement_transmission() {
    let library = make_library(3, 9, 5).unwrap();
    let inst = cp_place(&library, 3).unwrap();
    let demand = DemandVector::new(vec![1, 2, 3], 3, 3).unwrap();
    let result = cp_deliver(&inst, &library, &demand).unwrap();
    assert_eq!(result.measured_rate, int(2));
    assert_eq!(result.transmission.blocks.len(), 6);
    assert_eq!(inst.memory, ratio(1, 3));
}

#[test]
fn coded_rate_is_demand_independent() {
    for (n, k) in [(2, 3), (3, 3), (4, 2), (5, 4)] {
        for t in 0..=k {
            let library = make_library(n, binomial(k, t) as usize * 2, 1).unwrap();
            let inst = coded_place(&library, k, t).unwrap();
            let sweep = sweep_demands(&inst, &library, &DemandSearch::default()).unwrap();
            assert!(sweep.exhaustive);
            assert_eq!(sweep.decoded, sweep.evaluated, "N = {n}, K = {k}, t = {t}");
            assert_eq!(sweep.min_rate, sweep.max_rate, "N = {n}, K = {k}, t = {t}");
        }
    }
}

#[test]
fn full_cache_sends_nothing() {
    let library = make_library(3, 6, 2).unwrap();
    let inst = coded_place(&library, 3, 3).unwrap();
    let demand = DemandVector::new(vec![3, 1, 1], 3, 3).unwrap();
    let result = coded_deliver(&inst, &library, &demand).unwrap();
    assert!(result.transmission.blocks.is_empty());
    assert_eq!(
        decode(&inst, 1, &result).unwrap().as_bitslice(),
        library.file(3).unwrap()
    );
}

#[test]
fn oversize_search_is_refused_unless_sampled() {
    let library = make_library(6, 6, 0).unwrap();
    let inst = coded_place(&library, 6, 1).unwrap();
    let search = DemandSearch {
        limit: 1000,
        sample: None,
        seed: 0,
    };
    assert!(matches!(
        sweep_demands(&inst, &library, &search),
        Err(Error::TooLarge {
            count: 46656,
            limit: 1000
        })
    ));
    let sampled = sweep_demands(
        &inst,
        &library,
        &DemandSearch {
            sample: Some(50),
            ..search
        },
    )
    .unwrap();
    assert!(!sampled.exhaustive);
    assert_eq!(sampled.decoded, sampled.evaluated);
    let again = sweep_demands(
        &inst,
        &library,
        &DemandSearch {
            sample: Some(50),
            ..search
        },
    )
    .unwrap();
    assert_eq!(sampled, again);
}

#[test]
fn indivisible_sizes_are_partition_errors() {
    let library = make_library(3, 10, 0).unwrap();
    assert!(matches!(
        coded_place(&library, 3, 1),
        Err(Error::Partition(_))
    ));
    assert!(matches!(
        uncoded_place(&library, 3, ratio(1, 2)),
        Err(Error::Partition(_))
    ));
}
