//! Achievable caching strategies as executable placement / delivery / decode
//! procedures, with their closed-form rates.
//!
//! Three strategies are provided:
//!
//! * uncoded: every user caches the same prefix of each file and the server
//!   unicasts what is missing;
//! * coded: files are split into `C(K, t)` parts keyed by `t`-subsets of
//!   users and each `(t+1)`-subset is served with a single XOR block;
//! * coded placement (`N = K`, `M = 1/N`): each user caches one XOR across
//!   all files.
//!
//! Coded placement is only simulated on the integer grid `t = KM/N`;
//! intermediate memory values come from memory sharing in [`crate::bounds`].

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::model::{
    enumerate_subsets, equal_part_len, Bits, Block, CacheContents, DemandVector, FileLibrary,
    Partition, SubfileLabel, Transmission,
};
use crate::rational::{int, ratio, Rational};

/// Default cap on the number of demand vectors enumerated exhaustively.
pub const DEFAULT_DEMAND_LIMIT: u128 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    Uncoded,
    Coded,
    CodedPlacement,
}

/// A placed scheme: the caches of all `K` users plus the partition they refer to.
#[derive(Clone, Debug)]
pub struct SchemeInstance {
    pub kind: SchemeKind,
    pub num_files: u32,
    pub num_users: u32,
    pub memory: Rational,
    /// `t = KM/N` for coded caching.
    pub t_param: Option<u32>,
    pub caches: Vec<CacheContents>,
    pub partition: Partition,
    pub file_size_bits: usize,
}

impl SchemeInstance {
    pub fn cache(&self, user: u32) -> Result<&CacheContents> {
        if user == 0 || user > self.num_users {
            return Err(invalid(format!(
                "user {user} outside [1, {}]",
                self.num_users
            )));
        }
        Ok(&self.caches[(user - 1) as usize])
    }

    fn check_demand(&self, demand: &DemandVector) -> Result<()> {
        DemandVector::new(demand.as_slice().to_vec(), self.num_files, self.num_users).map(|_| ())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeliveryResult {
    pub transmission: Transmission,
    pub measured_rate: Rational,
    pub demand: DemandVector,
}

impl DeliveryResult {
    fn new(transmission: Transmission, file_size_bits: usize, demand: DemandVector) -> Self {
        let measured_rate = crate::model::measure_rate(&transmission, file_size_bits);
        DeliveryResult {
            transmission,
            measured_rate,
            demand,
        }
    }
}

fn check_memory(num_files: u32, num_users: u32, memory: &Rational) -> Result<()> {
    if num_files == 0 || num_users == 0 {
        return Err(invalid("N and K must be at least 1"));
    }
    if *memory < int(0) || *memory > int(num_files.into()) {
        return Err(invalid(format!("memory {memory} outside [0, {num_files}]")));
    }
    Ok(())
}

/// Rate of uncoded caching: `K (1 - M/N) min{1, N/K}`.
pub fn uncoded_rate(num_files: u32, num_users: u32, memory: Rational) -> Result<Rational> {
    check_memory(num_files, num_users, &memory)?;
    let (n, k) = (i128::from(num_files), i128::from(num_users));
    let local = int(1) - memory / n;
    Ok(int(k) * local * int(1).min(ratio(n, k)))
}

/// Rate of coded caching: `K (1 - M/N) min{1/(1 + KM/N), N/K}`.
pub fn coded_rate(num_files: u32, num_users: u32, memory: Rational) -> Result<Rational> {
    check_memory(num_files, num_users, &memory)?;
    let (n, k) = (i128::from(num_files), i128::from(num_users));
    let local = int(1) - memory / n;
    let global = (int(1) + memory * k / n).recip();
    Ok(int(k) * local * global.min(ratio(n, k)))
}

/// Distinct-demand rate of the coded-placement corner, `N - 1` at `M = 1/N`.
pub fn coded_placement_rate(num_files: u32) -> Rational {
    int(i128::from(num_files) - 1)
}

/// Every user stores the first `(M/N) F` bits of each file.
pub fn uncoded_place(
    library: &FileLibrary,
    num_users: u32,
    memory: Rational,
) -> Result<SchemeInstance> {
    let n = library.num_files();
    check_memory(n, num_users, &memory)?;
    let f = library.file_size_bits();
    let cached = memory * f as i128 / i128::from(n);
    if !cached.is_integer() {
        return Err(Error::Partition(format!(
            "(M/N) F = {cached} is not a whole number of bits; choose F as a multiple of {}",
            (memory / i128::from(n)).denom()
        )));
    }
    let split = cached.to_integer() as usize;
    let partition = Partition::PrefixSuffix { split };
    let capacity_bits = (memory * f as i128).to_integer() as usize;
    let mut caches = Vec::with_capacity(num_users as usize);
    for user in 1..=num_users {
        let mut blocks = Vec::new();
        if split > 0 {
            for file_id in 1..=n {
                blocks.push(Block::from_library(
                    library,
                    &partition,
                    vec![SubfileLabel::index(file_id, 0)],
                )?);
            }
        }
        caches.push(CacheContents {
            user_id: user,
            blocks,
            capacity_bits,
        });
    }
    Ok(SchemeInstance {
        kind: SchemeKind::Uncoded,
        num_files: n,
        num_users,
        memory,
        t_param: None,
        caches,
        partition,
        file_size_bits: f,
    })
}

/// Sends the uncached suffix of each distinct requested file once.
pub fn uncoded_deliver(
    inst: &SchemeInstance,
    library: &FileLibrary,
    demand: &DemandVector,
) -> Result<DeliveryResult> {
    if inst.kind != SchemeKind::Uncoded {
        return Err(invalid("uncoded delivery needs an uncoded placement"));
    }
    inst.check_demand(demand)?;
    let Partition::PrefixSuffix { split } = inst.partition else {
        return Err(invalid(
            "uncoded placement must use a prefix/suffix partition",
        ));
    };
    let mut blocks = Vec::new();
    if split < inst.file_size_bits {
        let mut sent: Vec<u32> = Vec::new();
        for &file_id in demand.as_slice() {
            if sent.contains(&file_id) {
                continue;
            }
            sent.push(file_id);
            blocks.push(Block::from_library(
                library,
                &inst.partition,
                vec![SubfileLabel::index(file_id, 1)],
            )?);
        }
    }
    Ok(DeliveryResult::new(
        Transmission { blocks },
        inst.file_size_bits,
        demand.clone(),
    ))
}

/// Splits each file into `C(K, t)` parts keyed by `t`-subsets; user `k`
/// caches part `S` of every file iff `k ∈ S`.
pub fn coded_place(library: &FileLibrary, num_users: u32, t: u32) -> Result<SchemeInstance> {
    if num_users == 0 {
        return Err(invalid("K must be at least 1"));
    }
    if t > num_users {
        return Err(invalid(format!("t = {t} outside [0, {num_users}]")));
    }
    let n = library.num_files();
    let f = library.file_size_bits();
    let partition = Partition::subsets(num_users, t)?;
    let Partition::Subsets { subsets, .. } = &partition else {
        unreachable!()
    };
    let part_len = equal_part_len(f, subsets.len())?;

    let memory = ratio(i128::from(n) * i128::from(t), i128::from(num_users));
    // N * C(K-1, t-1) parts of F / C(K, t) bits is exactly M F
    let capacity_bits = (memory * f as i128).to_integer() as usize;

    let mut caches = Vec::with_capacity(num_users as usize);
    for user in 1..=num_users {
        let mut blocks = Vec::new();
        for file_id in 1..=n {
            for s in subsets.iter().filter(|s| s.contains(&user)) {
                blocks.push(Block::from_library(
                    library,
                    &partition,
                    vec![SubfileLabel::subset(file_id, s.clone())],
                )?);
            }
        }
        debug_assert_eq!(blocks.len() * part_len, capacity_bits);
        caches.push(CacheContents {
            user_id: user,
            blocks,
            capacity_bits,
        });
    }
    Ok(SchemeInstance {
        kind: SchemeKind::Coded,
        num_files: n,
        num_users,
        memory,
        t_param: Some(t),
        caches,
        partition,
        file_size_bits: f,
    })
}

/// Labels of the delivery block serving the `(t+1)`-subset `users`.
fn coded_block_labels(users: &[u32], demand: &DemandVector) -> Vec<SubfileLabel> {
    users
        .iter()
        .map(|&k| {
            let rest: Vec<u32> = users.iter().copied().filter(|&u| u != k).collect();
            SubfileLabel::subset(demand.of(k), rest)
        })
        .collect()
}

/// One XOR block per `(t+1)`-subset in canonical order; all `C(K, t+1)` blocks
/// are sent whatever the demand.
pub fn coded_deliver(
    inst: &SchemeInstance,
    library: &FileLibrary,
    demand: &DemandVector,
) -> Result<DeliveryResult> {
    if inst.kind != SchemeKind::Coded {
        return Err(invalid("coded delivery needs a coded placement"));
    }
    inst.check_demand(demand)?;
    let t = inst
        .t_param
        .ok_or_else(|| invalid("coded placement without t"))?;
    let mut blocks = Vec::new();
    if t < inst.num_users {
        for users in enumerate_subsets(inst.num_users, t + 1)? {
            blocks.push(Block::from_library(
                library,
                &inst.partition,
                coded_block_labels(&users, demand),
            )?);
        }
    }
    Ok(DeliveryResult::new(
        Transmission { blocks },
        inst.file_size_bits,
        demand.clone(),
    ))
}

/// Recovers `W_{d_user}` from the user's cache and a coded delivery.
///
/// Parts keyed by subsets containing `user` come straight from the cache. Every
/// other part `S` is read off the block for `S ∪ {user}` after XOR-ing out the
/// cached parts that the other members of that subset requested.
pub fn coded_decode(inst: &SchemeInstance, user: u32, result: &DeliveryResult) -> Result<Bits> {
    if inst.kind != SchemeKind::Coded {
        return Err(invalid("coded decoding needs a coded placement"));
    }
    let cache = inst.cache(user)?;
    let t = inst
        .t_param
        .ok_or_else(|| invalid("coded placement without t"))?;
    let Partition::Subsets { subsets, .. } = &inst.partition else {
        return Err(invalid("coded placement must use a subset partition"));
    };
    let demand = &result.demand;
    let wanted = demand.of(user);

    let cached: HashMap<&SubfileLabel, &Bits> = cache
        .blocks
        .iter()
        .filter(|b| b.labels.len() == 1)
        .map(|b| (&b.labels[0], &b.bits))
        .collect();
    let serving = if t < inst.num_users {
        enumerate_subsets(inst.num_users, t + 1)?
    } else {
        Vec::new()
    };

    let mut out = Bits::with_capacity(inst.file_size_bits);
    for s in subsets {
        let label = SubfileLabel::subset(wanted, s.clone());
        if s.contains(&user) {
            let bits = cached.get(&label).ok_or_else(|| {
                Error::Decode(format!("user {user} is missing cached part {label:?}"))
            })?;
            out.extend_from_bitslice(bits);
            continue;
        }
        let mut users = s.clone();
        users.push(user);
        users.sort_unstable();
        let pos = serving
            .binary_search(&users)
            .map_err(|_| Error::Decode(format!("no delivery slot for users {users:?}")))?;
        let block = result
            .transmission
            .blocks
            .get(pos)
            .ok_or_else(|| Error::Decode(format!("block for users {users:?} is absent")))?;
        let expected = coded_block_labels(&users, demand);
        if block.labels != expected {
            return Err(Error::Decode(format!(
                "block {pos} does not serve users {users:?}"
            )));
        }
        let mut bits = block.bits.clone();
        for other in expected.iter().filter(|l| **l != label) {
            let side = cached.get(other).ok_or_else(|| {
                Error::Decode(format!("user {user} lacks side information {other:?}"))
            })?;
            bits ^= side.as_bitslice();
        }
        out.extend_from_bitslice(&bits);
    }
    Ok(out)
}

/// Coded content placement for `N = K`: file `n` is cut into `N` parts and
/// user `k` stores the single block `⊕_n (part k of W_n)`.
pub fn cp_place(library: &FileLibrary, num_files: u32) -> Result<SchemeInstance> {
    if num_files != library.num_files() {
        return Err(invalid(format!(
            "coded placement needs K = N = {}, got {num_files}",
            library.num_files()
        )));
    }
    let n = num_files;
    let f = library.file_size_bits();
    let part_len = equal_part_len(f, n as usize)?;
    let partition = Partition::Equal { parts: n };
    let mut caches = Vec::with_capacity(n as usize);
    for user in 1..=n {
        let labels = (1..=n)
            .map(|file_id| SubfileLabel::index(file_id, user - 1))
            .collect();
        caches.push(CacheContents {
            user_id: user,
            blocks: vec![Block::from_library(library, &partition, labels)?],
            capacity_bits: part_len,
        });
    }
    Ok(SchemeInstance {
        kind: SchemeKind::CodedPlacement,
        num_files: n,
        num_users: n,
        memory: ratio(1, i128::from(n)),
        t_param: None,
        caches,
        partition,
        file_size_bits: f,
    })
}

/// For distinct demands, user `k` is sent part `k` of every file it did not
/// request. Repeated demands additionally get uncoded parts of the requested
/// files, added greedily per user until every user decodes.
pub fn cp_deliver(
    inst: &SchemeInstance,
    library: &FileLibrary,
    demand: &DemandVector,
) -> Result<DeliveryResult> {
    if inst.kind != SchemeKind::CodedPlacement {
        return Err(invalid(
            "coded-placement delivery needs a coded-placement instance",
        ));
    }
    inst.check_demand(demand)?;
    let n = inst.num_files;
    let mut labels: Vec<SubfileLabel> = Vec::new();
    for user in 1..=inst.num_users {
        for file_id in (1..=n).filter(|&f| f != demand.of(user)) {
            labels.push(SubfileLabel::index(file_id, user - 1));
        }
    }
    let mut transmission = Transmission {
        blocks: labels
            .into_iter()
            .map(|l| Block::from_library(library, &inst.partition, vec![l]))
            .collect::<Result<_>>()?,
    };

    // fallback for repeated demands
    for user in 1..=inst.num_users {
        let known = peel(inst.cache(user)?, &transmission);
        for label in inst
            .partition
            .parts_of(demand.of(user), inst.file_size_bits)
        {
            if !known.contains_key(&label) {
                transmission.blocks.push(Block::from_library(
                    library,
                    &inst.partition,
                    vec![label],
                )?);
            }
        }
    }
    Ok(DeliveryResult::new(
        transmission,
        inst.file_size_bits,
        demand.clone(),
    ))
}

/// Solves for every subfile reachable by repeatedly using a block that has
/// exactly one unknown label.
fn peel(cache: &CacheContents, transmission: &Transmission) -> HashMap<SubfileLabel, Bits> {
    let equations: Vec<&Block> = cache
        .blocks
        .iter()
        .chain(transmission.blocks.iter())
        .collect();
    let mut known: HashMap<SubfileLabel, Bits> = HashMap::new();
    let mut solved = vec![false; equations.len()];
    loop {
        let mut progress = false;
        for (i, block) in equations.iter().enumerate() {
            if solved[i] {
                continue;
            }
            let mut unknown = block.labels.iter().filter(|l| !known.contains_key(*l));
            let (Some(target), None) = (unknown.next(), unknown.next()) else {
                if block.labels.iter().all(|l| known.contains_key(l)) {
                    solved[i] = true;
                }
                continue;
            };
            let mut bits = block.bits.clone();
            for other in block.labels.iter().filter(|l| *l != target) {
                bits ^= known[other].as_bitslice();
            }
            known.insert(target.clone(), bits);
            solved[i] = true;
            progress = true;
        }
        if !progress {
            return known;
        }
    }
}

/// Generic decoder: peels the user's equations and reassembles the demanded file.
pub fn peel_decode(inst: &SchemeInstance, user: u32, result: &DeliveryResult) -> Result<Bits> {
    let cache = inst.cache(user)?;
    let known = peel(cache, &result.transmission);
    let wanted = result.demand.of(user);
    let mut out = Bits::with_capacity(inst.file_size_bits);
    for label in inst.partition.parts_of(wanted, inst.file_size_bits) {
        let bits = known
            .get(&label)
            .ok_or_else(|| Error::Decode(format!("user {user} cannot recover {label:?}")))?;
        out.extend_from_bitslice(bits);
    }
    Ok(out)
}

/// Delivery for whichever scheme `inst` holds.
pub fn deliver(
    inst: &SchemeInstance,
    library: &FileLibrary,
    demand: &DemandVector,
) -> Result<DeliveryResult> {
    match inst.kind {
        SchemeKind::Uncoded => uncoded_deliver(inst, library, demand),
        SchemeKind::Coded => coded_deliver(inst, library, demand),
        SchemeKind::CodedPlacement => cp_deliver(inst, library, demand),
    }
}

/// Decoder for whichever scheme `inst` holds.
pub fn decode(inst: &SchemeInstance, user: u32, result: &DeliveryResult) -> Result<Bits> {
    match inst.kind {
        SchemeKind::Coded => coded_decode(inst, user, result),
        SchemeKind::Uncoded | SchemeKind::CodedPlacement => peel_decode(inst, user, result),
    }
}

/// Delivers `demand` and checks every user's output against the library.
pub fn delivery_decodes(
    inst: &SchemeInstance,
    library: &FileLibrary,
    demand: &DemandVector,
) -> Result<(DeliveryResult, bool)> {
    let result = deliver(inst, library, demand)?;
    let mut ok = true;
    for user in 1..=inst.num_users {
        let got = decode(inst, user, &result);
        let want = library.file(demand.of(user))?;
        ok &= matches!(got, Ok(bits) if bits.as_bitslice() == want);
    }
    Ok((result, ok))
}

/// How many demand vectors to visit.
#[derive(Clone, Copy, Debug)]
pub struct DemandSearch {
    /// Exhaustive enumeration is allowed up to this many vectors.
    pub limit: u128,
    /// When set, draw this many vectors with the seeded generator instead of
    /// refusing oversize searches.
    pub sample: Option<usize>,
    pub seed: u64,
}

impl Default for DemandSearch {
    fn default() -> Self {
        DemandSearch {
            limit: DEFAULT_DEMAND_LIMIT,
            sample: None,
            seed: 0,
        }
    }
}

/// Outcome of running delivery and decoding over a set of demand vectors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DemandSweep {
    pub evaluated: u128,
    /// Demand vectors for which every user decoded bit-exactly.
    pub decoded: u128,
    pub max_rate: Rational,
    /// Lexicographically smallest demand vector attaining `max_rate`.
    pub witness: DemandVector,
    pub min_rate: Rational,
    /// True when every visited vector was exhaustively enumerated.
    pub exhaustive: bool,
}

pub fn demand_space(num_files: u32, num_users: u32) -> Option<u128> {
    u128::from(num_files).checked_pow(num_users)
}

/// Runs every demand vector (or a seeded sample) through delivery and decoding.
pub fn sweep_demands(
    inst: &SchemeInstance,
    library: &FileLibrary,
    search: &DemandSearch,
) -> Result<DemandSweep> {
    let (n, k) = (inst.num_files, inst.num_users);
    let space = demand_space(n, k);
    let indices: Vec<u128> = match (space, search.sample) {
        (Some(count), _) if count <= search.limit => (0..count).collect(),
        (_, Some(size)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
            let upper = space.unwrap_or(u128::MAX);
            let mut v: Vec<u128> = (0..size).map(|_| rng.gen_range(0..upper)).collect();
            v.sort_unstable();
            v.dedup();
            v
        }
        (count, None) => {
            return Err(Error::TooLarge {
                count: count.unwrap_or(u128::MAX),
                limit: search.limit,
            })
        }
    };
    if indices.is_empty() {
        return Err(invalid("sample size must be positive"));
    }
    let exhaustive = space.is_some_and(|c| c <= search.limit);

    let outcomes: Vec<(u128, Rational, bool)> = indices
        .par_iter()
        .map(|&i| {
            let d = DemandVector::from_index(i, n, k);
            delivery_decodes(inst, library, &d).map(|(r, ok)| (i, r.measured_rate, ok))
        })
        .collect::<Result<_>>()?;

    // indices are ascending, so the first maximum is the smallest witness
    let (mut best_i, mut max_rate) = (outcomes[0].0, outcomes[0].1);
    let mut min_rate = outcomes[0].1;
    let mut decoded = 0u128;
    for &(i, rate, ok) in &outcomes {
        if rate > max_rate {
            max_rate = rate;
            best_i = i;
        }
        min_rate = min_rate.min(rate);
        decoded += u128::from(ok);
    }
    Ok(DemandSweep {
        evaluated: outcomes.len() as u128,
        decoded,
        max_rate,
        witness: DemandVector::from_index(best_i, n, k),
        min_rate,
        exhaustive,
    })
}

/// Worst-case measured rate over demand vectors, with its smallest witness.
pub fn worst_case_rate(
    inst: &SchemeInstance,
    library: &FileLibrary,
    search: &DemandSearch,
) -> Result<(Rational, DemandVector)> {
    let sweep = sweep_demands(inst, library, search)?;
    Ok((sweep.max_rate, sweep.witness))
}
