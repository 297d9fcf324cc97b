//! Bit-level model of a shared-link caching system: a server library of `N`
//! files of `F` bits, `K` user caches, demand vectors and delivery signals.
//!
//! All memory and rate figures are measured in units of `F` bits.

use std::ops::Range;

use bitvec::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::ser::{SerializeSeq, SerializeStruct};
use serde::{Serialize, Serializer};

use crate::error::{invalid, Error, Result};
use crate::rational::{ratio, Rational};

/// Bit string, most significant bit first.
pub type Bits = BitVec<u8, Msb0>;

/// The server database `W_1..W_N`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FileLibrary {
    num_files: u32,
    file_size_bits: usize,
    seed: u64,
    files: Vec<Bits>,
}

impl FileLibrary {
    pub fn num_files(&self) -> u32 {
        self.num_files
    }

    pub fn file_size_bits(&self) -> usize {
        self.file_size_bits
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Whole file by 1-based id.
    pub fn file(&self, file_id: u32) -> Result<&BitSlice<u8, Msb0>> {
        self.check_file(file_id)?;
        Ok(&self.files[(file_id - 1) as usize])
    }

    fn check_file(&self, file_id: u32) -> Result<()> {
        if file_id == 0 || file_id > self.num_files {
            return Err(invalid(format!(
                "file id {file_id} outside [1, {}]",
                self.num_files
            )));
        }
        Ok(())
    }

    /// Bits of one labelled subfile under `partition`.
    pub fn subfile(
        &self,
        partition: &Partition,
        label: &SubfileLabel,
    ) -> Result<&BitSlice<u8, Msb0>> {
        let file = self.file(label.file_id)?;
        let range = partition.range(&label.part, self.file_size_bits)?;
        Ok(&file[range])
    }

    /// XOR of the labelled subfiles. All labels must address ranges of equal length.
    pub fn xor_of(&self, partition: &Partition, labels: &[SubfileLabel]) -> Result<Bits> {
        let mut iter = labels.iter();
        let first = iter
            .next()
            .ok_or_else(|| invalid("a block needs at least one label"))?;
        let mut acc = self.subfile(partition, first)?.to_bitvec();
        for label in iter {
            let part = self.subfile(partition, label)?;
            if part.len() != acc.len() {
                return Err(invalid(format!(
                    "cannot combine subfiles of {} and {} bits",
                    acc.len(),
                    part.len()
                )));
            }
            acc ^= part;
        }
        Ok(acc)
    }
}

/// Builds a deterministic pseudorandom library; the same `(n, f, seed)` always
/// yields the same bits.
pub fn make_library(num_files: u32, file_size_bits: usize, seed: u64) -> Result<FileLibrary> {
    if num_files == 0 {
        return Err(invalid("number of files must be at least 1"));
    }
    if file_size_bits == 0 {
        return Err(invalid("file size must be at least 1 bit"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let files = (0..num_files)
        .map(|_| {
            (0..file_size_bits)
                .map(|_| rng.gen::<bool>())
                .collect::<Bits>()
        })
        .collect();
    Ok(FileLibrary {
        num_files,
        file_size_bits,
        seed,
        files,
    })
}

/// All `t`-subsets of `{1..k}` in lexicographic order of their sorted tuples.
/// This order fixes the partition order used by placement, delivery and decoding.
pub fn enumerate_subsets(k: u32, t: u32) -> Result<Vec<Vec<u32>>> {
    if t > k {
        return Err(invalid(format!("subset size {t} outside [0, {k}]")));
    }
    let t = t as usize;
    let mut out = Vec::new();
    let mut cur: Vec<u32> = (1..=t as u32).collect();
    loop {
        out.push(cur.clone());
        // advance the rightmost position that still has room
        let mut i = t;
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            if cur[i] < k - (t - 1 - i) as u32 {
                break;
            }
        }
        cur[i] += 1;
        for j in i + 1..t {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// Splits file `file_id` into `num_parts` contiguous equal ranges.
pub fn partition_file(
    library: &FileLibrary,
    file_id: u32,
    num_parts: usize,
) -> Result<Vec<(usize, Range<usize>)>> {
    library.check_file(file_id)?;
    let part = equal_part_len(library.file_size_bits, num_parts)?;
    Ok((0..num_parts)
        .map(|i| (i, i * part..(i + 1) * part))
        .collect())
}

pub(crate) fn equal_part_len(file_size_bits: usize, num_parts: usize) -> Result<usize> {
    if num_parts == 0 {
        return Err(invalid("number of parts must be positive"));
    }
    if file_size_bits % num_parts != 0 {
        return Err(Error::Partition(format!(
            "{num_parts} parts do not divide F = {file_size_bits} bits; choose F as a multiple of {num_parts}"
        )));
    }
    Ok(file_size_bits / num_parts)
}

/// How a subfile is keyed within its file.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PartKey {
    /// Sorted set of user ids (coded caching).
    Subset(Vec<u32>),
    /// Position in an index-ordered split.
    Index(u32),
}

impl Serialize for PartKey {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            PartKey::Subset(users) => users.serialize(s),
            PartKey::Index(i) => i.serialize(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubfileLabel {
    pub file_id: u32,
    pub part: PartKey,
}

impl SubfileLabel {
    pub fn subset(file_id: u32, users: Vec<u32>) -> Self {
        SubfileLabel {
            file_id,
            part: PartKey::Subset(users),
        }
    }

    pub fn index(file_id: u32, index: u32) -> Self {
        SubfileLabel {
            file_id,
            part: PartKey::Index(index),
        }
    }
}

/// Serialized as `[file_id, part_key]`.
impl Serialize for SubfileLabel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(2))?;
        seq.serialize_element(&self.file_id)?;
        seq.serialize_element(&self.part)?;
        seq.end()
    }
}

/// Canonical partition a scheme applies to every file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Partition {
    /// `Index(0)` is the first `split` bits, `Index(1)` the rest.
    PrefixSuffix { split: usize },
    /// `C(k, t)` equal parts keyed by `t`-subsets in canonical order.
    Subsets {
        k: u32,
        t: u32,
        subsets: Vec<Vec<u32>>,
    },
    /// `parts` equal parts keyed by index `0..parts`.
    Equal { parts: u32 },
}

impl Partition {
    pub fn subsets(k: u32, t: u32) -> Result<Self> {
        Ok(Partition::Subsets {
            k,
            t,
            subsets: enumerate_subsets(k, t)?,
        })
    }

    /// Bit range addressed by `key` in a file of `file_size_bits` bits.
    pub fn range(&self, key: &PartKey, file_size_bits: usize) -> Result<Range<usize>> {
        match (self, key) {
            (Partition::PrefixSuffix { split }, PartKey::Index(0)) => Ok(0..*split),
            (Partition::PrefixSuffix { split }, PartKey::Index(1)) => Ok(*split..file_size_bits),
            (Partition::Subsets { subsets, .. }, PartKey::Subset(users)) => {
                let pos = subsets.binary_search(users).map_err(|_| {
                    invalid(format!("subset {users:?} is not a part of this partition"))
                })?;
                let len = equal_part_len(file_size_bits, subsets.len())?;
                Ok(pos * len..(pos + 1) * len)
            }
            (Partition::Equal { parts }, PartKey::Index(i)) if i < parts => {
                let len = equal_part_len(file_size_bits, *parts as usize)?;
                let i = *i as usize;
                Ok(i * len..(i + 1) * len)
            }
            (_, key) => Err(invalid(format!(
                "part key {key:?} does not fit partition {self:?}"
            ))),
        }
    }

    /// Non-empty parts of `file_id`, in file order.
    pub fn parts_of(&self, file_id: u32, file_size_bits: usize) -> Vec<SubfileLabel> {
        match self {
            Partition::PrefixSuffix { split } => {
                let mut v = Vec::new();
                if *split > 0 {
                    v.push(SubfileLabel::index(file_id, 0));
                }
                if *split < file_size_bits {
                    v.push(SubfileLabel::index(file_id, 1));
                }
                v
            }
            Partition::Subsets { subsets, .. } => subsets
                .iter()
                .map(|s| SubfileLabel::subset(file_id, s.clone()))
                .collect(),
            Partition::Equal { parts } => (0..*parts)
                .map(|i| SubfileLabel::index(file_id, i))
                .collect(),
        }
    }
}

/// One stored or transmitted block: the XOR of its labelled subfiles.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub labels: Vec<SubfileLabel>,
    pub bits: Bits,
}

impl Block {
    pub fn from_library(
        library: &FileLibrary,
        partition: &Partition,
        labels: Vec<SubfileLabel>,
    ) -> Result<Self> {
        let bits = library.xor_of(partition, &labels)?;
        Ok(Block { labels, bits })
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// True when the stored bits equal the XOR recomputed from `library`.
    pub fn is_consistent(&self, library: &FileLibrary, partition: &Partition) -> bool {
        library
            .xor_of(partition, &self.labels)
            .map(|b| b == self.bits)
            .unwrap_or(false)
    }
}

impl Serialize for Block {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Block", 2)?;
        st.serialize_field("bits_hex", &bits_to_hex(&self.bits))?;
        st.serialize_field("labels", &self.labels)?;
        st.end()
    }
}

/// Packs bits MSB-first into lowercase hex; a trailing partial byte is zero-padded.
pub fn bits_to_hex(bits: &BitSlice<u8, Msb0>) -> String {
    let mut out = String::with_capacity(bits.len().div_ceil(8) * 2);
    for chunk in bits.chunks(8) {
        let mut byte = 0u8;
        for (i, bit) in chunk.iter().enumerate() {
            if *bit {
                byte |= 0x80 >> i;
            }
        }
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

/// Contents `Z_k` of one user's cache.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CacheContents {
    pub user_id: u32,
    pub blocks: Vec<Block>,
    pub capacity_bits: usize,
}

impl CacheContents {
    pub fn stored_bits(&self) -> usize {
        self.blocks.iter().map(Block::len).sum()
    }
}

/// Requested file per user, `d_1..d_K`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct DemandVector(Vec<u32>);

impl DemandVector {
    /// Validates length `k` and every entry in `[1, n]`.
    pub fn new(demands: Vec<u32>, num_files: u32, num_users: u32) -> Result<Self> {
        if demands.len() != num_users as usize {
            return Err(invalid(format!(
                "demand vector has {} entries, expected K = {num_users}",
                demands.len()
            )));
        }
        if let Some(bad) = demands.iter().find(|&&d| d == 0 || d > num_files) {
            return Err(invalid(format!(
                "demanded file {bad} outside [1, {num_files}]"
            )));
        }
        Ok(DemandVector(demands))
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    /// File demanded by 1-based `user`.
    pub fn of(&self, user: u32) -> u32 {
        self.0[(user - 1) as usize]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_distinct(&self) -> bool {
        let mut v = self.0.clone();
        v.sort_unstable();
        v.windows(2).all(|w| w[0] != w[1])
    }

    /// Vector at position `index` of the lexicographic order over `[1, n]^k`.
    pub fn from_index(mut index: u128, num_files: u32, num_users: u32) -> Self {
        let mut d = vec![0u32; num_users as usize];
        for slot in d.iter_mut().rev() {
            *slot = (index % u128::from(num_files)) as u32 + 1;
            index /= u128::from(num_files);
        }
        DemandVector(d)
    }
}

/// The delivery signal `X_(d_1..d_K)`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Transmission {
    pub blocks: Vec<Block>,
}

impl Transmission {
    pub fn total_bits(&self) -> usize {
        self.blocks.iter().map(Block::len).sum()
    }
}

/// A `(M, R)` point in file units.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RatePoint {
    pub memory: Rational,
    pub rate: Rational,
}

/// Delivery size in file units.
pub fn measure_rate(transmission: &Transmission, file_size_bits: usize) -> Rational {
    ratio(transmission.total_bits() as i128, file_size_bits as i128)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;
    use proptest::prelude::*;

    #[test]
    fn library_is_deterministic() {
        let a = make_library(1, 8, 0).unwrap();
        let b = make_library(1, 8, 0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.file(1).unwrap().len(), 8);

        let lib = make_library(3, 12, 7).unwrap();
        assert_eq!(lib.num_files(), 3);
        for f in 1..=3 {
            assert_eq!(lib.file(f).unwrap().len(), 12);
        }
        assert_ne!(make_library(3, 12, 8).unwrap(), lib);
    }

    #[test]
    fn library_rejects_empty_sizes() {
        assert!(matches!(
            make_library(0, 8, 0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            make_library(2, 0, 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn coded_file_size_divisibility() {
        // F = 504 supports both t = 1 and t = 2 at K = 4
        let lib = make_library(9, 504, 1).unwrap();
        assert_eq!(lib.num_files(), 9);
        for t in 0..=4 {
            let parts = crate::rational::binomial(4, t) as usize;
            assert_eq!(504 % parts, 0, "C(4,{t}) = {parts}");
        }
    }

    #[test]
    fn subset_enumeration() {
        assert_eq!(
            enumerate_subsets(3, 2).unwrap(),
            vec![vec![1, 2], vec![1, 3], vec![2, 3]]
        );
        assert_eq!(
            enumerate_subsets(4, 1).unwrap(),
            vec![vec![1], vec![2], vec![3], vec![4]]
        );
        let s = enumerate_subsets(4, 2).unwrap();
        assert_eq!(s.len(), 6);
        assert_eq!(s.first().unwrap(), &vec![1, 2]);
        assert_eq!(s.last().unwrap(), &vec![3, 4]);
        assert_eq!(enumerate_subsets(3, 0).unwrap(), vec![Vec::<u32>::new()]);
        assert_eq!(enumerate_subsets(3, 3).unwrap(), vec![vec![1, 2, 3]]);
        assert!(matches!(
            enumerate_subsets(3, 4),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn file_partitions() {
        let lib = make_library(1, 12, 0).unwrap();
        assert_eq!(
            partition_file(&lib, 1, 3).unwrap(),
            vec![(0, 0..4), (1, 4..8), (2, 8..12)]
        );
        assert_eq!(partition_file(&lib, 1, 1).unwrap(), vec![(0, 0..12)]);
        assert!(matches!(
            partition_file(&lib, 1, 5),
            Err(Error::Partition(_))
        ));
        assert!(partition_file(&lib, 2, 3).is_err());
    }

    #[test]
    fn rate_measurement() {
        let lib = make_library(3, 9, 2).unwrap();
        let p = Partition::Equal { parts: 3 };
        assert_eq!(measure_rate(&Transmission::default(), 9), int(0));

        let blocks: Vec<Block> = (0..3)
            .map(|i| Block::from_library(&lib, &p, vec![SubfileLabel::index(1, i)]).unwrap())
            .collect();
        let one_file = Transmission { blocks };
        assert_eq!(measure_rate(&one_file, 9), int(1));

        // six blocks of F/3, as in the three-user coded-placement delivery
        let blocks: Vec<Block> = [(2, 0), (3, 0), (1, 1), (3, 1), (1, 2), (2, 2)]
            .iter()
            .map(|&(f, i)| Block::from_library(&lib, &p, vec![SubfileLabel::index(f, i)]).unwrap())
            .collect();
        assert_eq!(measure_rate(&Transmission { blocks }, 9), int(2));
    }

    #[test]
    fn block_json_shape() {
        let lib = make_library(2, 8, 3).unwrap();
        let p = Partition::subsets(2, 1).unwrap();
        let block = Block::from_library(
            &lib,
            &p,
            vec![
                SubfileLabel::subset(1, vec![2]),
                SubfileLabel::subset(2, vec![1]),
            ],
        )
        .unwrap();
        let v = serde_json::to_value(&block).unwrap();
        assert_eq!(v["labels"], serde_json::json!([[1, [2]], [2, [1]]]));
        assert_eq!(v["bits_hex"].as_str().unwrap().len(), 2);
        assert!(block.is_consistent(&lib, &p));
    }

    #[test]
    fn hex_packing() {
        let bits: Bits = bitvec![u8, Msb0; 1, 0, 1, 0, 0, 0, 0, 1, 1];
        assert_eq!(bits_to_hex(&bits), "a180");
    }

    #[test]
    fn demand_validation() {
        assert!(DemandVector::new(vec![1, 2], 3, 3).is_err());
        assert!(DemandVector::new(vec![1, 2, 4], 3, 3).is_err());
        assert!(DemandVector::new(vec![0, 2, 3], 3, 3).is_err());
        let d = DemandVector::new(vec![1, 2, 3], 3, 3).unwrap();
        assert!(d.is_distinct());
        assert_eq!(DemandVector::from_index(0, 3, 3).as_slice(), &[1, 1, 1]);
        assert_eq!(DemandVector::from_index(5, 3, 3).as_slice(), &[1, 2, 3]);
        assert_eq!(DemandVector::from_index(26, 3, 3).as_slice(), &[3, 3, 3]);
    }

    proptest! {
        #[test]
        fn partition_concatenation_reproduces_file(
            parts in 1usize..8, mult in 1usize..6, seed in 0u64..1000
        ) {
            let lib = make_library(2, parts * mult, seed).unwrap();
            for file_id in 1..=2 {
                let mut joined = Bits::new();
                for (_, r) in partition_file(&lib, file_id, parts).unwrap() {
                    joined.extend_from_bitslice(&lib.file(file_id).unwrap()[r]);
                }
                prop_assert_eq!(joined.as_bitslice(), lib.file(file_id).unwrap());
            }
        }

        #[test]
        fn subsets_are_sorted_unique_and_complete(k in 0u32..10, t_frac in 0u32..=100) {
            let t = k * t_frac / 100;
            let s = enumerate_subsets(k, t).unwrap();
            prop_assert_eq!(s.len() as u128, crate::rational::binomial(k, t));
            prop_assert!(s.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(s.iter().all(|x| x.len() == t as usize
                && x.windows(2).all(|w| w[0] < w[1])
                && x.iter().all(|&u| (1..=k).contains(&u))));
            prop_assert_eq!(s, enumerate_subsets(k, t).unwrap());
        }
    }
}
