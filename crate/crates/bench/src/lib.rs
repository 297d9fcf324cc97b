//! Shared fixtures for the benchmarks.

use cachelab::model::{make_library, DemandVector, FileLibrary};
use cachelab::rational::{binomial, ratio, Rational};

/// Library whose files split into `C(K, t)` parts of `bits_per_part` bits.
pub fn library_for(num_files: u32, num_users: u32, t: u32, bits_per_part: usize) -> FileLibrary {
    let parts = binomial(num_users, t) as usize;
    make_library(num_files, parts * bits_per_part, 7).expect("valid library size")
}

/// `M = Nt/K`.
pub fn corner_memory(num_files: u32, num_users: u32, t: u32) -> Rational {
    ratio(i128::from(num_files * t), i128::from(num_users))
}

/// Demand vector in which user `k` asks for file `(k mod N) + 1`.
pub fn cyclic_demand(num_files: u32, num_users: u32) -> DemandVector {
    DemandVector::new(
        (0..num_users).map(|k| k % num_files + 1).collect(),
        num_files,
        num_users,
    )
    .expect("ids below N")
}
