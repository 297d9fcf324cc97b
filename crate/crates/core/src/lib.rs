//! Coded caching laboratory: bit-exact caching schemes over a shared link,
//! converse bounds on the memory-rate tradeoff in exact arithmetic, and the
//! critical database size beyond which caching stops paying off.
//!
//! * [`model`]: files, subfile labels, caches, demands and transmissions.
//! * [`schemes`]: uncoded caching, coded caching and coded content placement.
//! * [`bounds`]: cut-set and improved lower bounds, achievable envelopes,
//!   critical-size brackets.
//! * [`constructions`]: the request-vector families behind the improved
//!   bound, with a validator and a counting re-derivation of its value.
//! * [`verify`]: invariant sweeps tying the pieces together.

pub mod bounds;
pub mod constructions;
pub mod error;
pub mod model;
pub mod rational;
pub mod schemes;
pub mod verify;

pub use error::{Error, Result};
pub use model::{
    enumerate_subsets, make_library, measure_rate, partition_file, Bits, Block, CacheContents,
    DemandVector, FileLibrary, PartKey, Partition, RatePoint, SubfileLabel, Transmission,
};
pub use rational::{parse_rational, Exact, Rational};
pub use schemes::{DeliveryResult, DemandSearch, SchemeInstance, SchemeKind};
