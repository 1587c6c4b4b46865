//! Multi-access coded caching with cyclic coded placement.
//!
//! A server holds `N` files and serves `K` users. There are `K` caches and
//! user `k` reads the `L` consecutive caches `⟨k⟩ … ⟨k+L-1⟩` (cyclically).
//! When `(K-1)/L` is an integer this crate places XOR-coded subfiles so each
//! cache holds `M = (K-1)/(KL)` file units, and delivers any demand vector with
//! `K(N-1)` plaintext subfiles, i.e. rate `R = N-1`.
//!
//! The pipeline:
//!
//! ```
//! use macc::{decode_user, deliver, place, build_user_view, DemandVector, SystemParams};
//! use macc::io::generate_store;
//!
//! let params = SystemParams::new(2, 5, 2, 64).unwrap();
//! let store = generate_store(&params, 0);
//! let caches = place(&store);
//!
//! let demand = DemandVector::new(vec![1, 2, 1, 2, 2], &params).unwrap();
//! let transcript = deliver(&demand, &store);
//! assert_eq!(macc::rate_of(&transcript).unwrap(), params.rate());
//!
//! for user in params.indices() {
//!     let view = build_user_view(user, &caches, &transcript);
//!     let file = decode_user(&view).unwrap();
//!     assert_eq!(file, store.file(demand.of(user)));
//! }
//! ```
//!
//! The `verify` module checks this for every demand vector and cross-checks
//! each user's decodability with a symbolic GF(2) rank test. The `io` module
//! defines the binary cache-image and transcript formats.

pub mod bits;
pub mod decode;
pub mod delivery;
mod error;
pub mod io;
pub mod params;
pub mod placement;
pub mod verify;

pub use bits::Bits;
pub use decode::{build_user_view, decode_user, peel, recover_position, UserView};
pub use delivery::{
    deliver, deliver_with, extra_set, extra_set_with, forced_file_index, rate_of, DemandVector, ExtraRule,
    Origin, Transcript, TranscriptEntry,
};
pub use error::{Error, Result};
pub use params::{cyclic_range, mod_index, CyclicIndex, Rational, SystemParams};
pub use placement::{
    accessible_coded_indices, cache_content_indices, coded_file, connected_caches, place,
    split_file, CacheAccess, CacheArray, CodedFile, FileStore, SubfileLabel,
};
pub use verify::{
    memory_audit, oracle_decodable, sweep, verify_all_demands, verify_all_demands_with,
    Coverage, Failure, MemoryAudit, SweepRow, SweepStatus, VerificationReport,
};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/notation.md")]
    mod notation {}
    #[doc = include_str!("../../../book/src/placement.md")]
    mod placement {}
    #[doc = include_str!("../../../book/src/delivery.md")]
    mod delivery {}
    #[doc = include_str!("../../../book/src/decoding.md")]
    mod decoding {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
}
