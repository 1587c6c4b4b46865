//! System parameters and the cyclic index algebra.
//!
//! Everything is 1-based: users, caches, files and subfile positions are
//! numbered from 1, and the representative of `0 mod K` is `K`.

use std::fmt;

use num_rational::Ratio;

use crate::error::{Error, Result};

/// Exact rational used for memory and rate figures (file units).
pub type Rational = Ratio<u64>;

/// A cyclic index in `1..=K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CyclicIndex(usize);

impl CyclicIndex {
    /// Wraps an already-reduced value. Fails unless `1 <= value <= modulus`.
    pub fn new(value: usize, modulus: usize) -> Result<Self> {
        if value == 0 || value > modulus {
            return Err(Error::Parameter(format!(
                "index {value} outside 1..={modulus}"
            )));
        }
        Ok(CyclicIndex(value))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

impl fmt::Display for CyclicIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// `⟨k⟩_K`: the representative of `k` modulo `modulus` in `1..=modulus`.
///
/// Negative `k` is reduced by congruence, so `mod_index(-1, 5)` is `4`.
///
/// ```
/// use macc::mod_index;
/// assert_eq!(mod_index(5, 5).unwrap().get(), 5);
/// assert_eq!(mod_index(0, 5).unwrap().get(), 5);
/// assert_eq!(mod_index(-1, 5).unwrap().get(), 4);
/// ```
pub fn mod_index(k: i64, modulus: usize) -> Result<CyclicIndex> {
    if modulus < 1 {
        return Err(Error::Parameter("modulus must be at least 1".into()));
    }
    Ok(wrap(k, modulus))
}

pub(crate) fn wrap(k: i64, modulus: usize) -> CyclicIndex {
    let r = k.rem_euclid(modulus as i64) as usize;
    CyclicIndex(if r == 0 { modulus } else { r })
}

/// `[a:b]_K`: the list `⟨a⟩, ⟨a+1⟩, …, ⟨b⟩`.
///
/// Spans longer than one full cycle are rejected.
pub fn cyclic_range(a: i64, b: i64, modulus: usize) -> Result<Vec<CyclicIndex>> {
    if modulus < 1 {
        return Err(Error::Parameter("modulus must be at least 1".into()));
    }
    if b < a {
        return Err(Error::Parameter(format!("empty cyclic range [{a}:{b}]")));
    }
    if (b - a) as u64 >= modulus as u64 {
        return Err(Error::Parameter(format!(
            "cyclic range [{a}:{b}] is longer than the cycle length {modulus}"
        )));
    }
    Ok((a..=b).map(|k| wrap(k, modulus)).collect())
}

/// A validated `(N, K, L)` system together with the subfile size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SystemParams {
    files: usize,
    users: usize,
    span: usize,
    subfile_bits: usize,
}

impl SystemParams {
    /// Validates `(N, K, L)` and the subfile size.
    ///
    /// `N > K` is accepted; [`SystemParams::exceeds_users`] reports it.
    pub fn new(files: usize, users: usize, span: usize, subfile_bits: usize) -> Result<Self> {
        if users < 2 {
            return Err(Error::Parameter(format!("K={users}: need at least 2 users")));
        }
        if span < 1 || span > users - 1 {
            return Err(Error::Parameter(format!(
                "L={span}: access span must lie in 1..={}",
                users - 1
            )));
        }
        if files < 2 {
            return Err(Error::DegenerateFileCount(files));
        }
        if subfile_bits < 1 {
            return Err(Error::Parameter("subfile_bits must be at least 1".into()));
        }
        if (users - 1) % span != 0 {
            return Err(Error::SchemeInapplicable { users, span });
        }
        Ok(SystemParams {
            files,
            users,
            span,
            subfile_bits,
        })
    }

    /// N, the number of files.
    pub fn files(&self) -> usize {
        self.files
    }

    /// K, the number of users and of caches.
    pub fn users(&self) -> usize {
        self.users
    }

    /// L, the number of consecutive caches each user reads.
    pub fn span(&self) -> usize {
        self.span
    }

    pub fn subfile_bits(&self) -> usize {
        self.subfile_bits
    }

    /// Bits in one whole file, `K * subfile_bits`.
    pub fn file_bits(&self) -> usize {
        self.users * self.subfile_bits
    }

    /// Coded files per cache, `(K-1)/L`.
    pub fn per_cache(&self) -> usize {
        (self.users - 1) / self.span
    }

    /// Per-cache memory `(K-1)/(KL)` in file units.
    pub fn memory(&self) -> Rational {
        Rational::new((self.users - 1) as u64, (self.users * self.span) as u64)
    }

    /// The scheme's rate, `N-1`.
    pub fn rate(&self) -> Rational {
        Rational::from_integer((self.files - 1) as u64)
    }

    /// Rate of the cache-free operating point, `min(N, K)` at `M = 0`.
    pub fn trivial_rate(&self) -> Rational {
        Rational::from_integer(self.files.min(self.users) as u64)
    }

    /// True when `N > K`; the scheme still works but `N-1` is no better than
    /// the cache-free rate.
    pub fn exceeds_users(&self) -> bool {
        self.files > self.users
    }

    /// `⟨k⟩_K` for this system.
    pub fn wrap(&self, k: i64) -> CyclicIndex {
        wrap(k, self.users)
    }

    /// All positions / users / caches `1..=K` in order.
    pub fn indices(&self) -> impl Iterator<Item = CyclicIndex> {
        (1..=self.users).map(CyclicIndex)
    }

    pub fn index(&self, value: usize) -> Result<CyclicIndex> {
        CyclicIndex::new(value, self.users)
    }
}

impl fmt::Display for SystemParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(N={}, K={}, L={})", self.files, self.users, self.span)
    }
}
