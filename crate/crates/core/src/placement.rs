//! Cyclic coded placement.
//!
//! Every file `W_n` is cut into `K` equal subfiles `W_{n,1} … W_{n,K}`. The
//! coded file `F_j` is the XOR of the `j`-th subfile of every file, and cache
//! `Z_k` stores `F_⟨k⟩, F_⟨k+L⟩, …, F_⟨k+(q-1)L⟩` with `q = (K-1)/L`.
//!
//! User `k` reads caches `⟨k⟩ … ⟨k+L-1⟩`, which together hold every coded
//! file except `F_⟨k-1⟩`.

use std::fmt;

use rayon::prelude::*;

use crate::bits::Bits;
use crate::error::{Error, Result};
use crate::params::{cyclic_range, CyclicIndex, SystemParams};

/// The label `W_{n,j}` of a plaintext subfile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SubfileLabel {
    pub file: usize,
    pub position: usize,
}

impl SubfileLabel {
    pub fn new(file: usize, position: usize) -> Self {
        SubfileLabel { file, position }
    }
}

impl fmt::Display for SubfileLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "W_{{{},{}}}", self.file, self.position)
    }
}

/// Splits one file into its `K` contiguous subfiles.
pub fn split_file(payload: &Bits, params: &SystemParams) -> Result<Vec<Bits>> {
    if payload.len() != params.file_bits() {
        return Err(Error::SizeMismatch {
            expected: params.file_bits(),
            actual: payload.len(),
        });
    }
    let sb = params.subfile_bits();
    Ok((0..params.users())
        .map(|j| payload.slice(j * sb, sb))
        .collect())
}

/// The server's `N` files, held as subfiles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileStore {
    params: SystemParams,
    // subfiles[n-1][j-1] = W_{n,j}
    subfiles: Vec<Vec<Bits>>,
}

impl FileStore {
    /// Builds a store from whole files; each must be exactly `K * subfile_bits`
    /// bits long.
    pub fn from_files(params: SystemParams, files: &[Bits]) -> Result<Self> {
        if files.len() != params.files() {
            return Err(Error::Parameter(format!(
                "expected {} files, got {}",
                params.files(),
                files.len()
            )));
        }
        let subfiles = files
            .iter()
            .map(|f| split_file(f, &params))
            .collect::<Result<Vec<_>>>()?;
        Ok(FileStore { params, subfiles })
    }

    /// Builds a store from subfiles indexed `[n-1][j-1]`.
    pub fn from_subfiles(params: SystemParams, subfiles: Vec<Vec<Bits>>) -> Result<Self> {
        if subfiles.len() != params.files()
            || subfiles.iter().any(|row| row.len() != params.users())
        {
            return Err(Error::Parameter(format!(
                "expected {}x{} subfiles",
                params.files(),
                params.users()
            )));
        }
        for s in subfiles.iter().flatten() {
            if s.len() != params.subfile_bits() {
                return Err(Error::SizeMismatch {
                    expected: params.subfile_bits(),
                    actual: s.len(),
                });
            }
        }
        Ok(FileStore { params, subfiles })
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    /// `W_{n,j}`; panics if `n` or `j` is out of range.
    pub fn subfile(&self, file: usize, position: CyclicIndex) -> &Bits {
        &self.subfiles[file - 1][position.get() - 1]
    }

    pub fn subfile_by_label(&self, label: SubfileLabel) -> Option<&Bits> {
        self.subfiles
            .get(label.file.checked_sub(1)?)?
            .get(label.position.checked_sub(1)?)
    }

    /// The whole file `W_n`.
    pub fn file(&self, file: usize) -> Bits {
        Bits::concat(&self.subfiles[file - 1])
    }
}

/// `F_j`, the XOR of all subfiles at position `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodedFile {
    pub position: CyclicIndex,
    pub payload: Bits,
}

impl CodedFile {
    /// The subfile labels XORed into this coded file, for `N` files.
    pub fn terms(&self, files: usize) -> Vec<SubfileLabel> {
        (1..=files)
            .map(|n| SubfileLabel::new(n, self.position.get()))
            .collect()
    }

    /// Renders as `W_{1,j}⊕W_{2,j}⊕…`.
    pub fn symbolic(&self, files: usize) -> String {
        self.terms(files)
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("⊕")
    }
}

pub fn coded_file(position: CyclicIndex, store: &FileStore) -> CodedFile {
    let mut payload = Bits::zeros(store.params.subfile_bits());
    for n in 1..=store.params.files() {
        payload
            .xor_assign(store.subfile(n, position))
            .expect("store subfiles share one length");
    }
    CodedFile { position, payload }
}

/// Positions stored in cache `k`, in placement loop order.
///
/// ```
/// use macc::{cache_content_indices, SystemParams};
/// let p = SystemParams::new(2, 5, 2, 8).unwrap();
/// let z4: Vec<usize> = cache_content_indices(p.index(4).unwrap(), &p)
///     .into_iter()
///     .map(|j| j.get())
///     .collect();
/// assert_eq!(z4, [4, 1]);
/// ```
pub fn cache_content_indices(cache: CyclicIndex, params: &SystemParams) -> Vec<CyclicIndex> {
    let (k, l) = (cache.get() as i64, params.span() as i64);
    (0..params.per_cache() as i64)
        .map(|i| params.wrap(k + i * l))
        .collect()
}

/// The coded positions user `k` can read, `[k : k+K-2]_K`.
pub fn accessible_coded_indices(user: CyclicIndex, params: &SystemParams) -> Vec<CyclicIndex> {
    let k = user.get() as i64;
    cyclic_range(k, k + params.users() as i64 - 2, params.users())
        .expect("span K-1 never exceeds the cycle")
}

/// The caches user `k` is connected to, `[k : k+L-1]_K`.
pub fn connected_caches(user: CyclicIndex, params: &SystemParams) -> Vec<CyclicIndex> {
    let k = user.get() as i64;
    cyclic_range(k, k + params.span() as i64 - 1, params.users())
        .expect("L <= K-1 never exceeds the cycle")
}

/// The cache contents `Z_1 … Z_K`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheArray {
    params: SystemParams,
    contents: Vec<Vec<CodedFile>>,
}

impl CacheArray {
    /// Assembles caches from explicit contents, checking the placement rule.
    pub fn from_contents(params: SystemParams, contents: Vec<Vec<CodedFile>>) -> Result<Self> {
        if contents.len() != params.users() {
            return Err(Error::Parameter(format!(
                "expected {} caches, got {}",
                params.users(),
                contents.len()
            )));
        }
        for (k, entries) in params.indices().zip(&contents) {
            let want = cache_content_indices(k, &params);
            let got: Vec<_> = entries.iter().map(|c| c.position).collect();
            if want != got {
                return Err(Error::Parameter(format!(
                    "cache {k} holds positions {got:?}, placement requires {want:?}"
                )));
            }
            if let Some(c) = entries
                .iter()
                .find(|c| c.payload.len() != params.subfile_bits())
            {
                return Err(Error::SizeMismatch {
                    expected: params.subfile_bits(),
                    actual: c.payload.len(),
                });
            }
        }
        Ok(CacheArray { params, contents })
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    /// `Z_k`.
    pub fn cache(&self, k: CyclicIndex) -> &[CodedFile] {
        &self.contents[k.get() - 1]
    }

    pub fn iter(&self) -> impl Iterator<Item = (CyclicIndex, &[CodedFile])> {
        self.params.indices().zip(self.contents.iter().map(Vec::as_slice))
    }

    pub fn stored_bits(&self, k: CyclicIndex) -> usize {
        self.cache(k).iter().map(|c| c.payload.len()).sum()
    }

    /// One row per cache: `Z_k: W_{1,j}⊕W_{2,j}, …`.
    pub fn symbolic_table(&self) -> Vec<Vec<String>> {
        self.contents
            .iter()
            .map(|z| z.iter().map(|c| c.symbolic(self.params.files())).collect())
            .collect()
    }
}

/// Read access to cache contents, by cache index.
pub trait CacheAccess {
    fn params(&self) -> &SystemParams;
    fn cache(&self, k: CyclicIndex) -> &[CodedFile];
}

impl CacheAccess for CacheArray {
    fn params(&self) -> &SystemParams {
        &self.params
    }

    fn cache(&self, k: CyclicIndex) -> &[CodedFile] {
        CacheArray::cache(self, k)
    }
}

/// Computes the coded files and fills every cache.
pub fn place(store: &FileStore) -> CacheArray {
    let params = *store.params();
    let coded: Vec<CodedFile> = params
        .indices()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|j| coded_file(j, store))
        .collect();
    let contents = params
        .indices()
        .map(|k| {
            cache_content_indices(k, &params)
                .into_iter()
                .map(|j| coded[j.get() - 1].clone())
                .collect()
        })
        .collect();
    CacheArray { params, contents }
}
