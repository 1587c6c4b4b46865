//! Delivery: for each position `j` the server sends `N-1` plaintext subfiles.
//!
//! `F_j` is missing only at user `⟨j+1⟩`, so the first subfile sent at `j` is
//! that user's demand `W_{d(⟨j+1⟩),j}` (the *forced* entry). Any `N-2` of the
//! remaining subfiles at `j` complete the group; everyone else holding `F_j`
//! then peels the one subfile that was not sent.

use rayon::prelude::*;

use crate::bits::Bits;
use crate::error::{Error, Result};
use crate::params::{CyclicIndex, Rational, SystemParams};
use crate::placement::{FileStore, SubfileLabel};

/// `d = (d(1), …, d(K))`, each entry a file index in `1..=N`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DemandVector(Vec<usize>);

impl DemandVector {
    pub fn new(entries: Vec<usize>, params: &SystemParams) -> Result<Self> {
        if entries.len() != params.users() {
            return Err(Error::Parameter(format!(
                "demand has {} entries, expected K={}",
                entries.len(),
                params.users()
            )));
        }
        if let Some(bad) = entries.iter().find(|&&n| n < 1 || n > params.files()) {
            return Err(Error::Parameter(format!(
                "demand {bad} outside 1..={}",
                params.files()
            )));
        }
        Ok(DemandVector(entries))
    }

    /// `d(k)`.
    pub fn of(&self, user: CyclicIndex) -> usize {
        self.0[user.get() - 1]
    }

    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    pub fn users(&self) -> usize {
        self.0.len()
    }
}

/// Whether an entry serves the user lacking `F_j`, or completes the group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Origin {
    Forced,
    Extra,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptEntry {
    pub label: SubfileLabel,
    pub payload: Bits,
    pub origin: Origin,
}

/// The broadcast `X_d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    params: SystemParams,
    demand: DemandVector,
    entries: Vec<TranscriptEntry>,
}

impl Transcript {
    /// Wraps an arbitrary list of entries, e.g. one produced by a different
    /// server. Labels and payload sizes are checked; the count and the
    /// per-position structure are not.
    pub fn new(
        params: SystemParams,
        demand: DemandVector,
        entries: Vec<TranscriptEntry>,
    ) -> Result<Self> {
        if demand.users() != params.users() {
            return Err(Error::Integrity(format!(
                "demand length {} does not match K={}",
                demand.users(),
                params.users()
            )));
        }
        for e in &entries {
            let SubfileLabel { file, position } = e.label;
            if file < 1 || file > params.files() || position < 1 || position > params.users() {
                return Err(Error::Integrity(format!("label {} out of range", e.label)));
            }
            if e.payload.len() != params.subfile_bits() {
                return Err(Error::SizeMismatch {
                    expected: params.subfile_bits(),
                    actual: e.payload.len(),
                });
            }
        }
        Ok(Transcript {
            params,
            demand,
            entries,
        })
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn demand(&self) -> &DemandVector {
        &self.demand
    }

    pub fn entries(&self) -> &[TranscriptEntry] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<TranscriptEntry> {
        self.entries
    }

    pub fn at_position(&self, j: CyclicIndex) -> impl Iterator<Item = &TranscriptEntry> {
        self.entries
            .iter()
            .filter(move |e| e.label.position == j.get())
    }

    pub fn labels(&self) -> Vec<SubfileLabel> {
        self.entries.iter().map(|e| e.label).collect()
    }
}

/// `d(⟨j+1⟩_K)`: the demand of the one user that cannot read `F_j`.
pub fn forced_file_index(j: CyclicIndex, demand: &DemandVector) -> usize {
    let users = demand.users();
    let next = crate::params::wrap(j.get() as i64 + 1, users);
    demand.of(next)
}

/// Rule for picking the `N-2` extra subfiles at each position. Any choice
/// works; the crate uses [`ExtraRule::Smallest`] by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExtraRule {
    #[default]
    Smallest,
    Largest,
}

/// The `N-2` extra file indices sent at position `j`, ascending.
pub fn extra_set(j: CyclicIndex, demand: &DemandVector, files: usize) -> Vec<usize> {
    extra_set_with(j, demand, files, ExtraRule::Smallest)
}

pub fn extra_set_with(
    j: CyclicIndex,
    demand: &DemandVector,
    files: usize,
    rule: ExtraRule,
) -> Vec<usize> {
    let forced = forced_file_index(j, demand);
    let candidates: Vec<usize> = (1..=files).filter(|&n| n != forced).collect();
    let take = files.saturating_sub(2);
    match rule {
        ExtraRule::Smallest => candidates[..take].to_vec(),
        ExtraRule::Largest => candidates[candidates.len() - take..].to_vec(),
    }
}

/// Builds `X_d` with the canonical extra-set rule.
pub fn deliver(demand: &DemandVector, store: &FileStore) -> Transcript {
    deliver_with(demand, store, ExtraRule::Smallest)
}

/// Builds `X_d`: ascending `j`, forced entry first, extras ascending by file.
pub fn deliver_with(demand: &DemandVector, store: &FileStore, rule: ExtraRule) -> Transcript {
    let params = *store.params();
    let entry = |file: usize, j: CyclicIndex, origin: Origin| TranscriptEntry {
        label: SubfileLabel::new(file, j.get()),
        payload: store.subfile(file, j).clone(),
        origin,
    };
    let entries = params
        .indices()
        .collect::<Vec<_>>()
        .into_par_iter()
        .flat_map_iter(|j| {
            let forced = entry(forced_file_index(j, demand), j, Origin::Forced);
            let extras = extra_set_with(j, demand, params.files(), rule)
                .into_iter()
                .map(move |n| entry(n, j, Origin::Extra));
            std::iter::once(forced).chain(extras)
        })
        .collect();
    Transcript {
        params,
        demand: demand.clone(),
        entries,
    }
}

/// Broadcast size in file units, `entries / K`.
///
/// Fails unless the transcript holds exactly `K(N-1)` entries.
pub fn rate_of(t: &Transcript) -> Result<Rational> {
    let p = t.params();
    let expected = p.users() * (p.files() - 1);
    if t.entries.len() != expected {
        return Err(Error::Integrity(format!(
            "{} entries, expected K(N-1)={}",
            t.entries.len(),
            expected
        )));
    }
    Ok(Rational::new(t.entries.len() as u64, p.users() as u64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::generate_store;

    fn setup(n: usize, k: usize, l: usize, d: &[usize]) -> (SystemParams, DemandVector) {
        let p = SystemParams::new(n, k, l, 8).unwrap();
        let d = DemandVector::new(d.to_vec(), &p).unwrap();
        (p, d)
    }

    #[test]
    fn demand_validation() {
        let p = SystemParams::new(2, 5, 2, 8).unwrap();
        assert!(DemandVector::new(vec![1, 2, 1, 2], &p).is_err());
        assert!(DemandVector::new(vec![1, 2, 1, 2, 3], &p).is_err());
        assert!(DemandVector::new(vec![0, 2, 1, 2, 2], &p).is_err());
    }

    #[test]
    fn forced_examples() {
        let (p, d) = setup(3, 5, 2, &[1, 2, 3, 1, 2]);
        assert_eq!(forced_file_index(p.index(1).unwrap(), &d), 2);
        let (p, d) = setup(2, 5, 2, &[1, 2, 1, 2, 2]);
        assert_eq!(forced_file_index(p.index(2).unwrap(), &d), 1);
        let (p, d) = setup(2, 5, 2, &[1, 1, 2, 2, 2]);
        assert_eq!(forced_file_index(p.index(5).unwrap(), &d), 1);
    }

    #[test]
    fn extra_set_examples() {
        let (p, d) = setup(2, 5, 2, &[1, 2, 1, 2, 2]);
        for j in p.indices() {
            assert!(extra_set(j, &d, 2).is_empty());
        }
        let (p, d) = setup(3, 5, 2, &[1, 2, 3, 1, 2]);
        assert_eq!(extra_set(p.index(1).unwrap(), &d, 3), [1]);

        // forced index 3 at j=1 means d(2)=3
        let (p, d) = setup(4, 5, 2, &[1, 3, 1, 1, 1]);
        let j = p.index(1).unwrap();
        let mut oracle: Vec<usize> = (1..=4).filter(|&n| n != 3).collect();
        oracle.sort_unstable();
        oracle.truncate(2);
        assert_eq!(extra_set(j, &d, 4), oracle);
        assert_eq!(extra_set(j, &d, 4), [1, 2]);
        assert_eq!(extra_set_with(j, &d, 4, ExtraRule::Largest), [2, 4]);
    }

    #[test]
    fn deliver_canonical_order_for_example_two() {
        let (p, d) = setup(3, 5, 2, &[1, 2, 3, 1, 2]);
        let store = generate_store(&p, 3);
        let t = deliver(&d, &store);
        let labels: Vec<(usize, usize)> =
            t.labels().iter().map(|l| (l.file, l.position)).collect();
        assert_eq!(
            labels,
            [(2, 1), (1, 1), (3, 2), (1, 2), (1, 3), (2, 3), (2, 4), (1, 4), (1, 5), (2, 5)]
        );
        let origins: Vec<Origin> = t.entries().iter().map(|e| e.origin).collect();
        assert_eq!(origins[0], Origin::Forced);
        assert_eq!(origins[1], Origin::Extra);
        for e in t.entries() {
            assert_eq!(&e.payload, store.subfile_by_label(e.label).unwrap());
        }
        assert_eq!(rate_of(&t).unwrap(), Rational::from_integer(2));
    }

    #[test]
    fn every_position_omits_exactly_one_file() {
        let (p, d) = setup(4, 5, 2, &[4, 2, 3, 1, 4]);
        let store = generate_store(&p, 1);
        for rule in [ExtraRule::Smallest, ExtraRule::Largest] {
            let t = deliver_with(&d, &store, rule);
            for j in p.indices() {
                let mut sent: Vec<usize> = t.at_position(j).map(|e| e.label.file).collect();
                sent.sort_unstable();
                sent.dedup();
                assert_eq!(sent.len(), 3);
                assert!(sent.contains(&forced_file_index(j, &d)));
            }
        }
    }

    #[test]
    fn rate_of_checks_count() {
        let (p, d) = setup(2, 5, 2, &[1, 2, 1, 2, 2]);
        let store = generate_store(&p, 0);
        assert_eq!(rate_of(&deliver(&d, &store)).unwrap(), Rational::from_integer(1));
        let empty = Transcript::new(p, d, vec![]).unwrap();
        assert!(matches!(rate_of(&empty), Err(Error::Integrity(_))));
    }

    #[test]
    fn transcript_rejects_bad_labels() {
        let (p, d) = setup(2, 5, 2, &[1, 2, 1, 2, 2]);
        let bad = TranscriptEntry {
            label: SubfileLabel::new(3, 1),
            payload: Bits::zeros(8),
            origin: Origin::Extra,
        };
        assert!(Transcript::new(p, d, vec![bad]).is_err());
    }
}
