//! User-side decoding.
//!
//! For each position `j` a user either finds its subfile `W_{d(k),j}` in the
//! transcript, or holds `F_j` together with all `N-1` other subfiles at `j`
//! and recovers it by XOR peeling.

use std::collections::BTreeMap;

use crate::bits::Bits;
use crate::delivery::{DemandVector, Transcript};
use crate::error::{Error, Result};
use crate::params::{CyclicIndex, SystemParams};
use crate::placement::{connected_caches, CacheAccess};

/// Everything user `k` can see: its `L` caches and the broadcast.
#[derive(Debug, Clone)]
pub struct UserView<'a> {
    user: CyclicIndex,
    params: SystemParams,
    coded: BTreeMap<usize, &'a Bits>,
    transcript: &'a Transcript,
}

impl<'a> UserView<'a> {
    pub fn user(&self) -> CyclicIndex {
        self.user
    }

    /// Coded payloads keyed by position.
    pub fn coded(&self) -> &BTreeMap<usize, &'a Bits> {
        &self.coded
    }

    pub fn demand(&self) -> &DemandVector {
        self.transcript.demand()
    }

    pub fn transcript(&self) -> &Transcript {
        self.transcript
    }

    /// Distinct transmitted subfiles at `j`, keyed by file index. A repeated
    /// label keeps its first payload.
    fn transmitted_at(&self, j: CyclicIndex) -> BTreeMap<usize, &Bits> {
        let mut out = BTreeMap::new();
        for e in self.transcript.at_position(j) {
            out.entry(e.label.file).or_insert(&e.payload);
        }
        out
    }
}

/// Assembles user `k`'s view, reading only caches `⟨k⟩ … ⟨k+L-1⟩`.
pub fn build_user_view<'a, C: CacheAccess + ?Sized>(
    user: CyclicIndex,
    caches: &'a C,
    transcript: &'a Transcript,
) -> UserView<'a> {
    let params = *caches.params();
    let mut coded = BTreeMap::new();
    for c in connected_caches(user, &params) {
        for f in caches.cache(c) {
            coded.insert(f.position.get(), &f.payload);
        }
    }
    UserView {
        user,
        params,
        coded,
        transcript,
    }
}

/// `coded ⊕ received[0] ⊕ received[1] ⊕ …`.
///
/// ```
/// use macc::{peel, Bits};
/// let a: Bits = "1100".parse().unwrap();
/// let b: Bits = "1010".parse().unwrap();
/// let f = a.xor(&b).unwrap();
/// assert_eq!(peel(&f, &[&a]).unwrap(), b);
/// ```
pub fn peel(coded: &Bits, received: &[&Bits]) -> Result<Bits> {
    let mut out = coded.clone();
    for r in received {
        out.xor_assign(r)?;
    }
    Ok(out)
}

/// Every subfile at position `j` the user can obtain, keyed by file index.
///
/// For an accessible `j` under a valid delivery this is all `N` of them.
pub fn recover_position(view: &UserView<'_>, j: CyclicIndex) -> Result<BTreeMap<usize, Bits>> {
    let sent = view.transmitted_at(j);
    let mut known: BTreeMap<usize, Bits> =
        sent.iter().map(|(&n, &b)| (n, b.clone())).collect();
    if let Some(f) = view.coded.get(&j.get()) {
        let missing: Vec<usize> = (1..=view.params.files())
            .filter(|n| !known.contains_key(n))
            .collect();
        if let [only] = missing[..] {
            let received: Vec<&Bits> = sent.values().copied().collect();
            known.insert(only, peel(f, &received)?);
        }
    }
    Ok(known)
}

/// `ψ_{d,k}`: rebuilds the file user `k` asked for.
pub fn decode_user(view: &UserView<'_>) -> Result<Bits> {
    let want = view.demand().of(view.user);
    let files = view.params.files();
    let mut pieces = Vec::with_capacity(view.params.users());
    for j in view.params.indices() {
        let sent = view.transmitted_at(j);
        if let Some(&direct) = sent.get(&want) {
            pieces.push(direct.clone());
            continue;
        }
        let others_known = (1..=files).filter(|&n| n != want).all(|n| sent.contains_key(&n));
        match view.coded.get(&j.get()) {
            Some(f) if others_known => {
                let received: Vec<&Bits> = sent.values().copied().collect();
                pieces.push(peel(f, &received)?);
            }
            _ => {
                return Err(Error::Undecodable {
                    user: view.user.get(),
                    file: want,
                    position: j.get(),
                })
            }
        }
    }
    Ok(Bits::concat(&pieces))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delivery::deliver;
    use crate::io::generate_store;
    use crate::placement::{place, CacheArray, CodedFile};
    use std::cell::RefCell;

    struct Logged<'a> {
        inner: &'a CacheArray,
        reads: RefCell<Vec<usize>>,
    }

    impl CacheAccess for Logged<'_> {
        fn params(&self) -> &SystemParams {
            self.inner.params()
        }
        fn cache(&self, k: CyclicIndex) -> &[CodedFile] {
            self.reads.borrow_mut().push(k.get());
            self.inner.cache(k)
        }
    }

    fn keys(view: &UserView<'_>) -> Vec<usize> {
        view.coded().keys().copied().collect()
    }

    #[test]
    fn views_read_only_connected_caches() {
        for (n, k, l, user, want_keys, want_reads) in [
            (2, 5, 2, 5, vec![1, 2, 3, 5], vec![5, 1]),
            (2, 5, 2, 1, vec![1, 2, 3, 4], vec![1, 2]),
            (2, 9, 4, 2, (2..=9).collect(), vec![2, 3, 4, 5]),
        ] {
            let p = SystemParams::new(n, k, l, 8).unwrap();
            let store = generate_store(&p, 0);
            let caches = place(&store);
            let d = DemandVector::new(vec![1; k], &p).unwrap();
            let t = deliver(&d, &store);
            let logged = Logged {
                inner: &caches,
                reads: RefCell::new(vec![]),
            };
            let view = build_user_view(p.index(user).unwrap(), &logged, &t);
            assert_eq!(keys(&view), want_keys);
            assert_eq!(*logged.reads.borrow(), want_reads);
        }
    }

    #[test]
    fn peel_cancels() {
        let a: Bits = "10110".parse().unwrap();
        let b: Bits = "01100".parse().unwrap();
        let c: Bits = "11111".parse().unwrap();
        let f2 = a.xor(&b).unwrap();
        assert_eq!(peel(&f2, &[&a]).unwrap(), b);
        let f3 = f2.xor(&c).unwrap();
        assert_eq!(peel(&f3, &[&b, &c]).unwrap(), a);
        assert!(peel(&f3, &[&Bits::zeros(4)]).is_err());
    }

    #[test]
    fn peeled_subfile_matches_store() {
        let p = SystemParams::new(3, 5, 2, 16).unwrap();
        let store = generate_store(&p, 42);
        let caches = place(&store);
        let d = DemandVector::new(vec![1, 2, 3, 1, 2], &p).unwrap();
        let t = deliver(&d, &store);
        let j = p.index(2).unwrap();
        let sent: Vec<usize> = t.at_position(j).map(|e| e.label.file).collect();
        let untransmitted = (1..=3).find(|n| !sent.contains(n)).unwrap();
        let f2 = crate::placement::coded_file(j, &store);
        let payloads: Vec<&Bits> = t.at_position(j).map(|e| &e.payload).collect();
        assert_eq!(&peel(&f2.payload, &payloads).unwrap(), store.subfile(untransmitted, j));

        // every accessible position is fully recoverable
        for user in p.indices() {
            let view = build_user_view(user, &caches, &t);
            for pos in p.indices() {
                let got = recover_position(&view, pos).unwrap();
                if view.coded().contains_key(&pos.get()) {
                    assert_eq!(got.len(), 3);
                    for (n, bits) in got {
                        assert_eq!(&bits, store.subfile(n, pos));
                    }
                }
            }
        }
    }

    #[test]
    fn decode_examples() {
        let p = SystemParams::new(2, 5, 2, 8).unwrap();
        let store = generate_store(&p, 9);
        let caches = place(&store);
        let d = DemandVector::new(vec![1, 2, 1, 2, 2], &p).unwrap();
        let t = deliver(&d, &store);
        let view = build_user_view(p.index(3).unwrap(), &caches, &t);
        assert_eq!(decode_user(&view).unwrap(), store.file(1));

        // all users asking for file 1: every position's forced entry is W_{1,j}
        let d = DemandVector::new(vec![1; 5], &p).unwrap();
        let t = deliver(&d, &store);
        assert!(t.entries().iter().all(|e| e.label.file == 1));
        for user in p.indices() {
            let view = build_user_view(user, &caches, &t);
            assert_eq!(decode_user(&view).unwrap(), store.file(1));
        }
    }

    #[test]
    fn missing_forced_entry_is_undecodable() {
        let p = SystemParams::new(3, 5, 2, 8).unwrap();
        let store = generate_store(&p, 9);
        let caches = place(&store);
        let d = DemandVector::new(vec![1, 2, 3, 1, 2], &p).unwrap();
        let t = deliver(&d, &store);
        // user 2 lacks F_1; the forced entry at j=1 is W_{2,1}
        let entries: Vec<_> = t
            .entries()
            .iter()
            .filter(|e| !(e.label.position == 1 && e.label.file == 2))
            .cloned()
            .collect();
        let cut = Transcript::new(p, d, entries).unwrap();
        let view = build_user_view(p.index(2).unwrap(), &caches, &cut);
        assert_eq!(
            decode_user(&view),
            Err(Error::Undecodable {
                user: 2,
                file: 2,
                position: 1
            })
        );
    }
}
