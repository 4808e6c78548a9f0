//! Minimal k-perfect hashing: keys sorted by a hash into `[n]`, cut into
//! runs of `k`, with the cut points kept in an Elias-Fano sequence.

mod retrieval;

pub use retrieval::Retrieval;

use crate::bitio::MonotoneSequence;
use crate::codec::{ByteReader, ByteWriter};
use crate::error::{Error, Result};
use crate::splitter::KeyDigest;

/// Bucket hash `h(x) ∈ [0, n)` by multiply-shift on the low digest word.
#[inline]
pub fn bucket_hash(d: &KeyDigest, n: u64) -> u64 {
    ((d.lo as u128 * n as u128) >> 64) as u64
}

/// Maps a key set of size `n` onto buckets `1..=⌈n/k⌉`, the first `⌊n/k⌋`
/// receiving exactly `k` keys each and the last one the remainder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KPerfect {
    n: u64,
    k: u64,
    thresholds: MonotoneSequence,
    disamb: Retrieval,
    ambiguous: u64,
}

impl KPerfect {
    /// Sorts `digests` into bucket order and builds the function.
    ///
    /// On return, bucket `b` owns `digests[(b−1)·k .. min(b·k, n)]`.
    pub fn build(digests: &mut [KeyDigest], k: u64) -> Result<Self> {
        let n = digests.len() as u64;
        if n == 0 {
            return Err(Error::InvalidParameter("empty key set".into()));
        }
        if k < 2 {
            return Err(Error::InvalidParameter(format!("bucket size {k} below 2")));
        }
        digests.sort_unstable_by_key(|d| (bucket_hash(d, n), d.hi, d.lo));
        if let Some(w) = digests.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateKey {
                hi: w[0].hi,
                lo: w[0].lo,
            });
        }
        let buckets = n.div_ceil(k);
        let thresholds: Vec<u64> = (1..buckets)
            .map(|i| bucket_hash(&digests[(k * i - 1) as usize], n))
            .collect();
        let seq = MonotoneSequence::new(&thresholds, n)?;

        // Keys whose hash equals some threshold cannot be placed by rank alone.
        let mut entries = Vec::new();
        let mut width = 0;
        let mut t = 0usize;
        for (j, d) in digests.iter().enumerate() {
            let h = bucket_hash(d, n);
            while t < thresholds.len() && thresholds[t] < h {
                t += 1;
            }
            if t < thresholds.len() && thresholds[t] == h {
                let equal = thresholds[t..].iter().take_while(|&&x| x == h).count() as u64;
                let correction = j as u64 / k - t as u64;
                debug_assert!(correction <= equal);
                width = width.max(64 - equal.leading_zeros());
                entries.push((*d, correction));
            }
        }
        let disamb = Retrieval::build(&entries, width)?;
        Ok(Self {
            n,
            k,
            thresholds: seq,
            disamb,
            ambiguous: entries.len() as u64,
        })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn bucket_count(&self) -> u64 {
        self.n.div_ceil(self.k)
    }

    pub fn full_buckets(&self) -> u64 {
        self.n / self.k
    }

    /// Bucket of a member key, in `1..=⌈n/k⌉`.
    #[inline]
    pub fn query(&self, d: &KeyDigest) -> u64 {
        let h = bucket_hash(d, self.n);
        let r = self.thresholds.rank(h) as u64;
        let c = self.thresholds.rank(h + 1) as u64 - r;
        if c == 0 {
            r + 1
        } else {
            r + 1 + self.disamb.get(d).min(c)
        }
    }

    pub fn thresholds(&self) -> &MonotoneSequence {
        &self.thresholds
    }

    /// Number of keys stored in the disambiguation table.
    pub fn disambiguation_entries(&self) -> u64 {
        self.ambiguous
    }

    pub fn threshold_bits(&self) -> u64 {
        self.thresholds.size_in_bits()
    }

    pub fn disambiguation_bits(&self) -> u64 {
        self.disamb.size_in_bits()
    }

    pub fn size_in_bits(&self) -> u64 {
        self.threshold_bits() + self.disambiguation_bits()
    }

    pub fn serialize(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.put_u64(self.n);
        w.put_u64(self.k);
        w.put_u64(self.ambiguous);
        w.put_section(&self.thresholds.serialize());
        w.put_section(&self.disamb.serialize());
        w.into_inner()
    }

    pub fn deserialize(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes);
        let n = r.u64()?;
        let k = r.u64()?;
        let ambiguous = r.u64()?;
        let thresholds = MonotoneSequence::deserialize(r.section()?)?;
        let disamb = Retrieval::deserialize(r.section()?)?;
        r.finish("k-perfect section")?;
        if n == 0 || k < 2 || thresholds.universe() != n || thresholds.len() as u64 + 1 != n.div_ceil(k) {
            return Err(Error::Format("inconsistent k-perfect header".into()));
        }
        Ok(Self {
            n,
            k,
            thresholds,
            disamb,
            ambiguous,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_digests(n: usize, seed: u64) -> Vec<KeyDigest> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| KeyDigest::new(rng.gen(), rng.gen())).collect()
    }

    /// Digest whose bucket hash under `n` is exactly `h`.
    fn with_hash(h: u64, n: u64, hi: u64) -> KeyDigest {
        let lo = ((h as u128) << 64).div_ceil(n as u128) as u64;
        let d = KeyDigest::new(hi, lo);
        assert_eq!(bucket_hash(&d, n), h);
        d
    }

    fn check_sweep(kp: &KPerfect, sorted: &[KeyDigest]) {
        for (j, d) in sorted.iter().enumerate() {
            assert_eq!(kp.query(d), j as u64 / kp.k() + 1);
        }
    }

    #[test]
    fn single_bucket() {
        let mut d = random_digests(8, 1);
        let kp = KPerfect::build(&mut d, 8).unwrap();
        assert_eq!(kp.thresholds().len(), 0);
        assert_eq!(kp.disambiguation_entries(), 0);
        assert!(d.iter().all(|x| kp.query(x) == 1));
    }

    #[test]
    fn two_buckets_distinct_hashes() {
        let n = 8;
        let mut d: Vec<_> = (0..8).map(|h| with_hash(h, n, 100 + h)).collect();
        let kp = KPerfect::build(&mut d, 4).unwrap();
        assert_eq!(kp.thresholds().iter().collect::<Vec<_>>(), vec![3]);
        // only the key whose hash is the threshold itself is ambiguous
        assert_eq!(kp.disambiguation_entries(), 1);
        check_sweep(&kp, &d);
        // strictly between thresholds: decided by rank alone
        assert_eq!(kp.query(&with_hash(5, n, 1)), 2);
        assert_eq!(kp.query(&with_hash(1, n, 1)), 1);
    }

    #[test]
    fn ties_across_a_cut() {
        // five keys share hash 2; the cut after four keys falls inside the run
        let n = 8;
        let mut d: Vec<_> = [2, 2, 2, 2, 2, 6, 6, 7]
            .iter()
            .enumerate()
            .map(|(i, &h)| with_hash(h, n, i as u64))
            .collect();
        let kp = KPerfect::build(&mut d, 4).unwrap();
        assert_eq!(kp.disambiguation_entries(), 5);
        check_sweep(&kp, &d);
    }

    #[test]
    fn many_equal_thresholds() {
        let n = 40;
        let mut d: Vec<_> = (0..n).map(|i| with_hash(if i < 30 { 9 } else { i }, n, i)).collect();
        let kp = KPerfect::build(&mut d, 4).unwrap();
        check_sweep(&kp, &d);
    }

    #[test]
    fn exact_bucket_sizes() {
        let mut d = random_digests(100_000, 2);
        let kp = KPerfect::build(&mut d, 256).unwrap();
        let mut sizes = vec![0u64; kp.bucket_count() as usize];
        for x in &d {
            sizes[kp.query(x) as usize - 1] += 1;
        }
        let (full, last) = sizes.split_at(sizes.len() - 1);
        assert!(full.iter().all(|&s| s == 256));
        assert_eq!(last[0], 100_000 % 256);
        check_sweep(&kp, &d);
        assert!(kp.disambiguation_entries() <= 4 * 100_000 / 256);
    }

    #[test]
    fn rejects_duplicates_and_bad_k() {
        let mut d = random_digests(10, 3);
        d[7] = d[2];
        assert!(matches!(
            KPerfect::build(&mut d, 4),
            Err(Error::DuplicateKey { .. })
        ));
        assert!(KPerfect::build(&mut random_digests(4, 1), 1).is_err());
        assert!(KPerfect::build(&mut [], 4).is_err());
    }

    #[test]
    fn round_trip() {
        let mut d = random_digests(5000, 4);
        let kp = KPerfect::build(&mut d, 64).unwrap();
        let back = KPerfect::deserialize(&kp.serialize()).unwrap();
        assert_eq!(back, kp);
        check_sweep(&back, &d);
    }
}
