//! Two-way splitting: seeded one-bit hash functions and the probability that
//! a seed halves a key set exactly.

use num_bigint::BigUint;
use num_traits::One;

use crate::oracle::{finalize, mix64, mix_round, Probability, MIX_GAMMA};

/// 128-bit fingerprint of a key under a master seed.
///
/// `hi` drives splitting, `lo` drives bucketing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct KeyDigest {
    pub hi: u64,
    pub lo: u64,
}

const LANE_HI: u64 = 0x6a09_e667_f3bc_c908;
const LANE_LO: u64 = 0xbb67_ae85_84ca_a73b;

impl KeyDigest {
    pub fn new(hi: u64, lo: u64) -> Self {
        Self { hi, lo }
    }

    /// Hashes raw key bytes in two independent lanes of 8-byte little-endian words.
    pub fn from_key(key: &[u8], master_seed: u64) -> Self {
        let len = key.len() as u64;
        let mut a = mix64(master_seed, LANE_HI, len);
        let mut b = mix64(master_seed, LANE_LO, len);
        let mut chunks = key.chunks_exact(8);
        for c in &mut chunks {
            let x = u64::from_le_bytes(c.try_into().expect("8-byte chunk"));
            a = mix_round(a, x);
            b = mix_round(b, x);
        }
        let rest = chunks.remainder();
        if !rest.is_empty() {
            let mut buf = [0u8; 8];
            buf[..rest.len()].copy_from_slice(rest);
            let x = u64::from_le_bytes(buf);
            a = mix_round(a, x);
            b = mix_round(b, x);
        }
        Self { hi: a, lo: b }
    }
}

/// Identifies a splitting node: `mix64(salt, layer, index)`.
#[inline]
pub fn node_key(salt: u64, layer: u64, index: u64) -> u64 {
    mix64(salt, layer, index)
}

/// One seeded splitting function at one node.
///
/// The bit of a digest is the top bit of `mix64(node, seed, digest.hi)`; the
/// first two rounds do not depend on the key and are computed once here.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitFn {
    state: u64,
}

/// Key-independent first round of a node's splitting functions.
#[inline]
pub fn node_prefix(node: u64) -> u64 {
    mix_round(0, node)
}

impl SplitFn {
    #[inline]
    pub fn new(node: u64, seed: u64) -> Self {
        Self::from_prefix(node_prefix(node), seed)
    }

    /// As [`SplitFn::new`] with `prefix = node_prefix(node)`.
    #[inline]
    pub fn from_prefix(prefix: u64, seed: u64) -> Self {
        Self {
            state: mix_round(prefix, seed).wrapping_add(MIX_GAMMA),
        }
    }

    /// `true` sends the key right.
    #[inline]
    pub fn bit(&self, d: &KeyDigest) -> bool {
        finalize(self.state ^ d.hi) >> 63 == 1
    }
}

/// `split_bit` for a single digest.
#[inline]
pub fn split_bit(d: &KeyDigest, node: u64, seed: u64) -> bool {
    SplitFn::new(node, seed).bit(d)
}

/// Whether exactly `⌈m/2⌉` of the `m` digests go left.
#[inline]
pub fn try_split(keys: &[KeyDigest], node: u64, seed: u64) -> bool {
    try_split_with(keys, SplitFn::new(node, seed))
}

#[inline]
pub fn try_split_with(keys: &[KeyDigest], f: SplitFn) -> bool {
    let m = keys.len();
    let left_target = m.div_ceil(2);
    let right_target = m - left_target;
    let (mut left, mut right) = (0usize, 0usize);
    for d in keys {
        if f.bit(d) {
            right += 1;
            if right > right_target {
                return false;
            }
        } else {
            left += 1;
            if left > left_target {
                return false;
            }
        }
    }
    true
}

/// Stable partition: left keys first, then right keys. Returns the left count.
pub fn partition(keys: &mut [KeyDigest], node: u64, seed: u64, scratch: &mut Vec<KeyDigest>) -> usize {
    let f = SplitFn::new(node, seed);
    scratch.clear();
    let mut left = 0;
    for i in 0..keys.len() {
        let d = keys[i];
        if f.bit(&d) {
            scratch.push(d);
        } else {
            keys[left] = d;
            left += 1;
        }
    }
    keys[left..].copy_from_slice(scratch);
    left
}

/// `C(m, j)` exactly.
pub fn binomial(m: u64, j: u64) -> BigUint {
    let j = j.min(m - j);
    let mut acc = BigUint::one();
    for t in 1..=j {
        acc *= m - j + t;
        acc /= t;
    }
    acc
}

/// `C(m, m/2)·2^{−m}`, the chance a fresh seed splits `m` keys in half.
pub fn split_success_prob(m: u64) -> f64 {
    uneven_split_prob(m, m / 2)
}

/// `C(m, left)·2^{−m}`.
pub fn uneven_split_prob(m: u64, left: u64) -> f64 {
    assert!(left <= m, "left part larger than the node");
    let j = left.min(m - left);
    let ln: f64 = (1..=j)
        .map(|t| ((m - j + t) as f64 / t as f64).ln())
        .sum::<f64>()
        - m as f64 * std::f64::consts::LN_2;
    ln.exp()
}

/// [`uneven_split_prob`] as an exact fixed-point probability (rounded down).
pub fn split_probability(m: u64, left: u64) -> Probability {
    let num = binomial(m, left);
    let den = BigUint::one() << m;
    Probability::from_big_ratio(&num, &den).expect("split probability below 2^-64")
}
