use crate::baselines::min_rice_parameter;
use crate::bitio::RiceCode;
use crate::codec::{ByteReader, ByteWriter};
use crate::error::{Error, Result};
use crate::splitter::{node_key, partition, split_bit, try_split, uneven_split_prob, KeyDigest};

/// Layer ids of fallback nodes start here, clear of the main tree's layers.
const LAYER_BASE: u64 = 1 << 32;
/// Give up on a node after this many multiples of its expected trials.
const TRIAL_FACTOR: f64 = 2000.0;

/// Perfect hash for the leftover keys: a near-halving splitting tree
/// (left child gets `⌈m/2⌉`) with the minimal seed of every node.
///
/// Depth `t` holds one Rice stream. Every node above the last depth splits,
/// so those streams are indexed by the node's path. At the last depth nodes
/// hold one or two keys and only the pairs have a seed, indexed by
/// `start − path` (the number of pairs to the left).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fallback {
    m: u64,
    depths: Vec<RiceCode>,
}

impl Fallback {
    pub fn empty() -> Self {
        Self { m: 0, depths: Vec::new() }
    }

    /// Sorts `keys` into leaf order; returns the structure and the trials spent.
    pub fn build(keys: &mut [KeyDigest], salt: u64) -> Result<(Self, u64)> {
        let m = keys.len() as u64;
        let mut depths = Vec::new();
        let mut trials = 0u64;
        let mut scratch = Vec::new();
        // (start, size) of each node at the current depth, in path order
        let mut level = vec![(0usize, keys.len())];
        let mut t = 0u64;
        while level.iter().any(|&(_, s)| s >= 2) {
            let mut seeds = Vec::with_capacity(level.len());
            let mut next = Vec::with_capacity(2 * level.len());
            let mut p_sum = 0.0;
            let mut splitting = 0usize;
            for (idx, &(start, size)) in level.iter().enumerate() {
                if size < 2 {
                    continue;
                }
                let slice = &mut keys[start..start + size];
                let node = node_key(salt, LAYER_BASE + t, idx as u64);
                let left = size.div_ceil(2);
                let p = uneven_split_prob(size as u64, left as u64);
                p_sum += p;
                splitting += 1;
                let cap = (TRIAL_FACTOR / p).ceil() as u64;
                let mut s = 0u64;
                loop {
                    trials += 1;
                    if try_split(slice, node, s) {
                        break;
                    }
                    s += 1;
                    if s == cap {
                        return Err(Error::ConstructionFailed {
                            attempts: 1,
                            reason: format!("no split for a fallback node of {size} keys"),
                        });
                    }
                }
                partition(slice, node, s, &mut scratch);
                seeds.push(s);
                next.push((start, left));
                next.push((start + left, size - left));
            }
            let b = min_rice_parameter(p_sum / splitting as f64);
            depths.push(RiceCode::encode(&seeds, b)?);
            level = next;
            t += 1;
        }
        Ok((Self { m, depths }, trials))
    }

    /// Number of keys covered.
    pub fn len(&self) -> u64 {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    /// Leaf position in `0..m` of a member key.
    pub fn query(&self, d: &KeyDigest, salt: u64) -> u64 {
        let (mut start, mut size, mut path) = (0u64, self.m, 0u64);
        let mut t = 0;
        let last = self.depths.len().saturating_sub(1);
        while size >= 2 {
            let slot = if t == last { start - path } else { path };
            let seed = self.depths[t].decode_at(slot as usize).unwrap_or(0);
            let node = node_key(salt, LAYER_BASE + t as u64, path);
            let left = size.div_ceil(2);
            if split_bit(d, node, seed) {
                start += left;
                size -= left;
                path = 2 * path + 1;
            } else {
                size = left;
                path *= 2;
            }
            t += 1;
        }
        start
    }

    pub fn payload_bits(&self) -> u64 {
        self.depths.iter().map(|d| d.payload_bits()).sum()
    }

    pub fn serialize(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.put_u64(self.m);
        w.put_u8(self.depths.len() as u8);
        for d in &self.depths {
            w.put_section(&d.serialize());
        }
        w.into_inner()
    }

    pub fn deserialize(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes);
        let m = r.u64()?;
        let count = r.u8()? as usize;
        let expected = if m < 2 { 0 } else { 64 - (m - 1).leading_zeros() as usize };
        if count != expected {
            return Err(Error::Format(format!(
                "fallback over {m} keys needs {expected} depths, found {count}"
            )));
        }
        let mut depths = Vec::with_capacity(count);
        for t in 0..count {
            let code = RiceCode::deserialize(r.section()?)?;
            let want = if t + 1 == count { m - (1 << t) } else { 1 << t };
            if code.len() as u64 != want {
                return Err(Error::Format(format!("fallback depth {t} has {} seeds", code.len())));
            }
            depths.push(code);
        }
        r.finish("fallback section")?;
        Ok(Self { m, depths })
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

    #[test]
    fn bijective_for_many_sizes() {
        for m in [0usize, 1, 2, 3, 5, 7, 8, 13, 100, 255, 1000] {
            let mut keys = random_digests(m, m as u64);
            let (f, _) = Fallback::build(&mut keys, 42).unwrap();
            for (pos, d) in keys.iter().enumerate() {
                assert_eq!(f.query(d, 42), pos as u64, "m={m}");
            }
            assert_eq!(Fallback::deserialize(&f.serialize()).unwrap(), f);
        }
    }

    #[test]
    fn space_is_moderate() {
        let mut keys = random_digests(511, 9);
        let (f, _) = Fallback::build(&mut keys, 1).unwrap();
        assert!((f.payload_bits() as f64) < 3.0 * 511.0, "{}", f.payload_bits());
    }
}
