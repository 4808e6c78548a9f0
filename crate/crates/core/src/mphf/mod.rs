//! Minimal perfect hashing by splitting trees whose seeds are stored with
//! one consensus code per tree layer.

mod fallback;
mod format;

pub use fallback::Fallback;
pub use format::{checksum, FORMAT_VERSION, MAGIC};

use std::time::{Duration, Instant};

use crate::consensus::{solve_full, ConsensusCode, FragmentSchedule, SolveConfig, SolveError, StepLimit};
use crate::error::{Error, Result};
use crate::fixed::{bits_to_fp, fp_to_bits};
use crate::kperfect::KPerfect;
use crate::oracle::{mix64, Probability, TrialOracle};
use crate::splitter::{
    node_key, node_prefix, partition, split_bit, split_probability, try_split_with, KeyDigest,
    SplitFn,
};

const SALT_TAG: u64 = 0x7361_6c74;
const RETRY_TAG: u64 = 0x0072_6574_7279;

/// Bucket size selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BucketSize {
    /// `2^⌊(4/3)·log₂(1/ε)⌋`, at least 2.
    Auto,
    Fixed(u64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MphfConfig {
    /// Target space overhead per key of the splitting part, in `(0, 1]`.
    pub eps: f64,
    pub k: BucketSize,
    pub w: u32,
    pub master_seed: u64,
    pub step_limit: StepLimit,
    /// Builds attempted before giving up, each with a fresh master seed.
    pub max_attempts: u32,
}

impl Default for MphfConfig {
    fn default() -> Self {
        Self {
            eps: 0.1,
            k: BucketSize::Auto,
            w: 64,
            master_seed: 0,
            step_limit: StepLimit::Default,
            max_attempts: 5,
        }
    }
}

impl MphfConfig {
    pub fn new(eps: f64, k: BucketSize) -> Self {
        Self {
            eps,
            k,
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, master_seed: u64) -> Self {
        self.master_seed = master_seed;
        self
    }
}

/// `2^⌊(4/3)·log₂(1/ε)⌋`, at least 2.
pub fn auto_bucket_size(eps: f64) -> u64 {
    let e = ((4.0 / 3.0) * (1.0 / eps).log2()).floor().clamp(1.0, 31.0);
    1 << e as u32
}

/// Per-layer overheads for a bucket of `k` keys, top layer first.
///
/// Layer `ℓ` has nodes of `n_ℓ = k/2^ℓ` keys and gets `ε_ℓ ∝ n_ℓ^{3/4}`,
/// capped at 1, with the common factor chosen so that the overhead per key,
/// `Σ ε_ℓ/n_ℓ`, equals `eps`.
pub fn bucketed_layer_eps(k: u64, eps: f64) -> Vec<f64> {
    let sizes: Vec<f64> = layer_sizes(k).map(|s| s as f64).collect();
    let mut capped = vec![false; sizes.len()];
    loop {
        let budget = eps
            - sizes
                .iter()
                .zip(&capped)
                .filter(|(_, &c)| c)
                .map(|(s, _)| 1.0 / s)
                .sum::<f64>();
        let weight: f64 = sizes
            .iter()
            .zip(&capped)
            .filter(|(_, &c)| !c)
            .map(|(s, _)| s.powf(-0.25))
            .sum();
        let c = budget / weight;
        let mut changed = false;
        for (i, s) in sizes.iter().enumerate() {
            if !capped[i] && c * s.powf(0.75) >= 1.0 {
                capped[i] = true;
                changed = true;
            }
        }
        if !changed || capped.iter().all(|&c| c) {
            return sizes
                .iter()
                .zip(&capped)
                .map(|(s, &cap)| if cap { 1.0 } else { c * s.powf(0.75) })
                .collect();
        }
    }
}

/// `ε_ℓ = min(1, ε·n_ℓ^{3/4})`, top layer first.
pub fn monolithic_layer_eps(n: u64, eps: f64) -> Vec<f64> {
    layer_sizes(n).map(|s| (eps * (s as f64).powf(0.75)).min(1.0)).collect()
}

fn layer_sizes(k: u64) -> impl Iterator<Item = u64> {
    (0..k.trailing_zeros()).map(move |l| k >> l)
}

/// Measurements of one build.
#[derive(Debug, Clone, PartialEq)]
pub struct BuildReport {
    pub n: u64,
    pub k: u64,
    pub eps: f64,
    pub bits_per_key: f64,
    /// Split trials per layer, top layer first.
    pub layer_trials: Vec<u64>,
    pub fallback_trials: u64,
    pub wall_time: Duration,
    /// Rebuilds after a failed search.
    pub retries: u32,
    pub space: SpaceBreakdown,
}

impl BuildReport {
    pub fn total_trials(&self) -> u64 {
        self.layer_trials.iter().sum::<u64>() + self.fallback_trials
    }
}

/// Serialized size by section, in bits. The parts add up to the file size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpaceBreakdown {
    pub n: u64,
    /// Fixed header, section length prefixes and checksum.
    pub header: u64,
    pub kperfect: u64,
    pub layers: Vec<u64>,
    pub fallback: u64,
    /// `|M_ℓ| = w + P_ℓ` of each layer's code.
    pub layer_code_bits: Vec<u64>,
}

impl SpaceBreakdown {
    pub fn total(&self) -> u64 {
        self.header + self.kperfect + self.layers.iter().sum::<u64>() + self.fallback
    }

    pub fn bits_per_key(&self) -> f64 {
        self.total() as f64 / self.n as f64
    }

    pub fn per_key(bits: u64, n: u64) -> f64 {
        bits as f64 / n as f64
    }
}

/// A minimal perfect hash function onto `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MphfIndex {
    master_seed: u64,
    salt: u64,
    n: u64,
    k: u64,
    eps_fp: u64,
    w: u32,
    kperfect: KPerfect,
    layers: Vec<ConsensusCode>,
    fallback: Fallback,
}

fn salt_for(master_seed: u64) -> u64 {
    mix64(master_seed, SALT_TAG, 0)
}

/// Trials of one layer: node `i` must split its current key slice in half.
struct LayerOracle<'a> {
    keys: &'a [KeyDigest],
    size: usize,
    prefixes: Vec<u64>,
    p: Probability,
    trials: u64,
}

impl TrialOracle for LayerOracle<'_> {
    fn len(&self) -> usize {
        self.prefixes.len()
    }

    fn probability(&self, _: usize) -> Probability {
        self.p
    }

    #[inline]
    fn trial(&mut self, i: usize, seed: u64) -> bool {
        self.trials += 1;
        let j = i - 1;
        let f = SplitFn::from_prefix(self.prefixes[j], seed);
        try_split_with(&self.keys[j * self.size..(j + 1) * self.size], f)
    }
}

fn validate_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon {eps} outside (0, 1]")));
    }
    Ok(())
}

fn validate_k(k: u64) -> Result<()> {
    if k < 2 || !k.is_power_of_two() || k > 1 << 31 {
        return Err(Error::InvalidParameter(format!(
            "bucket size {k} is not a power of two in 2..=2^31"
        )));
    }
    Ok(())
}

/// Bucketed build: k-perfect partition into buckets of `k` keys, one
/// splitting tree per bucket, leftover keys in a small fallback tree.
pub fn build_bucketed<K: AsRef<[u8]>>(keys: &[K], cfg: &MphfConfig) -> Result<(MphfIndex, BuildReport)> {
    validate_eps(cfg.eps)?;
    let k = match cfg.k {
        BucketSize::Auto => auto_bucket_size(cfg.eps),
        BucketSize::Fixed(k) => k,
    };
    validate_k(k)?;
    let layer_eps = bucketed_layer_eps(k, cfg.eps);
    build_with(keys, k, &layer_eps, cfg)
}

/// Monolithic build for `n = 2^d` keys: a single splitting tree.
pub fn build_monolithic<K: AsRef<[u8]>>(keys: &[K], cfg: &MphfConfig) -> Result<(MphfIndex, BuildReport)> {
    validate_eps(cfg.eps)?;
    let n = keys.len() as u64;
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "monolithic build needs a power-of-two key count, got {n}"
        )));
    }
    validate_k(n)?;
    let layer_eps = monolithic_layer_eps(n, cfg.eps);
    build_with(keys, n, &layer_eps, cfg)
}

fn build_with<K: AsRef<[u8]>>(
    keys: &[K],
    k: u64,
    layer_eps: &[f64],
    cfg: &MphfConfig,
) -> Result<(MphfIndex, BuildReport)> {
    if keys.is_empty() {
        return Err(Error::InvalidParameter("empty key set".into()));
    }
    if cfg.w == 0 || cfg.w > 64 {
        return Err(Error::InvalidParameter(format!("suffix width {} outside 1..=64", cfg.w)));
    }
    let eps_fp = bits_to_fp(cfg.eps)?;
    let layer_eps_fp = layer_eps
        .iter()
        .map(|&e| bits_to_fp(e))
        .collect::<Result<Vec<_>>>()?;
    let start = Instant::now();
    let mut seed = cfg.master_seed;
    let mut last_failure = String::new();
    for attempt in 0..cfg.max_attempts.max(1) {
        match try_build(keys, k, eps_fp, &layer_eps_fp, seed, cfg) {
            Ok((index, layer_trials, fallback_trials)) => {
                let space = index.stats();
                let report = BuildReport {
                    n: index.n,
                    k,
                    eps: cfg.eps,
                    bits_per_key: space.bits_per_key(),
                    layer_trials,
                    fallback_trials,
                    wall_time: start.elapsed(),
                    retries: attempt,
                    space,
                };
                return Ok((index, report));
            }
            Err(Retry(reason)) => {
                last_failure = reason;
                seed = mix64(seed, attempt as u64 + 1, RETRY_TAG);
            }
            Err(Fatal(e)) => return Err(e),
        }
    }
    Err(Error::ConstructionFailed {
        attempts: cfg.max_attempts.max(1),
        reason: last_failure,
    })
}

enum Attempt {
    Retry(String),
    Fatal(Error),
}
use Attempt::{Fatal, Retry};

fn try_build<K: AsRef<[u8]>>(
    keys: &[K],
    k: u64,
    eps_fp: u64,
    layer_eps_fp: &[u64],
    master_seed: u64,
    cfg: &MphfConfig,
) -> std::result::Result<(MphfIndex, Vec<u64>, u64), Attempt> {
    let n = keys.len() as u64;
    let mut digests: Vec<KeyDigest> = keys
        .iter()
        .map(|key| KeyDigest::from_key(key.as_ref(), master_seed))
        .collect();
    let kperfect = KPerfect::build(&mut digests, k).map_err(|e| match e {
        Error::ConstructionFailed { reason, .. } => Retry(reason),
        other => Fatal(other),
    })?;
    let salt = salt_for(master_seed);
    let full = (n / k) as usize;
    let main_len = full * k as usize;
    let (main, rest) = digests.split_at_mut(main_len);

    let mut layers = Vec::new();
    let mut layer_trials = Vec::new();
    let solve_cfg = SolveConfig {
        w: cfg.w,
        step_limit: cfg.step_limit,
    };
    let mut scratch = Vec::new();
    if full > 0 {
        for (l, &e) in layer_eps_fp.iter().enumerate() {
            let size = (k >> l) as usize;
            let nodes = full << l;
            let p = split_probability(size as u64, size as u64 / 2);
            let schedule = FragmentSchedule::uniform(nodes, p, e).map_err(Fatal)?;
            let mut oracle = LayerOracle {
                keys: main,
                size,
                prefixes: (0..nodes as u64)
                    .map(|j| node_prefix(node_key(salt, l as u64, j)))
                    .collect(),
                p,
                trials: 0,
            };
            let (code, _) = match solve_full(&mut oracle, &schedule, &solve_cfg) {
                Ok(r) => r,
                Err(SolveError::Failed(f)) => return Err(Retry(format!("layer {l}: {f}"))),
                Err(SolveError::Invalid(e)) => return Err(Fatal(e)),
            };
            layer_trials.push(oracle.trials);
            for j in 0..nodes {
                let node = node_key(salt, l as u64, j as u64);
                partition(&mut main[j * size..(j + 1) * size], node, code.seed(j + 1), &mut scratch);
            }
            layers.push(code);
        }
    }
    let (fallback, fallback_trials) = Fallback::build(rest, salt).map_err(|e| match e {
        Error::ConstructionFailed { reason, .. } => Retry(reason),
        other => Fatal(other),
    })?;
    let index = MphfIndex {
        master_seed,
        salt,
        n,
        k,
        eps_fp,
        w: cfg.w,
        kperfect,
        layers,
        fallback,
    };
    Ok((index, layer_trials, fallback_trials))
}

impl MphfIndex {
    pub fn len(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn eps(&self) -> f64 {
        fp_to_bits(self.eps_fp)
    }

    /// Master seed of the successful attempt.
    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn w(&self) -> u32 {
        self.w
    }

    pub fn kperfect(&self) -> &KPerfect {
        &self.kperfect
    }

    pub fn layers(&self) -> &[ConsensusCode] {
        &self.layers
    }

    pub fn fallback(&self) -> &Fallback {
        &self.fallback
    }

    /// Position in `1..=n` of a member key; foreign keys get an arbitrary value.
    pub fn query(&self, key: &[u8]) -> u64 {
        self.query_digest(&KeyDigest::from_key(key, self.master_seed))
    }

    #[inline]
    pub fn query_digest(&self, d: &KeyDigest) -> u64 {
        let b = self.kperfect.query(d);
        let full = self.kperfect.full_buckets();
        if b > full {
            return full * self.k + self.fallback.query(d, self.salt) + 1;
        }
        let mut path = 0u64;
        for (l, code) in self.layers.iter().enumerate() {
            let node = ((b - 1) << l) + path;
            let seed = code.seed(node as usize + 1);
            let bit = split_bit(d, node_key(self.salt, l as u64, node), seed);
            path = 2 * path + bit as u64;
        }
        (b - 1) * self.k + path + 1
    }

    /// Serialized size by section.
    pub fn stats(&self) -> SpaceBreakdown {
        format::breakdown(self)
    }

    pub fn serialize(&self) -> Vec<u8> {
        format::serialize(self)
    }

    pub fn deserialize(bytes: &[u8]) -> Result<Self> {
        format::deserialize(bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn keys(n: usize) -> Vec<Vec<u8>> {
        (0..n).map(|i| format!("key-{i}").into_bytes()).collect()
    }

    fn assert_bijective(index: &MphfIndex, keys: &[Vec<u8>]) {
        let mut seen = vec![false; keys.len()];
        for key in keys {
            let v = index.query(key);
            assert!(v >= 1 && v <= keys.len() as u64, "{v} out of range");
            assert!(!seen[v as usize - 1], "collision at {v}");
            seen[v as usize - 1] = true;
        }
    }

    #[test]
    fn two_keys_one_split() {
        let ks = keys(2);
        let (index, report) = build_bucketed(&ks, &MphfConfig::new(0.5, BucketSize::Fixed(2))).unwrap();
        assert_eq!(index.layers().len(), 1);
        assert_eq!(index.layers()[0].len(), 1);
        assert_bijective(&index, &ks);
        assert_eq!(report.space.total(), index.serialize().len() as u64 * 8);
    }

    #[test]
    fn small_sets_of_every_size() {
        for n in 1..40 {
            let ks = keys(n);
            let (index, _) = build_bucketed(&ks, &MphfConfig::new(0.3, BucketSize::Fixed(8))).unwrap();
            assert_bijective(&index, &ks);
        }
    }

    #[test]
    fn monolithic_small() {
        for d in 1..=8 {
            let ks = keys(1 << d);
            let (index, _) = build_monolithic(&ks, &MphfConfig::new(0.5, BucketSize::Auto)).unwrap();
            assert_eq!(index.layers().len(), d);
            assert_eq!(index.kperfect().thresholds().len(), 0);
            assert_bijective(&index, &ks);
        }
        assert!(build_monolithic(&keys(6), &MphfConfig::default()).is_err());
    }

    #[test]
    fn layer_eps_normalization() {
        let e = bucketed_layer_eps(512, 0.03);
        let overhead: f64 = e.iter().zip(layer_sizes(512)).map(|(e, s)| e / s as f64).sum();
        assert!((overhead - 0.03).abs() < 1e-12);
        assert!(e.iter().all(|&x| x > 0.0 && x <= 1.0));
        assert!(e.windows(2).all(|w| w[0] >= w[1]));
        let e = bucketed_layer_eps(256, 0.1);
        assert_eq!(e[0], 1.0);
        let overhead: f64 = e.iter().zip(layer_sizes(256)).map(|(e, s)| e / s as f64).sum();
        assert!((overhead - 0.1).abs() < 1e-12);
        assert_eq!(bucketed_layer_eps(2, 1.0), vec![1.0]);
        let m = monolithic_layer_eps(1024, 0.5);
        assert_eq!(m.len(), 10);
        assert_eq!(m[9], (0.5 * 2f64.powf(0.75)).min(1.0));
    }

    #[test]
    fn auto_k() {
        assert_eq!(auto_bucket_size(0.1), 16);
        assert_eq!(auto_bucket_size(0.03), 64);
        assert_eq!(auto_bucket_size(1.0), 2);
    }

    #[test]
    fn parameter_validation() {
        let ks = keys(10);
        assert!(build_bucketed(&ks, &MphfConfig::new(2.0, BucketSize::Auto)).is_err());
        assert!(build_bucketed(&ks, &MphfConfig::new(0.0, BucketSize::Auto)).is_err());
        assert!(build_bucketed(&ks, &MphfConfig::new(0.1, BucketSize::Fixed(12))).is_err());
        let mut dup = keys(10);
        dup[3] = dup[7].clone();
        assert!(matches!(
            build_bucketed(&dup, &MphfConfig::new(0.1, BucketSize::Fixed(4))),
            Err(Error::DuplicateKey { .. })
        ));
        let empty: Vec<Vec<u8>> = Vec::new();
        assert!(build_bucketed(&empty, &MphfConfig::default()).is_err());
    }

    #[test]
    fn retries_on_search_failure() {
        let ks = keys(64);
        let cfg = MphfConfig {
            step_limit: StepLimit::Max(1),
            max_attempts: 3,
            ..MphfConfig::new(0.1, BucketSize::Fixed(32))
        };
        assert!(matches!(
            build_bucketed(&ks, &cfg),
            Err(Error::ConstructionFailed { attempts: 3, .. })
        ));
    }
}
