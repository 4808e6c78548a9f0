//! Trial oracles: "is seed `s` successful at index `i`?" with known success
//! probabilities, plus the pinned 64-bit mixer every hash in the crate uses.

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::fixed::{log2_fp_floor, FP_ONE};

/// Additive constant of every mixing round (the splitmix64 increment).
pub const MIX_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;
pub const MIX_MUL1: u64 = 0xbf58_476d_1ce4_e5b9;
pub const MIX_MUL2: u64 = 0x94d0_49bb_1331_11eb;

/// The splitmix64 output finalizer. A bijection on `u64`.
#[inline]
pub fn finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(MIX_MUL1);
    z = (z ^ (z >> 27)).wrapping_mul(MIX_MUL2);
    z ^ (z >> 31)
}

/// Absorbs one word into a running state.
#[inline]
pub fn mix_round(state: u64, x: u64) -> u64 {
    finalize(state.wrapping_add(MIX_GAMMA) ^ x)
}

/// Three finalizer rounds over `a`, `b`, `c` in that order.
///
/// Changing this function changes every serialized index; see FORMAT.md.
#[inline]
pub fn mix64(a: u64, b: u64, c: u64) -> u64 {
    mix_round(mix_round(mix_round(0, a), b), c)
}

/// A success probability in `(0, 1]` stored as `p·2⁶⁴ − 1`.
///
/// The offset makes `p = 1` representable and turns the trial test into
/// `hash <= raw`, which succeeds for exactly `p·2⁶⁴` of the `2⁶⁴` hash values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Probability(u64);

impl Probability {
    pub const ONE: Probability = Probability(u64::MAX);

    pub const fn from_raw(raw: u64) -> Self {
        Probability(raw)
    }

    pub fn raw(self) -> u64 {
        self.0
    }

    pub fn from_f64(p: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "probability {p} outside (0, 1]"
            )));
        }
        let scaled = (p * 2f64.powi(64)).round();
        if scaled < 1.0 {
            return Err(Error::InvalidParameter(format!(
                "probability {p} below 2^-64"
            )));
        }
        // scaled <= 2^64 so the subtraction result fits
        Ok(Probability((scaled as u128 - 1).min(u64::MAX as u128) as u64))
    }

    /// `num/den`, rounded down to a multiple of 2⁻⁶⁴.
    pub fn from_ratio(num: u64, den: u64) -> Result<Self> {
        if num == 0 || num > den {
            return Err(Error::InvalidParameter(format!(
                "ratio {num}/{den} outside (0, 1]"
            )));
        }
        let scaled = ((num as u128) << 64) / den as u128;
        Ok(Probability((scaled - 1) as u64))
    }

    /// `num/den` for big integers, rounded down to a multiple of 2⁻⁶⁴.
    pub fn from_big_ratio(num: &BigUint, den: &BigUint) -> Result<Self> {
        if *num == BigUint::default() || num > den {
            return Err(Error::InvalidParameter("big ratio outside (0, 1]".into()));
        }
        let scaled: BigUint = (num << 64u32) / den;
        let scaled = u128::try_from(&scaled).expect("ratio at most one");
        if scaled == 0 {
            return Err(Error::InvalidParameter("probability below 2^-64".into()));
        }
        Ok(Probability((scaled - 1) as u64))
    }

    pub fn as_f64(self) -> f64 {
        (self.0 as f64 + 1.0) / 2f64.powi(64)
    }

    /// Whether a uniformly random 64-bit `hash` counts as a success.
    #[inline]
    pub fn accepts(self, hash: u64) -> bool {
        hash <= self.0
    }

    /// `log₂(1/p)` in fixed point, rounded up (exact for powers of two).
    pub fn cost_fp(self) -> u64 {
        64 * FP_ONE - log2_fp_floor(self.0 as u128 + 1)
    }
}

/// A family of Bernoulli processes indexed `1..=len()`.
///
/// Each call is one inspected trial. Within one construction the answer for a
/// given `(index, seed)` must not change.
pub trait TrialOracle {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Success probability of index `index` (1-based).
    fn probability(&self, index: usize) -> Probability;

    /// Runs the trial for `index ∈ 1..=len()` with a word-sized seed.
    fn trial(&mut self, index: usize, seed: u64) -> bool;
}

/// Oracles that also accept arbitrarily large seeds (simplified search).
pub trait UnboundedTrialOracle: TrialOracle {
    fn trial_unbounded(&mut self, index: usize, seed: &BigUint) -> bool;
}

/// Hash-based Bernoulli processes: `trial(i, s) = mix64(master, i, s) < p_i·2⁶⁴`.
#[derive(Debug, Clone)]
pub struct SyntheticOracle {
    master_seed: u64,
    probs: Vec<Probability>,
    counts: Vec<u64>,
}

impl SyntheticOracle {
    pub fn new(probs: Vec<Probability>, master_seed: u64) -> Self {
        let counts = vec![0; probs.len()];
        Self {
            master_seed,
            probs,
            counts,
        }
    }

    pub fn uniform(n: usize, p: Probability, master_seed: u64) -> Self {
        Self::new(vec![p; n], master_seed)
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn probabilities(&self) -> &[Probability] {
        &self.probs
    }

    fn check(&self, index: usize) -> Result<()> {
        if index == 0 || index > self.probs.len() {
            return Err(Error::IndexOutOfRange {
                index: index as u64,
                valid: format!("1..={}", self.probs.len()),
            });
        }
        Ok(())
    }

    /// Checked trial; counts the inspection.
    pub fn try_trial(&mut self, index: usize, seed: u64) -> Result<bool> {
        self.check(index)?;
        self.counts[index - 1] += 1;
        Ok(self.probs[index - 1].accepts(mix64(self.master_seed, index as u64, seed)))
    }

    /// Evaluates a trial without counting it (for verification sweeps).
    pub fn peek(&self, index: usize, seed: u64) -> Result<bool> {
        self.check(index)?;
        Ok(self.probs[index - 1].accepts(mix64(self.master_seed, index as u64, seed)))
    }

    pub fn try_trial_unbounded(&mut self, index: usize, seed: &BigUint) -> Result<bool> {
        self.check(index)?;
        self.counts[index - 1] += 1;
        let limbs = seed.to_u64_digits();
        let first = limbs.first().copied().unwrap_or(0);
        let mut h = mix64(self.master_seed, index as u64, first);
        for &limb in limbs.iter().skip(1) {
            h = mix_round(h, limb);
        }
        Ok(self.probs[index - 1].accepts(h))
    }

    /// Observed trials `T_i` at `index` (1-based).
    pub fn trial_count(&self, index: usize) -> Result<u64> {
        self.check(index)?;
        Ok(self.counts[index - 1])
    }

    /// All per-index trial counters, index 1 first.
    pub fn trial_counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total_trials(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn reset_counts(&mut self) {
        self.counts.iter_mut().for_each(|c| *c = 0);
    }
}

impl TrialOracle for SyntheticOracle {
    fn len(&self) -> usize {
        self.probs.len()
    }

    fn probability(&self, index: usize) -> Probability {
        self.probs[index - 1]
    }

    fn trial(&mut self, index: usize, seed: u64) -> bool {
        self.try_trial(index, seed)
            .unwrap_or_else(|e| panic!("oracle contract violated: {e}"))
    }
}

impl UnboundedTrialOracle for SyntheticOracle {
    fn trial_unbounded(&mut self, index: usize, seed: &BigUint) -> bool {
        self.try_trial_unbounded(index, seed)
            .unwrap_or_else(|e| panic!("oracle contract violated: {e}"))
    }
}
