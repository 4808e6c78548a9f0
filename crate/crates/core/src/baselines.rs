//! The two ad-hoc strategies: independent minimal seeds (MIN) and one shared
//! seed for every index (UNI).

use thiserror::Error;

use crate::bitio::RiceCode;
use crate::error::{Error, Result};
use crate::oracle::TrialOracle;

/// Minimal successful seed per index, Rice coded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinCode {
    seeds: RiceCode,
    trials: u64,
}

/// Rice parameter `⌊log₂(ln 2 / p̄)⌋` for mean success probability `p̄`.
pub fn min_rice_parameter(mean_p: f64) -> u8 {
    let b = (std::f64::consts::LN_2 / mean_p).log2().floor();
    b.clamp(0.0, 63.0) as u8
}

/// Smallest seed `s ≥ 0` with `trial(i, s)` for every index.
pub fn min_build<O: TrialOracle + ?Sized>(oracle: &mut O) -> Result<MinCode> {
    let n = oracle.len();
    if n == 0 {
        return Err(Error::InvalidParameter("empty oracle".into()));
    }
    let mean_p = (1..=n).map(|i| oracle.probability(i).as_f64()).sum::<f64>() / n as f64;
    let mut seeds = Vec::with_capacity(n);
    let mut trials = 0u64;
    for i in 1..=n {
        let mut s = 0u64;
        loop {
            trials += 1;
            if oracle.trial(i, s) {
                break;
            }
            s += 1;
        }
        seeds.push(s);
    }
    Ok(MinCode {
        seeds: RiceCode::encode(&seeds, min_rice_parameter(mean_p))?,
        trials,
    })
}

impl MinCode {
    pub fn len(&self) -> usize {
        self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seeds.is_empty()
    }

    /// Seed of index `i ∈ 1..=n`.
    pub fn seed(&self, i: usize) -> Result<u64> {
        if i == 0 {
            return Err(Error::IndexOutOfRange {
                index: 0,
                valid: format!("1..={}", self.len()),
            });
        }
        self.seeds.decode_at(i - 1)
    }

    pub fn seeds(&self) -> Vec<u64> {
        self.seeds.decode_all()
    }

    pub fn rice(&self) -> &RiceCode {
        &self.seeds
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn size_in_bits(&self) -> u64 {
        self.seeds.payload_bits()
    }

    pub fn bits_per_seed(&self) -> f64 {
        self.size_in_bits() as f64 / self.len() as f64
    }

    pub fn verify<O: TrialOracle + ?Sized>(&self, oracle: &mut O) -> bool {
        oracle.len() == self.len()
            && self
                .seeds()
                .iter()
                .enumerate()
                .all(|(i, &s)| oracle.trial(i + 1, s))
    }
}

/// One seed that succeeds at every index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UniCode {
    pub s_star: u64,
    pub trials: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("no common seed within {trials} trials")]
pub struct UniFailure {
    pub trials: u64,
    /// Candidates fully rejected before giving up.
    pub seeds_tried: u64,
}

/// Tries seeds `0, 1, 2, …` against all indices in order until one passes
/// everywhere or `work_cap` trials are spent.
pub fn uni_build<O: TrialOracle + ?Sized>(
    oracle: &mut O,
    work_cap: u64,
) -> Result<UniCode, UniFailure> {
    let n = oracle.len();
    let mut trials = 0u64;
    let mut s = 0u64;
    loop {
        let mut ok = true;
        for i in 1..=n {
            if trials == work_cap {
                return Err(UniFailure {
                    trials,
                    seeds_tried: s,
                });
            }
            trials += 1;
            if !oracle.trial(i, s) {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(UniCode { s_star: s, trials });
        }
        s += 1;
    }
}

impl UniCode {
    /// Bits of a plain binary encoding of `s_star`.
    pub fn size_in_bits(&self) -> u64 {
        64 - self.s_star.leading_zeros() as u64
    }
}
