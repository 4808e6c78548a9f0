use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::oracle::UnboundedTrialOracle;

/// Output of the simplified search: an unbounded root and one digit per index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplifiedSolution {
    pub sigma0: BigUint,
    /// `fragments[i-1] = σ_i < k_i`.
    pub fragments: Vec<u64>,
    pub steps: u64,
}

impl SimplifiedSolution {
    /// Mixed-radix seeds `N_i = N_{i−1}·k_i + σ_i` with `N_0 = σ₀`, index 1 first.
    pub fn seeds(&self, ks: &[u64]) -> Vec<BigUint> {
        let mut cur = self.sigma0.clone();
        ks.iter()
            .zip(&self.fragments)
            .map(|(&k, &s)| {
                cur = &cur * k + s;
                cur.clone()
            })
            .collect()
    }

    pub fn verify<O: UnboundedTrialOracle + ?Sized>(&self, ks: &[u64], oracle: &mut O) -> bool {
        self.fragments.len() == ks.len()
            && self.fragments.iter().zip(ks).all(|(&s, &k)| s < k)
            && self
                .seeds(ks)
                .iter()
                .enumerate()
                .all(|(i, s)| oracle.trial_unbounded(i + 1, s))
    }
}

/// Simplified CONSENSUS: depth-first search where index `i` has `k_i` children
/// per node and the root has infinitely many.
///
/// Terminates almost surely for oracles whose success probabilities are positive.
pub fn solve_simplified<O: UnboundedTrialOracle + ?Sized>(
    oracle: &mut O,
    ks: &[u64],
) -> Result<SimplifiedSolution> {
    let n = ks.len();
    if n == 0 || oracle.len() != n {
        return Err(Error::Contract(format!(
            "{n} branch counts for an oracle of {} indices",
            oracle.len()
        )));
    }
    if let Some(pos) = ks.iter().position(|&k| k == 0) {
        return Err(Error::InvalidParameter(format!("k_{} is zero", pos + 1)));
    }
    let mut sigma0 = BigUint::zero();
    let mut sigma = vec![0u64; n + 1];
    let mut seeds = vec![BigUint::zero(); n + 1];
    let mut steps = 0u64;
    let mut i = 1;
    loop {
        steps += 1;
        if oracle.trial_unbounded(i, &seeds[i]) {
            if i == n {
                break;
            }
            i += 1;
            sigma[i] = 0;
            seeds[i] = &seeds[i - 1] * ks[i - 1];
            continue;
        }
        while i > 0 && sigma[i] == ks[i - 1] - 1 {
            i -= 1;
        }
        if i == 0 {
            sigma0 += BigUint::one();
            seeds[0] = sigma0.clone();
            i = 1;
            sigma[1] = 0;
        } else {
            sigma[i] += 1;
        }
        seeds[i] = &seeds[i - 1] * ks[i - 1] + sigma[i];
    }
    Ok(SimplifiedSolution {
        sigma0,
        fragments: sigma[1..].to_vec(),
        steps,
    })
}
