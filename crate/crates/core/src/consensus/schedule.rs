use crate::error::{Error, Result};
use crate::fixed::{ceil_fp, FP_ONE};
use crate::oracle::Probability;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Costs {
    Uniform(u64),
    /// Per-index costs and the resulting prefix sums `P(0..=n)`.
    PerIndex { costs: Vec<u64>, prefix: Vec<u64> },
}

/// Fragment lengths `ℓ_i` and their prefix sums `P(i)`.
///
/// `P(i) = ⌈(i·ε + Σ_{j≤i} log₂(1/p_j)) / 2³²⌉` in fixed point, so every
/// prefix of the code carries at most one bit of rounding slack.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FragmentSchedule {
    n: usize,
    eps_fp: u64,
    costs: Costs,
}

impl FragmentSchedule {
    /// Builds the schedule for success probabilities `probs` and overhead `eps_fp`.
    ///
    /// Collapses to the uniform fast path when all probabilities are equal.
    pub fn new(probs: &[Probability], eps_fp: u64) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidParameter("empty probability sequence".into()));
        }
        if probs.iter().all(|&p| p == probs[0]) {
            return Self::uniform(probs.len(), probs[0], eps_fp);
        }
        Self::from_costs(probs.iter().map(|p| p.cost_fp()).collect(), eps_fp)
    }

    pub fn uniform(n: usize, p: Probability, eps_fp: u64) -> Result<Self> {
        Self::uniform_cost(n, p.cost_fp(), eps_fp)
    }

    pub fn uniform_cost(n: usize, cost_fp: u64, eps_fp: u64) -> Result<Self> {
        check_common(n, eps_fp)?;
        let step = eps_fp as u128 + cost_fp as u128;
        if ceil_fp(step) > 64 {
            return Err(Error::InvalidParameter(
                "fragments would exceed 64 bits".into(),
            ));
        }
        if (step * n as u128).div_ceil(FP_ONE as u128) > (u64::MAX / 2) as u128 {
            return Err(Error::InvalidParameter("code length overflows".into()));
        }
        Ok(Self {
            n,
            eps_fp,
            costs: Costs::Uniform(cost_fp),
        })
    }

    /// Non-uniform schedule from per-index costs `log₂(1/p_i)` in fixed point.
    pub fn from_costs(costs: Vec<u64>, eps_fp: u64) -> Result<Self> {
        check_common(costs.len(), eps_fp)?;
        let mut prefix = Vec::with_capacity(costs.len() + 1);
        prefix.push(0u64);
        let mut acc: u128 = 0;
        for (i, &c) in costs.iter().enumerate() {
            acc += eps_fp as u128 + c as u128;
            let p = ceil_fp(acc);
            if p - prefix[i] > 64 {
                return Err(Error::InvalidParameter(format!(
                    "fragment {} would exceed 64 bits",
                    i + 1
                )));
            }
            prefix.push(p);
        }
        Ok(Self {
            n: costs.len(),
            eps_fp,
            costs: Costs::PerIndex { costs, prefix },
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn eps_fp(&self) -> u64 {
        self.eps_fp
    }

    /// The shared cost if the schedule is uniform.
    pub fn uniform_cost_fp(&self) -> Option<u64> {
        match self.costs {
            Costs::Uniform(c) => Some(c),
            Costs::PerIndex { .. } => None,
        }
    }

    /// `log₂(1/p_i)` in fixed point for `i ∈ 1..=n`.
    pub fn cost_fp(&self, i: usize) -> u64 {
        match &self.costs {
            Costs::Uniform(c) => *c,
            Costs::PerIndex { costs, .. } => costs[i - 1],
        }
    }

    /// `P(i)` for `i ∈ 0..=n`.
    #[inline]
    pub fn prefix(&self, i: usize) -> u64 {
        debug_assert!(i <= self.n);
        match &self.costs {
            Costs::Uniform(c) => ceil_fp(i as u128 * (self.eps_fp as u128 + *c as u128)),
            Costs::PerIndex { prefix, .. } => prefix[i],
        }
    }

    /// `ℓ_i = P(i) − P(i−1)` for `i ∈ 1..=n`.
    pub fn fragment_len(&self, i: usize) -> u32 {
        (self.prefix(i) - self.prefix(i - 1)) as u32
    }

    /// `P(n)`, the code length without the root fragment.
    pub fn total_bits(&self) -> u64 {
        self.prefix(self.n)
    }

    /// All fragment lengths, index 1 first.
    pub fn fragment_lens(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.n);
        let mut prev = 0;
        for i in 1..=self.n {
            let p = self.prefix(i);
            out.push((p - prev) as u32);
            prev = p;
        }
        debug_assert!(self.feasible());
        out
    }

    /// Checks `0 ≤ P(i) − (i·ε + Σ cost) < 1` bit for every prefix, i.e. the
    /// product `∏ p_j·2^{ℓ_j}·2^{−ε}` stays within `[1, 2]`.
    pub fn feasible(&self) -> bool {
        let mut acc: u128 = 0;
        (1..=self.n).all(|i| {
            acc += self.eps_fp as u128 + self.cost_fp(i) as u128;
            let slack = (self.prefix(i) as u128 * FP_ONE as u128) - acc;
            slack < FP_ONE as u128
        })
    }

    /// `64 · Σ 1/(p_i·min(ε, 1))`, saturating.
    pub fn default_step_limit(&self) -> u64 {
        let eps = (self.eps_fp as f64 / FP_ONE as f64).min(1.0);
        let inv_p = |c: u64| (c as f64 / FP_ONE as f64).exp2();
        let sum: f64 = match &self.costs {
            Costs::Uniform(c) => self.n as f64 * inv_p(*c),
            Costs::PerIndex { costs, .. } => costs.iter().map(|&c| inv_p(c)).sum(),
        };
        let limit = (64.0 * sum / eps).ceil();
        if limit >= u64::MAX as f64 {
            u64::MAX
        } else {
            limit as u64
        }
    }
}

fn check_common(n: usize, eps_fp: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("schedule needs at least one index".into()));
    }
    if eps_fp == 0 {
        return Err(Error::InvalidParameter("epsilon must be positive".into()));
    }
    Ok(())
}
