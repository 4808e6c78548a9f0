use thiserror::Error;

use super::FragmentSchedule;
use crate::bitio::BitBuffer;
use crate::codec::{bytes_for_bits, ByteReader, ByteWriter};
use crate::error::{Error, Result};
use crate::oracle::TrialOracle;

/// Bound on the number of trials a full solve may issue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepLimit {
    /// `64 · Σ 1/(p_i·min(ε, 1))`, see [`FragmentSchedule::default_step_limit`].
    #[default]
    Default,
    Unlimited,
    Max(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveConfig {
    /// Suffix width, `1..=64`.
    pub w: u32,
    pub step_limit: StepLimit,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            w: 64,
            step_limit: StepLimit::Default,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureReason {
    StepLimit,
    /// Every root fragment `σ₀ < 2^w` was tried.
    SeedSpaceExhausted,
}

/// Diagnostics of an aborted search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("search aborted ({reason:?}) after {steps} trials, deepest index {deepest}")]
pub struct SolveFailure {
    pub reason: FailureReason,
    pub steps: u64,
    pub deepest: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error(transparent)]
    Invalid(#[from] Error),
    #[error(transparent)]
    Failed(#[from] SolveFailure),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SolveStats {
    /// Total trials issued, including those later discarded by backtracking.
    pub steps: u64,
    /// Final root fragment.
    pub sigma0: u64,
}

/// The bit string `M = σ₀ ∘ σ₁ ∘ … ∘ σ_n` with the schedule needed to decode it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsensusCode {
    w: u32,
    schedule: FragmentSchedule,
    m: BitBuffer,
}

#[inline]
fn max_fragment(len: u32) -> u64 {
    if len >= 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

#[inline]
fn append(prev: u64, len: u32, sigma: u64, mask: u64) -> u64 {
    if len >= 64 {
        sigma & mask
    } else {
        ((prev << len) | sigma) & mask
    }
}

fn check_w(w: u32) -> Result<()> {
    if w == 0 || w > 64 {
        return Err(Error::InvalidParameter(format!("suffix width {w} outside 1..=64")));
    }
    Ok(())
}

/// Full CONSENSUS: depth-first search over fragments with `w`-bit suffix seeds.
pub fn solve_full<O: TrialOracle + ?Sized>(
    oracle: &mut O,
    schedule: &FragmentSchedule,
    cfg: &SolveConfig,
) -> Result<(ConsensusCode, SolveStats), SolveError> {
    solve_full_traced(oracle, schedule, cfg, |_, _| {})
}

/// As [`solve_full`], calling `visit(i, σ₀..=σ_i)` before every trial.
pub fn solve_full_traced<O, F>(
    oracle: &mut O,
    schedule: &FragmentSchedule,
    cfg: &SolveConfig,
    mut visit: F,
) -> Result<(ConsensusCode, SolveStats), SolveError>
where
    O: TrialOracle + ?Sized,
    F: FnMut(usize, &[u64]),
{
    check_w(cfg.w)?;
    let n = schedule.len();
    if oracle.len() != n {
        return Err(Error::Contract(format!(
            "oracle has {} indices, schedule has {n}",
            oracle.len()
        ))
        .into());
    }
    let limit = match cfg.step_limit {
        StepLimit::Default => schedule.default_step_limit(),
        StepLimit::Unlimited => u64::MAX,
        StepLimit::Max(m) => m,
    };
    let w = cfg.w;
    let mask = max_fragment(w);

    // lens[i], sigma[i] and seeds[i] for i in 0..=n; index 0 is the root.
    let mut lens = Vec::with_capacity(n + 1);
    lens.push(w);
    lens.extend(schedule.fragment_lens());
    let mut sigma = vec![0u64; n + 1];
    let mut seeds = vec![0u64; n + 1];
    let mut steps = 0u64;
    let mut deepest = 0usize;
    let mut i = 1usize;
    seeds[1] = append(0, lens[1], 0, mask);

    loop {
        if steps == limit {
            return Err(SolveFailure {
                reason: FailureReason::StepLimit,
                steps,
                deepest,
            }
            .into());
        }
        steps += 1;
        deepest = deepest.max(i);
        visit(i, &sigma[..=i]);
        if oracle.trial(i, seeds[i]) {
            if i == n {
                break;
            }
            i += 1;
            sigma[i] = 0;
            seeds[i] = append(seeds[i - 1], lens[i], 0, mask);
            continue;
        }
        while i > 0 && sigma[i] == max_fragment(lens[i]) {
            i -= 1;
        }
        if i == 0 {
            if sigma[0] == mask {
                return Err(SolveFailure {
                    reason: FailureReason::SeedSpaceExhausted,
                    steps,
                    deepest,
                }
                .into());
            }
            sigma[0] += 1;
            seeds[0] = sigma[0];
            i = 1;
            sigma[1] = 0;
        } else {
            sigma[i] += 1;
        }
        seeds[i] = append(seeds[i - 1], lens[i], sigma[i], mask);
    }

    let mut m = BitBuffer::with_capacity(w as u64 + schedule.total_bits());
    for (&s, &l) in sigma.iter().zip(&lens) {
        m.push_unchecked(s, l);
    }
    let code = ConsensusCode {
        w,
        schedule: schedule.clone(),
        m,
    };
    debug_assert_eq!(code.m.len(), w as u64 + schedule.total_bits());
    Ok((
        code,
        SolveStats {
            steps,
            sigma0: sigma[0],
        },
    ))
}

impl ConsensusCode {
    /// Assembles a code from explicit fragments; `fragments[i-1]` must fit in `ℓ_i` bits.
    pub fn from_fragments(
        w: u32,
        schedule: FragmentSchedule,
        sigma0: u64,
        fragments: &[u64],
    ) -> Result<Self> {
        check_w(w)?;
        if fragments.len() != schedule.len() {
            return Err(Error::Contract(format!(
                "{} fragments for a schedule of {}",
                fragments.len(),
                schedule.len()
            )));
        }
        let mut m = BitBuffer::with_capacity(w as u64 + schedule.total_bits());
        m.write_bits(sigma0, w)?;
        for (i, &f) in fragments.iter().enumerate() {
            m.write_bits(f, schedule.fragment_len(i + 1))?;
        }
        Ok(Self { w, schedule, m })
    }

    pub fn w(&self) -> u32 {
        self.w
    }

    pub fn len(&self) -> usize {
        self.schedule.len()
    }

    pub fn is_empty(&self) -> bool {
        self.schedule.is_empty()
    }

    pub fn schedule(&self) -> &FragmentSchedule {
        &self.schedule
    }

    pub fn bits(&self) -> &BitBuffer {
        &self.m
    }

    /// `|M| = w + P(n)`.
    pub fn size_in_bits(&self) -> u64 {
        self.m.len()
    }

    /// Seed `S_i`, the `w`-bit window of `M` at offset `P(i)`.
    pub fn decode_seed(&self, i: usize) -> Result<u64> {
        if i == 0 || i > self.schedule.len() {
            return Err(Error::IndexOutOfRange {
                index: i as u64,
                valid: format!("1..={}", self.schedule.len()),
            });
        }
        Ok(self.seed(i))
    }

    /// Unchecked variant of [`Self::decode_seed`] for hot query paths.
    #[inline]
    pub fn seed(&self, i: usize) -> u64 {
        self.m.read_unchecked(self.schedule.prefix(i), self.w)
    }

    /// Whether every decoded seed passes its trial.
    pub fn verify<O: TrialOracle + ?Sized>(&self, oracle: &mut O) -> bool {
        oracle.len() == self.len() && (1..=self.len()).all(|i| oracle.trial(i, self.seed(i)))
    }

    pub fn serialize(&self) -> Vec<u8> {
        let mut out = ByteWriter::new();
        out.put_u8(self.w as u8);
        out.put_u64(self.schedule.len() as u64);
        out.put_u64(self.schedule.eps_fp());
        match self.schedule.uniform_cost_fp() {
            Some(c) => {
                out.put_u8(0);
                out.put_u64(c);
            }
            None => {
                out.put_u8(1);
                for i in 1..=self.schedule.len() {
                    out.put_u64(self.schedule.cost_fp(i));
                }
            }
        }
        out.put_bytes(&self.m.to_bytes());
        out.into_inner()
    }

    pub fn deserialize(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes);
        let w = r.u8()? as u32;
        check_w(w).map_err(|e| Error::Format(e.to_string()))?;
        let n = r.u64()?;
        let eps_fp = r.u64()?;
        let schedule = match r.u8()? {
            0 => FragmentSchedule::uniform_cost(n as usize, r.u64()?, eps_fp),
            1 => {
                if n > r.remaining() as u64 / 8 {
                    return Err(Error::Truncated {
                        offset: r.position(),
                        needed: (n as usize).saturating_mul(8),
                    });
                }
                let costs = (0..n).map(|_| r.u64()).collect::<Result<Vec<_>>>()?;
                FragmentSchedule::from_costs(costs, eps_fp)
            }
            flag => return Err(Error::Format(format!("unknown cost table flag {flag}"))),
        }
        .map_err(|e| Error::Format(e.to_string()))?;
        let bits = w as u64 + schedule.total_bits();
        let m = BitBuffer::from_bytes(r.take(bytes_for_bits(bits))?, bits)?;
        r.finish("consensus code")?;
        Ok(Self { w, schedule, m })
    }
}
