//! Lower bounds, survival recurrences and baseline formulas in double precision.

use crate::error::{Error, Result};
use crate::fixed::{log2_fp_floor, FP_ONE};
use crate::oracle::Probability;

fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("probability {p} outside (0, 1]")))
    }
}

/// `Σ log₂(1/p_i)`: bits any encoding of successful seeds needs on average.
pub fn m_opt(probs: &[f64]) -> Result<f64> {
    probs.iter().try_fold(0.0, |acc, &p| {
        check_p(p)?;
        Ok(acc - p.log2())
    })
}

/// `1/p`: expected trials to find one successful seed.
pub fn t_opt(p: f64) -> Result<f64> {
    check_p(p)?;
    Ok(1.0 / p)
}

/// `f(x) = 1 − (1 − p·x)^k`, evaluated as `1 − exp(k·ln(1 − p·x))`.
pub fn survival_step(p: f64, k: u64, x: f64) -> f64 {
    -(k as f64 * (-p * x).ln_1p()).exp_m1()
}

/// Survival probabilities `q_1..q_{n+1}` of the branching tree.
#[derive(Debug, Clone, PartialEq)]
pub struct QCurve {
    q: Vec<f64>,
    probs: Vec<f64>,
    ks: Vec<u64>,
}

impl QCurve {
    /// `q_i` for `i ∈ 1..=n+1`.
    pub fn q(&self, i: usize) -> f64 {
        self.q[i - 1]
    }

    pub fn values(&self) -> &[f64] {
        &self.q
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn ks(&self) -> &[u64] {
        &self.ks
    }

    /// `min_{i≤n} q_i`.
    pub fn min(&self) -> f64 {
        self.q[..self.q.len() - 1].iter().copied().fold(1.0, f64::min)
    }
}

/// Backward recurrence `q_{n+1} = 1`, `q_i = 1 − (1 − p_i·q_{i+1})^{k_i}`.
pub fn q_curve(probs: &[f64], ks: &[u64]) -> Result<QCurve> {
    if probs.len() != ks.len() {
        return Err(Error::InvalidParameter(format!(
            "{} probabilities but {} branch counts",
            probs.len(),
            ks.len()
        )));
    }
    let n = probs.len();
    let mut q = vec![1.0; n + 1];
    for i in (0..n).rev() {
        check_p(probs[i])?;
        if ks[i] == 0 {
            return Err(Error::InvalidParameter(format!("k_{} is zero", i + 1)));
        }
        q[i] = survival_step(probs[i], ks[i], q[i + 1]);
    }
    Ok(QCurve {
        q,
        probs: probs.to_vec(),
        ks: ks.to_vec(),
    })
}

/// `F(x) = f_1 ∘ f_2 ∘ … ∘ f_n (x)`: survival at the first index given
/// survival `x` after the last.
pub fn compose(probs: &[f64], ks: &[u64], x: f64) -> f64 {
    probs
        .iter()
        .zip(ks)
        .rev()
        .fold(x, |acc, (&p, &k)| survival_step(p, k, acc))
}

/// `x0, f(x0), f(f(x0)), …` with `steps` applications of `f`.
pub fn fixed_point_trace(p: f64, k: u64, x0: f64, steps: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(steps + 1);
    let mut x = x0;
    out.push(x);
    for _ in 0..steps {
        x = survival_step(p, k, x);
        out.push(x);
    }
    out
}

/// Largest fixed point of `f`, by iterating from 1 until the iterates stop moving.
pub fn fixed_point(p: f64, k: u64) -> f64 {
    let mut x = 1.0;
    for _ in 0..100_000 {
        let next = survival_step(p, k, x);
        if (next - x).abs() <= 1e-15 {
            return next;
        }
        x = next;
    }
    x
}

/// `1/(64·⌈2/ε⌉)`: a lower bound on every `q_i` for feasible instances.
pub fn min_survival_bound(eps: f64) -> f64 {
    1.0 / (64.0 * (2.0 / eps).ceil())
}

/// `1 − exp(−2^{ε−2})`: survival lower bound for `ε ≥ 1`.
pub fn large_eps_bound(eps: f64) -> f64 {
    -(-(eps - 2.0).exp2()).exp_m1()
}

/// Entropy in bits of the number of failures before the first success, `Geom(p)`.
pub fn geometric_entropy(p: f64) -> Result<f64> {
    check_p(p)?;
    if p == 1.0 {
        return Ok(0.0);
    }
    Ok((-p * p.log2() - (1.0 - p) * (1.0 - p).log2()) / p)
}

/// `Σ H(Geom(p_i))`: expected size of optimally coded minimal seeds.
pub fn min_baseline_entropy(probs: &[f64]) -> Result<f64> {
    probs.iter().map(|&p| geometric_entropy(p)).sum()
}

/// `M_OPT + Σ (1 − p_i)`, a lower bound on [`min_baseline_entropy`].
pub fn min_baseline_lower_bound(probs: &[f64]) -> Result<f64> {
    Ok(m_opt(probs)? + probs.iter().map(|p| 1.0 - p).sum::<f64>())
}

/// `∏ 1/p_i`: expected trials until one seed succeeds everywhere.
pub fn uni_expected_work(probs: &[f64]) -> Result<f64> {
    probs.iter().try_fold(1.0, |acc, &p| {
        check_p(p)?;
        Ok(acc / p)
    })
}

/// Where the partial products `∏_{j≤i} p_j·k_j·2^{−ε}` leave `[1, 2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandViolation {
    pub index: usize,
    /// `log₂` of the offending partial product.
    pub log2_product: f64,
}

/// Checks the branch counts against the band `∏_{j≤i} p_j·k_j·2^{−ε} ∈ [1, 2]`.
///
/// Evaluated in fixed point; each index may contribute a few units of
/// rounding, which is tolerated.
pub fn check_band(probs: &[Probability], ks: &[u64], eps_fp: u64) -> Result<Option<BandViolation>> {
    if probs.len() != ks.len() {
        return Err(Error::InvalidParameter("length mismatch".into()));
    }
    let mut acc: i128 = 0;
    for (i, (&p, &k)) in probs.iter().zip(ks).enumerate() {
        if k == 0 {
            return Err(Error::InvalidParameter(format!("k_{} is zero", i + 1)));
        }
        acc += log2_fp_floor(k as u128) as i128 - p.cost_fp() as i128 - eps_fp as i128;
        let slack = 4 * (i as i128 + 1);
        if acc < -slack || acc > FP_ONE as i128 + slack {
            return Ok(Some(BandViolation {
                index: i + 1,
                log2_product: acc as f64 / FP_ONE as f64,
            }));
        }
    }
    Ok(None)
}
