//! `analyze` and `baseline`: numerical tables for the trial model.

use std::io::Write;

use anyhow::{bail, Result};
use consensus::analysis;
use consensus::baselines::{min_build, uni_build};
use consensus::consensus::{solve_full, FragmentSchedule, SolveConfig};
use consensus::fixed::bits_to_fp;
use consensus::oracle::{Probability, SyntheticOracle};

/// Repeats `values` cyclically up to length `n` (or keeps the list as is when `n` is absent).
pub fn cycle<T: Copy>(values: &[T], n: Option<usize>) -> Vec<T> {
    match n {
        Some(n) => values.iter().copied().cycle().take(n).collect(),
        None => values.to_vec(),
    }
}

pub fn qcurve(out: &mut dyn Write, probs: &[f64], ks: &[u64], eps: Option<f64>) -> Result<()> {
    if probs.len() != ks.len() {
        bail!("{} probabilities but {} branch counts", probs.len(), ks.len());
    }
    let fixed: Vec<Probability> = probs.iter().map(|&p| Probability::from_f64(p)).collect::<Result<_, _>>()?;
    // without an explicit ε, use the average log₂(p·k) the instance implies
    let eps = eps.unwrap_or_else(|| {
        probs.iter().zip(ks).map(|(p, &k)| (p * k as f64).log2()).sum::<f64>() / probs.len().max(1) as f64
    });
    if eps <= 0.0 {
        eprintln!("warning: branch counts imply eps = {eps:.4} <= 0, instance is infeasible");
    } else if let Some(v) = analysis::check_band(&fixed, ks, bits_to_fp(eps)?)? {
        eprintln!(
            "warning: partial product prod_(j<={}) p_j k_j 2^-eps has log2 {:.4}, outside the band [0, 1] for eps = {eps:.4}",
            v.index, v.log2_product
        );
    }
    let q = analysis::q_curve(probs, ks)?;
    writeln!(out, "i,q_i")?;
    for i in 1..=probs.len() {
        writeln!(out, "{i},{}", q.q(i))?;
    }
    Ok(())
}

pub fn fixedpoint(out: &mut dyn Write, p: f64, k: u64, x0: f64, steps: usize) -> Result<()> {
    writeln!(out, "step,iterate")?;
    for (s, x) in analysis::fixed_point_trace(p, k, x0, steps).iter().enumerate() {
        writeln!(out, "{s},{x}")?;
    }
    Ok(())
}

pub fn bounds(out: &mut dyn Write, probs: &[f64]) -> Result<()> {
    let n = probs.len() as f64;
    writeln!(out, "quantity,value")?;
    writeln!(out, "n,{}", probs.len())?;
    writeln!(out, "m_opt_bits,{}", analysis::m_opt(probs)?)?;
    writeln!(out, "t_opt_total,{}", probs.iter().map(|&p| analysis::t_opt(p)).sum::<Result<f64, _>>()?)?;
    writeln!(out, "min_entropy_bits_per_seed,{}", analysis::min_baseline_entropy(probs)? / n)?;
    writeln!(out, "min_lower_bound_bits_per_seed,{}", analysis::min_baseline_lower_bound(probs)? / n)?;
    writeln!(out, "uni_expected_work,{}", analysis::uni_expected_work(probs)?)?;
    Ok(())
}

pub enum Strategy {
    Min,
    Uni { cap: u64 },
    Consensus { eps: f64 },
}

pub fn baseline(out: &mut dyn Write, strategy: Strategy, n: usize, p: f64, seed: u64) -> Result<()> {
    let prob = Probability::from_f64(p)?;
    let mut oracle = SyntheticOracle::uniform(n, prob, seed);
    let (name, bits, trials) = match strategy {
        Strategy::Min => {
            let code = min_build(&mut oracle)?;
            ("min", code.size_in_bits(), code.trials())
        }
        Strategy::Uni { cap } => {
            let code = uni_build(&mut oracle, cap)?;
            ("uni", code.size_in_bits(), code.trials)
        }
        Strategy::Consensus { eps } => {
            let schedule = FragmentSchedule::uniform(n, prob, bits_to_fp(eps)?)?;
            let (code, stats) = solve_full(&mut oracle, &schedule, &SolveConfig::default())?;
            ("consensus", code.size_in_bits(), stats.steps)
        }
    };
    writeln!(out, "strategy,n,p,bits_per_seed,trials_per_seed")?;
    writeln!(out, "{name},{n},{p},{},{}", bits as f64 / n as f64, trials as f64 / n as f64)?;
    Ok(())
}
