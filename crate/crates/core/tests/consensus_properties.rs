mod common;

use consensus::analysis;
use consensus::consensus::{
    solve_full, solve_simplified, FailureReason, FragmentSchedule, SolveConfig, SolveError,
    StepLimit,
};
use consensus::fixed::bits_to_fp;
use consensus::oracle::{Probability, SyntheticOracle, TrialOracle};

use common::mean;

fn schedule(n: usize, p: f64, eps: f64) -> FragmentSchedule {
    FragmentSchedule::uniform(n, Probability::from_f64(p).unwrap(), bits_to_fp(eps).unwrap()).unwrap()
}

#[test]
fn expected_trials_stay_inside_band() {
    for &(p, eps) in &[(0.5, 0.5), (0.25, 0.25), (1.0 / 16.0, 0.1)] {
        let n = 200;
        let s = schedule(n, p, eps);
        let mut totals = vec![0f64; n];
        let runs = 1000;
        for r in 0..runs {
            let mut o = SyntheticOracle::uniform(n, Probability::from_f64(p).unwrap(), r);
            solve_full(&mut o, &s, &SolveConfig::default()).unwrap();
            for (t, c) in totals.iter_mut().zip(o.trial_counts()) {
                *t += *c as f64;
            }
        }
        let means: Vec<f64> = totals.iter().map(|t| t / runs as f64).collect();
        let max = means.iter().copied().fold(0.0, f64::max);
        assert!(mean(&means) >= 1.0 / p, "p={p} eps={eps}");
        assert!(max <= 8.0 / (p * eps), "p={p} eps={eps} max={max}");
    }
}

#[test]
fn default_step_limit_rarely_trips_at_large_n() {
    let n = 100_000;
    let s = schedule(n, 0.25, 0.25);
    let mut failures = 0;
    for r in 0..100 {
        let mut o = SyntheticOracle::uniform(n, Probability::from_f64(0.25).unwrap(), 7_000 + r);
        if solve_full(&mut o, &s, &SolveConfig::default()).is_err() {
            failures += 1;
        }
    }
    assert!(failures <= 1, "{failures} of 100 solves failed");
}

#[test]
fn every_code_verifies_and_survives_serialization() {
    let n = 1000;
    let s = schedule(n, 0.25, 0.5);
    for r in 0..100 {
        let mut o = SyntheticOracle::uniform(n, Probability::from_f64(0.25).unwrap(), r);
        let (code, stats) = solve_full(&mut o, &s, &SolveConfig::default()).unwrap();
        assert_eq!(stats.steps, o.total_trials());
        assert!(code.verify(&mut o));
        let back = consensus::consensus::ConsensusCode::deserialize(&code.serialize()).unwrap();
        assert_eq!(back, code);
        for i in (1..=n).step_by(37) {
            assert!(o.peek(i, back.seed(i)).unwrap());
        }
    }
}

#[test]
fn zero_step_budget_is_a_step_limit_failure() {
    let s = schedule(10, 0.5, 1.0);
    let mut o = SyntheticOracle::uniform(10, Probability::from_f64(0.5).unwrap(), 1);
    let cfg = SolveConfig { w: 64, step_limit: StepLimit::Max(0) };
    match solve_full(&mut o, &s, &cfg) {
        Err(SolveError::Failed(f)) => {
            assert_eq!(f.reason, FailureReason::StepLimit);
            assert_eq!(f.steps, 0);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn survival_composition_matches_q_curve() {
    // q_i is the composed survival map applied to 1 from index i on
    let probs = [0.25, 0.5, 0.125, 0.25, 0.9];
    let ks = [5u64, 3, 9, 4, 1];
    let q = analysis::q_curve(&probs, &ks).unwrap();
    for i in 1..=probs.len() {
        let composed = analysis::compose(&probs[i - 1..], &ks[i - 1..], 1.0);
        assert!((composed - q.q(i)).abs() < 1e-12, "i={i}");
    }
    assert_eq!(q.q(probs.len() + 1), 1.0);
}

#[test]
fn simplified_solution_verifies_with_mixed_ks() {
    let probs: Vec<Probability> = [0.5, 0.25, 0.125, 0.3]
        .iter()
        .cycle()
        .take(60)
        .map(|&p| Probability::from_f64(p).unwrap())
        .collect();
    let ks: Vec<u64> = (0..60).map(|i| [3u64, 5, 9, 4][i % 4]).collect();
    let mut o = SyntheticOracle::new(probs, 3);
    let sol = solve_simplified(&mut o, &ks).unwrap();
    assert!(sol.verify(&ks, &mut o));
    assert_eq!(o.len(), 60);
}
