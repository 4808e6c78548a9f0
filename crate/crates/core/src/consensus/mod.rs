//! Seed search with backtracking and joint encoding of all seeds.

mod full;
mod schedule;
mod simplified;

pub use full::{
    solve_full, solve_full_traced, ConsensusCode, FailureReason, SolveConfig, SolveError,
    SolveFailure, SolveStats, StepLimit,
};
pub use schedule::FragmentSchedule;
pub use simplified::{solve_simplified, SimplifiedSolution};
