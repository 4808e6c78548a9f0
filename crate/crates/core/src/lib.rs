//! Combined seed search and encoding for sequences of Bernoulli trials, and a
//! compact minimal perfect hash function built on it.

pub mod analysis;
pub mod baselines;
pub mod bitio;
pub mod consensus;
pub(crate) mod codec;
pub mod error;
pub mod fixed;
pub mod kperfect;
pub mod mphf;
pub mod oracle;
pub mod splitter;

pub use error::{Error, Result};
