//! Bit-granular storage: an MSB-first append buffer with fixed-width windows,
//! Golomb-Rice codes and Elias-Fano monotone sequences.

mod buffer;
mod elias_fano;
mod rice;

pub use buffer::BitBuffer;
pub use elias_fano::MonotoneSequence;
pub use rice::{RiceCode, RICE_SKIP};
