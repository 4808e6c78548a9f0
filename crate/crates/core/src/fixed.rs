//! Binary fixed point in units of 2⁻³² bit, used for fragment lengths and overheads.

use crate::error::{Error, Result};

pub const FP_SHIFT: u32 = 32;
/// One bit in fixed point.
pub const FP_ONE: u64 = 1 << FP_SHIFT;

/// Converts a non-negative real number of bits to fixed point, rounding to nearest.
pub fn bits_to_fp(bits: f64) -> Result<u64> {
    if !bits.is_finite() || bits < 0.0 || bits >= (u64::MAX >> FP_SHIFT) as f64 {
        return Err(Error::InvalidParameter(format!(
            "{bits} is not representable in fixed point"
        )));
    }
    Ok((bits * FP_ONE as f64).round() as u64)
}

pub fn fp_to_bits(fp: u64) -> f64 {
    fp as f64 / FP_ONE as f64
}

/// `⌈fp / 2³²⌉` for a 128-bit accumulator.
#[inline]
pub fn ceil_fp(acc: u128) -> u64 {
    acc.div_ceil(FP_ONE as u128) as u64
}

/// Lower bound on `log₂ x` in fixed point for `1 ≤ x ≤ 2⁶⁴`, exact when `x` is a power of two.
///
/// Integer part from the bit length, 32 fractional bits by repeated squaring of
/// the normalized mantissa. Squares are truncated, so the result never exceeds
/// the true logarithm and is at most a few units below it.
pub fn log2_fp_floor(x: u128) -> u64 {
    assert!((1..=1u128 << 64).contains(&x), "log2_fp_floor argument out of range");
    if x == 1u128 << 64 {
        return 64 * FP_ONE;
    }
    let x = x as u64;
    let int = 63 - x.leading_zeros() as u64;
    // mantissa in [1, 2) with 63 fractional bits
    let mut m = (x as u128) << (63 - int) as u32;
    let mut frac = 0u64;
    for _ in 0..FP_SHIFT {
        m = (m * m) >> 63;
        frac <<= 1;
        if m >= 1u128 << 64 {
            frac |= 1;
            m >>= 1;
        }
    }
    (int << FP_SHIFT) | frac
}
