use super::BitBuffer;
use crate::codec::{ByteReader, ByteWriter};
use crate::error::{Error, Result};

/// Values between consecutive skip pointers.
pub const RICE_SKIP: usize = 64;

/// Golomb-Rice code of a sequence of non-negative integers.
///
/// Each value `v` is written as `v >> parameter` in unary (that many one bits
/// and a terminating zero) followed by the low `parameter` bits of `v`.
/// A skip pointer to every 64th value gives `decode_at` bounded work.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RiceCode {
    parameter: u8,
    count: usize,
    payload: BitBuffer,
    skips: Vec<u64>,
}

impl RiceCode {
    pub fn encode(values: &[u64], parameter: u8) -> Result<Self> {
        if parameter > 63 {
            return Err(Error::InvalidParameter(format!(
                "rice parameter {parameter} exceeds 63"
            )));
        }
        let mut payload = BitBuffer::new();
        let mut skips = Vec::with_capacity(values.len() / RICE_SKIP + 1);
        let b = parameter as u32;
        for (i, &v) in values.iter().enumerate() {
            if i % RICE_SKIP == 0 {
                skips.push(payload.len());
            }
            let mut q = v >> b;
            while q >= 64 {
                payload.push_unchecked(u64::MAX, 64);
                q -= 64;
            }
            // q ones followed by a zero
            payload.push_unchecked(((1u64 << q) - 1) << 1, q as u32 + 1);
            payload.push_unchecked(v & ((1u64 << b) - 1), b);
        }
        Ok(Self {
            parameter,
            count: values.len(),
            payload,
            skips,
        })
    }

    pub fn parameter(&self) -> u8 {
        self.parameter
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn payload(&self) -> &BitBuffer {
        &self.payload
    }

    /// Payload bits only (what the code costs, excluding skip pointers).
    pub fn payload_bits(&self) -> u64 {
        self.payload.len()
    }

    /// Decodes one value starting at bit `pos`; returns the value and the next position.
    fn decode_one(&self, mut pos: u64) -> (u64, u64) {
        let mut q = 0u64;
        loop {
            let avail = (self.payload.len() - pos).min(64) as u32;
            let window = self.payload.read_unchecked(pos, avail) << (64 - avail);
            let ones = window.leading_ones().min(avail);
            q += ones as u64;
            pos += ones as u64;
            if ones < avail {
                pos += 1;
                break;
            }
        }
        let b = self.parameter as u32;
        let rem = self.payload.read_unchecked(pos, b);
        ((q << b) | rem, pos + b as u64)
    }

    /// Value at position `i`.
    pub fn decode_at(&self, i: usize) -> Result<u64> {
        if i >= self.count {
            return Err(Error::IndexOutOfRange {
                index: i as u64,
                valid: format!("0..{}", self.count),
            });
        }
        let mut pos = self.skips[i / RICE_SKIP];
        let mut v = 0;
        for _ in 0..=(i % RICE_SKIP) {
            (v, pos) = self.decode_one(pos);
        }
        Ok(v)
    }

    pub fn decode_all(&self) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.count);
        let mut pos = 0;
        for _ in 0..self.count {
            let (v, next) = self.decode_one(pos);
            out.push(v);
            pos = next;
        }
        out
    }

    /// Parameter, count, bit length, then the payload bytes.
    pub fn serialize(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.put_u8(self.parameter);
        w.put_u64(self.count as u64);
        w.put_u64(self.payload.len());
        w.put_bytes(&self.payload.to_bytes());
        w.into_inner()
    }

    /// Skip pointers are derived data and are rebuilt while validating the payload.
    pub fn deserialize(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes);
        let parameter = r.u8()?;
        if parameter > 63 {
            return Err(Error::Format(format!("rice parameter {parameter} exceeds 63")));
        }
        let count = r.u64()? as usize;
        let bits = r.u64()?;
        if count as u64 > bits {
            return Err(Error::Format(format!("{count} rice values cannot fit in {bits} bits")));
        }
        let raw = r.take(crate::codec::bytes_for_bits(bits))?;
        r.finish("rice code")?;
        let payload = BitBuffer::from_bytes(raw, bits)?;
        let mut code = Self {
            parameter,
            count,
            payload,
            skips: Vec::with_capacity(count / RICE_SKIP + 1),
        };
        let mut pos = 0u64;
        for i in 0..count {
            if i % RICE_SKIP == 0 {
                code.skips.push(pos);
            }
            pos = code.checked_skip(pos)?;
        }
        if pos != bits {
            return Err(Error::Format(format!(
                "rice payload has {bits} bits but values end at {pos}"
            )));
        }
        Ok(code)
    }

    fn checked_skip(&self, mut pos: u64) -> Result<u64> {
        let len = self.payload.len();
        loop {
            if pos >= len {
                return Err(Error::Format("rice payload ends inside a value".into()));
            }
            let bit = self.payload.get_bit(pos);
            pos += 1;
            if !bit {
                break;
            }
        }
        pos += self.parameter as u64;
        if pos > len {
            return Err(Error::Format("rice payload ends inside a value".into()));
        }
        Ok(pos)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_with_parameter_zero_is_one_bit() {
        let c = RiceCode::encode(&[0], 0).unwrap();
        assert_eq!(c.payload_bits(), 1);
        assert_eq!(c.payload().read_window(0, 1).unwrap(), 0);
    }

    #[test]
    fn five_with_parameter_two() {
        // quotient 1 -> "10", remainder 01
        let c = RiceCode::encode(&[5], 2).unwrap();
        assert_eq!(c.payload_bits(), 4);
        assert_eq!(c.payload().read_window(0, 4).unwrap(), 0b1001);
        assert_eq!(c.decode_at(0).unwrap(), 5);
    }

    #[test]
    fn geometric_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let values: Vec<u64> = (0..1000)
            .map(|_| {
                let mut v = 0;
                while rng.gen_bool(0.75) {
                    v += 1;
                }
                v
            })
            .collect();
        let c = RiceCode::encode(&values, 1).unwrap();
        assert_eq!(c.decode_all(), values);
        for (i, &v) in values.iter().enumerate() {
            assert_eq!(c.decode_at(i).unwrap(), v);
        }
        assert!(c.decode_at(1000).is_err());
    }

    #[test]
    fn long_unary_runs() {
        let values = [200, 0, 64, 63, 129];
        let c = RiceCode::encode(&values, 0).unwrap();
        assert_eq!(c.decode_all(), values);
        let back = RiceCode::deserialize(&c.serialize()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn corrupt_serialization_is_rejected() {
        let c = RiceCode::encode(&[1, 2, 3], 1).unwrap();
        let bytes = c.serialize();
        assert!(matches!(
            RiceCode::deserialize(&bytes[..bytes.len() - 1]),
            Err(Error::Truncated { .. })
        ));
        let mut wrong_count = bytes.clone();
        wrong_count[1] = 4;
        assert!(RiceCode::deserialize(&wrong_count).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_all_parameters(values in prop::collection::vec(0u64..5000, 0..300), b in 0u8..=16) {
            let c = RiceCode::encode(&values, b).unwrap();
            prop_assert_eq!(c.decode_all(), values.clone());
            if !values.is_empty() {
                let i = values.len() / 2;
                prop_assert_eq!(c.decode_at(i).unwrap(), values[i]);
            }
            prop_assert_eq!(RiceCode::deserialize(&c.serialize()).unwrap(), c);
        }
    }
}
