use super::BitBuffer;
use crate::codec::{bytes_for_bits, ByteReader, ByteWriter};
use crate::error::{Error, Result};

const FORMAT_VERSION: u8 = 1;
/// Every 256th zero of the upper bit vector is sampled (rank path).
const ZERO_SAMPLE: u64 = 256;
/// Every 512th one is sampled (access path).
const ONE_SAMPLE: u64 = 512;

/// Elias-Fano encoding of a non-decreasing sequence of integers below `universe`.
///
/// Values are split into `low_width = ⌊log₂(universe/len)⌋` low bits stored
/// verbatim and high parts stored in unary in a bit vector of
/// `len + ⌈universe / 2^low_width⌉` bits. Sampled zero positions make
/// `rank` a short scan; sampled one positions do the same for `access`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonotoneSequence {
    universe: u64,
    len: usize,
    low_width: u32,
    lows: BitBuffer,
    upper: Vec<u64>,
    upper_len: u64,
    zero_samples: Vec<u64>,
    one_samples: Vec<u64>,
}

/// Position of the `r`-th set bit of `word` (0-based); `r < word.count_ones()`.
#[inline]
fn select_in_word(mut word: u64, r: u32) -> u32 {
    for _ in 0..r {
        word &= word - 1;
    }
    word.trailing_zeros()
}

impl MonotoneSequence {
    pub fn new(values: &[u64], universe: u64) -> Result<Self> {
        let len = values.len();
        for w in values.windows(2) {
            if w[1] < w[0] {
                return Err(Error::Contract(format!(
                    "sequence not monotone: {} after {}",
                    w[1], w[0]
                )));
            }
        }
        if let Some(&last) = values.last() {
            if last >= universe {
                return Err(Error::Contract(format!(
                    "value {last} outside universe {universe}"
                )));
            }
        }
        let low_width = if len == 0 || universe <= len as u64 {
            0
        } else {
            63 - (universe / len as u64).leading_zeros()
        };
        let upper_len = if len == 0 {
            0
        } else {
            len as u64 + ((universe - 1) >> low_width) + 1
        };
        let mut upper = vec![0u64; upper_len.div_ceil(64) as usize];
        let mut lows = BitBuffer::with_capacity(len as u64 * low_width as u64);
        let low_mask = (1u64 << low_width) - 1;
        for (i, &v) in values.iter().enumerate() {
            let pos = (v >> low_width) + i as u64;
            upper[(pos / 64) as usize] |= 1 << (pos % 64);
            lows.push_unchecked(v & low_mask, low_width);
        }
        let mut seq = Self {
            universe,
            len,
            low_width,
            lows,
            upper,
            upper_len,
            zero_samples: Vec::new(),
            one_samples: Vec::new(),
        };
        seq.build_samples();
        Ok(seq)
    }

    fn build_samples(&mut self) {
        let (mut zeros, mut ones) = (0u64, 0u64);
        self.zero_samples.clear();
        self.one_samples.clear();
        for pos in 0..self.upper_len {
            if self.upper_bit(pos) {
                if ones % ONE_SAMPLE == 0 {
                    self.one_samples.push(pos);
                }
                ones += 1;
            } else {
                if zeros % ZERO_SAMPLE == 0 {
                    self.zero_samples.push(pos);
                }
                zeros += 1;
            }
        }
    }

    #[inline]
    fn upper_bit(&self, pos: u64) -> bool {
        self.upper[(pos / 64) as usize] >> (pos % 64) & 1 == 1
    }

    /// Position of the `j`-th zero (`ones == false`) or one of the upper bit vector.
    fn select(&self, j: u64, ones: bool) -> u64 {
        let (samples, step) = if ones {
            (&self.one_samples, ONE_SAMPLE)
        } else {
            (&self.zero_samples, ZERO_SAMPLE)
        };
        let start = samples[(j / step) as usize];
        let mut remaining = j % step;
        let mut word_idx = (start / 64) as usize;
        let mut word = if ones {
            self.upper[word_idx]
        } else {
            !self.upper[word_idx]
        };
        word &= u64::MAX << (start % 64);
        loop {
            let c = word.count_ones() as u64;
            if remaining < c {
                return word_idx as u64 * 64 + select_in_word(word, remaining as u32) as u64;
            }
            remaining -= c;
            word_idx += 1;
            word = if ones {
                self.upper[word_idx]
            } else {
                !self.upper[word_idx]
            };
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn universe(&self) -> u64 {
        self.universe
    }

    #[inline]
    fn low(&self, i: usize) -> u64 {
        self.lows
            .read_unchecked(i as u64 * self.low_width as u64, self.low_width)
    }

    /// Number of stored values strictly less than `x`.
    pub fn rank(&self, x: u64) -> usize {
        if self.len == 0 {
            return 0;
        }
        let high = x >> self.low_width;
        let max_high = (self.universe - 1) >> self.low_width;
        if high > max_high {
            return self.len;
        }
        let mut pos = if high == 0 {
            0
        } else {
            self.select(high - 1, false) + 1
        };
        let mut idx = (pos - high) as usize;
        let x_low = x & ((1u64 << self.low_width) - 1);
        while pos < self.upper_len && self.upper_bit(pos) && self.low(idx) < x_low {
            idx += 1;
            pos += 1;
        }
        idx
    }

    /// The `i`-th value.
    pub fn access(&self, i: usize) -> Result<u64> {
        if i >= self.len {
            return Err(Error::IndexOutOfRange {
                index: i as u64,
                valid: format!("0..{}", self.len),
            });
        }
        let high = self.select(i as u64, true) - i as u64;
        Ok(high << self.low_width | self.low(i))
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.len).map(|i| self.access(i).expect("index in range"))
    }

    /// In-memory size including the sampled select indexes.
    pub fn size_in_bits(&self) -> u64 {
        self.lows.len()
            + self.upper_len
            + 64 * (self.zero_samples.len() + self.one_samples.len()) as u64
    }

    pub fn serialize(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.put_u8(FORMAT_VERSION);
        w.put_u64(self.universe);
        w.put_u64(self.len as u64);
        w.put_u8(self.low_width as u8);
        w.put_bytes(&self.lows.to_bytes());
        for &word in &self.upper {
            w.put_u64(word);
        }
        w.into_inner()
    }

    pub fn deserialize(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes);
        let version = r.u8()?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported Elias-Fano version {version}"
            )));
        }
        let universe = r.u64()?;
        let len = r.u64()?;
        let low_width = r.u8()? as u32;
        if len > universe || low_width > 63 {
            return Err(Error::Format("inconsistent Elias-Fano header".into()));
        }
        let len = len as usize;
        let expected_low = if len == 0 || universe <= len as u64 {
            0
        } else {
            63 - (universe / len as u64).leading_zeros()
        };
        if low_width != expected_low {
            return Err(Error::Format("unexpected Elias-Fano low width".into()));
        }
        let low_bits = len as u64 * low_width as u64;
        let lows = BitBuffer::from_bytes(r.take(bytes_for_bits(low_bits))?, low_bits)?;
        let upper_len = if len == 0 {
            0
        } else {
            len as u64 + ((universe - 1) >> low_width) + 1
        };
        let words = upper_len.div_ceil(64) as usize;
        if r.remaining() != words * 8 {
            return Err(Error::Format(format!(
                "Elias-Fano upper bits: expected {} bytes, found {}",
                words * 8,
                r.remaining()
            )));
        }
        let mut upper = Vec::with_capacity(words);
        for _ in 0..words {
            upper.push(r.u64()?);
        }
        let ones: u64 = upper.iter().map(|w| w.count_ones() as u64).sum();
        let tail = upper_len % 64;
        let padding_clean = tail == 0 || upper.last().map_or(true, |w| w >> tail == 0);
        if ones != len as u64 || !padding_clean {
            return Err(Error::Format("corrupt Elias-Fano upper bits".into()));
        }
        let mut seq = Self {
            universe,
            len,
            low_width,
            lows,
            upper,
            upper_len,
            zero_samples: Vec::new(),
            one_samples: Vec::new(),
        };
        seq.build_samples();
        Ok(seq)
    }
}
