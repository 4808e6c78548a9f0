use crate::codec::bytes_for_bits;
use crate::error::{Error, Result};

/// An append-only bit string with random-access fixed-width windows.
///
/// Bits are stored most-significant-bit first: the first bit ever written is
/// the top bit of the first word. Consequently, appending `a` with width `x`
/// followed by `b` with width `y` yields a buffer whose window `[0, x + y)`
/// reads back as the integer `a << y | b`.
#[derive(Debug, Clone, Default)]
pub struct BitBuffer {
    words: Vec<u64>,
    len: u64,
}

#[inline]
fn low_mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

impl PartialEq for BitBuffer {
    fn eq(&self, other: &Self) -> bool {
        let words = self.len.div_ceil(64) as usize;
        self.len == other.len
            && self.words.get(..words) == other.words.get(..words)
    }
}

impl Eq for BitBuffer {}

impl BitBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bits: u64) -> Self {
        Self {
            words: Vec::with_capacity(bits.div_ceil(64) as usize + 1),
            len: 0,
        }
    }

    /// Logical length in bits.
    #[inline]
    pub fn len(&self) -> u64 {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Appends the low `width` bits of `value`.
    ///
    /// Fails if `width > 64` or if `value` does not fit in `width` bits.
    pub fn write_bits(&mut self, value: u64, width: u32) -> Result<()> {
        if width > 64 {
            return Err(Error::Contract(format!("bit width {width} exceeds 64")));
        }
        if value & !low_mask(width) != 0 {
            return Err(Error::Contract(format!(
                "value {value} does not fit in {width} bits"
            )));
        }
        self.push_unchecked(value, width);
        Ok(())
    }

    /// Appends without validating the arguments; `value` must fit in `width <= 64` bits.
    #[inline]
    pub(crate) fn push_unchecked(&mut self, value: u64, width: u32) {
        debug_assert!(width <= 64 && value & !low_mask(width) == 0);
        if width == 0 {
            return;
        }
        let end = self.len + width as u64;
        let needed = end.div_ceil(64) as usize + 1;
        if self.words.len() < needed {
            self.words.resize(needed, 0);
        }
        let word = (self.len / 64) as usize;
        let shift = (self.len % 64) as u32;
        let aligned = value << (64 - width);
        self.words[word] |= aligned >> shift;
        if shift + width > 64 {
            self.words[word + 1] |= aligned << (64 - shift);
        }
        self.len = end;
    }

    /// Appends a single bit.
    #[inline]
    pub fn push_bit(&mut self, bit: bool) {
        self.push_unchecked(bit as u64, 1);
    }

    /// Reads the `width`-bit window starting at bit `offset`.
    pub fn read_window(&self, offset: u64, width: u32) -> Result<u64> {
        if width > 64 {
            return Err(Error::Contract(format!("bit width {width} exceeds 64")));
        }
        match offset.checked_add(width as u64) {
            Some(end) if end <= self.len => Ok(self.read_unchecked(offset, width)),
            _ => Err(Error::IndexOutOfRange {
                index: offset,
                valid: format!("windows ending at or before bit {}", self.len),
            }),
        }
    }

    /// Reads a window without bounds checks beyond the backing storage.
    #[inline]
    pub(crate) fn read_unchecked(&self, offset: u64, width: u32) -> u64 {
        debug_assert!(width <= 64 && offset + width as u64 <= self.len);
        if width == 0 {
            return 0;
        }
        let word = (offset / 64) as usize;
        let shift = (offset % 64) as u32;
        let mut top = self.words[word] << shift;
        if shift + width > 64 {
            top |= self.words[word + 1] >> (64 - shift);
        }
        top >> (64 - width)
    }

    #[inline]
    pub fn get_bit(&self, offset: u64) -> bool {
        self.read_unchecked(offset, 1) == 1
    }

    /// Serializes the bits into `⌈len/8⌉` bytes, first bit in the top bit of byte 0.
    pub fn to_bytes(&self) -> Vec<u8> {
        let n = bytes_for_bits(self.len);
        let mut out = Vec::with_capacity(n + 8);
        for w in &self.words {
            out.extend_from_slice(&w.to_be_bytes());
        }
        out.resize(n, 0);
        out
    }

    /// Inverse of [`BitBuffer::to_bytes`]; padding bits must be zero.
    pub fn from_bytes(bytes: &[u8], len: u64) -> Result<Self> {
        if bytes.len() != bytes_for_bits(len) {
            return Err(Error::Format(format!(
                "bit buffer of {len} bits needs {} bytes, got {}",
                bytes_for_bits(len),
                bytes.len()
            )));
        }
        let mut words = Vec::with_capacity(bytes.len() / 8 + 2);
        for chunk in bytes.chunks(8) {
            let mut b = [0u8; 8];
            b[..chunk.len()].copy_from_slice(chunk);
            words.push(u64::from_be_bytes(b));
        }
        words.push(0);
        let tail = len % 64;
        if tail != 0 {
            let last = (len / 64) as usize;
            if words[last] << tail != 0 {
                return Err(Error::Format("non-zero padding bits".into()));
            }
        }
        Ok(Self { words, len })
    }

    /// Heap footprint of the payload in bits (excluding the spare guard word).
    pub fn size_in_bits(&self) -> u64 {
        self.len.div_ceil(64) * 64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn from_bits(bits: &[u8]) -> BitBuffer {
        let mut b = BitBuffer::new();
        for &x in bits {
            b.push_bit(x == 1);
        }
        b
    }

    #[test]
    fn read_back_three_bits() {
        let mut b = BitBuffer::new();
        b.write_bits(0b101, 3).unwrap();
        assert_eq!(b.read_window(0, 3).unwrap(), 0b101);
    }

    #[test]
    fn empty_write_keeps_length() {
        let mut b = BitBuffer::new();
        b.write_bits(0, 0).unwrap();
        assert_eq!(b.len(), 0);
        assert_eq!(b.read_window(0, 0).unwrap(), 0);
    }

    #[test]
    fn all_ones_sixteen() {
        let mut b = BitBuffer::new();
        b.write_bits(65535, 16).unwrap();
        assert_eq!(b.read_window(0, 16).unwrap(), 65535);
    }

    #[test]
    fn inner_window() {
        let b = from_bits(&[1, 0, 1, 1]);
        assert_eq!(b.read_window(1, 3).unwrap(), 0b011);
    }

    #[test]
    fn concatenated_fragments_form_suffix_seed() {
        let mut b = BitBuffer::new();
        b.write_bits(5, 4).unwrap();
        b.write_bits(1, 1).unwrap();
        // 0101 ∘ 1 = 01011; the window after the first bit is 1011.
        assert_eq!(b.read_window(1, 4).unwrap(), 0b1011);
    }

    #[test]
    fn rejects_bad_widths_and_values() {
        let mut b = BitBuffer::new();
        assert!(matches!(b.write_bits(1, 65), Err(Error::Contract(_))));
        assert!(matches!(b.write_bits(8, 3), Err(Error::Contract(_))));
        b.write_bits(3, 2).unwrap();
        assert!(matches!(
            b.read_window(1, 2),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(b.read_window(u64::MAX, 2).is_err());
    }

    #[test]
    fn full_words_across_boundaries() {
        let mut b = BitBuffer::new();
        b.write_bits(1, 3).unwrap();
        b.write_bits(u64::MAX - 7, 64).unwrap();
        b.write_bits(0xdead_beef, 64).unwrap();
        assert_eq!(b.read_window(3, 64).unwrap(), u64::MAX - 7);
        assert_eq!(b.read_window(67, 64).unwrap(), 0xdead_beef);
        assert_eq!(b.len(), 131);
    }

    #[test]
    fn bytes_round_trip_and_padding_check() {
        let mut b = BitBuffer::new();
        b.write_bits(0b1011, 4).unwrap();
        b.write_bits(0x1234_5678_9abc, 48).unwrap();
        let bytes = b.to_bytes();
        assert_eq!(bytes.len(), 7);
        assert_eq!(bytes[0] >> 4, 0b1011);
        assert_eq!(BitBuffer::from_bytes(&bytes, 52).unwrap(), b);
        let mut bad = bytes.clone();
        *bad.last_mut().unwrap() |= 1;
        assert!(BitBuffer::from_bytes(&bad, 52).is_err());
        assert!(BitBuffer::from_bytes(&bytes, 60).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn windows_read_back_writes(items in prop::collection::vec((any::<u64>(), 0u32..=64), 0..24)) {
            let mut b = BitBuffer::new();
            let mut expect = Vec::new();
            for (v, w) in items {
                let v = v & low_mask(w);
                let off = b.len();
                b.write_bits(v, w).unwrap();
                prop_assert_eq!(b.len(), off + w as u64);
                expect.push((off, w, v));
            }
            for (off, w, v) in expect {
                prop_assert_eq!(b.read_window(off, w).unwrap(), v);
            }
        }
    }
}
