use crate::bitio::BitBuffer;
use crate::codec::{bytes_for_bits, ByteReader, ByteWriter};
use crate::error::{Error, Result};
use crate::oracle::mix64;
use crate::splitter::KeyDigest;

const MAX_ATTEMPTS: u64 = 64;

/// Static map from a fixed set of digests to `width`-bit values.
///
/// Each digest selects one cell in each third of a table of about `1.23·m`
/// cells; its value is the XOR of the three. Built by hypergraph peeling.
/// Lookups of digests outside the set return arbitrary values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Retrieval {
    seed: u64,
    width: u32,
    segment: u64,
    table: BitBuffer,
}

#[inline]
fn reduce(x: u64, range: u64) -> u64 {
    ((x as u128 * range as u128) >> 64) as u64
}

impl Retrieval {
    pub fn empty() -> Self {
        Self {
            seed: 0,
            width: 0,
            segment: 0,
            table: BitBuffer::new(),
        }
    }

    pub fn build(entries: &[(KeyDigest, u64)], width: u32) -> Result<Self> {
        if width > 64 {
            return Err(Error::Contract(format!("value width {width} exceeds 64")));
        }
        if entries.is_empty() || width == 0 {
            return Ok(Self {
                width,
                ..Self::empty()
            });
        }
        let segment = ((entries.len() as f64 * 1.23 + 32.0) / 3.0).ceil() as u64;
        for seed in 0..MAX_ATTEMPTS {
            if let Some(table) = Self::try_build(entries, width, seed, segment) {
                return Ok(Self {
                    seed,
                    width,
                    segment,
                    table,
                });
            }
        }
        Err(Error::ConstructionFailed {
            attempts: MAX_ATTEMPTS as u32,
            reason: "retrieval table did not peel".into(),
        })
    }

    #[inline]
    fn cells(seed: u64, segment: u64, d: &KeyDigest) -> [usize; 3] {
        let x = mix64(seed, d.hi, d.lo);
        [
            reduce(x, segment) as usize,
            (segment + reduce(x.rotate_left(21), segment)) as usize,
            (2 * segment + reduce(x.rotate_left(42), segment)) as usize,
        ]
    }

    fn try_build(entries: &[(KeyDigest, u64)], width: u32, seed: u64, segment: u64) -> Option<BitBuffer> {
        let size = 3 * segment as usize;
        let mut count = vec![0u32; size];
        let mut xor = vec![0usize; size];
        let positions: Vec<[usize; 3]> = entries
            .iter()
            .map(|(d, _)| Self::cells(seed, segment, d))
            .collect();
        for (e, cells) in positions.iter().enumerate() {
            for &c in cells {
                count[c] += 1;
                xor[c] ^= e;
            }
        }
        let mut queue: Vec<usize> = (0..size).filter(|&c| count[c] == 1).collect();
        let mut order = Vec::with_capacity(entries.len());
        while let Some(c) = queue.pop() {
            if count[c] != 1 {
                continue;
            }
            let e = xor[c];
            order.push((e, c));
            for &o in &positions[e] {
                count[o] -= 1;
                xor[o] ^= e;
                if count[o] == 1 {
                    queue.push(o);
                }
            }
        }
        if order.len() != entries.len() {
            return None;
        }
        let mut values = vec![0u64; size];
        for &(e, c) in order.iter().rev() {
            let [a, b, d] = positions[e];
            values[c] = 0;
            values[c] = entries[e].1 ^ values[a] ^ values[b] ^ values[d];
        }
        let mut table = BitBuffer::with_capacity(size as u64 * width as u64);
        for v in values {
            table.push_unchecked(v, width);
        }
        Some(table)
    }

    #[inline]
    pub fn get(&self, d: &KeyDigest) -> u64 {
        if self.segment == 0 {
            return 0;
        }
        let w = self.width;
        Self::cells(self.seed, self.segment, d)
            .iter()
            .fold(0, |acc, &c| acc ^ self.table.read_unchecked(c as u64 * w as u64, w))
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    /// Number of table cells.
    pub fn cells_len(&self) -> u64 {
        3 * self.segment
    }

    pub fn size_in_bits(&self) -> u64 {
        self.table.len()
    }

    pub fn serialize(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.put_u64(self.seed);
        w.put_u8(self.width as u8);
        w.put_u64(self.segment);
        w.put_bytes(&self.table.to_bytes());
        w.into_inner()
    }

    pub fn deserialize(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes);
        let seed = r.u64()?;
        let width = r.u8()? as u32;
        let segment = r.u64()?;
        if width > 64 || segment > u64::MAX / 3 / 64 {
            return Err(Error::Format("invalid retrieval header".into()));
        }
        let bits = 3 * segment * width as u64;
        let table = BitBuffer::from_bytes(r.take(bytes_for_bits(bits))?, bits)?;
        r.finish("retrieval table")?;
        Ok(Self {
            seed,
            width,
            segment,
            table,
        })
    }
}
