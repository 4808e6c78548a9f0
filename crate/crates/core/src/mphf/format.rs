use super::{salt_for, Fallback, MphfIndex, SpaceBreakdown};
use crate::codec::{ByteReader, ByteWriter};
use crate::consensus::ConsensusCode;
use crate::error::{Error, Result};
use crate::kperfect::KPerfect;
use crate::oracle::mix_round;

pub const MAGIC: &[u8; 4] = b"CRSM";
pub const FORMAT_VERSION: u16 = 1;
const HEADER_BYTES: u64 = 4 + 2 + 8 + 8 + 4 + 8 + 1 + 1;

/// Word-wise mix of `bytes` (zero-padded little-endian words) followed by the length.
///
/// Each step is a bijection of the running state, so any change confined to
/// one word always changes the result.
pub fn checksum(bytes: &[u8]) -> u64 {
    let mut h = 0u64;
    let mut chunks = bytes.chunks_exact(8);
    for c in &mut chunks {
        h = mix_round(h, u64::from_le_bytes(c.try_into().expect("8-byte chunk")));
    }
    let rest = chunks.remainder();
    if !rest.is_empty() {
        let mut buf = [0u8; 8];
        buf[..rest.len()].copy_from_slice(rest);
        h = mix_round(h, u64::from_le_bytes(buf));
    }
    mix_round(h, bytes.len() as u64)
}

fn sections(index: &MphfIndex) -> (Vec<u8>, Vec<Vec<u8>>, Vec<u8>) {
    (
        index.kperfect.serialize(),
        index.layers.iter().map(|l| l.serialize()).collect(),
        index.fallback.serialize(),
    )
}

pub(super) fn serialize(index: &MphfIndex) -> Vec<u8> {
    let (kp, layers, fb) = sections(index);
    let mut w = ByteWriter::new();
    w.put_bytes(MAGIC);
    w.put_u16(FORMAT_VERSION);
    w.put_u64(index.master_seed);
    w.put_u64(index.n);
    w.put_u32(index.k as u32);
    w.put_u64(index.eps_fp);
    w.put_u8(index.w as u8);
    w.put_u8(index.layers.len() as u8);
    w.put_section(&kp);
    for l in &layers {
        w.put_section(l);
    }
    w.put_section(&fb);
    let mut out = w.into_inner();
    let sum = checksum(&out);
    out.extend_from_slice(&sum.to_le_bytes());
    out
}

pub(super) fn breakdown(index: &MphfIndex) -> SpaceBreakdown {
    let (kp, layers, fb) = sections(index);
    let prefixes = 8 * (layers.len() as u64 + 2);
    SpaceBreakdown {
        n: index.n,
        header: 8 * (HEADER_BYTES + prefixes + 8),
        kperfect: 8 * kp.len() as u64,
        layers: layers.iter().map(|l| 8 * l.len() as u64).collect(),
        fallback: 8 * fb.len() as u64,
        layer_code_bits: index.layers.iter().map(|l| l.size_in_bits()).collect(),
    }
}

pub(super) fn deserialize(bytes: &[u8]) -> Result<MphfIndex> {
    let mut r = ByteReader::new(bytes);
    if r.take(4)? != MAGIC {
        return Err(Error::Format("bad magic, not an index file".into()));
    }
    let version = r.u16()?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported format version {version}")));
    }
    let master_seed = r.u64()?;
    let n = r.u64()?;
    let k = r.u32()? as u64;
    let eps_fp = r.u64()?;
    let w = r.u8()? as u32;
    let layer_count = r.u8()? as usize;
    let kp = r.section()?;
    let layer_bytes = (0..layer_count).map(|_| r.section()).collect::<Result<Vec<_>>>()?;
    let fb = r.section()?;
    let body_len = r.position();
    let stored = r.u64()?;
    r.finish("index file")?;
    if checksum(&bytes[..body_len]) != stored {
        return Err(Error::Format("checksum mismatch".into()));
    }

    if n == 0 || k < 2 || !k.is_power_of_two() || w == 0 || w > 64 {
        return Err(Error::Format("invalid index header".into()));
    }
    let full = n / k;
    let expected_layers = if full > 0 { k.trailing_zeros() as usize } else { 0 };
    if layer_count != expected_layers {
        return Err(Error::Format(format!(
            "expected {expected_layers} layers, found {layer_count}"
        )));
    }
    let kperfect = KPerfect::deserialize(kp)?;
    if kperfect.n() != n || kperfect.k() != k {
        return Err(Error::Format("k-perfect section does not match header".into()));
    }
    let mut layers = Vec::with_capacity(layer_count);
    for (l, b) in layer_bytes.into_iter().enumerate() {
        let code = ConsensusCode::deserialize(b)?;
        if code.w() != w || code.len() as u64 != full << l {
            return Err(Error::Format(format!("layer {l} does not match header")));
        }
        layers.push(code);
    }
    let fallback = Fallback::deserialize(fb)?;
    if fallback.len() != n - full * k {
        return Err(Error::Format("fallback size does not match header".into()));
    }
    Ok(MphfIndex {
        master_seed,
        salt: salt_for(master_seed),
        n,
        k,
        eps_fp,
        w,
        kperfect,
        layers,
        fallback,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mphf::{build_bucketed, BucketSize, MphfConfig};

    #[test]
    fn round_trip_and_errors() {
        let keys: Vec<String> = (0..3000).map(|i| format!("k{i}")).collect();
        let (index, report) = build_bucketed(&keys, &MphfConfig::new(0.2, BucketSize::Fixed(64))).unwrap();
        let bytes = index.serialize();
        assert_eq!(report.space.total(), 8 * bytes.len() as u64);
        let back = MphfIndex::deserialize(&bytes).unwrap();
        assert_eq!(back, index);
        assert_eq!(back.serialize(), bytes);

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(MphfIndex::deserialize(&bad), Err(Error::Format(_))));
        assert!(matches!(
            MphfIndex::deserialize(&bytes[..bytes.len() / 2]),
            Err(Error::Truncated { .. })
        ));
        let mut flipped = bytes.clone();
        flipped[bytes.len() / 2] ^= 4;
        assert!(MphfIndex::deserialize(&flipped).is_err());
    }

    #[test]
    fn checksum_sensitivity() {
        assert_ne!(checksum(b""), checksum(b"\0"));
        assert_ne!(checksum(b"abc"), checksum(b"abd"));
    }
}
