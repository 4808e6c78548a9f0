use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ALPHABET: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789";

/// `n` distinct alphanumeric keys of uniform random length 10 to 50.
pub fn random_keys(n: usize, seed: u64) -> Vec<Vec<u8>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = std::collections::HashSet::with_capacity(n);
    let mut keys = Vec::with_capacity(n);
    while keys.len() < n {
        let len = rng.gen_range(10..=50);
        let key: Vec<u8> = (0..len)
            .map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())])
            .collect();
        if seen.insert(key.clone()) {
            keys.push(key);
        }
    }
    keys
}

/// Reads a key file: one key per line, or `u32` little-endian length prefixed
/// records when `binary` is set. Duplicates are an error naming both positions.
pub fn read_keys(path: &Path, binary: bool) -> Result<Vec<Vec<u8>>> {
    let data = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let keys = if binary {
        parse_binary(&data)?
    } else {
        parse_lines(&data)
    };
    let unit = if binary { "record" } else { "line" };
    let mut first: HashMap<&[u8], usize> = HashMap::with_capacity(keys.len());
    for (i, k) in keys.iter().enumerate() {
        if let Some(prev) = first.insert(k, i + 1) {
            bail!(
                "{}: duplicate key {:?} at {unit} {} (first seen at {unit} {prev})",
                path.display(),
                String::from_utf8_lossy(k),
                i + 1
            );
        }
    }
    Ok(keys)
}

fn parse_lines(data: &[u8]) -> Vec<Vec<u8>> {
    let data = data.strip_suffix(b"\n").unwrap_or(data);
    if data.is_empty() {
        return Vec::new();
    }
    data.split(|&b| b == b'\n')
        .map(|l| l.strip_suffix(b"\r").unwrap_or(l).to_vec())
        .collect()
}

fn parse_binary(mut data: &[u8]) -> Result<Vec<Vec<u8>>> {
    let mut keys = Vec::new();
    while !data.is_empty() {
        if data.len() < 4 {
            bail!("record {}: truncated length prefix", keys.len() + 1);
        }
        let len = u32::from_le_bytes(data[..4].try_into().unwrap()) as usize;
        data = &data[4..];
        if data.len() < len {
            bail!("record {}: declares {len} bytes, {} remain", keys.len() + 1, data.len());
        }
        keys.push(data[..len].to_vec());
        data = &data[len..];
    }
    Ok(keys)
}

pub fn write_lines(path: &Path, keys: &[Vec<u8>]) -> Result<()> {
    let mut out = std::io::BufWriter::new(
        fs::File::create(path).with_context(|| format!("creating {}", path.display()))?,
    );
    for k in keys {
        out.write_all(k)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}
