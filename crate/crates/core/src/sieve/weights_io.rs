//! Binary weight files: magic `HLWV`, version, `N`, vector count, then
//! `count * (N + 1)` little-endian f64 values and a CRC32 of the payload.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"HLWV";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct WeightFile {
    pub n: u64,
    /// Each vector has `n + 1` entries, index 0 unused.
    pub vectors: Vec<Vec<f64>>,
}

pub fn write_weights(path: &Path, file: &WeightFile) -> Result<()> {
    let len = file.n as usize + 1;
    if file.vectors.iter().any(|v| v.len() != len) {
        return Err(Error::DimensionMismatch(
            file.vectors.iter().map(|v| v.len()).find(|&l| l != len).unwrap_or(0),
            len,
        ));
    }
    let mut payload = Vec::with_capacity(8 * len * file.vectors.len());
    for v in &file.vectors {
        for x in v {
            payload.extend_from_slice(&x.to_le_bytes());
        }
    }
    let mut out = Vec::with_capacity(payload.len() + 28);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&file.n.to_le_bytes());
    out.extend_from_slice(&(file.vectors.len() as u64).to_le_bytes());
    out.extend_from_slice(&payload);
    out.extend_from_slice(&crc32fast::hash(&payload).to_le_bytes());
    fs::write(path, out).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn read_weights(path: &Path) -> Result<WeightFile> {
    let bytes = fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let bad = |m: &str| Error::Io(format!("{}: {m}", path.display()));
    if bytes.len() < 28 || &bytes[..4] != MAGIC {
        return Err(bad("not a weight file"));
    }
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let u64_at = |i: usize| u64::from_le_bytes(bytes[i..i + 8].try_into().unwrap());
    if u32_at(4) != VERSION {
        return Err(bad("unsupported version"));
    }
    let n = u64_at(8);
    let count = u64_at(16) as usize;
    let len = n as usize + 1;
    let payload_len = 8 * len * count;
    if bytes.len() != 24 + payload_len + 4 {
        return Err(bad("truncated"));
    }
    let payload = &bytes[24..24 + payload_len];
    if crc32fast::hash(payload) != u32_at(24 + payload_len) {
        return Err(bad("checksum mismatch"));
    }
    let vectors = payload
        .chunks_exact(8 * len)
        .map(|c| c.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect())
        .collect();
    Ok(WeightFile { n, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.bin");
        let f = WeightFile {
            n: 4,
            vectors: vec![vec![0.0, 1.5, -2.0, 1e-300, 3.0], vec![0.0; 5]],
        };
        write_weights(&path, &f).unwrap();
        assert_eq!(read_weights(&path).unwrap(), f);
        let mut b = fs::read(&path).unwrap();
        b[30] ^= 1;
        fs::write(&path, b).unwrap();
        assert!(matches!(read_weights(&path), Err(Error::Io(_))));
    }
}
