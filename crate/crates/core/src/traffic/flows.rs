//! Traffic matrices from flow records, hashing source and destination keys.

use std::str::FromStr;

use md5::Md5;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::TrafficMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowRecord {
    pub src_key: String,
    pub dst_key: String,
    pub rate_mbps: f64,
}

/// Stable 128-bit hashes, selected by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum HashName {
    #[default]
    #[serde(rename = "md5")]
    Md5,
    #[serde(rename = "sha256-128")]
    Sha256_128,
}

impl HashName {
    pub fn as_str(&self) -> &'static str {
        match self {
            HashName::Md5 => "md5",
            HashName::Sha256_128 => "sha256-128",
        }
    }

    /// Digest as a big-endian integer (SHA-256 truncated to its first 16 bytes).
    pub fn hash128(&self, key: &[u8]) -> u128 {
        let bytes: [u8; 16] = match self {
            HashName::Md5 => Md5::digest(key).into(),
            HashName::Sha256_128 => Sha256::digest(key)[..16].try_into().unwrap(),
        };
        u128::from_be_bytes(bytes)
    }

    pub fn bucket(&self, key: &str, n: usize) -> usize {
        (self.hash128(key.as_bytes()) % n as u128) as usize
    }
}

impl FromStr for HashName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "md5" => Ok(HashName::Md5),
            "sha256-128" => Ok(HashName::Sha256_128),
            _ => Err(Error::InvalidConfig(format!("unknown hash '{s}'"))),
        }
    }
}

/// Adds each flow at `(hash(src) mod rows, hash(dst) mod cols)` and rescales
/// so the most loaded row or column is at capacity. Per-cell sums are taken
/// in sorted order, so the result does not depend on the order of `flows`.
pub fn tm_from_flows(
    flows: &[FlowRecord],
    rows: usize,
    cols: usize,
    col_capacity: f64,
    hash: HashName,
) -> Result<TrafficMatrix> {
    if flows.is_empty() {
        return Err(Error::EmptyInput("no flow records".into()));
    }
    if rows == 0 || cols == 0 {
        return Err(Error::DimensionMismatch("empty target matrix".into()));
    }
    let mut cells: Vec<(usize, f64)> = Vec::with_capacity(flows.len());
    for f in flows {
        if !(f.rate_mbps > 0.0) || !f.rate_mbps.is_finite() {
            return Err(Error::EmptyInput(format!(
                "flow {} -> {} has non-positive rate",
                f.src_key, f.dst_key
            )));
        }
        let r = hash.bucket(&f.src_key, rows);
        let c = hash.bucket(&f.dst_key, cols);
        cells.push((r * cols + c, f.rate_mbps));
    }
    cells.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut tm = TrafficMatrix::zeros(rows, cols);
    for (cell, rate) in cells {
        tm.add(cell / cols, cell % cols, rate);
    }
    tm.normalize(col_capacity);
    Ok(tm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn md5_matches_known_digest() {
        // RFC 1321 test vector for "abc".
        assert_eq!(
            HashName::Md5.hash128(b"abc"),
            0x900150983cd24fb0d6963f7d28e17f72
        );
        assert_eq!(
            HashName::Sha256_128.hash128(b"abc"),
            0xba7816bf8f01cfea414140de5dae2223
        );
    }
}
