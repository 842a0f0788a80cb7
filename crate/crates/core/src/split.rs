//! Deterministic train/valid/test assignment by declaration name.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SplitError {
    #[error("empty name")]
    EmptyName,
    #[error("record {0} has no string `decl_nm`")]
    MissingName(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bucket {
    Train,
    Valid,
    Test,
}

impl Bucket {
    pub const ALL: [Bucket; 3] = [Bucket::Train, Bucket::Valid, Bucket::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Bucket::Train => "train",
            Bucket::Valid => "valid",
            Bucket::Test => "test",
        }
    }

    pub fn of(h: f64) -> Bucket {
        if h < 0.80 {
            Bucket::Train
        } else if h < 0.85 {
            Bucket::Valid
        } else {
            Bucket::Test
        }
    }
}

/// SHA-256 of the UTF-8 name; the first 8 bytes read big-endian as `n`
/// give `(n + 0.5) / 2^64`, kept strictly below 1.
pub fn hash_name(name: &str) -> Result<f64, SplitError> {
    if name.is_empty() {
        return Err(SplitError::EmptyName);
    }
    let digest = Sha256::digest(name.as_bytes());
    let n = u64::from_be_bytes(digest[..8].try_into().expect("8 bytes"));
    let h = (n as f64 + 0.5) / 18_446_744_073_709_551_616.0;
    Ok(h.min(1.0 - f64::EPSILON / 2.0))
}

pub fn bucket_of(name: &str) -> Result<Bucket, SplitError> {
    hash_name(name).map(Bucket::of)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SplitManifest {
    pub schema_version: u32,
    pub counts: BTreeMap<Bucket, usize>,
    pub distinct_names: BTreeMap<Bucket, usize>,
}

/// Route records by the bucket of their `decl_nm`, keeping input order
/// inside each bucket.
pub fn split_dataset(records: Vec<serde_json::Value>) -> Result<(BTreeMap<Bucket, Vec<serde_json::Value>>, SplitManifest), SplitError> {
    let mut out: BTreeMap<Bucket, Vec<serde_json::Value>> = Bucket::ALL.iter().map(|b| (*b, Vec::new())).collect();
    let mut names: BTreeMap<Bucket, BTreeSet<String>> = BTreeMap::new();
    for (i, r) in records.into_iter().enumerate() {
        let name = r.get("decl_nm").and_then(|v| v.as_str()).ok_or(SplitError::MissingName(i))?.to_string();
        let b = bucket_of(&name).map_err(|_| SplitError::MissingName(i))?;
        names.entry(b).or_default().insert(name);
        out.get_mut(&b).expect("all buckets present").push(r);
    }
    let manifest = SplitManifest {
        schema_version: 1,
        counts: out.iter().map(|(b, v)| (*b, v.len())).collect(),
        distinct_names: Bucket::ALL.iter().map(|b| (*b, names.get(b).map_or(0, BTreeSet::len))).collect(),
    };
    Ok((out, manifest))
}
