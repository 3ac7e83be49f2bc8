//! Canonical byte encoding shared by task files, traces, manifests and reports.
//!
//! A value is first lowered to a `serde_json::Value` (whose object map is a
//! `BTreeMap`, so keys come out sorted by code point) and then written in
//! compact form. Integers print as integers and floats use the shortest
//! round-trip representation. Multi-record files hold one record per line,
//! each terminated by `\n`.

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum CanonicalError {
    #[error("encoding failed: {0}")]
    Encode(#[source] serde_json::Error),
    #[error("line {line}: {source}")]
    Decode {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

/// Lowers `value` to a JSON tree. Non-finite floats become `null`; callers
/// validate floats where they enter (see `validate::validate_task`).
pub fn to_canonical_value<T: Serialize + ?Sized>(value: &T) -> Result<Value, CanonicalError> {
    serde_json::to_value(value).map_err(CanonicalError::Encode)
}

pub fn canonical_bytes<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>, CanonicalError> {
    let v = to_canonical_value(value)?;
    serde_json::to_vec(&v).map_err(CanonicalError::Encode)
}

pub fn canonical_string<T: Serialize + ?Sized>(value: &T) -> Result<String, CanonicalError> {
    // canonical_bytes only ever produces UTF-8
    Ok(String::from_utf8(canonical_bytes(value)?).expect("serde_json emits UTF-8"))
}

/// Encodes records as canonical JSON lines.
pub fn to_jsonl<'a, T, I>(records: I) -> Result<Vec<u8>, CanonicalError>
where
    T: Serialize + 'a,
    I: IntoIterator<Item = &'a T>,
{
    let mut out = Vec::new();
    for record in records {
        out.extend(canonical_bytes(record)?);
        out.push(b'\n');
    }
    Ok(out)
}

/// Parses JSON lines, skipping blank lines. Line numbers in errors are 1-based.
pub fn from_jsonl<T: DeserializeOwned>(bytes: &[u8]) -> Result<Vec<T>, CanonicalError> {
    bytes
        .split(|b| *b == b'\n')
        .enumerate()
        .filter(|(_, line)| !line.iter().all(u8::is_ascii_whitespace))
        .map(|(i, line)| serde_json::from_slice(line).map_err(|source| CanonicalError::Decode { line: i + 1, source }))
        .collect()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// SHA-256 of a value's canonical bytes.
pub fn digest<T: Serialize + ?Sized>(value: &T) -> Result<String, CanonicalError> {
    Ok(sha256_hex(&canonical_bytes(value)?))
}
