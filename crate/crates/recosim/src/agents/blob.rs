//! Trained-agent persistence.
//!
//! A blob is one header line followed by a JSON payload:
//!
//! ```text
//! RECOSIM-AGENT <version> <agent name>\n
//! {"kind": "...", ...}
//! ```

use std::io::{BufRead, Write};

use thiserror::Error;

use super::{Agent, AnyAgent};

pub const BLOB_MAGIC: &str = "RECOSIM-AGENT";
pub const BLOB_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum BlobError {
    #[error("agent blob i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("not an agent blob: bad header `{0}`")]
    BadHeader(String),
    #[error("unsupported agent blob version {0} (expected {BLOB_VERSION})")]
    UnsupportedVersion(u32),
    #[error("agent blob payload: {0}")]
    Payload(#[from] serde_json::Error),
}

/// Writes `agent` and returns the number of bytes written.
pub fn save_agent<W: Write>(agent: &AnyAgent, mut sink: W) -> Result<usize, BlobError> {
    let header = format!("{BLOB_MAGIC} {BLOB_VERSION} {}\n", agent.name());
    let payload = serde_json::to_vec(agent)?;
    sink.write_all(header.as_bytes())?;
    sink.write_all(&payload)?;
    sink.write_all(b"\n")?;
    sink.flush()?;
    Ok(header.len() + payload.len() + 1)
}

pub fn load_agent<R: BufRead>(mut source: R) -> Result<AnyAgent, BlobError> {
    let mut header = String::new();
    source.read_line(&mut header)?;
    let header = header.trim_end_matches('\n');
    let mut parts = header.split(' ');
    if parts.next() != Some(BLOB_MAGIC) {
        return Err(BlobError::BadHeader(header.to_string()));
    }
    let version: u32 = parts
        .next()
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| BlobError::BadHeader(header.to_string()))?;
    if version != BLOB_VERSION {
        return Err(BlobError::UnsupportedVersion(version));
    }
    Ok(serde_json::from_reader(source)?)
}
