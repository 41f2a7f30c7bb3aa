//! File formats: event logs, report tables and run configs.

mod config_file;
mod events;
mod report;

use thiserror::Error;

use crate::config::InvalidConfig;

pub use config_file::{read_config, read_config_over, write_config, HarnessSettings, RunConfig};
pub use events::{read_events, validate_schema, write_events, EVENT_HEADER, NA};
pub use report::{read_report, rows_from_sweep, write_report, ReportRow, REPORT_HEADER};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("write failed: {0}")]
    SinkFailure(#[source] std::io::Error),
    #[error("read failed: {0}")]
    SourceFailure(#[source] std::io::Error),
    #[error("line {line}: {message}")]
    ParseError { line: u64, message: String },
    #[error("line {line}: schema violation: {message}")]
    SchemaViolation { line: u64, message: String },
    #[error("missing column(s): {}", .0.join(", "))]
    MissingColumns(Vec<String>),
    #[error(transparent)]
    InvalidConfig(#[from] InvalidConfig),
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
}

impl DataError {
    pub(crate) fn parse(line: u64, message: impl Into<String>) -> Self {
        DataError::ParseError { line, message: message.into() }
    }

    pub(crate) fn schema(line: u64, message: impl Into<String>) -> Self {
        DataError::SchemaViolation { line, message: message.into() }
    }
}

/// Serde adapter for 64-bit seeds in formats with signed integers only:
/// values above `i64::MAX` are written as decimal strings.
pub mod seed_serde {
    use serde::de::{self, Visitor};
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(seed: &u64, s: S) -> Result<S::Ok, S::Error> {
        match i64::try_from(*seed) {
            Ok(v) => s.serialize_i64(v),
            Err(_) => s.serialize_str(&seed.to_string()),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        struct SeedVisitor;

        impl Visitor<'_> for SeedVisitor {
            type Value = u64;

            fn expecting(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str("a non-negative integer or a decimal string")
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<u64, E> {
                u64::try_from(v).map_err(|_| E::custom(format!("seed must be non-negative, got {v}")))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<u64, E> {
                Ok(v)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<u64, E> {
                v.parse().map_err(|_| E::custom(format!("invalid seed `{v}`")))
            }
        }

        d.deserialize_any(SeedVisitor)
    }
}
