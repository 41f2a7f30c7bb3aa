//! Event log CSV.
//!
//! ```text
//! u,t,z,v,a,c
//! 10,0,organic,104,NA,NA
//! 10,3,bandit,NA,42,0
//! ```
//!
//! Rows are ordered by user then time; each user's `t` runs 0, 1, 2, …
//! Undefined fields are the literal `NA`. Lines end in LF.

use std::io::{Read, Write};

use super::DataError;
use crate::event::{Event, EventKind, EventLog};

pub const EVENT_HEADER: [&str; 6] = ["u", "t", "z", "v", "a", "c"];
pub const NA: &str = "NA";

/// Writes `log` as CSV and returns the byte count.
pub fn write_events<W: Write>(log: &EventLog, mut sink: W) -> Result<usize, DataError> {
    let mut out = String::with_capacity(24 * (log.len() + 1));
    out.push_str(&EVENT_HEADER.join(","));
    out.push('\n');
    for e in log {
        let line = match e.kind {
            EventKind::Organic { product } => format!("{},{},organic,{product},NA,NA\n", e.user, e.t),
            EventKind::Bandit { action, click } => {
                format!("{},{},bandit,NA,{action},{}\n", e.user, e.t, u8::from(click))
            }
        };
        out.push_str(&line);
    }
    sink.write_all(out.as_bytes()).map_err(DataError::SinkFailure)?;
    sink.flush().map_err(DataError::SinkFailure)?;
    Ok(out.len())
}

/// Parses and validates an event log.
pub fn read_events<R: Read>(source: R) -> Result<EventLog, DataError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(source);
    let mut records = reader.records();
    match records.next() {
        Some(Ok(header)) if header.iter().eq(EVENT_HEADER) => {}
        Some(Ok(header)) => {
            return Err(DataError::parse(1, format!("expected header `u,t,z,v,a,c`, found `{}`", header.iter().collect::<Vec<_>>().join(","))))
        }
        Some(Err(e)) => return Err(csv_error(e)),
        None => return Err(DataError::parse(1, "missing header")),
    }
    let mut events = Vec::new();
    for record in records {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != EVENT_HEADER.len() {
            return Err(DataError::parse(line, format!("expected 6 fields, found {}", record.len())));
        }
        let user = parse_index(&record[0], "u", line)?;
        let t = parse_index(&record[1], "t", line)?;
        let v = parse_optional(&record[3], "v", line)?;
        let a = parse_optional(&record[4], "a", line)?;
        let c = match &record[5] {
            NA => None,
            "0" => Some(false),
            "1" => Some(true),
            other => return Err(DataError::parse(line, format!("c must be 0, 1 or NA, found `{other}`"))),
        };
        let kind = match &record[2] {
            "organic" => match (v, a, c) {
                (Some(product), None, None) => EventKind::Organic { product: product as usize },
                _ => return Err(DataError::schema(line, "organic rows need v defined and a, c = NA")),
            },
            "bandit" => match (v, a, c) {
                (None, Some(action), Some(click)) => EventKind::Bandit { action: action as usize, click },
                _ => return Err(DataError::schema(line, "bandit rows need v = NA and a, c defined")),
            },
            other => return Err(DataError::parse(line, format!("z must be organic or bandit, found `{other}`"))),
        };
        events.push((line, Event { user, t, kind }));
    }
    validate_ordering(&events)?;
    Ok(events.into_iter().map(|(_, e)| e).collect())
}

/// Checks user ordering and consecutive time indices of an in-memory log.
/// Line numbers in errors count the header as line 1.
pub fn validate_schema(log: &EventLog) -> Result<(), DataError> {
    let numbered: Vec<(u64, Event)> = log.iter().enumerate().map(|(i, e)| (i as u64 + 2, *e)).collect();
    validate_ordering(&numbered)
}

fn validate_ordering(events: &[(u64, Event)]) -> Result<(), DataError> {
    let mut prev: Option<&Event> = None;
    for (line, e) in events {
        match prev {
            Some(p) if p.user == e.user => {
                if e.t != p.t + 1 {
                    return Err(DataError::schema(
                        *line,
                        format!("user {}: t jumps from {} to {}", e.user, p.t, e.t),
                    ));
                }
            }
            Some(p) if e.user < p.user => {
                return Err(DataError::schema(*line, format!("user {} appears after user {}", e.user, p.user)));
            }
            _ if e.t != 0 => {
                return Err(DataError::schema(*line, format!("user {} starts at t={} instead of 0", e.user, e.t)));
            }
            _ => {}
        }
        prev = Some(e);
    }
    Ok(())
}

fn parse_index(field: &str, name: &str, line: u64) -> Result<u64, DataError> {
    let canonical = !field.is_empty()
        && field.bytes().all(|b| b.is_ascii_digit())
        && (field == "0" || !field.starts_with('0'));
    if !canonical {
        return Err(DataError::parse(line, format!("{name} must be a non-negative integer, found `{field}`")));
    }
    field.parse().map_err(|_| DataError::parse(line, format!("{name} out of range: `{field}`")))
}

fn parse_optional(field: &str, name: &str, line: u64) -> Result<Option<u64>, DataError> {
    if field == NA {
        Ok(None)
    } else {
        parse_index(field, name, line).map(Some)
    }
}

fn csv_error(e: csv::Error) -> DataError {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => DataError::SourceFailure(io),
        kind => DataError::parse(line, format!("{kind:?}")),
    }
}
