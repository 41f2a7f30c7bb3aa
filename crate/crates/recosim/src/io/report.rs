//! Report CSV: one row per (grid value, agent, repetition).
//!
//! Floats are written in scientific notation with 17 significant digits, so
//! reading a report back reproduces every value bit for bit.

use std::io::{Read, Write};

use super::events::NA;
use super::DataError;
use crate::eval::{CtrReport, SweepTable};

pub const REPORT_HEADER: [&str; 9] =
    ["axis_value", "agent", "displays", "clicks", "ctr", "ci_low", "ci_high", "regret", "rep"];

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    /// Grid value; `None` for a standalone evaluation.
    pub axis_value: Option<f64>,
    pub agent: String,
    pub report: CtrReport,
    pub rep: Option<u32>,
}

impl ReportRow {
    pub fn single(agent: impl Into<String>, report: CtrReport) -> Self {
        Self { axis_value: None, agent: agent.into(), report, rep: None }
    }
}

pub fn rows_from_sweep(table: &SweepTable) -> Vec<ReportRow> {
    table
        .rows
        .iter()
        .map(|r| ReportRow { axis_value: Some(r.value), agent: r.agent.clone(), report: r.report.clone(), rep: Some(r.rep) })
        .collect()
}

fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn optional<T>(value: Option<T>, render: impl Fn(T) -> String) -> String {
    value.map_or_else(|| NA.to_string(), render)
}

/// Writes `rows` as CSV and returns the byte count.
pub fn write_report<W: Write>(rows: &[ReportRow], mut sink: W) -> Result<usize, DataError> {
    let mut out = REPORT_HEADER.join(",");
    out.push('\n');
    for row in rows {
        assert!(
            !row.agent.is_empty() && !row.agent.contains([',', '"', '\n', '\r']),
            "agent label `{}` is not CSV-safe",
            row.agent
        );
        let r = &row.report;
        let fields = [
            optional(row.axis_value, float),
            row.agent.clone(),
            r.displays.to_string(),
            r.clicks.to_string(),
            float(r.ctr),
            float(r.ci_low),
            float(r.ci_high),
            optional(r.mean_regret, float),
            optional(row.rep, |v| v.to_string()),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    sink.write_all(out.as_bytes()).map_err(DataError::SinkFailure)?;
    sink.flush().map_err(DataError::SinkFailure)?;
    Ok(out.len())
}

pub fn read_report<R: Read>(source: R) -> Result<Vec<ReportRow>, DataError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(source);
    let header = reader.headers().map_err(|e| DataError::parse(1, e.to_string()))?.clone();
    if !header.iter().eq(REPORT_HEADER) {
        let missing: Vec<String> =
            REPORT_HEADER.iter().filter(|c| !header.iter().any(|h| h == **c)).map(|c| c.to_string()).collect();
        if !missing.is_empty() {
            return Err(DataError::MissingColumns(missing));
        }
        return Err(DataError::parse(1, format!("expected header `{}`", REPORT_HEADER.join(","))));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| DataError::parse(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let num = |i: usize| -> Result<f64, DataError> {
            record[i].parse::<f64>().map_err(|_| DataError::parse(line, format!("{}: bad number `{}`", REPORT_HEADER[i], &record[i])))
        };
        let opt_num = |i: usize| -> Result<Option<f64>, DataError> {
            if &record[i] == NA {
                Ok(None)
            } else {
                num(i).map(Some)
            }
        };
        let count = |i: usize| -> Result<u64, DataError> {
            record[i].parse::<u64>().map_err(|_| DataError::parse(line, format!("{}: bad count `{}`", REPORT_HEADER[i], &record[i])))
        };
        let report = CtrReport {
            displays: count(2)?,
            clicks: count(3)?,
            ctr: num(4)?,
            ci_low: num(5)?,
            ci_high: num(6)?,
            mean_regret: opt_num(7)?,
        };
        if report.clicks > report.displays {
            return Err(DataError::schema(line, "clicks exceed displays"));
        }
        let rep = match &record[8] {
            NA => None,
            v => Some(v.parse::<u32>().map_err(|_| DataError::parse(line, format!("rep: bad value `{v}`")))?),
        };
        rows.push(ReportRow { axis_value: opt_num(0)?, agent: record[1].to_string(), report, rep });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{wilson_interval, Z_95};

    fn report(clicks: u64, displays: u64, regret: Option<f64>) -> CtrReport {
        let (ci_low, ci_high) = wilson_interval(clicks, displays, Z_95).unwrap();
        CtrReport { displays, clicks, ctr: clicks as f64 / displays as f64, ci_low, ci_high, mean_regret: regret }
    }

    #[test]
    fn single_report_is_two_lines() {
        let mut out = Vec::new();
        write_report(&[ReportRow::single("random", report(5, 100, None))], &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().nth(1).unwrap().starts_with("NA,random,100,5,5.0000000000000003e-2,"));
        assert!(text.ends_with(",NA,NA\n"));
    }

    #[test]
    fn missing_columns_are_named() {
        let text = "axis_value,agent,displays,clicks,ctr,regret,rep\n";
        match read_report(text.as_bytes()) {
            Err(DataError::MissingColumns(cols)) => assert_eq!(cols, vec!["ci_low", "ci_high"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn floats_round_trip_exactly() {
        let rows = vec![ReportRow {
            axis_value: Some(0.1 + 0.2),
            agent: "combined".into(),
            report: report(7, 3001, Some(1.0 / 3.0)),
            rep: Some(4),
        }];
        let mut out = Vec::new();
        write_report(&rows, &mut out).unwrap();
        assert_eq!(read_report(out.as_slice()).unwrap(), rows);
    }
}
