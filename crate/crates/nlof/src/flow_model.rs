//! Flow-record domain types and ingestion.
//!
//! A flow record summarizes one observed traffic flow: endpoints, byte
//! count, duration, and the derived average throughput in bits/second.
//! Records are read from CSV (header `flow_id,src,dst,bytes,duration
//! [,throughput]`) or JSON-lines with the same field names.

use std::collections::HashSet;
use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One observed flow. `throughput` is in bits/second, derived from
/// `bytes` and `duration` when not supplied by the input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowRecord {
    pub flow_id: String,
    pub src: String,
    pub dst: String,
    pub bytes: u64,
    pub duration: f64,
    pub throughput: f64,
}

#[derive(Debug, Error)]
pub enum FlowParseError {
    #[error("malformed row at line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("non-positive duration at line {line}")]
    NonPositiveDuration { line: usize },
    #[error("duplicate flow_id `{flow_id}` at line {line}")]
    DuplicateId { flow_id: String, line: usize },
    #[error("input is not valid UTF-8")]
    Encoding,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Input/output format for flow records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowFormat {
    Csv,
    JsonLines,
}

/// Average throughput in bits/second.
pub fn compute_throughput(bytes: u64, duration: f64) -> Result<f64, FlowParseError> {
    if duration <= 0.0 || !duration.is_finite() {
        return Err(FlowParseError::NonPositiveDuration { line: 0 });
    }
    Ok(bytes as f64 * 8.0 / duration)
}

// Raw row as it appears in the input; throughput optional.
#[derive(Debug, Deserialize, Serialize)]
struct RawRecord {
    flow_id: String,
    src: String,
    dst: String,
    bytes: u64,
    duration: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    throughput: Option<f64>,
}

fn finish_record(raw: RawRecord, line: usize) -> Result<FlowRecord, FlowParseError> {
    let throughput = match raw.throughput {
        Some(tp) => {
            if tp < 0.0 || !tp.is_finite() {
                return Err(FlowParseError::Malformed {
                    line,
                    reason: format!("negative or non-finite throughput {}", tp),
                });
            }
            tp
        }
        None => {
            if raw.duration <= 0.0 || !raw.duration.is_finite() {
                return Err(FlowParseError::NonPositiveDuration { line });
            }
            raw.bytes as f64 * 8.0 / raw.duration
        }
    };
    Ok(FlowRecord {
        flow_id: raw.flow_id,
        src: raw.src,
        dst: raw.dst,
        bytes: raw.bytes,
        duration: raw.duration,
        throughput,
    })
}

/// Parses flow records from `source`, preserving input order.
/// Throughput is derived as `bytes * 8 / duration` when absent.
pub fn parse_flow_records<R: Read>(
    source: R,
    format: FlowFormat,
) -> Result<Vec<FlowRecord>, FlowParseError> {
    let records = match format {
        FlowFormat::Csv => parse_csv(source)?,
        FlowFormat::JsonLines => parse_json_lines(source)?,
    };
    let mut seen = HashSet::new();
    for (i, rec) in records.iter().enumerate() {
        if !seen.insert(rec.flow_id.clone()) {
            return Err(FlowParseError::DuplicateId {
                flow_id: rec.flow_id.clone(),
                // line 1 is the CSV header; data starts at line 2
                line: match format {
                    FlowFormat::Csv => i + 2,
                    FlowFormat::JsonLines => i + 1,
                },
            });
        }
    }
    Ok(records)
}

fn parse_csv<R: Read>(source: R) -> Result<Vec<FlowRecord>, FlowParseError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(source);
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<RawRecord>().enumerate() {
        let line = i + 2;
        let raw = row.map_err(|e| map_csv_error(e, line))?;
        out.push(finish_record(raw, line)?);
    }
    Ok(out)
}

fn map_csv_error(e: csv::Error, line: usize) -> FlowParseError {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => FlowParseError::Io(io),
            _ => unreachable!(),
        }
    } else if matches!(e.kind(), csv::ErrorKind::Utf8 { .. }) {
        FlowParseError::Encoding
    } else {
        FlowParseError::Malformed {
            line,
            reason: e.to_string(),
        }
    }
}

fn parse_json_lines<R: Read>(source: R) -> Result<Vec<FlowRecord>, FlowParseError> {
    let reader = BufReader::new(source);
    let mut out = Vec::new();
    for (i, line_res) in reader.lines().enumerate() {
        let line_no = i + 1;
        let text = line_res.map_err(|e| {
            if e.kind() == std::io::ErrorKind::InvalidData {
                FlowParseError::Encoding
            } else {
                FlowParseError::Io(e)
            }
        })?;
        if text.trim().is_empty() {
            continue;
        }
        let raw: RawRecord =
            serde_json::from_str(&text).map_err(|e| FlowParseError::Malformed {
                line: line_no,
                reason: e.to_string(),
            })?;
        out.push(finish_record(raw, line_no)?);
    }
    Ok(out)
}

/// Writes records back out in the given format, throughput included.
pub fn write_flow_records<W: Write>(
    mut sink: W,
    records: &[FlowRecord],
    format: FlowFormat,
) -> Result<(), FlowParseError> {
    match format {
        FlowFormat::Csv => {
            let mut writer = csv::Writer::from_writer(sink);
            for rec in records {
                writer.serialize(rec).map_err(|e| map_csv_error(e, 0))?;
            }
            writer.flush()?;
        }
        FlowFormat::JsonLines => {
            for rec in records {
                let json = serde_json::to_string(rec).expect("flow record serializes");
                writeln!(sink, "{}", json)?;
            }
        }
    }
    Ok(())
}
