use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{itr, mutual_information, AnnotationRecord, LogBase};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedRow {
    pub line: usize,
    pub reason: String,
}

/// Accepted records of one annotation file with its MI and ITR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationSummary {
    pub records: Vec<AnnotationRecord>,
    pub rejected: Vec<RejectedRow>,
    pub base: LogBase,
    pub mutual_information: f64,
    pub mean_time_seconds: f64,
    pub itr: f64,
}

fn parse_row(row: &csv::StringRecord, cols: [usize; 3]) -> std::result::Result<AnnotationRecord, String> {
    let field = |i: usize, name: &str| row.get(cols[i]).map(str::trim).ok_or(format!("missing {name}"));
    let label = |i: usize, name: &str| -> std::result::Result<usize, String> {
        let raw = field(i, name)?;
        raw.parse::<usize>()
            .map_err(|_| format!("{name} {raw:?} is not a non-negative integer label"))
    };
    let y = label(0, "y")?;
    let y_h = label(1, "y_h")?;
    let raw = field(2, "time_seconds")?;
    let t: f64 = raw.parse().map_err(|_| format!("time_seconds {raw:?} is not a number"))?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(format!("time_seconds {raw} must be finite and positive"));
    }
    Ok(AnnotationRecord {
        label: y,
        annotated: y_h,
        time_seconds: t,
    })
}

/// Reads a `y,y_h,time_seconds` CSV. Malformed rows are skipped and listed
/// with their line numbers; a file with no valid row is an error.
pub fn ingest_annotations(path: &Path, base: LogBase) -> Result<AnnotationSummary> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(file);
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h.trim() == name).ok_or_else(|| Error::Schema {
            line: 1,
            message: format!("missing column {name:?}; expected y,y_h,time_seconds"),
        })
    };
    let cols = [col("y")?, col("y_h")?, col("time_seconds")?];

    let mut records = Vec::new();
    let mut rejected = Vec::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        match parse_row(&row, cols) {
            Ok(r) => records.push(r),
            Err(reason) => rejected.push(RejectedRow { line, reason }),
        }
    }
    if records.is_empty() {
        let detail = rejected
            .first()
            .map(|r| format!("; line {}: {}", r.line, r.reason))
            .unwrap_or_default();
        return Err(Error::InvalidInput(format!(
            "{} has no valid annotation rows ({} rejected){detail}",
            path.display(),
            rejected.len()
        )));
    }
    let mi = mutual_information(&records, base)?;
    let rate = itr(&records, base)?;
    let mean_time = records.iter().map(|r| r.time_seconds).sum::<f64>() / records.len() as f64;
    Ok(AnnotationSummary {
        records,
        rejected,
        base,
        mutual_information: mi,
        mean_time_seconds: mean_time,
        itr: rate,
    })
}
