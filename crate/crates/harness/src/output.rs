//! Time-series CSV and JSON summary writers.

use std::path::Path;

use billiard_core::diagnostics::DiagnosticsRecord;
use serde::Serialize;

use crate::error::HarnessError;

pub const CSV_HEADER: [&str; 10] =
    ["t", "segment_index", "event_flag", "Q", "norm_w", "norm_z", "norm_n", "lambda", "bound_prop5", "bound_theorem"];

/// Round-trip float formatting: 17 significant digits, scientific notation.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn csv_file_name(index: usize) -> String {
    format!("trajectory_{index:05}.csv")
}

/// One row per sample; `bound_theorem` is empty when no growth rate is set.
pub fn write_csv(path: &Path, records: &[DiagnosticsRecord<f64>]) -> Result<(), HarnessError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_path(path)?;
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            format_float(r.t),
            r.segment_index.to_string(),
            r.kind.event_flag().to_string(),
            format_float(r.q),
            format_float(r.norm_w),
            format_float(r.norm_z),
            format_float(r.norm_n),
            format_float(r.lambda),
            format_float(r.bound_prop5),
            r.bound_theorem.map(format_float).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, HarnessError> {
    serde_json::to_string_pretty(value).map(|mut s| {
        s.push('\n');
        s
    })
    .map_err(|e| HarnessError::Io(e.to_string()))
}
