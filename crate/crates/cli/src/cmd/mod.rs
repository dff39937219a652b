//! Subcommand implementations.

pub mod fit_errors;
pub mod gen_traces;
pub mod predict_eval;
pub mod simulate;
pub mod stats;

use std::path::Path;

use crate::config::write_output;
use crate::fail::{internal, Failure};

/// Writes a CSV with the shortest-roundtrip number formatting used across
/// all outputs, so identical inputs yield identical bytes.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| internal(format!("cannot assemble '{}': {e}", path.display()));
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(row).map_err(fail)?;
    }
    let bytes =
        w.into_inner().map_err(|e| internal(format!("cannot flush '{}': {e}", path.display())))?;
    write_output(path, bytes)
}

/// Shortest decimal representation that parses back to the same double.
pub fn cell(v: f64) -> String {
    format!("{v}")
}

pub fn opt_cell(v: Option<f64>) -> String {
    v.map(cell).unwrap_or_default()
}
