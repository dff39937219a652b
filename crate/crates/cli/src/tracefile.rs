//! Trace CSV reading and writing.
//!
//! The on-disk format is one line per second, `t,bytes`, with `t` counting
//! consecutive integer seconds and `bytes` the bytes that arrived during
//! `[t, t+1)`. A header line is optional on input and always written on
//! output. UTF-8 with LF or CRLF line endings. The trace id is the file
//! stem.

use std::fs;
use std::path::Path;

use hals_core::ThroughputTrace;

use crate::fail::{data, internal, Failure};

pub fn load(path: &Path) -> Result<ThroughputTrace, Failure> {
    let name = path.display();
    let raw = fs::read(path).map_err(|e| data(format!("cannot read trace '{name}': {e}")))?;
    let text = String::from_utf8(raw)
        .map_err(|e| data(format!("trace '{name}' is not valid UTF-8: {e}")))?;

    let mut bytes: Vec<u64> = Vec::new();
    let mut next_t: Option<u64> = None;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let bad = |what: String| data(format!("trace '{name}' line {lineno}: {what}"));
        if line.trim().is_empty() {
            return Err(bad("empty line".into()));
        }
        let mut fields = line.split(',');
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(bad(format!("expected 't,bytes', got '{line}'")));
        };
        let t: u64 = match a.trim().parse() {
            Ok(t) => t,
            // A non-numeric first line is the optional header.
            Err(_) if lineno == 1 => continue,
            Err(_) => return Err(bad(format!("'t' is not an unsigned integer: '{a}'"))),
        };
        let value: u64 = b
            .trim()
            .parse()
            .map_err(|_| bad(format!("'bytes' is not an unsigned integer: '{b}'")))?;
        if let Some(expected) = next_t {
            if t != expected {
                return Err(bad(format!(
                    "'t' must advance by one second, expected {expected}, got {t}"
                )));
            }
        }
        next_t = Some(t + 1);
        bytes.push(value);
    }

    let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    ThroughputTrace::new(id, bytes).map_err(|e| data(format!("trace '{name}': {e}")))
}

pub fn save(trace: &ThroughputTrace, path: &Path) -> Result<(), Failure> {
    let mut out = String::from("t,bytes\n");
    for (t, b) in trace.bytes().iter().enumerate() {
        out.push_str(&format!("{t},{b}\n"));
    }
    fs::write(path, out)
        .map_err(|e| internal(format!("cannot write trace '{}': {e}", path.display())))
}
