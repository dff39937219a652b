//! Process-level failure classification. Every command funnels its errors
//! into one of three buckets, each with a fixed exit code, so scripts can
//! tell "you called it wrong" from "your files are bad" from "the tool is
//! broken".

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Failure {
    /// Exit 1: bad invocation (unknown flags, invalid flag values).
    Usage(String),
    /// Exit 2: unreadable or invalid input data (traces, configs, manifests,
    /// error CSVs).
    Data(String),
    /// Exit 3: internal errors — failed self-checks or output IO problems.
    Internal(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Internal(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Internal(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for Failure {}

/// Shorthand for data errors carrying a source description.
pub fn data(msg: impl Into<String>) -> Failure {
    Failure::Data(msg.into())
}

pub fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

pub fn internal(msg: impl Into<String>) -> Failure {
    Failure::Internal(msg.into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_match_contract() {
        assert_eq!(usage("x").code(), 1);
        assert_eq!(data("x").code(), 2);
        assert_eq!(internal("x").code(), 3);
    }
}
