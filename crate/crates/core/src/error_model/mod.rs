//! Distribution models for signed relative prediction errors.
//!
//! Offline, prediction errors collected from trace replays are split by sign
//! and fitted with parametric families ([`fit_distribution`]), validated via
//! the Kolmogorov-Smirnov distance ([`ks_distance`]). Online, a per-session
//! [`ErrorModelState`] keeps a sliding window of recent errors per prediction
//! horizon and exposes the composed error CDF that adaptation uses to turn a
//! throughput prediction into a deadline-meet probability.

mod dist;
mod fit;
mod state;

pub use dist::{truncate, ErrorDistribution, Family, FamilyParams};
pub use fit::{ecdf, fit_distribution, ks_distance, Ecdf};
pub use state::{
    conditional_sign_probabilities, ComposedErrorCdf, ErrorModelState, PuMode, Sign,
    SignProbabilities, OVER_FIT_RANGE, UNDER_FIT_RANGE,
};

use core::fmt;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErrorModelError {
    EmptyInput,
    TooFewSamples { needed: usize, got: usize },
    DegenerateTruncation,
    InvalidParams { reason: &'static str },
    FitDiverged,
    HorizonMismatch { expected: u64, got: u64 },
}

impl fmt::Display for ErrorModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ErrorModelError::EmptyInput => write!(f, "empty sample set"),
            ErrorModelError::TooFewSamples { needed, got } => {
                write!(f, "need at least {needed} samples, got {got}")
            }
            ErrorModelError::DegenerateTruncation => {
                write!(f, "truncation interval carries no probability mass")
            }
            ErrorModelError::InvalidParams { reason } => {
                write!(f, "invalid distribution parameters: {reason}")
            }
            ErrorModelError::FitDiverged => write!(f, "distribution fit diverged"),
            ErrorModelError::HorizonMismatch { expected, got } => {
                write!(f, "record for horizon {got} s fed to a model for {expected} s")
            }
        }
    }
}

impl core::error::Error for ErrorModelError {}
