//! Core models for low-delay adaptive streaming over HTTP.
//!
//! The crate is organised around the pipeline a streaming client runs through:
//!
//! * [`trace`] — measured throughput traces, windowed series and their
//!   summary statistics, plus a deterministic synthetic trace generator.
//! * [`predictor`] — short-term throughput predictors (sliding-window means,
//!   exponential smoothing, linear extrapolation, trend smoothing) and the
//!   relative-error metric used to score them.
//! * [`error_model`] — empirical modelling of prediction errors: parametric
//!   families fitted to under/overestimation errors and the composed CDF a
//!   client uses to turn a prediction into a deadline-meet probability.
//! * [`adaptation`] — the representation ladder, utility model and the
//!   trajectory search that picks the next representation, together with the
//!   live-edge tune-in and deadline-miss rules.
//! * [`sim`] — a deterministic fluid-model download/playback simulator and
//!   the experiment driver that aggregates per-trace metrics.
//!
//! Everything here is `no_std + alloc`; file formats and the command-line
//! front end live in the companion `hals-cli` crate.

#![no_std]
#![deny(unsafe_code)]
// Validation checks are written `!(x > 0.0)` on purpose: unlike `x <= 0.0`
// the negated form also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub(crate) mod math;

pub mod adaptation;
pub mod error_model;
pub mod predictor;
pub mod sim;
pub mod trace;

pub use adaptation::{AdaptationConfig, Representation, StreamManifest};
pub use predictor::PredictorSpec;
pub use sim::{run_experiment, run_session, SessionMetrics};
pub use trace::ThroughputTrace;
