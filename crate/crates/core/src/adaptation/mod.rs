//! Representation selection for segmented live streaming.
//!
//! The heart of the module is a utility-maximizing search over adaptation
//! trajectories ([`choose_representation`]): candidate representation
//! sequences for all segments whose deadlines fall inside the prediction
//! horizon are scored by a product of a rebuffering subutility and a
//! weighted mix of video-quality and quality-flatness subutilities. The
//! module also provides the live-edge tune-in rule, deadline-miss handling,
//! and the fixed-margin and future-knowledge baseline selectors.

mod manifest;
mod session;
mod utility;

pub use manifest::{
    default_ladder, generate_manifest, ManifestError, ManifestGenSpec, Representation,
    StreamManifest,
};
pub use session::{
    fixed_margin_rep, on_deadline_miss, oracle_rep, tune_in, ClientState, CompletedSegment, TuneIn,
};
pub use utility::{
    choose_representation, choose_representation_with, combine_meet_probabilities,
    reachable_horizon, rebuffer_probability, score_trajectory, score_trajectory_with, u_q, u_qf,
    u_rb, Decision, SegmentForecast, TrajectoryContext, TrajectoryScore,
};

use core::fmt;

use crate::error_model::PuMode;
use crate::predictor::PredictorSpec;

/// How per-segment deadline-meet probabilities combine into the rebuffering
/// probability of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum PrbMode {
    /// `1 - prod(phi)`: treats per-segment outcomes as independent and
    /// always yields a probability.
    #[default]
    Product,
    /// `clamp(1 - sum(phi), 0, 1)`: the literal aggregation from the
    /// original derivation, kept for fidelity experiments; without the
    /// clamp it is not a probability once trajectories span two segments.
    PaperSumClamped,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct AdaptationConfig {
    /// Weight of video quality against quality flatness.
    pub alpha_q: f64,
    /// Exponent of the rebuffering subutility; strongly negative values
    /// make any rebuffering risk dominate the decision.
    pub alpha_rb: f64,
    /// Error-model window length per second of prediction horizon.
    pub alpha_cdf: f64,
    /// Prediction horizon bound, seconds.
    pub t_max_s: u64,
    /// Throughput floor for predictions and error normalization.
    pub rho_min_bps: f64,
    /// Playback delay cap; must be at least twice the segment duration.
    pub delta_p_max_s: f64,
    pub prb_mode: PrbMode,
    pub pu_mode: PuMode,
    /// Throughput predictor driving the utility policy.
    pub predictor: PredictorSpec,
    /// Largest trajectory set searched exhaustively.
    pub enumeration_cap: u64,
    /// Beam width used beyond the enumeration cap.
    pub beam_width: usize,
}

impl Default for AdaptationConfig {
    fn default() -> Self {
        AdaptationConfig {
            alpha_q: 0.6,
            alpha_rb: -200.0,
            alpha_cdf: 60.0,
            t_max_s: 10,
            rho_min_bps: 1e4,
            delta_p_max_s: 5.0,
            prb_mode: PrbMode::default(),
            pu_mode: PuMode::default(),
            predictor: PredictorSpec::new(crate::predictor::PredictorKind::Ses, 5)
                .expect("valid default predictor"),
            enumeration_cap: 1_000_000,
            beam_width: 64,
        }
    }
}

impl AdaptationConfig {
    pub fn validate(&self, tau_s: f64) -> Result<(), AdaptError> {
        let bad = |reason| Err(AdaptError::InvalidConfig { reason });
        if !(0.0..=1.0).contains(&self.alpha_q) {
            return bad("alpha_q must lie in [0, 1]");
        }
        if !(self.alpha_rb < 0.0) {
            return bad("alpha_rb must be negative");
        }
        if !(self.alpha_cdf > 0.0) {
            return bad("alpha_cdf must be positive");
        }
        if self.t_max_s == 0 {
            return bad("t_max_s must be positive");
        }
        if !(self.rho_min_bps > 0.0) {
            return bad("rho_min_bps must be positive");
        }
        if !(self.delta_p_max_s >= 2.0 * tau_s) {
            return bad("delta_p_max_s must be at least two segment durations");
        }
        if self.beam_width == 0 {
            return bad("beam_width must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AdaptError {
    /// All representations share one PSNR; the quality mapping is undefined.
    DegeneratePsnrRange,
    /// Tune-in requested before the first segment was published.
    NoSegmentAvailable { t: f64 },
    /// No prediction covers the requested horizon.
    MissingPrediction { horizon_s: u64 },
    InvalidConfig { reason: &'static str },
}

impl fmt::Display for AdaptError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdaptError::DegeneratePsnrRange => {
                write!(f, "quality mapping needs strictly increasing PSNR across representations")
            }
            AdaptError::NoSegmentAvailable { t } => {
                write!(f, "no segment published yet at t = {t} s")
            }
            AdaptError::MissingPrediction { horizon_s } => {
                write!(f, "no prediction available for horizon {horizon_s} s")
            }
            AdaptError::InvalidConfig { reason } => write!(f, "invalid configuration: {reason}"),
        }
    }
}

impl core::error::Error for AdaptError {}
