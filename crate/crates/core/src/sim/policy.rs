//! Adaptation policies that plug into the session simulator.
//!
//! A [`Policy`] picks the representation of each requested segment. The
//! simulator drives it through two callbacks: [`Policy::on_second`] fires
//! once per elapsed integer second (where live predictors ingest
//! throughput), and [`Policy::decide`] fires at every request instant.
//! Four policies cover the corners of interest: always-lowest, a fixed
//! margin below a recent throughput mean, a utility-maximizing search over
//! predicted deadline-meet probabilities, and a future-knowledge reference
//! that reads the very trace it is about to experience.

use alloc::boxed::Box;
use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use libm::ceil;

use crate::adaptation::{
    choose_representation, fixed_margin_rep, oracle_rep, reachable_horizon, AdaptationConfig,
    ClientState, SegmentForecast, StreamManifest, TrajectoryContext, TrajectoryScore,
};
use crate::error_model::{ComposedErrorCdf, ErrorModelState};
use crate::predictor::{predict, signed_relative_error, PredictionRecord, PredictorSpec};
use crate::trace::ThroughputTrace;

/// Everything a policy may look at when choosing the representation of the
/// segment about to be requested.
#[derive(Debug)]
pub struct DecisionInput<'a> {
    pub trace: &'a ThroughputTrace,
    pub manifest: &'a StreamManifest,
    pub config: &'a AdaptationConfig,
    pub state: &'a ClientState,
    /// Segment being requested.
    pub segment: u64,
    /// Request instant.
    pub t_request: f64,
    /// Decision anchor `floor(t_request)`: predictions and error models are
    /// maintained on the integer-second grid.
    pub t_pi: f64,
}

/// A representation-selection strategy driven by the simulator.
///
/// Causal policies must only use data up to the decision instant;
/// [`OraclePolicy`] deliberately breaks that rule and says so in its name.
pub trait Policy {
    /// Stable identifier used in logs, result tables and CLI arguments.
    fn name(&self) -> String;

    /// Clears all session state; called once before every session.
    fn reset(&mut self, config: &AdaptationConfig) {
        let _ = config;
    }

    /// Called once for every elapsed integer second, in order, before any
    /// decision anchored at that second or later.
    fn on_second(&mut self, trace: &ThroughputTrace, second: u64) {
        let _ = (trace, second);
    }

    /// Representation index for the segment described by `input`.
    fn decide(&mut self, input: &DecisionInput<'_>) -> usize;

    /// Score breakdown of the most recent decision, when the policy
    /// computes one.
    fn last_score(&self) -> Option<TrajectoryScore> {
        None
    }

    /// True for the always-lowest policy, whose skips define the
    /// unplayable-segment baseline of a trace.
    fn is_lowest_baseline(&self) -> bool {
        false
    }
}

/// Always requests the lowest representation. Its skipped segments are the
/// ones no rate decision could have saved, which makes it the baseline for
/// the adjusted skip metric.
#[derive(Debug, Clone, Copy, Default)]
pub struct LowestPolicy;

impl Policy for LowestPolicy {
    fn name(&self) -> String {
        String::from("lowest")
    }

    fn decide(&mut self, _input: &DecisionInput<'_>) -> usize {
        0
    }

    fn is_lowest_baseline(&self) -> bool {
        true
    }
}

/// Picks the highest representation whose declared rate stays below a fixed
/// fraction of the throughput averaged over the last segment duration.
#[derive(Debug, Clone, Copy)]
pub struct FixedMarginPolicy {
    margin: f64,
}

impl FixedMarginPolicy {
    pub fn new(margin: f64) -> Self {
        FixedMarginPolicy { margin }
    }
}

impl Policy for FixedMarginPolicy {
    fn name(&self) -> String {
        format!("margin-{}", self.margin)
    }

    fn decide(&mut self, input: &DecisionInput<'_>) -> usize {
        let window = libm::round(input.manifest.tau_s()).max(1.0) as u64;
        let end = (input.t_pi as u64).min(input.trace.duration_s());
        let start = end.saturating_sub(window);
        if start == end {
            return 0;
        }
        let rho = input.trace.mean_bps(start, end);
        fixed_margin_rep(input.manifest, self.margin, rho)
    }
}

/// Upper reference that reads the future of the trace: the highest
/// representation whose download chain stays deadline-safe until the client
/// is back at the live edge.
#[derive(Debug, Clone, Copy)]
pub struct OraclePolicy {
    min_lookahead_s: f64,
}

impl OraclePolicy {
    pub fn new() -> Self {
        OraclePolicy { min_lookahead_s: 10.0 }
    }
}

impl Default for OraclePolicy {
    fn default() -> Self {
        OraclePolicy::new()
    }
}

impl Policy for OraclePolicy {
    fn name(&self) -> String {
        String::from("oracle")
    }

    fn reset(&mut self, config: &AdaptationConfig) {
        self.min_lookahead_s = config.t_max_s as f64;
    }

    fn decide(&mut self, input: &DecisionInput<'_>) -> usize {
        oracle_rep(
            input.manifest,
            input.trace,
            input.segment,
            input.t_request,
            input.state.delta_p_s,
            self.min_lookahead_s,
        )
    }
}

/// Fitted error models are pulled from their states at most this often (per
/// horizon). Between pulls decisions reuse the cached fit, which trails the
/// sliding window by at most this many seconds.
const REFIT_INTERVAL_S: u64 = 10;

/// Live per-horizon forecasting pipeline: one throughput predictor and one
/// error-model state per horizon `1..=t_max_s`.
///
/// Every elapsed second it issues a forecast for each horizon from the last
/// `n_past` non-overlapping horizon-length block means, and resolves the
/// forecasts whose target interval has fully elapsed into signed relative
/// errors feeding the per-horizon error model.
#[derive(Debug, Clone)]
pub(crate) struct Forecaster {
    spec: PredictorSpec,
    rho_min_bps: f64,
    t_max_s: u64,
    /// Most recent forecast per horizon (index `T - 1`).
    latest: Vec<Option<f64>>,
    /// Issued forecasts awaiting resolution: `(t_issued, rho_hat, fallback)`.
    pending: Vec<VecDeque<(u64, f64, bool)>>,
    states: Vec<ErrorModelState>,
    /// Cached fitted snapshot and the second it was pulled.
    cached: Vec<(Option<u64>, ComposedErrorCdf)>,
}

impl Forecaster {
    pub(crate) fn new(config: &AdaptationConfig) -> Self {
        let horizons = config.t_max_s as usize;
        let mut states = Vec::with_capacity(horizons);
        let mut cached = Vec::with_capacity(horizons);
        for t in 1..=config.t_max_s {
            let mut state = ErrorModelState::new(t, config.alpha_cdf * t as f64);
            state.set_pu_mode(config.pu_mode);
            states.push(state);
            cached.push((None, ComposedErrorCdf::conservative_fallback()));
        }
        Forecaster {
            spec: config.predictor,
            rho_min_bps: config.rho_min_bps,
            t_max_s: config.t_max_s,
            latest: vec![None; horizons],
            pending: vec![VecDeque::new(); horizons],
            states,
            cached,
        }
    }

    /// Advances through the elapsed integer second `second`.
    pub(crate) fn observe(&mut self, trace: &ThroughputTrace, second: u64) {
        let mut past = Vec::with_capacity(self.spec.n_past);
        for horizon in 1..=self.t_max_s {
            let idx = (horizon - 1) as usize;

            // Resolve forecasts whose target interval has elapsed.
            while let Some(&(t_issued, rho_hat, fallback)) = self.pending[idx].front() {
                if t_issued + horizon > second {
                    break;
                }
                self.pending[idx].pop_front();
                let actual = trace.mean_bps(t_issued, t_issued + horizon);
                let record = PredictionRecord {
                    t_issued_s: t_issued,
                    horizon_s: horizon,
                    rho_hat_bps: rho_hat,
                    rho_actual_bps: actual,
                    signed_error: signed_relative_error(rho_hat, actual, self.rho_min_bps),
                    used_fallback: fallback,
                };
                self.states[idx]
                    .update(&record, second)
                    .expect("record horizon matches its state");
            }

            // Issue a fresh forecast once enough block means exist.
            let n_past = self.spec.n_past as u64;
            if second >= n_past * horizon {
                past.clear();
                for k in (1..=n_past).rev() {
                    past.push(trace.mean_bps(second - k * horizon, second - (k - 1) * horizon));
                }
                let p = predict(&self.spec, &past).expect("history length matches the spec");
                self.latest[idx] = Some(p.value_bps);
                self.pending[idx].push_back((second, p.value_bps, p.used_fallback));
            }
        }
    }

    /// Most recent forecast for `horizon_s`, if one has been issued.
    pub(crate) fn prediction(&self, horizon_s: u64) -> Option<f64> {
        self.latest[(horizon_s - 1) as usize]
    }

    /// Like [`Forecaster::prediction`], but when the exact horizon has not
    /// warmed up yet it falls back to the nearest horizon that has,
    /// preferring shorter ones (they warm up first and stay closest in
    /// meaning). `None` only while no horizon has issued anything.
    pub(crate) fn prediction_or_nearest(&self, horizon_s: u64) -> Option<f64> {
        self.prediction(horizon_s)
            .or_else(|| (1..horizon_s).rev().find_map(|h| self.prediction(h)))
            .or_else(|| (horizon_s + 1..=self.t_max_s).find_map(|h| self.prediction(h)))
    }

    /// Fitted error model for `horizon_s`, refreshed at most every
    /// [`REFIT_INTERVAL_S`] seconds.
    pub(crate) fn model(&mut self, horizon_s: u64, now_s: u64) -> &ComposedErrorCdf {
        let idx = (horizon_s - 1) as usize;
        let due = match self.cached[idx].0 {
            None => true,
            Some(last) => now_s >= last + REFIT_INTERVAL_S,
        };
        if due {
            let snapshot = self.states[idx].snapshot().clone();
            self.cached[idx] = (Some(now_s), snapshot);
        }
        &self.cached[idx].1
    }
}

/// Utility-maximizing policy: scores every representation trajectory over
/// the segments whose deadlines are predictable and requests the first step
/// of the best one.
#[derive(Debug, Clone, Default)]
pub struct UtilityPolicy {
    forecaster: Option<Forecaster>,
    last: Option<TrajectoryScore>,
}

impl UtilityPolicy {
    pub fn new() -> Self {
        UtilityPolicy::default()
    }
}

impl Policy for UtilityPolicy {
    fn name(&self) -> String {
        String::from("utility")
    }

    fn reset(&mut self, config: &AdaptationConfig) {
        self.forecaster = Some(Forecaster::new(config));
        self.last = None;
    }

    fn on_second(&mut self, trace: &ThroughputTrace, second: u64) {
        if let Some(f) = self.forecaster.as_mut() {
            f.observe(trace, second);
        }
    }

    fn decide(&mut self, input: &DecisionInput<'_>) -> usize {
        self.last = None;
        let forecaster = self.forecaster.as_mut().expect("reset runs before decisions");
        let manifest = input.manifest;
        let config = input.config;
        let quality = match manifest.quality_scores() {
            Ok(q) => q,
            // A single-representation ladder leaves nothing to choose.
            Err(_) => return 0,
        };
        let tau = manifest.tau_s();
        let first = input.segment;
        let last = reachable_horizon(first, input.t_pi, tau, input.state.delta_p_s, config.t_max_s)
            .min(manifest.n_segments() as u64 - 1);
        let now = input.t_pi as u64;

        let mut forecasts = Vec::with_capacity((last - first + 1) as usize);
        for segment in first..=last {
            let deadline = segment as f64 * tau + input.state.delta_p_s;
            let horizon =
                (ceil(deadline - input.t_pi - 1e-9).max(1.0) as u64).clamp(1, config.t_max_s);
            // The trajectory search is only meaningful once predictions
            // exist. Scoring a cold start against the rho_min floor would
            // mark every trajectory equally doomed and hand the decision to
            // the quality term — the riskiest possible choice. Stay lowest
            // instead until the predictor has produced anything.
            let Some(rho_hat) = forecaster.prediction_or_nearest(horizon) else {
                return 0;
            };
            forecasts.push(SegmentForecast {
                deadline_gap_s: deadline - input.t_request,
                rho_hat_bps: rho_hat.max(config.rho_min_bps),
                cdf: forecaster.model(horizon, now).clone(),
            });
        }

        let ctx = TrajectoryContext {
            sizes_bits: &manifest.segment_sizes()[first as usize..=last as usize],
            forecasts: &forecasts,
            quality: &quality,
            prev_rep: input.state.last_representation,
            config,
        };
        let decision = choose_representation(&ctx);
        self.last = Some(decision.score);
        decision.rep
    }

    fn last_score(&self) -> Option<TrajectoryScore> {
        self.last
    }
}

/// The comparison set used by result tables: always-lowest, one fixed-margin
/// policy per margin, the utility maximizer and the future-knowledge
/// reference, in that order.
pub fn standard_policies(margins: &[f64]) -> Vec<Box<dyn Policy>> {
    let mut out: Vec<Box<dyn Policy>> = Vec::with_capacity(margins.len() + 3);
    out.push(Box::new(LowestPolicy));
    for &m in margins {
        out.push(Box::new(FixedMarginPolicy::new(m)));
    }
    out.push(Box::new(UtilityPolicy::new()));
    out.push(Box::new(OraclePolicy::new()));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adaptation::{tune_in, Representation};
    use crate::adaptation::{ManifestGenSpec, StreamManifest};
    use crate::predictor::PredictorKind;
    use alloc::vec;

    fn flat_trace(bps: f64, duration_s: usize) -> ThroughputTrace {
        let per_second = (bps / 8.0) as u64;
        ThroughputTrace::new("flat", vec![per_second; duration_s]).unwrap()
    }

    fn manifest_with(reps: Vec<Representation>, n_segments: usize) -> StreamManifest {
        let spec = ManifestGenSpec { representations: reps, n_segments, ..Default::default() };
        crate::adaptation::generate_manifest(&spec).unwrap()
    }

    fn input_at<'a>(
        trace: &'a ThroughputTrace,
        manifest: &'a StreamManifest,
        config: &'a AdaptationConfig,
        state: &'a ClientState,
        segment: u64,
        t_request: f64,
    ) -> DecisionInput<'a> {
        DecisionInput {
            trace,
            manifest,
            config,
            state,
            segment,
            t_request,
            t_pi: libm::floor(t_request),
        }
    }

    #[test]
    fn lowest_is_the_skip_baseline() {
        let mut p = LowestPolicy;
        assert!(p.is_lowest_baseline());
        assert_eq!(p.name(), "lowest");
        let trace = flat_trace(1e6, 30);
        let manifest = manifest_with(crate::adaptation::default_ladder(), 10);
        let config = AdaptationConfig::default();
        let state = ClientState::new(&tune_in(2.0, 2.0, 5.0).unwrap());
        assert_eq!(p.decide(&input_at(&trace, &manifest, &config, &state, 0, 2.0)), 0);
    }

    #[test]
    fn margin_policy_tracks_the_recent_mean() {
        // 10 s at 1 Mbit/s, then 10 s at 2 Mbit/s.
        let mut bytes = vec![125_000u64; 10];
        bytes.extend(vec![250_000u64; 10]);
        let trace = ThroughputTrace::new("step", bytes).unwrap();
        let reps = vec![
            Representation { mmbr_bps: 4e5, psnr_db: 32.0 },
            Representation { mmbr_bps: 9e5, psnr_db: 36.0 },
            Representation { mmbr_bps: 1.8e6, psnr_db: 40.0 },
        ];
        let manifest = manifest_with(reps, 10);
        let config = AdaptationConfig::default();
        let state = ClientState::new(&tune_in(2.0, 2.0, 5.0).unwrap());
        let mut p = FixedMarginPolicy::new(0.8);
        assert_eq!(p.name(), "margin-0.8");

        // Window [8, 10) averages 1 Mbit/s; 0.8 of that only fits the lowest.
        assert_eq!(p.decide(&input_at(&trace, &manifest, &config, &state, 4, 10.0)), 0);
        // Window [17, 19) averages 2 Mbit/s; the margined target 1.6 Mbit/s
        // admits the middle representation but not the top one.
        assert_eq!(p.decide(&input_at(&trace, &manifest, &config, &state, 8, 19.0)), 1);
        // Before any history exists the policy stays at the bottom.
        assert_eq!(p.decide(&input_at(&trace, &manifest, &config, &state, 0, 0.9)), 0);
    }

    #[test]
    fn forecaster_is_exact_on_a_constant_trace() {
        let trace = flat_trace(1e6, 120);
        let config = AdaptationConfig::default();
        let mut f = Forecaster::new(&config);
        for s in 1..=100 {
            f.observe(&trace, s);
        }
        for horizon in 1..=config.t_max_s {
            let p = f.prediction(horizon).expect("warmed up");
            assert!((p - 1e6).abs() < 1e-6, "horizon {horizon}: {p}");
        }
    }

    #[test]
    fn forecaster_matches_direct_predictor_calls() {
        // Ramp so different blocks have different means.
        let bytes: Vec<u64> = (0..40u64).map(|t| 50_000 + 5_000 * t).collect();
        let trace = ThroughputTrace::new("ramp", bytes).unwrap();
        let config = AdaptationConfig::default();
        let spec = PredictorSpec::new(PredictorKind::Ses, 5).unwrap();
        assert_eq!(config.predictor, spec);

        let mut f = Forecaster::new(&config);
        for s in 1..=20 {
            f.observe(&trace, s);
        }
        // Blocks of length 2 ending at second 20: [10,12) ... [18,20).
        let past: Vec<f64> = (0..5).map(|k| trace.mean_bps(10 + 2 * k, 12 + 2 * k)).collect();
        let expected = predict(&spec, &past).unwrap().value_bps;
        assert_eq!(f.prediction(2), Some(expected));
    }

    #[test]
    fn forecaster_needs_enough_history_per_horizon() {
        let trace = flat_trace(1e6, 120);
        let config = AdaptationConfig::default();
        let mut f = Forecaster::new(&config);
        for s in 1..=9 {
            f.observe(&trace, s);
        }
        // Horizon 1 needs 5 seconds of history, horizon 2 needs 10.
        assert!(f.prediction(1).is_some());
        assert_eq!(f.prediction(2), None);
    }

    #[test]
    fn utility_policy_climbs_on_an_ample_constant_link() {
        let trace = flat_trace(4e6, 120);
        let manifest = manifest_with(crate::adaptation::default_ladder(), 60);
        let config = AdaptationConfig::default();
        let mut p = UtilityPolicy::new();
        p.reset(&config);
        for s in 1..=60 {
            p.on_second(&trace, s);
        }
        let mut state = ClientState::new(&tune_in(2.0, 2.0, 5.0).unwrap());
        state.last_representation = Some(5);
        state.next_segment = 29;
        let rep = p.decide(&input_at(&trace, &manifest, &config, &state, 29, 60.0));
        let score = p.last_score().expect("utility decisions carry a score");
        // On a constant 4 Mbit/s link the error model sees zero error, so
        // comfortably affordable representations look risk-free.
        assert!(rep >= 5, "picked {rep}");
        assert!(score.p_rb <= 0.05, "p_rb = {}", score.p_rb);
        assert!(score.utility > 0.0);
    }

    #[test]
    fn standard_policy_set_is_ordered_and_named() {
        let policies = standard_policies(&[0.7, 0.8, 0.9]);
        let names: Vec<String> = policies.iter().map(|p| p.name()).collect();
        assert_eq!(
            names,
            vec!["lowest", "margin-0.7", "margin-0.8", "margin-0.9", "utility", "oracle"]
        );
    }
}
