//! Trace-driven simulation of low-delay live streaming sessions.
//!
//! [`run_session`] replays one client against a recorded throughput trace:
//! segments are requested as soon as the previous download finishes and the
//! segment is published, bytes drain fluidly within each one-second trace
//! bin, and a segment whose download is still unfinished at its playback
//! deadline is abandoned — the client re-tunes to the live edge and the
//! jumped-over segments count as skipped. Every run yields both a
//! [`SessionMetrics`] summary and a complete [`SessionEventLog`] that
//! [`audit_event_log`] can check for byte conservation and timeline sanity.
//!
//! [`run_experiment`] repeats sessions across a set of traces and reports
//! per-policy means with two-sided 90% Student-t confidence intervals, with
//! skips adjusted by the unplayable baseline: the skips that the
//! always-lowest client suffers on the same trace, which no rate decision
//! could have avoided.

pub mod policy;

pub use policy::{
    standard_policies, DecisionInput, FixedMarginPolicy, LowestPolicy, OraclePolicy, Policy,
    UtilityPolicy,
};

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use libm::{floor, sqrt};

use crate::adaptation::{on_deadline_miss, tune_in, AdaptError, ClientState, StreamManifest};
use crate::adaptation::{AdaptationConfig, TrajectoryScore};
use crate::math;
use crate::trace::ThroughputTrace;

#[derive(Debug, Clone, PartialEq)]
pub enum SimError {
    Config(AdaptError),
    /// The trace ends before the first viable tune-in instant.
    TraceTooShort { needed_s: f64, got_s: f64 },
}

impl core::fmt::Display for SimError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SimError::Config(e) => write!(f, "invalid session configuration: {e}"),
            SimError::TraceTooShort { needed_s, got_s } => {
                write!(f, "trace too short for a session: need {needed_s} s, got {got_s} s")
            }
        }
    }
}

impl core::error::Error for SimError {}

impl From<AdaptError> for SimError {
    fn from(e: AdaptError) -> Self {
        SimError::Config(e)
    }
}

/// One entry of a session's event log. Times are seconds from trace start.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "event", rename_all = "snake_case"))]
pub enum SessionEvent {
    /// The client (re-)tuned to the live edge; downloading resumes at
    /// `t_effective`, which trails `t` when the join fell between viable
    /// publication instants.
    TuneIn { t: f64, first_segment: u64, t_effective: f64, delta_p_s: f64 },
    /// A segment download started. `score` carries the utility breakdown
    /// when the deciding policy computes one; the forced lowest-rate request
    /// right after a tune-in has none.
    RequestIssued { t: f64, segment: u64, rep: usize, score: Option<TrajectoryScore> },
    /// Bits that flowed during `[t0, t1]` for the open download.
    BytesDelivered { t0: f64, t1: f64, segment: u64, bits: f64 },
    /// The open download finished at `t`, at or before its deadline.
    SegmentComplete { t: f64, segment: u64, rep: usize, bits: f64 },
    /// The playback deadline passed with the download unfinished.
    DeadlineMiss { t: f64, segment: u64 },
    /// The first segment after a tune-in reached its deadline intact and
    /// playout (re)started.
    PlaybackStart { t: f64, segment: u64 },
}

impl SessionEvent {
    /// Sort key: the instant the event takes effect.
    pub fn time_s(&self) -> f64 {
        match self {
            SessionEvent::TuneIn { t, .. }
            | SessionEvent::RequestIssued { t, .. }
            | SessionEvent::SegmentComplete { t, .. }
            | SessionEvent::DeadlineMiss { t, .. }
            | SessionEvent::PlaybackStart { t, .. } => *t,
            SessionEvent::BytesDelivered { t0, .. } => *t0,
        }
    }
}

/// Complete record of one simulated session, ordered by time.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SessionEventLog {
    pub seed: u64,
    pub trace_id: String,
    pub policy: String,
    pub events: Vec<SessionEvent>,
}

/// Session summary over the segments whose playback deadlines fall inside
/// the trace; later segments cannot resolve and are excluded on every
/// metric except `utilization`, which counts all completed downloads.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SessionMetrics {
    pub considered_segments: u64,
    pub played_segments: u64,
    pub skipped_segments: u64,
    /// `skipped_segments / considered_segments`.
    pub skipped_fraction: f64,
    /// Skipped fraction of the always-lowest client on the same trace.
    pub unplayable_fraction: f64,
    /// `skipped_fraction - unplayable_fraction`: the skips attributable to
    /// rate decisions rather than to the channel.
    pub adjusted_skipped: f64,
    /// Mean quality score of played segments (0 when nothing played).
    pub mean_u_q: f64,
    /// Mean `1 - |quality step|` across consecutive played segments
    /// (1 when fewer than two segments played).
    pub mean_u_qf: f64,
    /// Completed media bits over total trace capacity.
    pub utilization: f64,
    /// Number of deadline misses.
    pub rebuffer_events: u64,
    /// Join-to-first-frame time, when playback ever started.
    pub startup_delay_s: Option<f64>,
}

/// Raw per-session accounting before baseline adjustment.
struct RawOutcome {
    considered: u64,
    skipped: u64,
    /// `(segment, representation)` of played segments, in order.
    played: Vec<(u64, usize)>,
    delivered_bits: f64,
    rebuffer_events: u64,
    startup_delay_s: Option<f64>,
}

impl RawOutcome {
    fn skipped_fraction(&self) -> f64 {
        if self.considered == 0 {
            0.0
        } else {
            self.skipped as f64 / self.considered as f64
        }
    }
}

/// How one download attempt ended.
enum DrainOutcome {
    Completed { t: f64 },
    Missed { t: f64 },
    TraceEnded,
}

struct Drain {
    /// `(t0, t1, bits)` per second-aligned span with nonzero delivery.
    chunks: Vec<(f64, f64, f64)>,
    outcome: DrainOutcome,
}

/// Drains `size_bits` from the trace starting at `t_request` under the
/// fluid model: within each one-second bin bytes flow at the bin's constant
/// rate. Stops at completion, at the deadline, or at trace end, whichever
/// comes first. A completion landing exactly on the deadline counts as met.
fn drain_download(trace: &ThroughputTrace, t_request: f64, deadline: f64, size_bits: f64) -> Drain {
    let d = trace.duration_s() as f64;
    let bytes = trace.bytes();
    let mut chunks = Vec::new();
    let mut pos = t_request;
    let mut remaining = size_bits;
    loop {
        if pos >= d - 1e-12 {
            return Drain { chunks, outcome: DrainOutcome::TraceEnded };
        }
        let bin = floor(pos + 1e-12);
        let span_end = (bin + 1.0).min(d);
        let rate = 8.0 * bytes[bin as usize] as f64;

        if rate > 0.0 && remaining <= rate * (span_end - pos) + 1e-9 {
            let t_done = (pos + remaining / rate).min(span_end);
            if t_done <= deadline + 1e-9 {
                let t_done = t_done.min(deadline);
                chunks.push((pos, t_done, remaining));
                return Drain { chunks, outcome: DrainOutcome::Completed { t: t_done } };
            }
        }
        // No on-time completion inside this span; the deadline fires first
        // if it falls within it.
        if deadline <= span_end {
            let got = rate * (deadline - pos);
            if got > 0.0 {
                chunks.push((pos, deadline, got));
            }
            return Drain { chunks, outcome: DrainOutcome::Missed { t: deadline } };
        }
        let full = rate * (span_end - pos);
        if full > 0.0 {
            chunks.push((pos, span_end, full));
        }
        remaining -= full;
        pos = span_end;
    }
}

fn fire_hooks(
    policy: &mut dyn Policy,
    trace: &ThroughputTrace,
    next_hook: &mut u64,
    up_to_t: f64,
) {
    let last = floor(up_to_t + 1e-12) as u64;
    let last = last.min(trace.duration_s());
    while *next_hook <= last {
        policy.on_second(trace, *next_hook);
        *next_hook += 1;
    }
}

fn run_raw(
    trace: &ThroughputTrace,
    manifest: &StreamManifest,
    policy: &mut dyn Policy,
    config: &AdaptationConfig,
    seed: u64,
) -> Result<(RawOutcome, SessionEventLog), SimError> {
    config.validate(manifest.tau_s()).map_err(SimError::Config)?;
    let tau = manifest.tau_s();
    let d = trace.duration_s() as f64;
    if d < tau {
        return Err(SimError::TraceTooShort { needed_s: tau, got_s: d });
    }
    policy.reset(config);

    // Join at the first instant any segment is published.
    let t_join = tau;
    let tune = tune_in(t_join, tau, config.delta_p_max_s)?;
    let mut state = ClientState::new(&tune);
    let i_start = tune.first_segment;
    let n_segments = manifest.n_segments() as u64;

    let mut events = vec![SessionEvent::TuneIn {
        t: t_join,
        first_segment: tune.first_segment,
        t_effective: tune.t_effective_s,
        delta_p_s: tune.delta_p_s,
    }];
    let mut t = tune.t_effective_s;
    let mut force_lowest = true;
    let mut pending_playback = Some(tune.first_segment);
    let mut next_hook: u64 = 1;
    let mut skipped: u64 = 0;
    let mut played: Vec<(u64, usize)> = Vec::new();
    let mut delivered_bits = 0.0;
    let mut rebuffer_events: u64 = 0;
    let mut startup_delay_s: Option<f64> = None;

    loop {
        let segment = state.next_segment;
        if segment >= n_segments {
            break;
        }
        let publish = (segment as f64 + 1.0) * tau;
        let t_request = t.max(publish);
        if t_request >= d {
            break;
        }
        let deadline = state.deadline(segment, tau);
        debug_assert!(deadline > t_request, "requests precede their deadline");

        fire_hooks(policy, trace, &mut next_hook, t_request);
        let rep = if force_lowest {
            0
        } else {
            let input = DecisionInput {
                trace,
                manifest,
                config,
                state: &state,
                segment,
                t_request,
                t_pi: floor(t_request + 1e-12),
            };
            policy.decide(&input).min(manifest.n_representations() - 1)
        };
        let score = if force_lowest { None } else { policy.last_score() };
        events.push(SessionEvent::RequestIssued { t: t_request, segment, rep, score });
        force_lowest = false;

        let size = manifest.size_bits(segment as usize, rep) as f64;
        let drain = drain_download(trace, t_request, deadline, size);
        for &(t0, t1, bits) in &drain.chunks {
            events.push(SessionEvent::BytesDelivered { t0, t1, segment, bits });
        }
        match drain.outcome {
            DrainOutcome::Completed { t: t_complete } => {
                state.record_completion(segment, rep, t_request, t_complete);
                events.push(SessionEvent::SegmentComplete { t: t_complete, segment, rep, bits: size });
                delivered_bits += size;
                if deadline <= d {
                    played.push((segment, rep));
                    if pending_playback == Some(segment) {
                        pending_playback = None;
                        events.push(SessionEvent::PlaybackStart { t: deadline, segment });
                        if startup_delay_s.is_none() {
                            startup_delay_s = Some(deadline - t_join);
                        }
                    }
                }
                t = t_complete;
            }
            DrainOutcome::Missed { t: t_miss } => {
                rebuffer_events += 1;
                events.push(SessionEvent::DeadlineMiss { t: t_miss, segment });
                let (_, retune) = on_deadline_miss(&mut state, t_miss, tau)?;
                for s in segment..retune.first_segment.min(n_segments) {
                    if state.deadline(s, tau) <= d {
                        skipped += 1;
                    }
                }
                events.push(SessionEvent::TuneIn {
                    t: t_miss,
                    first_segment: retune.first_segment,
                    t_effective: retune.t_effective_s,
                    delta_p_s: retune.delta_p_s,
                });
                pending_playback = Some(retune.first_segment);
                force_lowest = true;
                t = retune.t_effective_s;
            }
            DrainOutcome::TraceEnded => break,
        }
    }

    // Deferred events (playback starts) land at their effective instants.
    events.sort_by(|a, b| a.time_s().total_cmp(&b.time_s()));

    // Segments with a deadline inside the trace all resolved to completed
    // or skipped: an unresolved download at trace end necessarily had its
    // deadline beyond it, else the miss would have fired first.
    let last_considered = floor((d - config.delta_p_max_s) / tau + 1e-9);
    let considered = if last_considered < i_start as f64 {
        0
    } else {
        (last_considered as u64).min(n_segments - 1) - i_start + 1
    };
    debug_assert_eq!(played.len() as u64 + skipped, considered);

    let outcome = RawOutcome {
        considered,
        skipped,
        played,
        delivered_bits,
        rebuffer_events,
        startup_delay_s,
    };
    let log = SessionEventLog {
        seed,
        trace_id: trace.id().to_string(),
        policy: policy.name(),
        events,
    };
    Ok((outcome, log))
}

fn finish_metrics(
    raw: &RawOutcome,
    unplayable_fraction: f64,
    trace: &ThroughputTrace,
    manifest: &StreamManifest,
) -> SessionMetrics {
    let m = manifest.n_representations();
    // A single-representation ladder has no quality spread; score it zero
    // so the quality metrics stay defined.
    let quality = manifest.quality_scores().unwrap_or_else(|_| vec![0.0; m]);
    let skipped_fraction = raw.skipped_fraction();
    let mean_u_q = if raw.played.is_empty() {
        0.0
    } else {
        raw.played.iter().map(|&(_, rep)| quality[rep]).sum::<f64>() / raw.played.len() as f64
    };
    let mean_u_qf = if raw.played.len() < 2 {
        1.0
    } else {
        let steps: f64 = raw
            .played
            .windows(2)
            .map(|w| 1.0 - (quality[w[1].1] - quality[w[0].1]).abs())
            .sum();
        steps / (raw.played.len() - 1) as f64
    };
    let capacity_bits = 8.0 * trace.total_bytes() as f64;
    SessionMetrics {
        considered_segments: raw.considered,
        played_segments: raw.played.len() as u64,
        skipped_segments: raw.skipped,
        skipped_fraction,
        unplayable_fraction,
        adjusted_skipped: skipped_fraction - unplayable_fraction,
        mean_u_q,
        mean_u_qf,
        utilization: if capacity_bits > 0.0 { raw.delivered_bits / capacity_bits } else { 0.0 },
        rebuffer_events: raw.rebuffer_events,
        startup_delay_s: raw.startup_delay_s,
    }
}

/// Simulates one session of `policy` over `trace` and returns its metrics
/// and event log. The unplayable baseline is computed by an extra
/// always-lowest run unless `policy` is that baseline itself. Identical
/// inputs yield identical logs.
pub fn run_session(
    trace: &ThroughputTrace,
    manifest: &StreamManifest,
    policy: &mut dyn Policy,
    config: &AdaptationConfig,
    seed: u64,
) -> Result<(SessionMetrics, SessionEventLog), SimError> {
    let (raw, log) = run_raw(trace, manifest, policy, config, seed)?;
    let unplayable = if policy.is_lowest_baseline() {
        raw.skipped_fraction()
    } else {
        run_raw(trace, manifest, &mut LowestPolicy, config, seed)?.0.skipped_fraction()
    };
    Ok((finish_metrics(&raw, unplayable, trace, manifest), log))
}

/// Mean with a two-sided 90% confidence interval.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Ci {
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Student-t interval for the mean of `samples`; a single sample (or
/// identical samples) collapses to a zero-width interval.
pub fn confidence_interval_90(samples: &[f64]) -> Ci {
    assert!(!samples.is_empty(), "confidence interval needs at least one sample");
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Ci { mean, lo: mean, hi: mean };
    }
    let s = math::sample_std(samples);
    let half = math::student_t_quantile(0.95, (n - 1) as f64) * s / sqrt(n as f64);
    Ci { mean, lo: mean - half, hi: mean + half }
}

/// Per-policy aggregate over a set of traces.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PolicySummary {
    pub policy: String,
    pub adjusted_skipped: Ci,
    pub mean_u_q: Ci,
    pub mean_u_qf: Ci,
    pub per_trace: Vec<SessionMetrics>,
}

/// Runs every policy over every trace. The always-lowest baseline is
/// simulated once per trace and shared by all policies, so the adjusted
/// skip metric is consistent across rows. Confidence intervals are taken
/// across traces.
pub fn run_experiment(
    traces: &[ThroughputTrace],
    manifest: &StreamManifest,
    policies: &mut [alloc::boxed::Box<dyn Policy>],
    config: &AdaptationConfig,
    seed: u64,
) -> Result<Vec<PolicySummary>, SimError> {
    let mut lowest = LowestPolicy;
    let mut unplayable = Vec::with_capacity(traces.len());
    for trace in traces {
        unplayable.push(run_raw(trace, manifest, &mut lowest, config, seed)?.0.skipped_fraction());
    }

    let mut out = Vec::with_capacity(policies.len());
    for policy in policies.iter_mut() {
        let mut per_trace = Vec::with_capacity(traces.len());
        for (trace, &baseline) in traces.iter().zip(&unplayable) {
            let (raw, _) = run_raw(trace, manifest, policy.as_mut(), config, seed)?;
            per_trace.push(finish_metrics(&raw, baseline, trace, manifest));
        }
        let ci_of = |f: fn(&SessionMetrics) -> f64| {
            confidence_interval_90(&per_trace.iter().map(f).collect::<Vec<f64>>())
        };
        out.push(PolicySummary {
            policy: policy.name(),
            adjusted_skipped: ci_of(|m| m.adjusted_skipped),
            mean_u_q: ci_of(|m| m.mean_u_q),
            mean_u_qf: ci_of(|m| m.mean_u_qf),
            per_trace,
        });
    }
    Ok(out)
}

/// Structural checks every honest event log passes: a nondecreasing
/// timeline, exactly one download in flight, delivered chunks that match
/// the trace byte for byte, completions at or before deadlines, misses
/// exactly at deadlines, lowest-rate requests right after tune-ins, and
/// tune-ins that leave between one segment duration and `delta_p - tau` of
/// startup lead. Returns the first violation as text.
pub fn audit_event_log(
    log: &SessionEventLog,
    trace: &ThroughputTrace,
    manifest: &StreamManifest,
    config: &AdaptationConfig,
) -> Result<(), String> {
    let tau = manifest.tau_s();
    let delta_p = config.delta_p_max_s;
    let deadline_of = |segment: u64| segment as f64 * tau + delta_p;

    let mut last_t = f64::NEG_INFINITY;
    for event in &log.events {
        let t = event.time_s();
        if t < last_t - 1e-9 {
            return Err(format!("timeline runs backwards at t = {t}"));
        }
        last_t = last_t.max(t);
    }

    // (segment, rep, t_request, delivered so far, end of last chunk)
    let mut open: Option<(u64, usize, f64, f64, f64)> = None;
    let mut expect_lowest = false;
    for event in &log.events {
        match *event {
            SessionEvent::TuneIn { t, first_segment, t_effective, delta_p_s } => {
                if open.is_some() {
                    return Err(format!("tune-in at t = {t} with a download in flight"));
                }
                if (delta_p_s - delta_p).abs() > 1e-9 {
                    return Err(format!("tune-in changed the playback delay to {delta_p_s}"));
                }
                if t_effective < t - 1e-9 {
                    return Err(format!("tune-in at t = {t} effective in the past"));
                }
                let lead = deadline_of(first_segment) - t_effective;
                if lead < tau - 1e-9 || lead > delta_p - tau + 1e-9 {
                    return Err(format!(
                        "tune-in at t = {t} leaves {lead} s of startup lead"
                    ));
                }
                expect_lowest = true;
            }
            SessionEvent::RequestIssued { t, segment, rep, .. } => {
                if open.is_some() {
                    return Err(format!("overlapping downloads at t = {t}"));
                }
                if segment as usize >= manifest.n_segments() || rep >= manifest.n_representations()
                {
                    return Err(format!("request outside the manifest at t = {t}"));
                }
                let publish = (segment as f64 + 1.0) * tau;
                if t < publish - 1e-9 {
                    return Err(format!("segment {segment} requested before publication"));
                }
                if expect_lowest && rep != 0 {
                    return Err(format!(
                        "first request after a tune-in used representation {rep}"
                    ));
                }
                expect_lowest = false;
                open = Some((segment, rep, t, 0.0, t));
            }
            SessionEvent::BytesDelivered { t0, t1, segment, bits } => {
                let Some((s, rep, t_req, delivered, chunk_end)) = open else {
                    return Err(format!("bytes delivered with no download open at t = {t0}"));
                };
                if s != segment {
                    return Err(format!("bytes for segment {segment} while {s} is open"));
                }
                if t0 < chunk_end - 1e-9 || t1 < t0 {
                    return Err(format!("delivery span [{t0}, {t1}] overlaps or reverses"));
                }
                let expected = trace.bits_between(t0, t1);
                if (bits - expected).abs() > 1.0 + 1e-9 * expected {
                    return Err(format!(
                        "chunk [{t0}, {t1}] claims {bits} bits, trace carried {expected}"
                    ));
                }
                open = Some((s, rep, t_req, delivered + bits, t1));
            }
            SessionEvent::SegmentComplete { t, segment, rep, bits } => {
                let Some((s, r, _, delivered, _)) = open else {
                    return Err(format!("completion with no download open at t = {t}"));
                };
                if s != segment || r != rep {
                    return Err(format!("completion of segment {segment} mismatches the request"));
                }
                let size = manifest.size_bits(segment as usize, rep) as f64;
                if (bits - size).abs() > 1e-6 * size.max(1.0) {
                    return Err(format!("segment {segment} completed with {bits} of {size} bits"));
                }
                if (delivered - size).abs() > 1.0 + 1e-9 * size {
                    return Err(format!(
                        "segment {segment} delivered {delivered} bits but declares {size}"
                    ));
                }
                let deadline = deadline_of(segment);
                if t > deadline + 1e-9 {
                    return Err(format!("segment {segment} completed after its deadline"));
                }
                // Buffered lead never exceeds the publication bound.
                if deadline - t > delta_p - tau + 1e-6 {
                    return Err(format!("segment {segment} completed before publication"));
                }
                open = None;
            }
            SessionEvent::DeadlineMiss { t, segment } => {
                let Some((s, ..)) = open else {
                    return Err(format!("miss with no download open at t = {t}"));
                };
                if s != segment {
                    return Err(format!("miss of segment {segment} while {s} is open"));
                }
                if (t - deadline_of(segment)).abs() > 1e-9 {
                    return Err(format!("segment {segment} missed away from its deadline"));
                }
                open = None;
            }
            SessionEvent::PlaybackStart { t, segment } => {
                if (t - deadline_of(segment)).abs() > 1e-9 {
                    return Err(format!(
                        "playback of segment {segment} started away from its deadline"
                    ));
                }
            }
        }
    }
    // A download still open at the end is fine: the trace ended under it.
    Ok(())
}
