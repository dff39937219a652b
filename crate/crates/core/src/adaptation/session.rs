//! Client-side session state: tune-in, deadline misses, and the margin and
//! future-knowledge baseline selectors.

use alloc::vec::Vec;

use libm::{ceil, floor};

use super::{AdaptError, StreamManifest};
use crate::trace::ThroughputTrace;

/// Where a client joins (or rejoins) the live stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuneIn {
    pub first_segment: u64,
    pub delta_p_s: f64,
    /// When downloading can actually begin: the join time itself, or the
    /// next publication instant when the join fell into a dead interval.
    pub t_effective_s: f64,
}

/// Live-edge tune-in at wall time `t`: the oldest already-published segment
/// whose deadline `i*tau + delta_p` leaves at least one segment duration of
/// download time. When `delta_p < 3*tau` there are instants where no
/// published segment qualifies; the client then waits for the next
/// publication, which always qualifies (`delta_p >= 2*tau`), and
/// `t_effective_s` records that wait. Fails before the first segment is
/// published (`t < tau`).
pub fn tune_in(t: f64, tau_s: f64, delta_p_max_s: f64) -> Result<TuneIn, AdaptError> {
    debug_assert!(tau_s > 0.0 && delta_p_max_s >= 2.0 * tau_s);
    if !t.is_finite() || t + 1e-9 < tau_s {
        return Err(AdaptError::NoSegmentAvailable { t });
    }
    // Epsilons keep exact boundaries (t = k*tau) from rounding the wrong way.
    let published = floor(t / tau_s - 1.0 + 1e-9);
    let viable = ceil((t + tau_s - delta_p_max_s) / tau_s - 1e-9).max(0.0);
    if viable <= published {
        Ok(TuneIn { first_segment: viable as u64, delta_p_s: delta_p_max_s, t_effective_s: t })
    } else {
        let next_pub = floor(t / tau_s + 1e-9) + 1.0;
        Ok(TuneIn {
            first_segment: (next_pub - 1.0) as u64,
            delta_p_s: delta_p_max_s,
            t_effective_s: next_pub * tau_s,
        })
    }
}

/// One finished download.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CompletedSegment {
    pub segment: u64,
    pub rep: usize,
    pub t_request: f64,
    pub t_complete: f64,
}

/// Download-side state of a streaming client.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientState {
    /// Next segment to request.
    pub next_segment: u64,
    /// Playback delay relative to segment start times, seconds.
    pub delta_p_s: f64,
    /// Representation of the most recently completed segment.
    pub last_representation: Option<usize>,
    pub completed: Vec<CompletedSegment>,
    /// Segments jumped over by deadline misses.
    pub skipped: u64,
}

impl ClientState {
    pub fn new(tune: &TuneIn) -> Self {
        ClientState {
            next_segment: tune.first_segment,
            delta_p_s: tune.delta_p_s,
            last_representation: None,
            completed: Vec::new(),
            skipped: 0,
        }
    }

    /// Playback deadline of a segment.
    pub fn deadline(&self, segment: u64, tau_s: f64) -> f64 {
        segment as f64 * tau_s + self.delta_p_s
    }

    /// Buffered playout time at `t`: how far the latest downloaded content
    /// extends beyond the playhead. Zero when nothing downloaded is left to
    /// play. Bounded by `delta_p - tau` because a segment can complete no
    /// earlier than its publication.
    pub fn buffer_level(&self, t: f64, tau_s: f64) -> f64 {
        let horizon = self
            .completed
            .iter()
            .filter(|c| c.t_complete <= t)
            .map(|c| self.deadline(c.segment, tau_s))
            .fold(f64::NEG_INFINITY, f64::max);
        (horizon - t).max(0.0)
    }

    pub fn record_completion(&mut self, segment: u64, rep: usize, t_request: f64, t_complete: f64) {
        self.completed.push(CompletedSegment { segment, rep, t_request, t_complete });
        self.last_representation = Some(rep);
        self.next_segment = segment + 1;
    }

    pub fn apply_tune_in(&mut self, tune: &TuneIn) {
        self.next_segment = tune.first_segment;
        self.delta_p_s = tune.delta_p_s;
    }
}

/// Handles a deadline miss at time `t`: re-tunes to the live edge and
/// returns the tune-in together with how many segments (including the
/// missed one) were jumped over.
pub fn on_deadline_miss(
    state: &mut ClientState,
    t: f64,
    tau_s: f64,
) -> Result<(u64, TuneIn), AdaptError> {
    let tune = tune_in(t, tau_s, state.delta_p_s)?;
    let jumped = tune.first_segment.saturating_sub(state.next_segment);
    state.skipped += jumped;
    state.apply_tune_in(&tune);
    Ok((jumped, tune))
}

/// Highest representation whose declared mean rate stays below
/// `margin * rho_bps`; the lowest when none qualifies.
pub fn fixed_margin_rep(manifest: &StreamManifest, margin: f64, rho_bps: f64) -> usize {
    let target = margin * rho_bps;
    let mut best = 0;
    for (j, rep) in manifest.representations().iter().enumerate() {
        if rep.mmbr_bps <= target {
            best = j;
        }
    }
    best
}

/// Future-knowledge selector: the highest representation for which
/// downloading this segment, then all successors at the lowest
/// representation, misses no deadline.
///
/// The feasibility simulation runs at least `min_lookahead_s` ahead and
/// keeps going until the simulated queue returns to the live edge
/// (request time = publication time): once drained, the candidate leaves
/// no lingering delay that could cause a miss later, which is what makes
/// this selector skip-free wherever the always-lowest client is.
pub fn oracle_rep(
    manifest: &StreamManifest,
    trace: &ThroughputTrace,
    segment: u64,
    t_request: f64,
    delta_p_s: f64,
    min_lookahead_s: f64,
) -> usize {
    let tau = manifest.tau_s();
    let d_end = trace.duration_s() as f64;
    let n = manifest.n_segments() as u64;
    let m = manifest.n_representations();
    'candidate: for j in (0..m).rev() {
        let mut t = t_request;
        let mut q = segment;
        loop {
            if q >= n {
                break; // manifest exhausted: nothing left to miss
            }
            let deadline = q as f64 * tau + delta_p_s;
            let publish = (q + 1) as f64 * tau;
            let start = t.max(publish);
            if start >= d_end {
                break; // past trace end: excluded from metrics either way
            }
            let past_window = start - t_request >= min_lookahead_s - 1e-9;
            if past_window && t <= publish + 1e-9 && q > segment {
                break; // drained back to the live edge with the window covered
            }
            let rep = if q == segment { j } else { 0 };
            let bits = manifest.size_bits(q as usize, rep) as f64;
            match trace.time_to_deliver(bits, start) {
                Some(done) if done <= deadline + 1e-9 => {
                    t = done;
                    q += 1;
                }
                Some(_) => continue 'candidate,
                // Trace ends before delivery: a miss only if the deadline
                // was still inside the trace.
                None => {
                    if deadline <= d_end {
                        continue 'candidate;
                    }
                    break;
                }
            }
        }
        return j;
    }
    0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adaptation::{Representation, StreamManifest};
    use alloc::vec;
    use alloc::vec::Vec;

    #[test]
    fn tune_in_examples() {
        // tau = 2, delta_p = 5, t = 10: oldest viable published segment is 4.
        let t = tune_in(10.0, 2.0, 5.0).unwrap();
        assert_eq!(t.first_segment, 4);
        assert_eq!(t.delta_p_s, 5.0);
        // Joining exactly at the first publication starts at segment 0.
        let t = tune_in(2.0, 2.0, 5.0).unwrap();
        assert_eq!(t.first_segment, 0);
        // Before the first publication nothing can be fetched.
        assert_eq!(
            tune_in(1.9, 2.0, 5.0),
            Err(AdaptError::NoSegmentAvailable { t: 1.9 })
        );
    }

    #[test]
    fn tune_in_startup_delay_stays_within_bounds() {
        // Startup delay = first deadline - effective start must lie within
        // [tau, delta_p - tau] for any join time, and any wait for the next
        // publication is shorter than one segment duration.
        let (tau, dp) = (2.0, 5.0);
        for k in 0..200 {
            let t = tau + k as f64 * 0.173;
            let tune = tune_in(t, tau, dp).unwrap();
            let delay = tune.first_segment as f64 * tau + dp - tune.t_effective_s;
            assert!(delay >= tau - 1e-6, "t={t}: delay {delay}");
            assert!(delay <= dp - tau + 1e-6, "t={t}: delay {delay}");
            assert!(tune.t_effective_s >= t - 1e-9);
            assert!(tune.t_effective_s - t < tau);
            // And the segment is published by the effective start.
            assert!((tune.first_segment + 1) as f64 * tau <= tune.t_effective_s + 1e-6);
        }
    }

    #[test]
    fn tune_in_waits_out_dead_intervals() {
        // With delta_p = 2.5 * tau, joining in the second half of a segment
        // interval leaves no published segment with a full tau of lead
        // time; the client waits for the next publication.
        let tune = tune_in(3.2, 2.0, 5.0).unwrap();
        assert_eq!(tune.first_segment, 1);
        assert_eq!(tune.t_effective_s, 4.0);
        // Exactly at the half boundary the old segment still qualifies.
        let tune = tune_in(3.0, 2.0, 5.0).unwrap();
        assert_eq!(tune.first_segment, 0);
        assert_eq!(tune.t_effective_s, 3.0);
    }

    #[test]
    fn deadline_miss_jumps_to_the_live_edge() {
        let tune = tune_in(2.0, 2.0, 5.0).unwrap();
        let mut state = ClientState::new(&tune);
        assert_eq!(state.next_segment, 0);
        // Segment 0 misses its deadline at t = 5.
        let (jumped, at) = on_deadline_miss(&mut state, 5.0, 2.0).unwrap();
        assert_eq!(jumped, 1);
        assert_eq!(at.t_effective_s, 5.0);
        assert_eq!(state.next_segment, 1);
        assert_eq!(state.skipped, 1);
        // A long stall: miss at t = 20 jumps several segments at once.
        let (jumped, _) = on_deadline_miss(&mut state, 20.0, 2.0).unwrap();
        // tune_in(20) -> ceil((20 + 2 - 5) / 2) = 9.
        assert_eq!(jumped, 8);
        assert_eq!(state.next_segment, 9);
        assert_eq!(state.skipped, 9);
    }

    #[test]
    fn buffer_level_tracks_downloaded_playout() {
        let tune = tune_in(2.0, 2.0, 5.0).unwrap();
        let mut state = ClientState::new(&tune);
        state.record_completion(0, 0, 2.0, 3.0);
        // At t = 3 the downloaded content plays until deadline(0) = 5.
        assert_eq!(state.buffer_level(3.0, 2.0), 2.0);
        assert_eq!(state.buffer_level(5.0, 2.0), 0.0);
        state.record_completion(1, 0, 4.0, 4.5);
        // deadline(1) = 7.
        assert_eq!(state.buffer_level(5.0, 2.0), 2.0);
        // Before anything completed the buffer is empty.
        assert_eq!(state.buffer_level(2.5, 2.0), 0.0);
        // Never exceeds delta_p - tau.
        for c in &state.completed {
            let b = state.buffer_level(c.t_complete, 2.0);
            assert!(b <= 5.0 - 2.0 + 1e-9);
        }
    }

    fn margin_manifest() -> StreamManifest {
        let reps = vec![
            Representation { mmbr_bps: 1e5, psnr_db: 30.0 },
            Representation { mmbr_bps: 7e5, psnr_db: 36.0 },
            Representation { mmbr_bps: 9e5, psnr_db: 40.0 },
        ];
        let sizes = vec![vec![200_000u64, 1_400_000, 1_800_000]];
        StreamManifest::new(2.0, reps, sizes).unwrap()
    }

    #[test]
    fn fixed_margin_picks_highest_rate_below_target() {
        let manifest = margin_manifest();
        // 0.8 * 1 Mbps = 800 kbps: representation at 700 kbps (index 1).
        assert_eq!(fixed_margin_rep(&manifest, 0.8, 1e6), 1);
        // Everything above the budget falls back to the lowest.
        assert_eq!(fixed_margin_rep(&manifest, 0.8, 1e4), 0);
        assert_eq!(fixed_margin_rep(&manifest, 1.0, 1e6), 2);
    }

    fn constant_trace(bytes_per_s: u64, duration: usize) -> ThroughputTrace {
        ThroughputTrace::new("const", vec![bytes_per_s; duration]).unwrap()
    }

    fn ladder_manifest(n_segments: usize) -> StreamManifest {
        let spec = crate::adaptation::ManifestGenSpec {
            n_segments,
            ..crate::adaptation::ManifestGenSpec::default()
        };
        crate::adaptation::generate_manifest(&spec).unwrap()
    }

    #[test]
    fn oracle_matches_the_sustainable_representation_on_constant_traces() {
        let manifest = ladder_manifest(100);
        // Constant throughput equal to the rate of representation 4
        // (0-based): with tau = 2 and delta_p = 5 the next step up needs
        // 2 * 1.515 > 3 seconds and must fail.
        let rate = manifest.representations()[4].mmbr_bps;
        let trace = constant_trace((rate / 8.0) as u64, 120);
        // Steady state: request at the publication instant.
        let rep = oracle_rep(&manifest, &trace, 10, 22.0, 5.0, 10.0);
        assert_eq!(rep, 4);
    }

    #[test]
    fn oracle_extremes() {
        let manifest = ladder_manifest(40);
        let dead = constant_trace(0, 80);
        assert_eq!(oracle_rep(&manifest, &dead, 5, 12.0, 5.0, 10.0), 0);
        let huge = constant_trace(1_000_000_000_000, 80);
        assert_eq!(oracle_rep(&manifest, &huge, 5, 12.0, 5.0, 10.0), 9);
    }

    #[test]
    fn oracle_accounts_for_queued_successors() {
        let manifest = ladder_manifest(100);
        // Ample rate, but a dead zone right after the decision point: the
        // selector must see the stall coming through the per-second trace.
        let mut bytes: Vec<u64> = vec![4_000_000u64; 120];
        for b in bytes.iter_mut().take(30).skip(24) {
            *b = 0;
        }
        let trace = ThroughputTrace::new("gap", bytes).unwrap();
        let full = oracle_rep(&manifest, &trace, 10, 22.0, 5.0, 10.0);
        // With the dead zone covering seconds 24..30, deadline 25 (segment
        // 10) can only be met by a small enough segment.
        let no_gap = oracle_rep(&manifest, &constant_trace(4_000_000, 120), 10, 22.0, 5.0, 10.0);
        assert!(full < no_gap, "gap-aware {full} vs unconstrained {no_gap}");
    }
}
