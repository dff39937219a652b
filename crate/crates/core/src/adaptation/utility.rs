//! Trajectory scoring and the utility-maximizing representation search.
//!
//! A *trajectory* assigns one representation index to every segment whose
//! playback deadline falls inside the prediction horizon. Its utility is
//!
//! ```text
//! U = U_RB * (alpha_q * U_Q + (1 - alpha_q) * U_QF)
//! ```
//!
//! where `U_RB` discounts rebuffering risk, `U_Q` is the mean quality score
//! and `U_QF` penalizes quality changes between consecutive segments. The
//! per-segment probability of meeting a deadline comes from an error model
//! of past throughput predictions, evaluated at the relative headroom the
//! prediction leaves for the cumulative trajectory size.

use alloc::vec;
use alloc::vec::Vec;

use libm::{expm1, floor};

use super::{AdaptationConfig, PrbMode};
use crate::error_model::ComposedErrorCdf;

/// Index of the last segment whose deadline `l * tau + delta_p` still lies
/// within `t_max_s` seconds of the current publication instant `t_pi`;
/// never below the segment `i` being decided.
pub fn reachable_horizon(i: u64, t_pi: f64, tau_s: f64, delta_p_s: f64, t_max_s: u64) -> u64 {
    // The epsilon keeps exact integer boundaries from rounding down.
    let bound = floor((t_pi + t_max_s as f64 - delta_p_s) / tau_s + 1e-9);
    if bound <= i as f64 {
        i
    } else {
        bound as u64
    }
}

/// Rebuffering subutility `(e^(a*p) - e^a) / (1 - e^a)` for `a < 0`:
/// 1 at `p = 0`, 0 at `p = 1`, and close to `1 - p` for `a` near zero.
pub fn u_rb(p_rb: f64, alpha_rb: f64) -> f64 {
    debug_assert!(alpha_rb < 0.0);
    let p = p_rb.clamp(0.0, 1.0);
    // expm1 keeps the small-|alpha| regime accurate where e^a - 1 cancels.
    (expm1(alpha_rb * p) - expm1(alpha_rb)) / (-expm1(alpha_rb))
}

/// Mean quality score of the chosen representations.
pub fn u_q(choices: &[usize], quality: &[f64]) -> f64 {
    debug_assert!(!choices.is_empty());
    choices.iter().map(|&c| quality[c]).sum::<f64>() / choices.len() as f64
}

/// Quality flatness: one minus the mean absolute quality step between
/// consecutive segments. The step before the first segment compares against
/// the previously played representation; at session start there is no
/// predecessor and the first segment incurs no penalty.
pub fn u_qf(choices: &[usize], quality: &[f64], prev_rep: Option<usize>) -> f64 {
    debug_assert!(!choices.is_empty());
    let mut pen = 0.0;
    let mut prev = prev_rep.unwrap_or(choices[0]);
    for &c in choices {
        pen += (quality[c] - quality[prev]).abs();
        prev = c;
    }
    1.0 - pen / choices.len() as f64
}

/// Aggregates per-segment deadline-meet probabilities into a rebuffering
/// probability.
pub fn combine_meet_probabilities(meet: &[f64], mode: PrbMode) -> f64 {
    let p = match mode {
        PrbMode::Product => 1.0 - meet.iter().map(|p| p.clamp(0.0, 1.0)).product::<f64>(),
        PrbMode::PaperSumClamped => {
            1.0 - meet.iter().map(|p| p.clamp(0.0, 1.0)).sum::<f64>()
        }
    };
    p.clamp(0.0, 1.0)
}

/// Per-segment model inputs for one decision: how much time the prediction
/// leaves until the segment's deadline, the clamped throughput prediction
/// for the covering horizon, and the error distribution of that horizon.
#[derive(Debug, Clone)]
pub struct SegmentForecast {
    /// Deadline minus request time, seconds.
    pub deadline_gap_s: f64,
    /// Predicted mean throughput, already clamped to the configured floor.
    pub rho_hat_bps: f64,
    /// Signed-relative-error distribution of the covering horizon.
    pub cdf: ComposedErrorCdf,
}

/// Everything needed to score trajectories for one decision.
///
/// `sizes_bits[q]` lists per-representation sizes of the `q`-th in-horizon
/// segment; `forecasts` matches it index for index. `quality` maps each
/// representation to its score in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct TrajectoryContext<'a> {
    pub sizes_bits: &'a [Vec<u64>],
    pub forecasts: &'a [SegmentForecast],
    pub quality: &'a [f64],
    /// Representation of the most recently downloaded segment, if any.
    pub prev_rep: Option<usize>,
    pub config: &'a AdaptationConfig,
}

impl<'a> TrajectoryContext<'a> {
    fn check(&self) {
        assert!(!self.sizes_bits.is_empty(), "trajectory needs at least one segment");
        assert_eq!(self.sizes_bits.len(), self.forecasts.len());
        assert!(!self.quality.is_empty());
        for row in self.sizes_bits {
            assert_eq!(row.len(), self.quality.len());
        }
    }
}

/// Score components of one trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrajectoryScore {
    pub p_rb: f64,
    pub u_rb: f64,
    pub u_q: f64,
    pub u_qf: f64,
    pub utility: f64,
}

/// Scores `choices` with an arbitrary meet-probability function
/// `phi(q, arg)`; the default evaluation is [`score_trajectory`].
pub fn score_trajectory_with<F>(
    ctx: &TrajectoryContext<'_>,
    choices: &[usize],
    phi: F,
) -> TrajectoryScore
where
    F: Fn(usize, f64) -> f64,
{
    ctx.check();
    assert!(!choices.is_empty() && choices.len() <= ctx.sizes_bits.len());
    let mut meet = Vec::with_capacity(choices.len());
    let mut cum_bits = 0.0;
    for (q, &c) in choices.iter().enumerate() {
        cum_bits += ctx.sizes_bits[q][c] as f64;
        let f = &ctx.forecasts[q];
        let arg = f.rho_hat_bps * f.deadline_gap_s / cum_bits - 1.0;
        meet.push(phi(q, arg).clamp(0.0, 1.0));
    }
    let p_rb = combine_meet_probabilities(&meet, ctx.config.prb_mode);
    finish_score(ctx, choices, p_rb)
}

/// Scores `choices` using the error models attached to the forecasts.
pub fn score_trajectory(ctx: &TrajectoryContext<'_>, choices: &[usize]) -> TrajectoryScore {
    score_trajectory_with(ctx, choices, |q, arg| {
        ctx.forecasts[q].cdf.eval(arg, ctx.config.pu_mode)
    })
}

/// Rebuffering probability of `choices` under the context's aggregation
/// mode.
pub fn rebuffer_probability(ctx: &TrajectoryContext<'_>, choices: &[usize]) -> f64 {
    score_trajectory(ctx, choices).p_rb
}

fn finish_score(ctx: &TrajectoryContext<'_>, choices: &[usize], p_rb: f64) -> TrajectoryScore {
    let u_rb_v = u_rb(p_rb, ctx.config.alpha_rb);
    let u_q_v = u_q(choices, ctx.quality);
    let u_qf_v = u_qf(choices, ctx.quality, ctx.prev_rep);
    TrajectoryScore {
        p_rb,
        u_rb: u_rb_v,
        u_q: u_q_v,
        u_qf: u_qf_v,
        utility: u_rb_v * (ctx.config.alpha_q * u_q_v + (1.0 - ctx.config.alpha_q) * u_qf_v),
    }
}

/// Outcome of a representation search.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    /// Representation chosen for the segment being requested (the first
    /// entry of the best trajectory).
    pub rep: usize,
    pub trajectory: Vec<usize>,
    pub score: TrajectoryScore,
    /// False when the trajectory space exceeded the enumeration cap and a
    /// beam search was used instead.
    pub exhaustive: bool,
}

/// Utility differences below this are treated as ties.
const TIE_EPS: f64 = 1e-12;

/// Returns true when the `new` candidate should replace `old`: higher
/// utility, or on a tie a lower first representation, then fewer
/// representation changes (including the change from the previously played
/// representation). Candidates equal on all keys keep the incumbent, which
/// the searches visit in lexicographic order.
fn replaces(
    new_utility: f64,
    new_first: usize,
    new_switches: u32,
    old_utility: f64,
    old_first: usize,
    old_switches: u32,
) -> bool {
    if new_utility > old_utility + TIE_EPS {
        return true;
    }
    if new_utility < old_utility - TIE_EPS {
        return false;
    }
    if new_first != old_first {
        return new_first < old_first;
    }
    new_switches < old_switches
}

fn count_switches(choices: &[usize], prev_rep: Option<usize>) -> u32 {
    let mut n = 0;
    let mut prev = prev_rep;
    for &c in choices {
        if prev.is_some_and(|p| p != c) {
            n += 1;
        }
        prev = Some(c);
    }
    n
}

struct Best {
    utility: f64,
    first: usize,
    switches: u32,
    choices: Vec<usize>,
    score: TrajectoryScore,
}

/// Searches the trajectory space with an arbitrary meet-probability
/// function; `phi(q, arg)` sees the in-horizon segment index and the
/// relative-headroom argument. [`choose_representation`] binds `phi` to the
/// forecasts' error models.
pub fn choose_representation_with<F>(ctx: &TrajectoryContext<'_>, phi: F) -> Decision
where
    F: Fn(usize, f64) -> f64,
{
    ctx.check();
    let k = ctx.sizes_bits.len();
    let m = ctx.quality.len();
    let count = (m as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
    if count <= ctx.config.enumeration_cap as u128 {
        let mut best: Option<Best> = None;
        let mut path = vec![0usize; k];
        exhaustive(ctx, &phi, 0, 0.0, ProbAcc::identity(ctx.config.prb_mode), &mut path, &mut best);
        let best = best.expect("non-empty trajectory space");
        Decision {
            rep: best.first,
            trajectory: best.choices,
            score: best.score,
            exhaustive: true,
        }
    } else {
        beam(ctx, &phi)
    }
}

/// Searches the trajectory space using the forecasts' error models.
pub fn choose_representation(ctx: &TrajectoryContext<'_>) -> Decision {
    choose_representation_with(ctx, |q, arg| ctx.forecasts[q].cdf.eval(arg, ctx.config.pu_mode))
}

/// Running aggregate of meet probabilities along a trajectory prefix.
#[derive(Clone, Copy)]
enum ProbAcc {
    Product(f64),
    Sum(f64),
}

impl ProbAcc {
    fn identity(mode: PrbMode) -> Self {
        match mode {
            PrbMode::Product => ProbAcc::Product(1.0),
            PrbMode::PaperSumClamped => ProbAcc::Sum(0.0),
        }
    }

    fn push(self, meet: f64) -> Self {
        match self {
            ProbAcc::Product(p) => ProbAcc::Product(p * meet),
            ProbAcc::Sum(s) => ProbAcc::Sum(s + meet),
        }
    }

    fn p_rb(self) -> f64 {
        match self {
            ProbAcc::Product(p) => (1.0 - p).clamp(0.0, 1.0),
            ProbAcc::Sum(s) => (1.0 - s).clamp(0.0, 1.0),
        }
    }
}

/// Depth-first enumeration with incremental prefix state, so shared
/// prefixes are scored once instead of once per leaf.
#[allow(clippy::too_many_arguments)]
fn exhaustive<F>(
    ctx: &TrajectoryContext<'_>,
    phi: &F,
    q: usize,
    cum_bits: f64,
    acc: ProbAcc,
    path: &mut Vec<usize>,
    best: &mut Option<Best>,
) where
    F: Fn(usize, f64) -> f64,
{
    let k = ctx.sizes_bits.len();
    let m = ctx.quality.len();
    for c in 0..m {
        path[q] = c;
        let cum = cum_bits + ctx.sizes_bits[q][c] as f64;
        let f = &ctx.forecasts[q];
        let arg = f.rho_hat_bps * f.deadline_gap_s / cum - 1.0;
        let acc = acc.push(phi(q, arg).clamp(0.0, 1.0));
        if q + 1 < k {
            exhaustive(ctx, phi, q + 1, cum, acc, path, best);
        } else {
            let score = finish_score(ctx, path, acc.p_rb());
            let first = path[0];
            let switches = count_switches(path, ctx.prev_rep);
            let take = match best {
                None => true,
                Some(b) => replaces(score.utility, first, switches, b.utility, b.first, b.switches),
            };
            if take {
                *best = Some(Best {
                    utility: score.utility,
                    first,
                    switches,
                    choices: path.clone(),
                    score,
                });
            }
        }
    }
}

struct BeamEntry {
    choices: Vec<usize>,
    cum_bits: f64,
    acc: ProbAcc,
    switches: u32,
    utility: f64,
}

/// Width-limited greedy layer search for trajectory spaces above the
/// enumeration cap. Each layer keeps the `beam_width` prefixes with the
/// best utility-so-far (scored as if the trajectory ended at the layer).
fn beam<F>(ctx: &TrajectoryContext<'_>, phi: &F) -> Decision
where
    F: Fn(usize, f64) -> f64,
{
    let k = ctx.sizes_bits.len();
    let m = ctx.quality.len();
    let width = ctx.config.beam_width.max(1);
    let mut layer = vec![BeamEntry {
        choices: Vec::new(),
        cum_bits: 0.0,
        acc: ProbAcc::identity(ctx.config.prb_mode),
        switches: 0,
        utility: 0.0,
    }];
    for q in 0..k {
        let mut next = Vec::with_capacity(layer.len() * m);
        for entry in &layer {
            for c in 0..m {
                let mut choices = entry.choices.clone();
                choices.push(c);
                let cum = entry.cum_bits + ctx.sizes_bits[q][c] as f64;
                let f = &ctx.forecasts[q];
                let arg = f.rho_hat_bps * f.deadline_gap_s / cum - 1.0;
                let acc = entry.acc.push(phi(q, arg).clamp(0.0, 1.0));
                let score = finish_score(ctx, &choices, acc.p_rb());
                let prev = if q == 0 { ctx.prev_rep } else { Some(entry.choices[q - 1]) };
                let switches = entry.switches + u32::from(prev.is_some_and(|p| p != c));
                next.push(BeamEntry { choices, cum_bits: cum, acc, switches, utility: score.utility });
            }
        }
        // Exact ordering keeps pruning deterministic across runs.
        next.sort_by(|a, b| {
            b.utility
                .total_cmp(&a.utility)
                .then_with(|| a.choices[0].cmp(&b.choices[0]))
                .then_with(|| a.switches.cmp(&b.switches))
                .then_with(|| a.choices.cmp(&b.choices))
        });
        next.truncate(width);
        layer = next;
    }
    let mut best: Option<Best> = None;
    for entry in layer {
        let score = finish_score(ctx, &entry.choices, entry.acc.p_rb());
        let first = entry.choices[0];
        let take = match &best {
            None => true,
            Some(b) => replaces(score.utility, first, entry.switches, b.utility, b.first, b.switches),
        };
        if take {
            best = Some(Best {
                utility: score.utility,
                first,
                switches: entry.switches,
                choices: entry.choices,
                score,
            });
        }
    }
    let best = best.expect("beam keeps at least one candidate");
    Decision { rep: best.first, trajectory: best.choices, score: best.score, exhaustive: false }
}
