//! Short-term throughput predictors.
//!
//! All predictors consume a slice of past mean-throughput measurements
//! `x_1..x_n` (oldest first), each averaged over one prediction horizon, and
//! forecast the mean throughput over the next horizon:
//!
//! * `sma` — mean of the past values (arithmetic, geometric or harmonic);
//! * `ses` — simple exponential smoothing, with the smoothing weight tuned
//!   on the past values themselves;
//! * `linext` — least-squares line through `(k, x_k)`, evaluated at `n + 1`;
//! * `hw` — Holt's double exponential smoothing (level + trend), both
//!   weights tuned on the past values.
//!
//! Tuning minimizes the mean squared one-step-ahead forecast error over the
//! supplied history; ties are resolved towards the smallest weights.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::math;
use crate::trace::ThroughputTrace;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PredictError {
    TooFewSamples { needed: usize, got: usize },
    /// The trace cannot accommodate history plus horizon at any issue time.
    SeriesTooShort { needed_s: u64, got_s: u64 },
    ZeroHorizon,
    BadSpec(String),
}

impl fmt::Display for PredictError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredictError::TooFewSamples { needed, got } => {
                write!(f, "predictor needs {needed} past values, got {got}")
            }
            PredictError::SeriesTooShort { needed_s, got_s } => {
                write!(f, "trace of {got_s} s is too short, need at least {needed_s} s")
            }
            PredictError::ZeroHorizon => write!(f, "prediction horizon must be positive"),
            PredictError::BadSpec(s) => write!(f, "bad predictor spec: {s}"),
        }
    }
}

impl core::error::Error for PredictError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum MeanKind {
    Arithmetic,
    Geometric,
    Harmonic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum PredictorKind {
    Sma(MeanKind),
    Ses,
    LinExt,
    HoltWinters,
}

/// A predictor plus the number of past horizon-sized averages it consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PredictorSpec {
    pub kind: PredictorKind,
    pub n_past: usize,
}

impl PredictorSpec {
    pub fn new(kind: PredictorKind, n_past: usize) -> Result<Self, PredictError> {
        let needed = min_past(kind);
        if n_past < needed {
            return Err(PredictError::TooFewSamples { needed, got: n_past });
        }
        Ok(PredictorSpec { kind, n_past })
    }
}

fn min_past(kind: PredictorKind) -> usize {
    match kind {
        PredictorKind::Sma(_) => 1,
        PredictorKind::Ses | PredictorKind::LinExt => 2,
        PredictorKind::HoltWinters => 3,
    }
}

impl fmt::Display for PredictorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            PredictorKind::Sma(mean) => {
                let m = match mean {
                    MeanKind::Arithmetic => "ar",
                    MeanKind::Geometric => "gm",
                    MeanKind::Harmonic => "hm",
                };
                write!(f, "sma:{}:{m}", self.n_past)
            }
            PredictorKind::Ses => write!(f, "ses:{}", self.n_past),
            PredictorKind::LinExt => write!(f, "linext:{}", self.n_past),
            PredictorKind::HoltWinters => write!(f, "hw:{}", self.n_past),
        }
    }
}

impl FromStr for PredictorSpec {
    type Err = PredictError;

    /// Parses `sma:<n>:<ar|gm|hm>`, `ses:<n>`, `linext:<n>` or `hw:<n>`.
    fn from_str(s: &str) -> Result<Self, PredictError> {
        let bad = || PredictError::BadSpec(s.to_string());
        let parts: Vec<&str> = s.split(':').collect();
        let n: usize = parts.get(1).and_then(|p| p.parse().ok()).ok_or_else(bad)?;
        let kind = match (parts.first().copied(), parts.len()) {
            (Some("sma"), 3) => {
                let mean = match parts[2] {
                    "ar" => MeanKind::Arithmetic,
                    "gm" => MeanKind::Geometric,
                    "hm" => MeanKind::Harmonic,
                    _ => return Err(bad()),
                };
                PredictorKind::Sma(mean)
            }
            (Some("ses"), 2) => PredictorKind::Ses,
            (Some("linext"), 2) => PredictorKind::LinExt,
            (Some("hw"), 2) => PredictorKind::HoltWinters,
            _ => return Err(bad()),
        };
        PredictorSpec::new(kind, n).map_err(|_| bad())
    }
}

/// A forecast plus a flag marking that a geometric/harmonic mean fell back
/// to the arithmetic mean because of non-positive samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub value_bps: f64,
    pub used_fallback: bool,
}

pub fn predict(spec: &PredictorSpec, past: &[f64]) -> Result<Prediction, PredictError> {
    let needed = min_past(spec.kind);
    if past.len() < needed {
        return Err(PredictError::TooFewSamples { needed, got: past.len() });
    }
    let plain = |value_bps| Prediction { value_bps, used_fallback: false };
    Ok(match spec.kind {
        PredictorKind::Sma(mean) => predict_sma(past, mean),
        PredictorKind::Ses => plain(predict_ses(past).value),
        PredictorKind::LinExt => plain(predict_linext(past)),
        PredictorKind::HoltWinters => plain(predict_hw(past).value),
    })
}

fn predict_sma(past: &[f64], mean: MeanKind) -> Prediction {
    let n = past.len() as f64;
    let all_positive = past.iter().all(|&x| x > 0.0);
    match mean {
        MeanKind::Arithmetic => Prediction { value_bps: math::mean(past), used_fallback: false },
        MeanKind::Geometric if all_positive => {
            let log_mean = past.iter().map(|&x| libm::log(x)).sum::<f64>() / n;
            Prediction { value_bps: libm::exp(log_mean), used_fallback: false }
        }
        MeanKind::Harmonic if all_positive => {
            let inv_sum: f64 = past.iter().map(|&x| 1.0 / x).sum();
            Prediction { value_bps: n / inv_sum, used_fallback: false }
        }
        // Geometric/harmonic means are undefined with zero samples (e.g.
        // outage seconds); fall back to the arithmetic mean and say so.
        _ => Prediction { value_bps: math::mean(past), used_fallback: true },
    }
}

/// Exponentially smoothed level for a fixed weight: `a_1 = x_1`,
/// `a_k = alpha x_k + (1 - alpha) a_{k-1}`. Returns the mean squared
/// one-step forecast error (forecast for `x_k` is `a_{k-1}`) and the final
/// level, which is also the forecast for `x_{n+1}`.
pub(crate) fn ses_run(xs: &[f64], alpha: f64) -> (f64, f64) {
    let mut level = xs[0];
    let mut sq = 0.0;
    for &x in &xs[1..] {
        let e = x - level;
        sq += e * e;
        level = alpha * x + (1.0 - alpha) * level;
    }
    (sq / (xs.len() - 1) as f64, level)
}

/// Double exponential smoothing for fixed weights: `a_2 = x_2`,
/// `b_2 = x_2 - x_1`, then `a_k = alpha x_k + (1-alpha)(a_{k-1} + b_{k-1})`
/// and `b_k = beta (a_k - a_{k-1}) + (1-beta) b_{k-1}`. Returns the mean
/// squared one-step error (forecast for `x_k` is `a_{k-1} + b_{k-1}`) and
/// the forecast `a_n + b_n`.
pub(crate) fn hw_run(xs: &[f64], alpha: f64, beta: f64) -> (f64, f64) {
    let mut level = xs[1];
    let mut trend = xs[1] - xs[0];
    let mut sq = 0.0;
    for &x in &xs[2..] {
        let forecast = level + trend;
        let e = x - forecast;
        sq += e * e;
        let next_level = alpha * x + (1.0 - alpha) * forecast;
        trend = beta * (next_level - level) + (1.0 - beta) * trend;
        level = next_level;
    }
    let n = xs.len();
    let mse = if n > 2 { sq / (n - 2) as f64 } else { 0.0 };
    (mse, level + trend)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TunedForecast {
    pub value: f64,
    pub alpha: f64,
    pub beta: f64,
    pub mse: f64,
}

fn tie_eps(v: f64) -> f64 {
    1e-12 * v.abs().max(1.0)
}

/// Minimize over [0, 1]: coarse 0.05 grid, golden-section refinement around
/// the best grid points, ties resolved towards the smaller argument.
fn tune_weight<F: FnMut(f64) -> f64>(mut f: F) -> (f64, f64) {
    let grid: Vec<(f64, f64)> = (0..=20).map(|i| {
        let x = i as f64 * 0.05;
        (x, f(x))
    }).collect();
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| grid[a].1.partial_cmp(&grid[b].1).unwrap());

    let mut best = grid[order[0]];
    let consider = |cand: (f64, f64), best: &mut (f64, f64)| {
        let eps = tie_eps(best.1);
        if cand.1 < best.1 - eps || (cand.1 <= best.1 + eps && cand.0 < best.0) {
            *best = cand;
        }
    };
    for &i in order.iter().take(3) {
        let (x, _) = grid[i];
        let lo = (x - 0.05).max(0.0);
        let hi = (x + 0.05).min(1.0);
        let cand = math::golden_min(&mut f, lo, hi, 1e-9);
        consider(cand, &mut best);
    }
    for &g in &grid {
        consider(g, &mut best);
    }
    best
}

/// Minimize over the unit square: coarse 0.05 grid, then coordinate descent
/// (full-range golden sections) from the best grid cells, each sweep capped
/// off with a line search along its net displacement so tilted valleys
/// converge instead of zigzagging. Ties prefer the lexicographically
/// smaller `(alpha, beta)`.
fn tune_weights_2d<F: FnMut(f64, f64) -> f64>(mut f: F) -> (f64, f64, f64) {
    let mut grid = Vec::with_capacity(441);
    for i in 0..=20 {
        for j in 0..=20 {
            let a = i as f64 * 0.05;
            let b = j as f64 * 0.05;
            grid.push((a, b, f(a, b)));
        }
    }
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&p, &q| grid[p].2.partial_cmp(&grid[q].2).unwrap());

    let mut best = grid[order[0]];
    let consider = |cand: (f64, f64, f64), best: &mut (f64, f64, f64)| {
        let eps = tie_eps(best.2);
        let better = cand.2 < best.2 - eps;
        let tied = cand.2 <= best.2 + eps;
        let lex_smaller = cand.0 < best.0 - 1e-15
            || ((cand.0 - best.0).abs() <= 1e-15 && cand.1 < best.1);
        if better || (tied && lex_smaller) {
            *best = cand;
        }
    };

    for &i in order.iter().take(5) {
        let (mut a, mut b, mut v) = grid[i];
        for _ in 0..40 {
            let (a0, b0, v0) = (a, b, v);
            let (na, va) = math::golden_min(|x| f(x, b), 0.0, 1.0, 1e-10);
            if va < v {
                a = na;
                v = va;
            }
            let (nb, vb) = math::golden_min(|x| f(a, x), 0.0, 1.0, 1e-10);
            if vb < v {
                b = nb;
                v = vb;
            }
            // Axis-aligned steps zigzag across valleys that run diagonally;
            // a search along the sweep's combined direction cuts straight
            // down them (Powell's acceleration).
            let (da, db) = (a - a0, b - b0);
            if da != 0.0 || db != 0.0 {
                let mut t_lo = -16.0f64;
                let mut t_hi = 16.0f64;
                for (x0, dx) in [(a0, da), (b0, db)] {
                    if dx != 0.0 {
                        let (e0, e1) = (-x0 / dx, (1.0 - x0) / dx);
                        t_lo = t_lo.max(e0.min(e1));
                        t_hi = t_hi.min(e0.max(e1));
                    }
                }
                if t_hi - t_lo > 1e-12 {
                    let at = |t: f64| (a0 + t * da).clamp(0.0, 1.0);
                    let bt = |t: f64| (b0 + t * db).clamp(0.0, 1.0);
                    let (t, vt) =
                        math::golden_min(|t| f(at(t), bt(t)), t_lo, t_hi, 1e-10 * (t_hi - t_lo));
                    if vt < v {
                        a = at(t);
                        b = bt(t);
                        v = vt;
                    }
                }
            }
            if v0 - v <= 1e-15 * v.abs().max(1.0) {
                break;
            }
        }
        consider((a, b, v), &mut best);
    }
    for &g in &grid {
        consider(g, &mut best);
    }
    best
}

/// Exponential smoothing with the weight tuned on the past values.
pub fn predict_ses(past: &[f64]) -> TunedForecast {
    assert!(past.len() >= 2);
    let (alpha, mse) = tune_weight(|a| ses_run(past, a).0);
    let (_, value) = ses_run(past, alpha);
    TunedForecast { value, alpha, beta: 0.0, mse }
}

/// Least-squares line through `(1, x_1) .. (n, x_n)`, evaluated at `n + 1`.
pub fn predict_linext(past: &[f64]) -> f64 {
    assert!(past.len() >= 2);
    let n = past.len() as f64;
    let k_mean = 0.5 * (n + 1.0);
    let x_mean = math::mean(past);
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &x) in past.iter().enumerate() {
        let dk = (i + 1) as f64 - k_mean;
        num += dk * (x - x_mean);
        den += dk * dk;
    }
    let slope = num / den;
    x_mean + slope * (n + 1.0 - k_mean)
}

/// Double exponential smoothing with both weights tuned on the past values.
pub fn predict_hw(past: &[f64]) -> TunedForecast {
    assert!(past.len() >= 3);
    let (alpha, beta, mse) = tune_weights_2d(|a, b| hw_run(past, a, b).0);
    let (_, value) = hw_run(past, alpha, beta);
    TunedForecast { value, alpha, beta, mse }
}

/// Signed relative prediction error. Both the prediction and the actual
/// throughput are clamped from below by `rho_min_bps`, so the error is
/// defined even across outages; the result is always greater than -1, with
/// positive values marking overestimation.
pub fn signed_relative_error(rho_hat_bps: f64, rho_bps: f64, rho_min_bps: f64) -> f64 {
    debug_assert!(rho_min_bps > 0.0);
    let hat = rho_hat_bps.max(rho_min_bps);
    let actual = rho_bps.max(rho_min_bps);
    (hat - actual) / actual
}

/// One prediction replayed against a trace.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PredictionRecord {
    pub t_issued_s: u64,
    pub horizon_s: u64,
    pub rho_hat_bps: f64,
    pub rho_actual_bps: f64,
    pub signed_error: f64,
    pub used_fallback: bool,
}

/// Replays a predictor over a trace: at every second `t` where enough
/// history exists, the predictor sees the last `n_past` non-overlapping
/// horizon-length block means ending at `t` (oldest first) and forecasts the
/// mean throughput over `[t, t + horizon)`.
pub fn evaluate_predictor(
    trace: &ThroughputTrace,
    spec: &PredictorSpec,
    horizon_s: u64,
    rho_min_bps: f64,
) -> Result<Vec<PredictionRecord>, PredictError> {
    if horizon_s == 0 {
        return Err(PredictError::ZeroHorizon);
    }
    let needed = (spec.n_past as u64 + 1) * horizon_s;
    let d = trace.duration_s();
    if d < needed {
        return Err(PredictError::SeriesTooShort { needed_s: needed, got_s: d });
    }
    let mut past = Vec::with_capacity(spec.n_past);
    let mut records = Vec::new();
    for t in spec.n_past as u64 * horizon_s..=d - horizon_s {
        past.clear();
        for k in (1..=spec.n_past as u64).rev() {
            past.push(trace.mean_bps(t - k * horizon_s, t - (k - 1) * horizon_s));
        }
        let p = predict(spec, &past)?;
        let actual = trace.mean_bps(t, t + horizon_s);
        records.push(PredictionRecord {
            t_issued_s: t,
            horizon_s,
            rho_hat_bps: p.value_bps,
            rho_actual_bps: actual,
            signed_error: signed_relative_error(p.value_bps, actual, rho_min_bps),
            used_fallback: p.used_fallback,
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn spec(s: &str) -> PredictorSpec {
        s.parse().unwrap()
    }

    #[test]
    fn spec_parsing_round_trips() {
        for s in ["sma:1:ar", "sma:10:gm", "sma:3:hm", "ses:5", "linext:2", "hw:4"] {
            assert_eq!(spec(s).to_string(), s);
        }
        for s in ["", "sma", "sma:3", "sma:3:xx", "ses:1", "hw:2", "linext:1", "avg:3", "ses:x"] {
            assert!(s.parse::<PredictorSpec>().is_err(), "{s:?} should not parse");
        }
    }

    #[test]
    fn sliding_means() {
        let xs = [2.0, 8.0];
        assert_eq!(predict_sma(&xs, MeanKind::Arithmetic).value_bps, 5.0);
        assert!(close(predict_sma(&xs, MeanKind::Geometric).value_bps, 4.0, 1e-12));
        assert!(close(predict_sma(&xs, MeanKind::Harmonic).value_bps, 3.2, 1e-12));
    }

    #[test]
    fn degenerate_means_fall_back_to_arithmetic() {
        let xs = [0.0, 8.0];
        for kind in [MeanKind::Geometric, MeanKind::Harmonic] {
            let p = predict_sma(&xs, kind);
            assert_eq!(p.value_bps, 4.0);
            assert!(p.used_fallback);
        }
        assert!(!predict_sma(&xs, MeanKind::Arithmetic).used_fallback);
    }

    #[test]
    fn ses_flat_history_prefers_smallest_weight() {
        // MSE is independent of alpha here, so the tie-break picks 0.
        let f = predict_ses(&[4.0, 4.0, 8.0]);
        assert_eq!(f.alpha, 0.0);
        assert_eq!(f.value, 4.0);
        let f = predict_ses(&[3.0, 3.0, 3.0, 3.0]);
        assert_eq!(f.alpha, 0.0);
        assert_eq!(f.value, 3.0);
    }

    #[test]
    fn ses_tracks_strong_trend_with_large_weight() {
        let f = predict_ses(&[1.0, 2.0, 4.0, 8.0, 16.0]);
        assert!(f.alpha > 0.9, "alpha = {}", f.alpha);
        assert!(f.value > 10.0);
    }

    #[test]
    fn ses_alpha_one_reduces_to_last_value() {
        let xs = [5.0, 1.0, 7.0, 3.0];
        let (_, level) = ses_run(&xs, 1.0);
        assert_eq!(level, 3.0);
        assert_eq!(level, predict_sma(&xs[3..], MeanKind::Arithmetic).value_bps);
    }

    #[test]
    fn linext_recovers_affine_inputs() {
        let xs: Vec<f64> = (1..=5).map(|k| 3.0 + 2.0 * k as f64).collect();
        assert!(close(predict_linext(&xs), 15.0, 1e-12));
        let xs = [7.0, 7.0];
        assert!(close(predict_linext(&xs), 7.0, 1e-12));
    }

    #[test]
    fn hw_recovers_affine_inputs_for_every_weight() {
        let xs: Vec<f64> = (1..=6).map(|k| 10.0 - 1.5 * k as f64).collect();
        for i in 0..=10 {
            for j in 0..=10 {
                let (mse, forecast) = hw_run(&xs, i as f64 / 10.0, j as f64 / 10.0);
                assert!(mse < 1e-18);
                assert!(close(forecast, 10.0 - 1.5 * 7.0, 1e-9));
            }
        }
        let f = predict_hw(&xs);
        assert!(close(f.value, -0.5, 1e-9));
        // The whole square ties at zero MSE, so the smallest weights win.
        assert_eq!((f.alpha, f.beta), (0.0, 0.0));
    }

    #[test]
    fn constant_inputs_return_the_constant() {
        let xs = [6.0; 5];
        for s in ["sma:5:ar", "sma:5:gm", "sma:5:hm", "ses:5", "linext:5", "hw:5"] {
            let p = predict(&spec(s), &xs).unwrap();
            assert!(close(p.value_bps, 6.0, 1e-9), "{s}: {}", p.value_bps);
        }
    }

    #[test]
    fn tuned_weights_beat_a_fine_grid() {
        let inputs: [&[f64]; 4] = [
            &[3.0, 1.0, 4.0, 1.5, 9.2],
            &[2.0, 2.5, 3.1, 2.2],
            &[10.0, 1.0, 10.0, 1.0, 10.0, 1.0],
            &[1.0, 4.0, 2.0],
        ];
        for xs in inputs {
            let f = predict_ses(xs);
            let grid_best = (0..=1000)
                .map(|i| ses_run(xs, i as f64 / 1000.0).0)
                .fold(f64::INFINITY, f64::min);
            assert!(f.mse <= grid_best + 1e-9, "ses {xs:?}: {} vs {grid_best}", f.mse);

            let f = predict_hw(xs);
            let mut grid_best = f64::INFINITY;
            for i in 0..=100 {
                for j in 0..=100 {
                    grid_best = grid_best.min(hw_run(xs, i as f64 / 100.0, j as f64 / 100.0).0);
                }
            }
            assert!(f.mse <= grid_best + 1e-9, "hw {xs:?}: {} vs {grid_best}", f.mse);
        }
    }

    #[test]
    fn relative_error_examples() {
        let e = signed_relative_error(1.2e6, 1.0e6, 1e4);
        assert!(close(e, 0.2, 1e-12));
        let e = signed_relative_error(0.8e6, 1.0e6, 1e4);
        assert!(close(e, -0.2, 1e-12));
        // Actual below the floor: denominator is the floor.
        let e = signed_relative_error(5.0e4, 0.0, 1e4);
        assert!(close(e, 4.0, 1e-12));
        // Both below the floor: no error.
        assert_eq!(signed_relative_error(1e3, 5e2, 1e4), 0.0);
    }

    #[test]
    fn relative_error_is_bounded_below() {
        for hat in [0.0, 1e3, 1e5, 1e7] {
            for actual in [0.0, 1e3, 1e5, 1e7] {
                let e = signed_relative_error(hat, actual, 1e4);
                assert!(e > -1.0);
            }
        }
    }

    #[test]
    fn replay_over_constant_trace_is_exact() {
        let tr = ThroughputTrace::new("t", vec![1250; 20]).unwrap();
        let recs = evaluate_predictor(&tr, &spec("sma:3:ar"), 2, 1e4).unwrap();
        // Issue times 6..=18 inclusive.
        assert_eq!(recs.len(), 13);
        assert_eq!(recs[0].t_issued_s, 6);
        assert_eq!(recs.last().unwrap().t_issued_s, 18);
        for r in &recs {
            assert_eq!(r.rho_hat_bps, 10_000.0);
            assert_eq!(r.signed_error, 0.0);
        }
    }

    #[test]
    fn replay_builds_block_means_from_the_right_windows() {
        // bytes 0..10 -> per-second bps 0, 8, 16, ...
        let tr = ThroughputTrace::new("t", (0..10u64).collect::<Vec<_>>()).unwrap();
        let recs = evaluate_predictor(&tr, &spec("sma:2:ar"), 2, 1e-6).unwrap();
        let r = &recs[0];
        assert_eq!(r.t_issued_s, 4);
        // Past blocks [0,2) and [2,4): means 4 and 20 bits/s; actual [4,6): 36.
        assert_eq!(r.rho_hat_bps, 12.0);
        assert_eq!(r.rho_actual_bps, 36.0);
        assert!(close(r.signed_error, (12.0 - 36.0) / 36.0, 1e-12));
    }

    #[test]
    fn replay_needs_enough_trace() {
        let tr = ThroughputTrace::new("t", vec![100; 7]).unwrap();
        assert_eq!(
            evaluate_predictor(&tr, &spec("sma:3:ar"), 2, 1e4),
            Err(PredictError::SeriesTooShort { needed_s: 8, got_s: 7 })
        );
        assert!(evaluate_predictor(&tr, &spec("sma:3:ar"), 0, 1e4).is_err());
    }
}
