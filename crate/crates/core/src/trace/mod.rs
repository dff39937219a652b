//! Measured throughput traces, windowed series and summary statistics.
//!
//! A trace stores one `u64` per second: the number of bytes the link
//! delivered during `[t, t+1)`. Fractional-time queries (`bits_between`,
//! `time_to_deliver`) treat delivery as fluid, i.e. bytes arrive uniformly
//! within each one-second sample.

pub mod synth;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::math;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceError {
    /// Traces must contain at least one sample.
    EmptyTrace,
    ZeroWindow,
    WindowTooLarge { window_s: u64, duration_s: u64 },
    /// Statistics need at least three values.
    DegenerateSeries { len: usize },
}

impl fmt::Display for TraceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceError::EmptyTrace => write!(f, "trace contains no samples"),
            TraceError::ZeroWindow => write!(f, "window length must be at least one second"),
            TraceError::WindowTooLarge { window_s, duration_s } => write!(
                f,
                "window of {window_s} s does not fit into a trace of {duration_s} s"
            ),
            TraceError::DegenerateSeries { len } => {
                write!(f, "series of length {len} is too short for statistics (need >= 3)")
            }
        }
    }
}

impl core::error::Error for TraceError {}

/// A per-second downlink capacity trace.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ThroughputTrace {
    id: String,
    /// `bytes[t]` were delivered during `[t, t+1)`.
    bytes: Vec<u64>,
}

impl ThroughputTrace {
    pub fn new(id: impl Into<String>, bytes: Vec<u64>) -> Result<Self, TraceError> {
        if bytes.is_empty() {
            return Err(TraceError::EmptyTrace);
        }
        Ok(ThroughputTrace { id: id.into(), bytes })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn duration_s(&self) -> u64 {
        self.bytes.len() as u64
    }

    pub fn bytes(&self) -> &[u64] {
        &self.bytes
    }

    pub fn total_bytes(&self) -> u64 {
        self.bytes.iter().sum()
    }

    /// Mean throughput in bit/s over the whole-second window `[start, end)`.
    pub fn mean_bps(&self, start: u64, end: u64) -> f64 {
        debug_assert!(start < end && end <= self.duration_s());
        let total: u64 = self.bytes[start as usize..end as usize].iter().sum();
        8.0 * total as f64 / (end - start) as f64
    }

    /// Bits delivered during `[t1, t2]` under the fluid model. Times are
    /// clamped to the trace; nothing is delivered past its end.
    pub fn bits_between(&self, t1: f64, t2: f64) -> f64 {
        let d = self.duration_s() as f64;
        let t1 = t1.clamp(0.0, d);
        let t2 = t2.clamp(0.0, d);
        if t2 <= t1 {
            return 0.0;
        }
        let first = t1 as usize;
        let last = (libm::ceil(t2) as usize).min(self.bytes.len());
        let mut bits = 0.0;
        for (k, &b) in self.bytes[first..last].iter().enumerate() {
            let k = (first + k) as f64;
            let overlap = (t2.min(k + 1.0) - t1.max(k)).max(0.0);
            bits += 8.0 * b as f64 * overlap;
        }
        bits
    }

    /// Earliest time `t >= from` by which `bits` have been delivered, or
    /// `None` if the trace ends first.
    pub fn time_to_deliver(&self, bits: f64, from: f64) -> Option<f64> {
        let from = from.max(0.0);
        if bits <= 0.0 {
            return if from <= self.duration_s() as f64 { Some(from) } else { None };
        }
        let mut remaining = bits;
        let mut k = from as usize;
        while k < self.bytes.len() {
            let rate = 8.0 * self.bytes[k] as f64;
            let start = from.max(k as f64);
            let avail = rate * ((k + 1) as f64 - start);
            if avail >= remaining {
                return Some(start + remaining / rate);
            }
            remaining -= avail;
            k += 1;
        }
        None
    }
}

/// Sliding-window mean throughput, one value per second of window start.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedSeries {
    window_s: u64,
    values: Vec<f64>,
}

impl WindowedSeries {
    pub fn window_s(&self) -> u64 {
        self.window_s
    }

    /// `values()[t]` is the mean throughput in bit/s over `[t, t + window_s)`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Sliding-window averaging with a step of one second. Windows overlap for
/// `window_s > 1`; a trace of duration `D` yields `D - window_s + 1` values.
pub fn window(trace: &ThroughputTrace, window_s: u64) -> Result<WindowedSeries, TraceError> {
    if window_s == 0 {
        return Err(TraceError::ZeroWindow);
    }
    let d = trace.duration_s();
    if window_s > d {
        return Err(TraceError::WindowTooLarge { window_s, duration_s: d });
    }
    let w = window_s as usize;
    let bytes = trace.bytes();
    let mut sum: u64 = bytes[..w].iter().sum();
    let mut values = Vec::with_capacity(bytes.len() - w + 1);
    values.push(8.0 * sum as f64 / window_s as f64);
    for t in w..bytes.len() {
        sum += bytes[t];
        sum -= bytes[t - w];
        values.push(8.0 * sum as f64 / window_s as f64);
    }
    Ok(WindowedSeries { window_s, values })
}

/// Summary statistics of a windowed series.
///
/// `acf1` is the lag-one Pearson autocorrelation of the series itself and
/// `acf1_diff` that of its first difference. Both use the common single-mean
/// estimator `sum((x_t - m)(x_{t+1} - m)) / sum((x_t - m)^2)` and are `None`
/// when the underlying series is constant.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TraceStatistics {
    pub median_bps: f64,
    /// Coefficient of variation (sample std / mean); zero for an all-zero series.
    pub cv: f64,
    pub acf1: Option<f64>,
    pub acf1_diff: Option<f64>,
}

fn acf1(xs: &[f64]) -> Option<f64> {
    if xs.len() < 3 {
        return None;
    }
    let m = math::mean(xs);
    let den: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    if den <= 0.0 {
        return None;
    }
    let num: f64 = xs.windows(2).map(|p| (p[0] - m) * (p[1] - m)).sum();
    Some(num / den)
}

pub fn statistics(series: &WindowedSeries) -> Result<TraceStatistics, TraceError> {
    let xs = series.values();
    if xs.len() < 3 {
        return Err(TraceError::DegenerateSeries { len: xs.len() });
    }
    let mean = math::mean(xs);
    let cv = if mean > 0.0 { math::sample_std(xs) / mean } else { 0.0 };
    let diffs: Vec<f64> = xs.windows(2).map(|p| p[1] - p[0]).collect();
    Ok(TraceStatistics {
        median_bps: math::median(xs),
        cv,
        acf1: acf1(xs),
        acf1_diff: acf1(&diffs),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn rejects_empty_trace() {
        assert_eq!(ThroughputTrace::new("x", vec![]), Err(TraceError::EmptyTrace));
    }

    #[test]
    fn mean_bps_over_whole_seconds() {
        let tr = ThroughputTrace::new("t", vec![1000, 2000, 3000]).unwrap();
        assert_eq!(tr.duration_s(), 3);
        assert_eq!(tr.total_bytes(), 6000);
        assert!(close(tr.mean_bps(0, 2), 12_000.0, 1e-9));
        assert!(close(tr.mean_bps(2, 3), 24_000.0, 1e-9));
    }

    #[test]
    fn fluid_bits_between() {
        let tr = ThroughputTrace::new("t", vec![1000, 2000]).unwrap();
        // 0.5 s at 8 kbit/s plus 0.25 s at 16 kbit/s.
        assert!(close(tr.bits_between(0.5, 1.25), 8000.0, 1e-9));
        // Clamped to the trace end.
        assert!(close(tr.bits_between(1.0, 5.0), 16_000.0, 1e-9));
        assert_eq!(tr.bits_between(1.5, 1.5), 0.0);
    }

    #[test]
    fn fluid_delivery_times() {
        let tr = ThroughputTrace::new("t", vec![1000, 2000]).unwrap();
        assert!(close(tr.time_to_deliver(8000.0, 0.5).unwrap(), 1.25, 1e-12));
        assert_eq!(tr.time_to_deliver(0.0, 0.5), Some(0.5));
        // More bits than the trace carries.
        assert_eq!(tr.time_to_deliver(1e9, 0.0), None);
        // A zero-rate second is skipped.
        let tr = ThroughputTrace::new("t", vec![0, 1000]).unwrap();
        assert!(close(tr.time_to_deliver(800.0, 0.0).unwrap(), 1.1, 1e-12));
    }

    #[test]
    fn delivery_and_integration_agree() {
        let tr = ThroughputTrace::new("t", vec![500, 0, 1500, 250, 1000]).unwrap();
        for &(bits, from) in &[(100.0, 0.0), (4000.0, 0.3), (9000.0, 1.7), (2.0, 4.9)] {
            let t = tr.time_to_deliver(bits, from).unwrap();
            assert!(close(tr.bits_between(from, t), bits, 1e-6), "bits={bits} from={from}");
        }
    }

    #[test]
    fn window_lengths_and_means() {
        let tr = ThroughputTrace::new("t", vec![1000, 2000, 3000, 4000]).unwrap();
        let w1 = window(&tr, 1).unwrap();
        assert_eq!(w1.values(), &[8000.0, 16_000.0, 24_000.0, 32_000.0]);
        let w3 = window(&tr, 3).unwrap();
        assert_eq!(w3.len(), 2);
        assert!(close(w3.values()[0], 16_000.0, 1e-9));
        assert!(close(w3.values()[1], 24_000.0, 1e-9));
        assert_eq!(window(&tr, 0), Err(TraceError::ZeroWindow));
        assert_eq!(
            window(&tr, 5),
            Err(TraceError::WindowTooLarge { window_s: 5, duration_s: 4 })
        );
    }

    #[test]
    fn statistics_of_constant_series() {
        let tr = ThroughputTrace::new("t", vec![1000; 10]).unwrap();
        let s = statistics(&window(&tr, 1).unwrap()).unwrap();
        assert_eq!(s.median_bps, 8000.0);
        assert_eq!(s.cv, 0.0);
        assert_eq!(s.acf1, None);
        assert_eq!(s.acf1_diff, None);
    }

    #[test]
    fn statistics_of_alternating_series() {
        let tr = ThroughputTrace::new("t", vec![1000, 2000, 1000, 2000, 1000, 2000]).unwrap();
        let s = statistics(&window(&tr, 1).unwrap()).unwrap();
        // Independent evaluation of the single-mean estimator: with six
        // alternating values, every adjacent product is -0.25 * (8000)^2 and
        // the denominator is 6 * 0.25 * (8000)^2, hence -5/6.
        assert!(close(s.acf1.unwrap(), -5.0 / 6.0, 1e-12));
        assert!(s.acf1.unwrap() < 0.0);
        assert_eq!(s.median_bps, 12_000.0);
    }

    #[test]
    fn diff_of_linear_ramp_is_constant() {
        let tr = ThroughputTrace::new("t", vec![1000, 2000, 3000, 4000, 5000]).unwrap();
        let s = statistics(&window(&tr, 1).unwrap()).unwrap();
        assert!(s.acf1.unwrap() > 0.0);
        // The first difference is constant, so its autocorrelation is undefined.
        assert_eq!(s.acf1_diff, None);
    }

    #[test]
    fn too_short_for_statistics() {
        let tr = ThroughputTrace::new("t", vec![1000, 2000]).unwrap();
        assert_eq!(
            statistics(&window(&tr, 1).unwrap()),
            Err(TraceError::DegenerateSeries { len: 2 })
        );
    }
}
