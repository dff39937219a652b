//! Deterministic synthetic throughput traces.
//!
//! Real cellular downlink traces combine slow regime changes (cell load,
//! handovers), fast fluctuation around the regime level, and a short-term
//! alternation that makes the first difference anticorrelated. The generator
//! reproduces those three ingredients multiplicatively:
//!
//! ```text
//! x_t = mean_bps * R_t * N_t * A_t
//! ```
//!
//! * `R_t` — a symmetric two-point Markov regime `{1-c, 1+c}` flipping with
//!   probability `regime_switch_rate` per second,
//! * `N_t` — i.i.d. lognormal noise with unit mean,
//! * `A_t` — a deterministic alternation `1 ± d`.
//!
//! The log-variance budget `ln(1 + cv_target^2)` is split across the three
//! factors, with `diff_anticorrelation` steering how much goes into the
//! alternation. The finished series is rescaled so its realized mean matches
//! `mean_bps` exactly (up to byte rounding).

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use super::ThroughputTrace;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SyntheticTraceSpec {
    pub id: String,
    pub seed: u64,
    pub duration_s: u32,
    pub mean_bps: f64,
    /// Target coefficient of variation of the per-second series.
    pub cv_target: f64,
    /// Per-second probability of flipping between the two regime levels.
    pub regime_switch_rate: f64,
    /// Strength in [0, 1] of the alternating component that drives the
    /// lag-one autocorrelation of the first difference negative.
    pub diff_anticorrelation: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SynthError {
    InvalidSpec { reason: &'static str },
}

impl fmt::Display for SynthError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SynthError::InvalidSpec { reason } => write!(f, "invalid trace spec: {reason}"),
        }
    }
}

impl core::error::Error for SynthError {}

impl SyntheticTraceSpec {
    fn validate(&self) -> Result<(), SynthError> {
        let err = |reason| Err(SynthError::InvalidSpec { reason });
        if self.duration_s == 0 {
            return err("duration_s must be positive");
        }
        if !(self.mean_bps > 0.0) || !self.mean_bps.is_finite() {
            return err("mean_bps must be positive and finite");
        }
        if !(0.0..=10.0).contains(&self.cv_target) {
            return err("cv_target must lie in [0, 10]");
        }
        if !(0.0..=1.0).contains(&self.regime_switch_rate) {
            return err("regime_switch_rate must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.diff_anticorrelation) {
            return err("diff_anticorrelation must lie in [0, 1]");
        }
        Ok(())
    }
}

/// One standard normal draw via Box-Muller.
pub(crate) fn standard_normal(rng: &mut ChaCha12Rng) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]
    let u2: f64 = rng.gen();
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * core::f64::consts::PI * u2)
}

pub fn generate_trace(spec: &SyntheticTraceSpec) -> Result<ThroughputTrace, SynthError> {
    spec.validate()?;
    let n = spec.duration_s as usize;

    if spec.cv_target == 0.0 {
        let per_second = libm::round(spec.mean_bps / 8.0) as u64;
        let bytes = alloc::vec![per_second; n];
        return ThroughputTrace::new(spec.id.clone(), bytes)
            .map_err(|_| SynthError::InvalidSpec { reason: "duration_s must be positive" });
    }

    // Split the log-variance budget across alternation, regime and noise.
    let budget = libm::log(1.0 + spec.cv_target * spec.cv_target);
    let alt_share = 0.4 * spec.diff_anticorrelation;
    let reg_share = 0.6 * (1.0 - alt_share);
    let d = libm::sqrt(libm::exp(alt_share * budget) - 1.0).min(0.9);
    let c = libm::sqrt(libm::exp(reg_share * budget) - 1.0).min(0.95);
    let sigma2 = (budget
        - libm::log(1.0 + d * d)
        - libm::log(1.0 + c * c))
    .max(0.0);
    let sigma = libm::sqrt(sigma2);

    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let mut regime_high = rng.gen::<bool>();
    let mut xs = Vec::with_capacity(n);
    for t in 0..n {
        if rng.gen::<f64>() < spec.regime_switch_rate {
            regime_high = !regime_high;
        }
        let r = if regime_high { 1.0 + c } else { 1.0 - c };
        let noise = libm::exp(sigma * standard_normal(&mut rng) - sigma2 / 2.0);
        let a = if t % 2 == 0 { 1.0 + d } else { 1.0 - d };
        xs.push(r * noise * a);
    }

    // Pin the realized mean to the requested one; scaling leaves the CV and
    // the autocorrelations untouched.
    let realized = xs.iter().sum::<f64>() / n as f64;
    let scale = spec.mean_bps / realized;
    let bytes: Vec<u64> = xs
        .iter()
        .map(|x| libm::round(x * scale / 8.0).max(0.0) as u64)
        .collect();
    ThroughputTrace::new(spec.id.clone(), bytes)
        .map_err(|_| SynthError::InvalidSpec { reason: "duration_s must be positive" })
}

/// Ten bundled trace specifications: 30 minutes each, wide mean spread,
/// strong fluctuation (target CV 0.7) and anticorrelated differences.
pub fn bundled_suite() -> Vec<SyntheticTraceSpec> {
    (0..10u32)
        .map(|k| SyntheticTraceSpec {
            id: alloc::format!("synth-{:02}", k + 1),
            seed: 101 + k as u64,
            duration_s: 1800,
            mean_bps: 0.9e6 + 0.3e6 * k as f64,
            cv_target: 0.7,
            regime_switch_rate: 0.02,
            diff_anticorrelation: 0.6,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{statistics, window};

    #[test]
    fn generation_is_deterministic() {
        let spec = &bundled_suite()[0];
        let a = generate_trace(spec).unwrap();
        let b = generate_trace(spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_cv_gives_constant_trace() {
        let spec = SyntheticTraceSpec {
            id: "const".into(),
            seed: 7,
            duration_s: 100,
            mean_bps: 2.0e6,
            cv_target: 0.0,
            regime_switch_rate: 0.0,
            diff_anticorrelation: 0.0,
        };
        let tr = generate_trace(&spec).unwrap();
        assert!(tr.bytes().iter().all(|&b| b == 250_000));
    }

    #[test]
    fn realized_statistics_track_targets() {
        for spec in bundled_suite() {
            let tr = generate_trace(&spec).unwrap();
            assert_eq!(tr.duration_s(), 1800);
            let stats = statistics(&window(&tr, 1).unwrap()).unwrap();
            let mean = tr.mean_bps(0, tr.duration_s());
            assert!(
                (mean / spec.mean_bps - 1.0).abs() < 0.01,
                "{}: realized mean {mean} vs target {}",
                spec.id,
                spec.mean_bps
            );
            assert!(
                (stats.cv / spec.cv_target - 1.0).abs() < 0.3,
                "{}: realized cv {} vs target {}",
                spec.id,
                stats.cv,
                spec.cv_target
            );
            assert!(stats.acf1_diff.unwrap() < 0.0, "{}", spec.id);
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut spec = bundled_suite()[0].clone();
        spec.cv_target = -1.0;
        assert!(generate_trace(&spec).is_err());
        spec.cv_target = 0.5;
        spec.duration_s = 0;
        assert!(generate_trace(&spec).is_err());
        spec.duration_s = 10;
        spec.regime_switch_rate = 1.5;
        assert!(generate_trace(&spec).is_err());
    }
}
