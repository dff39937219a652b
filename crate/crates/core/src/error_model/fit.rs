//! Empirical CDFs, L²-distance fitting and KS validation.

use alloc::vec::Vec;

use super::dist::{truncate, ErrorDistribution, Family, FamilyParams};
use super::ErrorModelError;
use crate::math;

/// Right-continuous empirical CDF over a sample set.
#[derive(Debug, Clone, PartialEq)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

pub fn ecdf(samples: &[f64]) -> Result<Ecdf, ErrorModelError> {
    if samples.is_empty() {
        return Err(ErrorModelError::EmptyInput);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    Ok(Ecdf { sorted })
}

impl Ecdf {
    pub fn n(&self) -> usize {
        self.sorted.len()
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    pub fn eval(&self, x: f64) -> f64 {
        let below = self.sorted.partition_point(|&s| s <= x);
        below as f64 / self.sorted.len() as f64
    }
}

/// Fitting needs this many samples inside the fit range; below it the
/// caller is expected to fall back to a conservative model.
pub const MIN_FIT_SAMPLES: usize = 8;

/// The L² objective is evaluated at the in-range sample points, capped at
/// this many evenly spaced order statistics to bound the refit cost.
const MAX_EVAL_POINTS: usize = 128;

const PARAM_FLOOR: f64 = 1e-6;
const PARAM_CEIL: f64 = 1e9;
const BIG: f64 = 1e100;

#[derive(Clone, Copy)]
enum ParamKind {
    /// Searched in log space.
    Positive,
    /// Searched linearly, bracket scaled by the sample spread.
    Location,
}

fn kinds(family: Family) -> &'static [ParamKind] {
    match family {
        Family::Exponential => &[ParamKind::Positive],
        Family::Normal | Family::Logistic => &[ParamKind::Location, ParamKind::Positive],
        Family::Lomax => &[ParamKind::Positive, ParamKind::Positive],
    }
}

fn to_params(family: Family, raw: &[f64]) -> FamilyParams {
    match family {
        Family::Exponential => FamilyParams::Exponential { rate: raw[0] },
        Family::Normal => FamilyParams::Normal { mean: raw[0], std: raw[1] },
        Family::Logistic => FamilyParams::Logistic { location: raw[0], scale: raw[1] },
        Family::Lomax => FamilyParams::Lomax { scale: raw[0], shape: raw[1] },
    }
}

/// Raw coordinate vector of `params` when it belongs to `family`.
fn from_params(family: Family, params: &FamilyParams) -> Option<Vec<f64>> {
    match (family, params) {
        (Family::Exponential, FamilyParams::Exponential { rate }) => Some(alloc::vec![*rate]),
        (Family::Normal, FamilyParams::Normal { mean, std }) => Some(alloc::vec![*mean, *std]),
        (Family::Logistic, FamilyParams::Logistic { location, scale }) => {
            Some(alloc::vec![*location, *scale])
        }
        (Family::Lomax, FamilyParams::Lomax { scale, shape }) => Some(alloc::vec![*scale, *shape]),
        _ => None,
    }
}

/// Three fixed moment-based starting points per family.
fn starts(family: Family, in_range: &[f64]) -> [Vec<f64>; 3] {
    let m = math::mean(in_range);
    let s = math::sample_std(in_range).max(PARAM_FLOOR);
    let med = math::median(in_range).max(PARAM_FLOOR);
    let mpos = m.max(PARAM_FLOOR);
    match family {
        Family::Exponential => [
            alloc::vec![1.0 / mpos],
            alloc::vec![2.0 / mpos],
            alloc::vec![0.5 / mpos],
        ],
        Family::Normal => [
            alloc::vec![m, s],
            alloc::vec![m, 2.0 * s],
            alloc::vec![med, 0.5 * s],
        ],
        Family::Logistic => {
            let sl = s * libm::sqrt(3.0) / core::f64::consts::PI;
            [
                alloc::vec![m, sl],
                alloc::vec![m, 2.0 * sl],
                alloc::vec![med, 0.5 * sl],
            ]
        }
        Family::Lomax => [
            alloc::vec![med, 1.5],
            alloc::vec![2.0 * med, 3.0],
            alloc::vec![0.5 * med, 1.0],
        ],
    }
}

/// Deterministic coordinate descent: golden sections per coordinate, log
/// space for positive parameters, until a full sweep stops improving.
fn coordinate_descent<F: FnMut(&[f64]) -> f64>(
    mut obj: F,
    start: Vec<f64>,
    kinds: &[ParamKind],
    spread: f64,
) -> (Vec<f64>, f64) {
    let mut theta = start;
    for t in theta.iter_mut() {
        *t = t.clamp(-PARAM_CEIL, PARAM_CEIL);
    }
    let mut val = obj(&theta);
    for _ in 0..60 {
        let before = val;
        for i in 0..theta.len() {
            let eval_at = |x: f64, theta: &mut Vec<f64>, obj: &mut F| {
                let old = theta[i];
                theta[i] = x;
                let v = obj(theta);
                theta[i] = old;
                v
            };
            let (best_x, best_v) = match kinds[i] {
                ParamKind::Positive => {
                    let z0 = libm::log(theta[i].max(PARAM_FLOOR));
                    let (z, v) = math::golden_min(
                        |z| eval_at(libm::exp(z).clamp(PARAM_FLOOR, PARAM_CEIL), &mut theta, &mut obj),
                        z0 - 2.8,
                        z0 + 2.8,
                        1e-9,
                    );
                    (libm::exp(z).clamp(PARAM_FLOOR, PARAM_CEIL), v)
                }
                ParamKind::Location => {
                    let w = 4.0 * spread;
                    let x0 = theta[i];
                    math::golden_min(
                        |x| eval_at(x, &mut theta, &mut obj),
                        x0 - w,
                        x0 + w,
                        w * 1e-9 + 1e-12,
                    )
                }
            };
            if best_v < val {
                theta[i] = best_x;
                val = best_v;
            }
        }
        // Ridge rescue: a joint move along the all-coordinates diagonal
        // (in the same transformed space) where axis-aligned steps stall.
        if theta.len() > 1 {
            let base = theta.clone();
            let apply = |t: f64, base: &[f64]| -> Vec<f64> {
                base.iter()
                    .zip(kinds)
                    .map(|(&x, k)| match k {
                        ParamKind::Positive => {
                            (libm::exp(libm::log(x.max(PARAM_FLOOR)) + t))
                                .clamp(PARAM_FLOOR, PARAM_CEIL)
                        }
                        ParamKind::Location => x + t * spread,
                    })
                    .collect()
            };
            let (t, v) = math::golden_min(|t| obj(&apply(t, &base)), -2.8, 2.8, 1e-9);
            if v < val {
                theta = apply(t, &base);
                val = v;
            }
        }
        if before - val < 1e-13 * val.abs().max(1.0) {
            break;
        }
    }
    (theta, val)
}

/// Fits `family` to the samples falling inside `fit_range` by minimizing the
/// squared distance between the family CDF and the empirical CDF, both
/// conditioned on the fit range and evaluated at the sample points. The
/// returned distribution is truncated to `truncation`.
pub fn fit_distribution(
    samples: &[f64],
    family: Family,
    truncation: (f64, f64),
    fit_range: (f64, f64),
) -> Result<ErrorDistribution, ErrorModelError> {
    fit_distribution_warm(samples, family, truncation, fit_range, None)
}

/// [`fit_distribution`] with an optional warm start. When `warm` holds
/// parameters of the requested family, the search starts only from them;
/// callers refitting a slowly drifting sample window use this to avoid
/// paying for the full multi-start search on every refit.
pub fn fit_distribution_warm(
    samples: &[f64],
    family: Family,
    truncation: (f64, f64),
    fit_range: (f64, f64),
    warm: Option<&FamilyParams>,
) -> Result<ErrorDistribution, ErrorModelError> {
    let lo = fit_range.0.max(truncation.0);
    let hi = fit_range.1.min(truncation.1);
    let mut in_range: Vec<f64> = samples
        .iter()
        .copied()
        .filter(|x| (lo..=hi).contains(x))
        .collect();
    if in_range.len() < MIN_FIT_SAMPLES {
        return Err(ErrorModelError::TooFewSamples {
            needed: MIN_FIT_SAMPLES,
            got: in_range.len(),
        });
    }
    in_range.sort_unstable_by(f64::total_cmp);

    let n_in = in_range.len();
    let idx_count = n_in.min(MAX_EVAL_POINTS);
    let points: Vec<(f64, f64)> = (0..idx_count)
        .map(|j| {
            let k = if idx_count == n_in { j } else { j * (n_in - 1) / (idx_count - 1) };
            (in_range[k], (k + 1) as f64 / n_in as f64)
        })
        .collect();

    let mut objective = |raw: &[f64]| -> f64 {
        let d = match ErrorDistribution::new(to_params(family, raw)) {
            Ok(d) => d,
            Err(_) => return BIG,
        };
        let flo = d.raw_cdf(lo);
        let fhi = d.raw_cdf(hi);
        if !(fhi - flo > 1e-300) {
            return BIG;
        }
        let mut sum = 0.0;
        for &(x, target) in &points {
            let e = (d.raw_cdf(x) - flo) / (fhi - flo) - target;
            sum += e * e;
        }
        if sum.is_finite() {
            sum
        } else {
            BIG
        }
    };

    let spread = math::sample_std(&in_range).max(PARAM_FLOOR);
    let start_list: Vec<Vec<f64>> = match warm.and_then(|p| from_params(family, p)) {
        Some(w) => alloc::vec![w],
        None => starts(family, &in_range).into_iter().collect(),
    };
    let mut best: Option<(Vec<f64>, f64)> = None;
    for start in start_list {
        let (theta, val) = coordinate_descent(&mut objective, start, kinds(family), spread);
        if best.as_ref().is_none_or(|(_, bv)| val < *bv) {
            best = Some((theta, val));
        }
    }
    let (theta, val) = best.expect("fixed starts are non-empty");
    if !val.is_finite() || val >= BIG {
        return Err(ErrorModelError::FitDiverged);
    }
    let fitted = ErrorDistribution::new(to_params(family, &theta))
        .map_err(|_| ErrorModelError::FitDiverged)?;
    truncate(&fitted, truncation.0, truncation.1)
}

/// Kolmogorov-Smirnov distance between the sample ECDF and `dist`: the
/// largest of both one-sided gaps at every sample point.
pub fn ks_distance(samples: &[f64], dist: &ErrorDistribution) -> Result<f64, ErrorModelError> {
    if samples.is_empty() {
        return Err(ErrorModelError::EmptyInput);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = dist.cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn ecdf_basics() {
        assert_eq!(ecdf(&[]).unwrap_err(), ErrorModelError::EmptyInput);
        let f = ecdf(&[1.0]).unwrap();
        assert_eq!(f.eval(0.999), 0.0);
        assert_eq!(f.eval(1.0), 1.0);
        let f = ecdf(&[1.0, 2.0]).unwrap();
        assert_eq!(f.eval(1.0), 0.5);
        assert_eq!(f.eval(2.0), 1.0);
        // Permutation invariance.
        assert_eq!(ecdf(&[3.0, 1.0, 2.0]).unwrap(), ecdf(&[1.0, 2.0, 3.0]).unwrap());
    }

    fn lomax_samples(scale: f64, shape: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let u: f64 = rng.gen();
                scale * (libm::pow(1.0 - u, -1.0 / shape) - 1.0)
            })
            .collect()
    }

    #[test]
    fn ks_of_single_median_sample() {
        let d = ErrorDistribution::new(FamilyParams::Logistic { location: 2.0, scale: 1.0 }).unwrap();
        assert!(close(ks_distance(&[2.0], &d).unwrap(), 0.5, 1e-12));
    }

    #[test]
    fn ks_of_quantile_grid_samples() {
        let d = ErrorDistribution::new(FamilyParams::Lomax { scale: 0.8, shape: 1.7 }).unwrap();
        let n = 40;
        let samples: Vec<f64> = (1..=n).map(|i| d.quantile(i as f64 / (n + 1) as f64)).collect();
        let ks = ks_distance(&samples, &d).unwrap();
        assert!(ks <= 1.0 / (n + 1) as f64 + 1e-9, "ks={ks}");
    }

    #[test]
    fn needs_eight_samples_in_range() {
        let samples = vec![0.5; 7];
        let err = fit_distribution(&samples, Family::Normal, (0.0, 1.0), (0.1, 1.0)).unwrap_err();
        assert_eq!(err, ErrorModelError::TooFewSamples { needed: 8, got: 7 });
        // Samples exist but sit outside the fit range.
        let samples = vec![0.05; 50];
        let err = fit_distribution(&samples, Family::Normal, (0.0, 1.0), (0.1, 1.0)).unwrap_err();
        assert_eq!(err, ErrorModelError::TooFewSamples { needed: 8, got: 0 });
    }

    #[test]
    fn point_mass_drives_normal_to_clamp() {
        let samples = vec![0.3; 20];
        let d = fit_distribution(&samples, Family::Normal, (0.0, 1.0), (0.1, 1.0)).unwrap();
        match d.params() {
            FamilyParams::Normal { mean, std } => {
                assert!(close(mean, 0.3, 0.01), "mean={mean}");
                assert!(std <= 1e-4, "std={std}");
            }
            p => panic!("unexpected params {p:?}"),
        }
    }

    #[test]
    fn recovers_lomax_parameters() {
        // Fitting over the full support identifies both parameters; a
        // bounded fit window would leave a scale/shape ridge.
        let samples = lomax_samples(0.5, 2.0, 5000, 12);
        let full = (0.0, f64::INFINITY);
        let d = fit_distribution(&samples, Family::Lomax, full, full).unwrap();
        let FamilyParams::Lomax { scale, shape } = d.params() else {
            panic!("wrong family")
        };
        assert!((scale / 0.5 - 1.0).abs() <= 0.15, "scale={scale}");
        assert!((shape / 2.0 - 1.0).abs() <= 0.15, "shape={shape}");

        // A normal fit to the same heavy-tailed data validates worse.
        let nd = fit_distribution(&samples, Family::Normal, full, full).unwrap();
        let ks_lomax = ks_distance(&samples, &d).unwrap();
        let ks_normal = ks_distance(&samples, &nd).unwrap();
        assert!(ks_lomax < ks_normal, "lomax {ks_lomax} vs normal {ks_normal}");
    }

    #[test]
    fn fitting_is_deterministic() {
        let samples = lomax_samples(1.2, 1.1, 600, 7);
        let a = fit_distribution(&samples, Family::Lomax, (0.0, f64::INFINITY), (0.1, 2.0)).unwrap();
        let b = fit_distribution(&samples, Family::Lomax, (0.0, f64::INFINITY), (0.1, 2.0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn exponential_fit_recovers_rate() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let samples: Vec<f64> = (0..4000)
            .map(|_| {
                let u: f64 = rng.gen();
                -libm::log1p(-u) / 3.0
            })
            .collect();
        let d = fit_distribution(&samples, Family::Exponential, (0.0, f64::INFINITY), (0.0, 2.0)).unwrap();
        let FamilyParams::Exponential { rate } = d.params() else {
            panic!("wrong family")
        };
        assert!((rate / 3.0 - 1.0).abs() < 0.1, "rate={rate}");
    }
}
