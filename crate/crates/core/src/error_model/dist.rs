//! Parametric error distributions with optional truncation.

use super::ErrorModelError;
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Family {
    Exponential,
    Normal,
    Logistic,
    Lomax,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum FamilyParams {
    Exponential { rate: f64 },
    Normal { mean: f64, std: f64 },
    Logistic { location: f64, scale: f64 },
    /// Shifted Pareto: `F(x) = 1 - (1 + x/scale)^-shape` for `x >= 0`.
    Lomax { scale: f64, shape: f64 },
}

impl FamilyParams {
    pub fn family(&self) -> Family {
        match self {
            FamilyParams::Exponential { .. } => Family::Exponential,
            FamilyParams::Normal { .. } => Family::Normal,
            FamilyParams::Logistic { .. } => Family::Logistic,
            FamilyParams::Lomax { .. } => Family::Lomax,
        }
    }
}

/// A distribution from one of the four families, truncated to `[lo, hi]`
/// (`lo`/`hi` may be infinite). The truncated CDF is
/// `(F(x) - F(lo)) / (F(hi) - F(lo))` clamped to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ErrorDistribution {
    params: FamilyParams,
    trunc_lo: f64,
    trunc_hi: f64,
}

impl ErrorDistribution {
    pub fn new(params: FamilyParams) -> Result<Self, ErrorModelError> {
        let invalid = |reason| Err(ErrorModelError::InvalidParams { reason });
        match params {
            FamilyParams::Exponential { rate } if !(rate > 0.0) => {
                return invalid("exponential rate must be positive")
            }
            FamilyParams::Normal { std, .. } if !(std > 0.0) => {
                return invalid("normal std must be positive")
            }
            FamilyParams::Logistic { scale, .. } if !(scale > 0.0) => {
                return invalid("logistic scale must be positive")
            }
            FamilyParams::Lomax { scale, shape } if !(scale > 0.0 && shape > 0.0) => {
                return invalid("lomax scale and shape must be positive")
            }
            _ => {}
        }
        Ok(ErrorDistribution {
            params,
            trunc_lo: f64::NEG_INFINITY,
            trunc_hi: f64::INFINITY,
        })
    }

    pub fn family(&self) -> Family {
        self.params.family()
    }

    pub fn params(&self) -> FamilyParams {
        self.params
    }

    pub fn truncation(&self) -> (f64, f64) {
        (self.trunc_lo, self.trunc_hi)
    }

    /// CDF of the untruncated family.
    pub fn raw_cdf(&self, x: f64) -> f64 {
        match self.params {
            FamilyParams::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -libm::expm1(-rate * x)
                }
            }
            FamilyParams::Normal { mean, std } => math::normal_cdf((x - mean) / std),
            FamilyParams::Logistic { location, scale } => {
                1.0 / (1.0 + libm::exp(-(x - location) / scale))
            }
            FamilyParams::Lomax { scale, shape } => {
                if x <= 0.0 {
                    0.0
                } else {
                    1.0 - libm::pow(1.0 + x / scale, -shape)
                }
            }
        }
    }

    fn raw_quantile(&self, p: f64) -> f64 {
        debug_assert!((0.0..=1.0).contains(&p));
        match self.params {
            FamilyParams::Exponential { rate } => {
                if p >= 1.0 {
                    f64::INFINITY
                } else {
                    -libm::log1p(-p) / rate
                }
            }
            FamilyParams::Normal { mean, std } => {
                if p <= 0.0 {
                    f64::NEG_INFINITY
                } else if p >= 1.0 {
                    f64::INFINITY
                } else {
                    mean + std * math::normal_quantile(p)
                }
            }
            FamilyParams::Logistic { location, scale } => {
                if p <= 0.0 {
                    f64::NEG_INFINITY
                } else if p >= 1.0 {
                    f64::INFINITY
                } else {
                    location + scale * libm::log(p / (1.0 - p))
                }
            }
            FamilyParams::Lomax { scale, shape } => {
                if p >= 1.0 {
                    f64::INFINITY
                } else {
                    scale * (libm::pow(1.0 - p, -1.0 / shape) - 1.0)
                }
            }
        }
    }

    fn mass(&self) -> (f64, f64) {
        (self.raw_cdf(self.trunc_lo), self.raw_cdf(self.trunc_hi))
    }

    /// CDF after truncation.
    pub fn cdf(&self, x: f64) -> f64 {
        if x < self.trunc_lo {
            return 0.0;
        }
        if x >= self.trunc_hi {
            return 1.0;
        }
        let (flo, fhi) = self.mass();
        ((self.raw_cdf(x) - flo) / (fhi - flo)).clamp(0.0, 1.0)
    }

    /// Quantile function consistent with the truncated CDF.
    pub fn quantile(&self, p: f64) -> f64 {
        let (flo, fhi) = self.mass();
        let q = self.raw_quantile(flo + p.clamp(0.0, 1.0) * (fhi - flo));
        q.clamp(self.trunc_lo, self.trunc_hi)
    }
}

/// Restricts `dist` to `[a, b]` (intersected with any existing truncation)
/// and renormalizes. Fails if the interval carries no probability mass.
pub fn truncate(dist: &ErrorDistribution, a: f64, b: f64) -> Result<ErrorDistribution, ErrorModelError> {
    let lo = a.max(dist.trunc_lo);
    let hi = b.min(dist.trunc_hi);
    if !(dist.raw_cdf(hi) > dist.raw_cdf(lo)) {
        return Err(ErrorModelError::DegenerateTruncation);
    }
    Ok(ErrorDistribution { params: dist.params, trunc_lo: lo, trunc_hi: hi })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn dist(params: FamilyParams) -> ErrorDistribution {
        ErrorDistribution::new(params).unwrap()
    }

    #[test]
    fn parameter_validation() {
        assert!(ErrorDistribution::new(FamilyParams::Exponential { rate: 0.0 }).is_err());
        assert!(ErrorDistribution::new(FamilyParams::Normal { mean: 0.0, std: -1.0 }).is_err());
        assert!(ErrorDistribution::new(FamilyParams::Logistic { location: 0.0, scale: 0.0 }).is_err());
        assert!(ErrorDistribution::new(FamilyParams::Lomax { scale: 1.0, shape: 0.0 }).is_err());
    }

    #[test]
    fn lomax_closed_form_basics() {
        let d = dist(FamilyParams::Lomax { scale: 1.0, shape: 1.0 });
        assert!(close(d.cdf(1.0), 0.5, 1e-12));
        assert_eq!(d.cdf(-0.5), 0.0);
        let t = truncate(&d, 0.0, f64::INFINITY).unwrap();
        // Truncating to the full support changes nothing.
        for x in [0.0, 0.3, 1.0, 7.5] {
            assert!(close(t.cdf(x), d.cdf(x), 1e-12));
        }
    }

    #[test]
    fn wide_normal_truncated_to_unit_interval() {
        let d = dist(FamilyParams::Normal { mean: 0.5, std: 10.0 });
        let t = truncate(&d, 0.0, 1.0).unwrap();
        assert!(close(t.cdf(0.5), 0.5, 1e-12));
        assert_eq!(t.cdf(-0.1), 0.0);
        assert_eq!(t.cdf(1.0), 1.0);
    }

    #[test]
    fn nested_truncation_collapses() {
        let d = dist(FamilyParams::Logistic { location: 0.2, scale: 0.4 });
        let outer = truncate(&d, -1.0, 3.0).unwrap();
        let nested = truncate(&outer, 0.0, 1.5).unwrap();
        let direct = truncate(&d, 0.0, 1.5).unwrap();
        for i in 0..=30 {
            let x = -0.5 + i as f64 * 0.1;
            assert!(close(nested.cdf(x), direct.cdf(x), 1e-12), "x={x}");
        }
    }

    #[test]
    fn degenerate_truncation_is_rejected() {
        let d = dist(FamilyParams::Exponential { rate: 2.0 });
        assert_eq!(truncate(&d, -5.0, -1.0).unwrap_err(), ErrorModelError::DegenerateTruncation);
        assert_eq!(truncate(&d, 3.0, 3.0).unwrap_err(), ErrorModelError::DegenerateTruncation);
    }

    #[test]
    fn quantiles_invert_the_truncated_cdf() {
        let cases = [
            truncate(&dist(FamilyParams::Exponential { rate: 1.7 }), 0.1, 4.0).unwrap(),
            truncate(&dist(FamilyParams::Normal { mean: 0.4, std: 0.3 }), 0.0, 1.0).unwrap(),
            truncate(&dist(FamilyParams::Logistic { location: 0.0, scale: 0.25 }), -0.9, 2.0).unwrap(),
            dist(FamilyParams::Lomax { scale: 0.5, shape: 2.0 }),
        ];
        for d in cases {
            for i in 1..20 {
                let p = i as f64 / 20.0;
                let x = d.quantile(p);
                assert!(close(d.cdf(x), p, 1e-9), "{:?} p={p}: x={x} cdf={}", d.family(), d.cdf(x));
            }
        }
    }

    #[test]
    fn lomax_cdf_matches_integrated_density() {
        // Composite Simpson integration of the density, accumulated over a
        // grid of 100 evaluation points.
        let (scale, shape) = (0.7, 2.3);
        let d = dist(FamilyParams::Lomax { scale, shape });
        let pdf = |x: f64| shape / scale * libm::pow(1.0 + x / scale, -shape - 1.0);
        let mut acc = 0.0;
        let mut prev = 0.0;
        for i in 1..=100 {
            let x = i as f64 * 0.05;
            let panels = 400;
            let h = (x - prev) / panels as f64;
            let mut s = pdf(prev) + pdf(x);
            for k in 1..panels {
                let xe = prev + k as f64 * h;
                s += pdf(xe) * if k % 2 == 1 { 4.0 } else { 2.0 };
            }
            acc += s * h / 3.0;
            prev = x;
            assert!(close(d.cdf(x), acc, 1e-9), "x={x}: {} vs {acc}", d.cdf(x));
        }
    }
}
