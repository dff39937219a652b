//! Per-session online error model: sliding window, sign statistics and the
//! composed error CDF.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use super::dist::{truncate, ErrorDistribution, Family, FamilyParams};
use super::fit::fit_distribution_warm;
use super::ErrorModelError;
use crate::predictor::PredictionRecord;

/// Fit range for overestimation errors.
pub const OVER_FIT_RANGE: (f64, f64) = (0.1, 2.0);
/// Fit range for the magnitude of underestimation errors.
pub const UNDER_FIT_RANGE: (f64, f64) = (0.1, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Under,
    Over,
}

impl Sign {
    /// Zero counts as underestimation: acting as if the link delivers no
    /// more than predicted is the safe side for rebuffering.
    pub fn of(signed_error: f64) -> Sign {
        if signed_error <= 0.0 {
            Sign::Under
        } else {
            Sign::Over
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignProbabilities {
    /// Marginal probability of underestimation.
    pub p_under: f64,
    /// `P(under | previous was under)`; `None` without under-origin transitions.
    pub p_under_given_under: Option<f64>,
    /// `P(over | previous was over)`; `None` without over-origin transitions.
    pub p_over_given_over: Option<f64>,
}

/// Marginal and first-order conditional sign probabilities of an ordered
/// error sequence, by transition counting.
pub fn conditional_sign_probabilities(errors: &[f64]) -> Result<SignProbabilities, ErrorModelError> {
    if errors.len() < 2 {
        return Err(ErrorModelError::TooFewSamples { needed: 2, got: errors.len() });
    }
    let signs: Vec<Sign> = errors.iter().map(|&e| Sign::of(e)).collect();
    let under = signs.iter().filter(|&&s| s == Sign::Under).count();
    let mut from_under = 0usize;
    let mut under_under = 0usize;
    let mut from_over = 0usize;
    let mut over_over = 0usize;
    for w in signs.windows(2) {
        match (w[0], w[1]) {
            (Sign::Under, next) => {
                from_under += 1;
                under_under += (next == Sign::Under) as usize;
            }
            (Sign::Over, next) => {
                from_over += 1;
                over_over += (next == Sign::Over) as usize;
            }
        }
    }
    let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
    Ok(SignProbabilities {
        p_under: under as f64 / signs.len() as f64,
        p_under_given_under: ratio(under_under, from_under),
        p_over_given_over: ratio(over_over, from_over),
    })
}

/// Which probability weighs the under/over branches of the composed CDF.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum PuMode {
    Marginal,
    /// Condition on the sign of the most recent error, falling back to the
    /// marginal when the relevant transition was never observed.
    #[default]
    Conditional,
}

/// Immutable snapshot of a fitted error model. Evaluating it composes the
/// under/over branch distributions into one CDF over the signed error:
///
/// ```text
/// Phi(x) = p_u * (1 - Phi_u(|x|))         for x < 0
///          p_u + (1 - p_u) * Phi_o(x)     for x >= 0
/// ```
///
/// which is nondecreasing, 0 at -1 and 1 at infinity.
#[derive(Debug, Clone, PartialEq)]
pub struct ComposedErrorCdf {
    /// Distribution of the magnitude of underestimation errors, on [0, 1].
    pub phi_under: ErrorDistribution,
    /// Distribution of overestimation errors, on [0, inf).
    pub phi_over: ErrorDistribution,
    pub p_under: f64,
    pub p_under_given_under: Option<f64>,
    pub p_over_given_over: Option<f64>,
    pub last_sign: Option<Sign>,
    pub under_is_fallback: bool,
    pub over_is_fallback: bool,
}

/// Near point mass at zero: pessimistically assumes underestimations are
/// negligible in magnitude.
fn fallback_under() -> ErrorDistribution {
    let d = ErrorDistribution::new(FamilyParams::Exponential { rate: 1e6 }).unwrap();
    truncate(&d, 0.0, 1.0).unwrap()
}

/// Heavy-tailed overestimation model for cold starts.
fn fallback_over() -> ErrorDistribution {
    let d = ErrorDistribution::new(FamilyParams::Lomax { scale: 0.5, shape: 1.5 }).unwrap();
    truncate(&d, 0.0, f64::INFINITY).unwrap()
}

impl ComposedErrorCdf {
    /// The model used before any error has been observed.
    pub fn conservative_fallback() -> Self {
        ComposedErrorCdf {
            phi_under: fallback_under(),
            phi_over: fallback_over(),
            p_under: 0.5,
            p_under_given_under: None,
            p_over_given_over: None,
            last_sign: None,
            under_is_fallback: true,
            over_is_fallback: true,
        }
    }

    pub fn effective_p_under(&self, mode: PuMode) -> f64 {
        let p = match (mode, self.last_sign) {
            (PuMode::Conditional, Some(Sign::Under)) => {
                self.p_under_given_under.unwrap_or(self.p_under)
            }
            (PuMode::Conditional, Some(Sign::Over)) => {
                self.p_over_given_over.map(|p| 1.0 - p).unwrap_or(self.p_under)
            }
            _ => self.p_under,
        };
        p.clamp(0.0, 1.0)
    }

    pub fn eval(&self, x: f64, mode: PuMode) -> f64 {
        let pu = self.effective_p_under(mode);
        if x < 0.0 {
            pu * (1.0 - self.phi_under.cdf(-x))
        } else {
            pu + (1.0 - pu) * self.phi_over.cdf(x)
        }
    }
}

/// Sliding-window error model for one prediction horizon.
///
/// `update` ingests realized predictions and evicts anything older than
/// `window_s`; the fitted snapshot is recomputed lazily on the next read,
/// so at most once per update.
#[derive(Debug, Clone)]
pub struct ErrorModelState {
    horizon_s: u64,
    window_s: f64,
    under_family: Family,
    over_family: Family,
    pu_mode: PuMode,
    /// (t_issued_s, signed_error), oldest first.
    history: VecDeque<(u64, f64)>,
    /// All-session error magnitudes, kept as the first fallback tier when
    /// the window holds too few samples of a side.
    session_under_abs: Vec<f64>,
    session_over: Vec<f64>,
    snapshot: ComposedErrorCdf,
    dirty: bool,
    /// Last successful fit per side, reused as the warm start of the next
    /// refit so sliding-window refits skip the multi-start search.
    warm_under: Option<FamilyParams>,
    warm_over: Option<FamilyParams>,
}

impl ErrorModelState {
    /// Families follow the empirical best fits: logistic underestimation
    /// magnitudes at the one-second horizon, normal above it, heavy-tailed
    /// (Lomax) overestimations everywhere.
    pub fn new(horizon_s: u64, window_s: f64) -> Self {
        let under_family = if horizon_s <= 1 { Family::Logistic } else { Family::Normal };
        Self::with_families(horizon_s, window_s, under_family, Family::Lomax)
    }

    pub fn with_families(
        horizon_s: u64,
        window_s: f64,
        under_family: Family,
        over_family: Family,
    ) -> Self {
        ErrorModelState {
            horizon_s,
            window_s,
            under_family,
            over_family,
            pu_mode: PuMode::default(),
            history: VecDeque::new(),
            session_under_abs: Vec::new(),
            session_over: Vec::new(),
            snapshot: ComposedErrorCdf::conservative_fallback(),
            dirty: false,
            warm_under: None,
            warm_over: None,
        }
    }

    pub fn set_pu_mode(&mut self, mode: PuMode) {
        self.pu_mode = mode;
    }

    pub fn pu_mode(&self) -> PuMode {
        self.pu_mode
    }

    pub fn horizon_s(&self) -> u64 {
        self.horizon_s
    }

    pub fn window_s(&self) -> f64 {
        self.window_s
    }

    pub fn history_len(&self) -> usize {
        self.history.len()
    }

    /// Ingests a realized prediction record and evicts records whose age at
    /// `now_s` exceeds the window.
    pub fn update(&mut self, record: &PredictionRecord, now_s: u64) -> Result<(), ErrorModelError> {
        if record.horizon_s != self.horizon_s {
            return Err(ErrorModelError::HorizonMismatch {
                expected: self.horizon_s,
                got: record.horizon_s,
            });
        }
        let cutoff = now_s as f64 - self.window_s;
        while let Some(&(t, _)) = self.history.front() {
            if (t as f64) < cutoff {
                self.history.pop_front();
            } else {
                break;
            }
        }
        self.history.push_back((record.t_issued_s, record.signed_error));
        let e = record.signed_error;
        if e <= 0.0 {
            self.session_under_abs.push(-e);
        } else {
            self.session_over.push(e);
        }
        self.dirty = true;
        Ok(())
    }

    /// Current fitted snapshot; refits first if updates arrived since the
    /// last read.
    pub fn snapshot(&mut self) -> &ComposedErrorCdf {
        if self.dirty {
            self.refit();
            self.dirty = false;
        }
        &self.snapshot
    }

    /// The composed error CDF at `x`, using the state's probability mode.
    pub fn composed_cdf(&mut self, x: f64) -> f64 {
        let mode = self.pu_mode;
        self.snapshot().eval(x, mode)
    }

    fn refit(&mut self) {
        let errors: Vec<f64> = self.history.iter().map(|&(_, e)| e).collect();
        let (p_under, p_uu, p_oo) = match conditional_sign_probabilities(&errors) {
            Ok(sp) => (sp.p_under, sp.p_under_given_under, sp.p_over_given_over),
            Err(_) => match errors.first() {
                Some(&e) => (if e <= 0.0 { 1.0 } else { 0.0 }, None, None),
                None => (0.5, None, None),
            },
        };

        let under_abs: Vec<f64> = errors.iter().filter(|&&e| e <= 0.0).map(|&e| -e).collect();
        let over: Vec<f64> = errors.iter().filter(|&&e| e > 0.0).copied().collect();

        let (phi_under, under_is_fallback, under_fitted) = fit_tiered(
            &under_abs,
            &self.session_under_abs,
            self.under_family,
            (0.0, 1.0),
            UNDER_FIT_RANGE,
            fallback_under,
            self.warm_under.as_ref(),
        );
        if under_fitted {
            self.warm_under = Some(phi_under.params());
        }
        let (phi_over, over_is_fallback, over_fitted) = fit_tiered(
            &over,
            &self.session_over,
            self.over_family,
            (0.0, f64::INFINITY),
            OVER_FIT_RANGE,
            fallback_over,
            self.warm_over.as_ref(),
        );
        if over_fitted {
            self.warm_over = Some(phi_over.params());
        }

        self.snapshot = ComposedErrorCdf {
            phi_under,
            phi_over,
            p_under,
            p_under_given_under: p_uu,
            p_over_given_over: p_oo,
            last_sign: errors.last().map(|&e| Sign::of(e)),
            under_is_fallback,
            over_is_fallback,
        };
    }
}

/// Windowed fit, then an all-session fit, then the fixed conservative model.
/// Everything except the windowed fit is flagged as fallback.
fn fit_tiered(
    windowed: &[f64],
    session: &[f64],
    family: Family,
    truncation: (f64, f64),
    fit_range: (f64, f64),
    fixed: fn() -> ErrorDistribution,
    warm: Option<&FamilyParams>,
) -> (ErrorDistribution, bool, bool) {
    if let Ok(d) = fit_distribution_warm(windowed, family, truncation, fit_range, warm) {
        return (d, false, true);
    }
    if let Ok(d) = fit_distribution_warm(session, family, truncation, fit_range, warm) {
        return (d, true, true);
    }
    (fixed(), true, false)
}
