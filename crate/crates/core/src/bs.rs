//! Standardized Black-Scholes map.
//!
//! Every quote is reduced to an out-of-the-money call on a unit forward with
//! unit expiry: a price `c ∈ (0, 1)` and a log-strike `k ≥ 0`. With
//! `d1,2 = -k/σ ± σ/2` the price is `Φ(d1) - e^k·Φ(d2)`.
//!
//! Deep out-of-the-money prices underflow long before the solver stops caring
//! about them, so the kernel is built around the price-to-vega ratio
//! `C_V = R(-d1) - R(-d2)` and the log price `ln φ(d1) + ln C_V`. The ratio is
//! evaluated in one of three regimes, depending on `α = k/σ` and `t = σ/2`:
//!
//! * `α - t ≥ 10`: a termwise difference of the asymptotic Mills series,
//! * `t ≤ max(0.25, 0.01·α)`: a Taylor series in `t` whose coefficients are the
//!   moments `∫₀^∞ uⁿ e^{-αu-u²/2} du`,
//! * otherwise the plain difference of two Mills ratios.
//!
//! None of the three subtracts nearly equal quantities.

use serde::Serialize;

use crate::error::{domain, BandSide, Error, Result};
use crate::specfun::{mills_ratio, norm_cdf, norm_pdf, FRAC_1_SQRT_2PI, LN_SQRT_2PI};

/// Standardized volatility `σ = Σ·√T`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize)]
#[serde(transparent)]
pub struct Vol(f64);

impl Vol {
    pub fn new(sigma: f64) -> Result<Self> {
        if sigma.is_finite() && sigma >= 0.0 {
            Ok(Vol(sigma))
        } else {
            Err(domain("volatility must be finite and non-negative", sigma))
        }
    }

    /// Wraps a value already known to satisfy the invariant.
    #[inline]
    pub(crate) const fn raw(sigma: f64) -> Self {
        Vol(sigma)
    }

    #[inline]
    pub const fn get(self) -> f64 {
        self.0
    }
}

impl From<Vol> for f64 {
    fn from(v: Vol) -> f64 {
        v.0
    }
}

impl std::fmt::Display for Vol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// An out-of-the-money call on a unit forward: price `c ∈ (0,1)`, log-strike `k ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StandardizedOption {
    c: f64,
    k: f64,
}

impl StandardizedOption {
    pub fn new(c: f64, k: f64) -> Result<Self> {
        check_price(c)?;
        check_log_strike(k)?;
        Ok(StandardizedOption { c, k })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn k(&self) -> f64 {
        self.k
    }
}

pub(crate) fn check_price(c: f64) -> Result<()> {
    if c > 0.0 && c < 1.0 {
        Ok(())
    } else {
        Err(domain("standardized price must satisfy 0 < c < 1", c))
    }
}

pub(crate) fn check_log_strike(k: f64) -> Result<()> {
    if k.is_finite() && k >= 0.0 {
        Ok(())
    } else {
        Err(domain("log-strike must be finite and k >= 0", k))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptionKind {
    Call,
    Put,
}

impl OptionKind {
    fn theta(self) -> f64 {
        match self {
            OptionKind::Call => 1.0,
            OptionKind::Put => -1.0,
        }
    }
}

/// A market quote before standardization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawQuote {
    /// Discounted option premium.
    pub premium: f64,
    pub forward: f64,
    pub strike: f64,
    /// Time to expiry in years.
    pub expiry: f64,
    pub kind: OptionKind,
    pub discount_factor: f64,
}

impl RawQuote {
    pub fn new(premium: f64, forward: f64, strike: f64, expiry: f64, kind: OptionKind) -> Self {
        RawQuote {
            premium,
            forward,
            strike,
            expiry,
            kind,
            discount_factor: 1.0,
        }
    }

    pub fn with_discount_factor(mut self, discount_factor: f64) -> Self {
        self.discount_factor = discount_factor;
        self
    }

    fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.forward) {
            return Err(Error::InvalidQuote("forward must be positive"));
        }
        if !positive(self.strike) {
            return Err(Error::InvalidQuote("strike must be positive"));
        }
        if !positive(self.expiry) {
            return Err(Error::InvalidQuote("expiry must be positive"));
        }
        if !(positive(self.discount_factor) && self.discount_factor <= 1.0) {
            return Err(Error::InvalidQuote("discount factor must lie in (0, 1]"));
        }
        if !self.premium.is_finite() {
            return Err(Error::InvalidQuote("premium must be finite"));
        }
        Ok(())
    }

    /// Undiscounted intrinsic value `[θ(F-K)]⁺`.
    pub fn intrinsic(&self) -> f64 {
        (self.kind.theta() * (self.forward - self.strike)).max(0.0)
    }
}

/// Maps a quote to its out-of-the-money call equivalent.
///
/// Puts and calls at the same strike and forward collapse onto the same
/// `(c, k)`; put-call parity is implied by the reduction.
pub fn standardize(q: &RawQuote) -> Result<StandardizedOption> {
    q.validate()?;
    let premium = q.premium / q.discount_factor;
    let intrinsic = q.intrinsic();
    let scale = q.strike.min(q.forward);
    let upper = scale + intrinsic;
    let violation = |side| Error::BandViolation {
        side,
        premium,
        lower: intrinsic,
        upper,
    };
    if premium <= intrinsic {
        return Err(violation(BandSide::Lower));
    }
    if premium >= upper {
        return Err(violation(BandSide::Upper));
    }
    let c = (premium - intrinsic) / scale;
    if !(c > 0.0) {
        return Err(violation(BandSide::Lower));
    }
    if !(c < 1.0) {
        return Err(violation(BandSide::Upper));
    }
    let k = (q.forward.max(q.strike) / scale).ln();
    Ok(StandardizedOption { c, k })
}

/// Annualized volatility `Σ = σ/√T`.
pub fn destandardize(sigma: Vol, expiry: f64) -> f64 {
    sigma.get() / expiry.sqrt()
}

pub fn d1(sigma: Vol, k: f64) -> Result<f64> {
    let s = positive_sigma(sigma)?;
    Ok(d1_raw(s, k))
}

pub fn d2(sigma: Vol, k: f64) -> Result<f64> {
    let s = positive_sigma(sigma)?;
    Ok(d1_raw(s, k) - s)
}

#[inline]
fn positive_sigma(sigma: Vol) -> Result<f64> {
    if sigma.get() > 0.0 {
        Ok(sigma.get())
    } else {
        Err(domain("operation requires sigma > 0", sigma.get()))
    }
}

#[inline]
pub(crate) fn d1_raw(s: f64, k: f64) -> f64 {
    0.5 * s - k / s
}

/// Inverse of `σ ↦ d1(σ)`: `x + √(x² + 2k)`, which is `2·x⁺` when `k = 0`.
pub fn d1_inv(x: f64, k: f64) -> Vol {
    Vol::raw(d1_inv_raw(x, k))
}

#[inline]
pub(crate) fn d1_inv_raw(x: f64, k: f64) -> f64 {
    if x >= 0.0 {
        x + (x * x + 2.0 * k).sqrt()
    } else if k == 0.0 {
        0.0
    } else {
        // rationalized to avoid cancellation for x ≪ 0
        2.0 * k / ((x * x + 2.0 * k).sqrt() - x)
    }
}

/// Inflection point `√(2k)` of the price curve.
pub fn inflection_sigma(k: f64) -> Vol {
    Vol::raw((2.0 * k).sqrt())
}

/// `e^k·Φ(-√(2k))`, written as `R(√(2k))/√(2π)` so it never forms `e^k`.
#[inline]
pub(crate) fn otm_tail_mass(k: f64) -> f64 {
    mills_ratio((2.0 * k).sqrt()) * FRAC_1_SQRT_2PI
}

/// Standardized call price `Φ(d1) - e^k·Φ(d2)`.
///
/// Returns 0 at `σ = 0`. Formed as `φ(d1)·C_V` below ½ and as 1 minus the
/// two tail masses above.
pub fn price(sigma: Vol, k: f64) -> f64 {
    price_raw(sigma.get(), k)
}

pub(crate) fn price_raw(s: f64, k: f64) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    let d1 = d1_raw(s, k);
    match upper_complement(s, d1) {
        Some(m) => 1.0 - m,
        None => norm_pdf(d1) * price_to_vega_raw(s, k),
    }
}

/// `1 - C_BS = Φ(-d1) + e^k·Φ(d2)` when it is at most ½.
///
/// Both tails are written as `φ(d1)·R` with non-negative arguments, so the
/// sum carries no cancellation.
#[inline]
fn upper_complement(s: f64, d1: f64) -> Option<f64> {
    if d1 <= 0.0 {
        return None;
    }
    let m = norm_pdf(d1) * (mills_ratio(d1) + mills_ratio(s - d1));
    (m <= 0.5).then_some(m)
}

/// `Φ(d1)`; the σ↓0 limit is 0 for `k > 0` and ½ at the money.
pub fn delta(sigma: Vol, k: f64) -> f64 {
    let s = sigma.get();
    if s == 0.0 {
        return if k == 0.0 { 0.5 } else { 0.0 };
    }
    norm_cdf(d1_raw(s, k))
}

/// `φ(d1)`; the σ↓0 limit is 0 for `k > 0` and `φ(0)` at the money.
pub fn vega(sigma: Vol, k: f64) -> f64 {
    vega_raw(sigma.get(), k)
}

#[inline]
pub(crate) fn vega_raw(s: f64, k: f64) -> f64 {
    if s == 0.0 {
        return if k == 0.0 { FRAC_1_SQRT_2PI } else { 0.0 };
    }
    norm_pdf(d1_raw(s, k))
}

/// Price-to-delta ratio `C_D = C_BS/Φ(d1) = 1 - R(-d2)/R(-d1)`.
pub fn price_to_delta(sigma: Vol, k: f64) -> Result<f64> {
    let s = positive_sigma(sigma)?;
    Ok(price_to_delta_raw(s, k))
}

pub(crate) fn price_to_delta_raw(s: f64, k: f64) -> f64 {
    let d1 = d1_raw(s, k);
    if d1 <= UPPER_TAIL_D1 {
        // Φ(d1) = φ(d1)·R(-d1), so C_D = C_V/R(-d1)
        price_to_vega_raw(s, k) / mills_ratio(-d1)
    } else {
        price_raw(s, k) / norm_cdf(d1)
    }
}

/// Price-to-vega ratio `C_V = C_BS/φ(d1) = R(-d1) - R(-d2)`.
///
/// Overflows to `+∞` once `φ(d1)` itself underflows (`d1 ≳ 37.6`).
pub fn price_to_vega(sigma: Vol, k: f64) -> Result<f64> {
    let s = positive_sigma(sigma)?;
    Ok(price_to_vega_raw(s, k))
}

const ASYMPTOTIC_MIN_X: f64 = 10.0;
const TAYLOR_MAX_T: f64 = 0.25;
const TAYLOR_MAX_T_PER_ALPHA: f64 = 0.01;
const UPPER_TAIL_D1: f64 = 5.0;

pub(crate) fn price_to_vega_raw(s: f64, k: f64) -> f64 {
    let t = 0.5 * s;
    let alpha = k / s;
    let x1 = alpha - t;
    if x1 >= ASYMPTOTIC_MIN_X {
        price_to_vega_asymptotic(x1, alpha + t, t)
    } else if t <= TAYLOR_MAX_T.max(TAYLOR_MAX_T_PER_ALPHA * alpha) {
        price_to_vega_small_t(alpha, t)
    } else {
        mills_ratio(x1) - mills_ratio(alpha + t)
    }
}

/// `R(x1) - R(x2)` with `x2 = x1 + 2t`, from the asymptotic series
/// `R(x) ~ Σ (-1)ᵐ (2m-1)!!/x^{2m+1}` differenced term by term.
///
/// With `u = 1/x1`, `v = 1/x2` each difference `uⁿ - vⁿ` is built from
/// `u - v = 2t/(x1·x2)` by the positive recurrence
/// `u^{n+2} - v^{n+2} = u²(uⁿ - vⁿ) + vⁿ(u + v)(u - v)`.
fn price_to_vega_asymptotic(x1: f64, x2: f64, t: f64) -> f64 {
    let u = 1.0 / x1;
    let v = 1.0 / x2;
    let first = 2.0 * t / (x1 * x2);
    let u2 = u * u;
    let v2 = v * v;
    let u_plus_v = u + v;
    let mut diff = first;
    let mut v_pow = v;
    let mut coef = 1.0;
    let mut sum = first;
    let mut prev = first;
    for m in 1..64u32 {
        diff = u2 * diff + v_pow * u_plus_v * first;
        v_pow *= v2;
        coef *= f64::from(2 * m - 1);
        let term = coef * diff;
        if !(term < prev) {
            break;
        }
        if m % 2 == 1 {
            sum -= term;
        } else {
            sum += term;
        }
        if term <= 1e-17 * sum {
            break;
        }
        prev = term;
    }
    sum
}

/// `R(α - t) - R(α + t) = 2 Σ_j M_{2j+1}(α) t^{2j+1}/(2j+1)!`, where
/// `M_n(α) = ∫₀^∞ uⁿ e^{-αu-u²/2} du` obeys `M_{n+1} = n·M_{n-1} - α·M_n`.
fn price_to_vega_small_t(alpha: f64, t: f64) -> f64 {
    let m0 = mills_ratio(alpha);
    let m1 = 1.0 - alpha * m0;
    let t2 = t * t;
    let mut prev = m0;
    let mut cur = m1;
    let mut n = 1.0_f64;
    let mut weight = t;
    let mut sum = m1 * t;
    for _ in 0..16 {
        for _ in 0..2 {
            let next = n * prev - alpha * cur;
            prev = cur;
            cur = next;
            n += 1.0;
        }
        weight *= t2 / ((n - 1.0) * n);
        let term = cur * weight;
        sum += term;
        if term.abs() <= 1e-17 * sum {
            break;
        }
    }
    2.0 * sum
}

/// `ln C_BS(σ)` that stays finite after the price itself underflows.
///
/// Formed as `-d1²/2 - ln√(2π) + ln C_V`, except in the far upper tail
/// (`d1 > 5`) where `ln(1 - (Φ(-d1) + e^k·Φ(d2)))` is better conditioned.
pub fn log_price(sigma: Vol, k: f64) -> Result<f64> {
    let s = positive_sigma(sigma)?;
    Ok(log_price_raw(s, k))
}

pub(crate) fn log_price_raw(s: f64, k: f64) -> f64 {
    log_price_and_cv(s, k).0
}

/// `(ln C_BS, C_V)` sharing one evaluation of `C_V`.
pub(crate) fn log_price_and_cv(s: f64, k: f64) -> (f64, f64) {
    let d1 = d1_raw(s, k);
    let cv = price_to_vega_raw(s, k);
    let lp = match upper_complement(s, d1) {
        Some(m) => (-m).ln_1p(),
        None => -0.5 * d1 * d1 - LN_SQRT_2PI + cv.ln(),
    };
    (lp, cv)
}
