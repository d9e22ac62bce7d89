//! Closed-form lower and upper bounds on the standardized implied volatility.
//!
//! Every bound is a composition of `Φ⁻¹`, `d1⁻¹` and elementary functions of
//! `(c, k)`. Probabilities that sit next to ½ are never formed directly:
//! each quantile is evaluated from its offset `dq = p - ½` and its smaller
//! tail mass, both derived algebraically from `c`, `expm1(±k)` and
//! `e^k·Φ(-√(2k))`. This keeps the bounds accurate to a few ulps even when
//! `c` or `k` is tiny, so the ordering
//!
//! ```text
//! l_inv ≤ l2 ≤ l3 ≤ l_u23 ≤ σ ≤ u23 ≤ u3 ≤ u1
//! ```
//!
//! holds in floating point to a relative slack well below `1e-12`.
//!
//! `u3′ = -2Φ⁻¹((1 - c)(1 + e^{-k})/4)` is the midpoint relaxation of `u3`.
//! Since `-Φ⁻¹` is convex on `(0, ½)` it satisfies `u3′ ≤ u3` (not the reverse)
//! and `u3′ ≤ u1`, but it is *not* an upper bound of `σ` in general: at
//! `c = 0.3017, k = 3` it is about `1.806` while `σ ≈ 2.312`.

use serde::Serialize;

use crate::bs::{
    d1_inv_raw, d1_raw, log_price_raw, otm_tail_mass, price_raw, StandardizedOption, Vol,
};
use crate::error::{domain, Result};
use crate::specfun::{
    erf, erfc, inv_unchecked, mills_ratio, norm_cdf, norm_pdf, quantile_centered, FRAC_1_SQRT_2,
};

/// A delta estimate `D ∈ (0, 1)` held as `dq = D - ½`, `tail = min(D, 1 - D)`
/// and `gap = D - c`.
#[derive(Debug, Clone, Copy)]
struct DeltaEstimate {
    dq: f64,
    tail: f64,
    gap: f64,
}

impl DeltaEstimate {
    fn from_value(d: f64, c: f64) -> Self {
        DeltaEstimate {
            dq: d - 0.5,
            tail: d.min(1.0 - d),
            gap: d - c,
        }
    }

    /// `(1 + c)/2`.
    fn midpoint(c: f64) -> Self {
        let half_out = 0.5 * (1.0 - c);
        DeltaEstimate {
            dq: 0.5 * c,
            tail: half_out,
            gap: half_out,
        }
    }

    /// `c + e^k·Φ(-√(2k))`; `None` when it reaches 1.
    fn at_inflection(c: f64, k: f64) -> Option<Self> {
        let e = otm_tail_mass(k);
        let dq = c - half_minus_tail_mass(k);
        let tail = if dq <= 0.0 { c + e } else { (1.0 - c) - e };
        (tail > 0.0).then_some(DeltaEstimate { dq, tail, gap: e })
    }

    fn value(self) -> f64 {
        if self.dq <= 0.0 {
            self.tail
        } else {
            1.0 - self.tail
        }
    }

    fn upper_mass(self) -> f64 {
        if self.dq > 0.0 {
            self.tail
        } else {
            0.5 - self.dq
        }
    }

    fn quantile(self) -> f64 {
        quantile_centered(self.dq, self.tail)
    }

    fn min(self, other: Self) -> Self {
        if other.dq < self.dq {
            other
        } else {
            self
        }
    }
}

/// `½ - e^k·Φ(-√(2k))`, which vanishes like `√(2k/π)` as `k → 0`.
fn half_minus_tail_mass(k: f64) -> f64 {
    if k <= 1.0 {
        // e^k·Φ(-√(2k)) = e^k·(1 - erf(√k))/2
        0.5 * (k.exp() * erf(k.sqrt()) - k.exp_m1())
    } else {
        0.5 - otm_tail_mass(k)
    }
}

/// `Φ⁻¹(D) - Φ⁻¹((D - c)·e^{-k})`.
fn h_of(d: DeltaEstimate, c: f64, k: f64) -> f64 {
    let ek = (-k).exp();
    let em1 = (-k).exp_m1();
    let dq2 = (d.dq - c) * ek + 0.5 * em1;
    let tail2 = if dq2 <= 0.0 {
        d.gap * ek
    } else {
        (d.upper_mass() + c) * ek - em1
    };
    d.quantile() - quantile_centered(dq2, tail2)
}

fn vol(x: f64) -> Vol {
    Vol::raw(x.max(0.0))
}

/// `-2·Φ⁻¹((1 - c)/2)`, the implied volatility of an at-the-money option.
pub fn lower_l1(opt: StandardizedOption) -> Vol {
    let c = opt.c();
    vol(2.0 * quantile_centered(0.5 * c, 0.5 * (1.0 - c)))
}

/// `-2·Φ⁻¹((1 - c)/(1 + e^k))`.
pub fn upper_u1(opt: StandardizedOption) -> Vol {
    let (c, k) = (opt.c(), opt.k());
    let ek = (-k).exp();
    let den = 1.0 + ek;
    let dq = -(2.0 * c * ek - (-k).exp_m1()) / (2.0 * den);
    let tail = (1.0 - c) * ek / den;
    vol(-2.0 * quantile_centered(dq, tail))
}

/// `d1⁻¹(Φ⁻¹(c))`. Satisfies `L2(c)·L2(1 - c) = 2k`.
pub fn lower_l2(opt: StandardizedOption) -> Vol {
    vol(d1_inv_raw(inv_unchecked(opt.c()), opt.k()))
}

/// `-k/Φ⁻¹(c/(1 + e^k))`, equal to `2k/U1(1 - c)` and never above [`lower_l2`].
/// Zero at the money.
pub fn lower_l_inv(opt: StandardizedOption) -> Vol {
    let (c, k) = (opt.c(), opt.k());
    if k == 0.0 {
        return Vol::raw(0.0);
    }
    let ek = (-k).exp();
    let den = 1.0 + ek;
    let p = c * ek / den;
    let dq = -(2.0 * (1.0 - c) * ek - (-k).exp_m1()) / (2.0 * den);
    vol(-k / quantile_centered(dq, p))
}

/// `H(D) = Φ⁻¹(D) - Φ⁻¹((D - c)·e^{-k})` for a delta estimate `c < D < 1`.
///
/// Any such `D` gives an upper bound, and `H(Φ(d1(σ))) = σ`.
pub fn transform_h(delta_estimate: f64, opt: StandardizedOption) -> Result<Vol> {
    let c = opt.c();
    if !(delta_estimate > c && delta_estimate < 1.0) {
        return Err(domain(
            "delta estimate must satisfy c < D < 1",
            delta_estimate,
        ));
    }
    Ok(vol(h_of(
        DeltaEstimate::from_value(delta_estimate, c),
        c,
        opt.k(),
    )))
}

/// `Φ⁻¹(c + e^k·Φ(-√(2k))) + √(2k)`, defined only while the argument stays
/// below 1. Exact at the inflection point `σ = √(2k)`.
pub fn upper_u2(opt: StandardizedOption) -> Option<Vol> {
    let (c, k) = (opt.c(), opt.k());
    DeltaEstimate::at_inflection(c, k).map(|d| vol(d.quantile() + (2.0 * k).sqrt()))
}

/// `-Φ⁻¹((1 - c)/2) - Φ⁻¹((1 - c)/(2e^k))`, i.e. `H((1 + c)/2)`.
pub fn upper_u3(opt: StandardizedOption) -> Vol {
    let (c, k) = (opt.c(), opt.k());
    vol(h_of(DeltaEstimate::midpoint(c), c, k))
}

/// `-2·Φ⁻¹((1 - c)(1 + e^{-k})/4)`. Never above [`upper_u3`] or [`upper_u1`],
/// and not guaranteed to lie above the implied volatility.
pub fn upper_u3_prime(opt: StandardizedOption) -> Vol {
    let (c, k) = (opt.c(), opt.k());
    let ek = (-k).exp();
    let dq = -(c * (1.0 + ek) - (-k).exp_m1()) / 4.0;
    let tail = (1.0 - c) * (1.0 + ek) / 4.0;
    vol(-2.0 * quantile_centered(dq, tail))
}

fn delta_upper(c: f64, k: f64) -> DeltaEstimate {
    let mid = DeltaEstimate::midpoint(c);
    match DeltaEstimate::at_inflection(c, k) {
        Some(d) => mid.min(d),
        None => mid,
    }
}

/// `H(min((1 + c)/2, c + e^k·Φ(-√(2k))))`, the smaller of [`upper_u2`] and
/// [`upper_u3`]. Defined for every `c`.
pub fn upper_u23(opt: StandardizedOption) -> Vol {
    let (c, k) = (opt.c(), opt.k());
    vol(h_of(delta_upper(c, k), c, k))
}

/// `c/C_D(y)` as a centered probability. `None` when it is not below 1.
fn delta_ratio(y: f64, c: f64, k: f64) -> Option<DeltaEstimate> {
    let d1 = d1_raw(y, k);
    let cp = price_raw(y, k);
    // c/C, from logs once the price is too small to divide safely
    let (ratio, rel_gap) = if cp >= 1e-290 {
        let r = c / cp;
        (r, r - 1.0)
    } else {
        let l = c.ln() - log_price_raw(y, k);
        (l.exp(), l.exp_m1())
    };
    let nd1 = norm_cdf(d1);
    let dq = nd1 * rel_gap + 0.5 * erf(d1 * FRAC_1_SQRT_2);
    let tail = if dq <= 0.0 {
        nd1 * ratio
    } else {
        // 1 - c·Φ(d1)/C = Φ(-d1) - Φ(d1)·(c/C - 1)
        norm_cdf(-d1) - nd1 * rel_gap
    };
    (tail > 0.0 && dq < 0.5).then_some(DeltaEstimate {
        dq,
        tail,
        gap: f64::NAN,
    })
}

/// `G(y) = d1⁻¹(Φ⁻¹(c/C_D(y)))`, which maps an upper bound `y` to a lower
/// bound that is never below [`lower_l2`].
///
/// Fails when `c/C_D(y) ≥ 1`, which can only happen if `y` is below the
/// implied volatility.
pub fn transform_g_delta(y: Vol, opt: StandardizedOption) -> Result<Vol> {
    let (c, k) = (opt.c(), opt.k());
    let s = y.get();
    if !(s > 0.0) {
        return Err(domain("transform_g_delta requires y > 0", s));
    }
    match delta_ratio(s, c, k) {
        Some(d) => Ok(vol(d1_inv_raw(d.quantile(), k))),
        None => Err(domain(
            "c/C_D(y) must be below 1; y is not an upper bound",
            s,
        )),
    }
}

/// `G(U23)`. At the money `U23` is already exact and so is this bound.
pub fn lower_l_u23(opt: StandardizedOption) -> Vol {
    if opt.k() == 0.0 {
        // G has condition number ~1/σ here; both sides equal L1
        return lower_l1(opt);
    }
    // fails only if u23 rounded below the root; L3 is then the best known bound
    transform_g_delta(upper_u23(opt), opt).unwrap_or_else(|_| lower_l3(opt))
}

fn delta_lower(c: f64, k: f64) -> DeltaEstimate {
    let ek = (-k).exp();
    let em1 = (-k).exp_m1();
    // w = e^k/(c(e^k + 1) + e^k - 1)
    let w = 1.0 / (c * (1.0 + ek) - em1);
    let dq = 0.5 * c + 0.5 * (1.0 - c) * em1 * w;
    let tail = if dq <= 0.0 {
        c * (0.5 + w)
    } else {
        0.5 * (1.0 - c) * (1.0 - em1 * w)
    };
    DeltaEstimate {
        dq,
        tail,
        gap: f64::NAN,
    }
}

/// `d1⁻¹(Φ⁻¹(c·[½ + e^k/(c(e^k + 1) + e^k - 1)]))`. Tighter than [`lower_l2`]
/// and exact at the money.
pub fn lower_l3(opt: StandardizedOption) -> Vol {
    let (c, k) = (opt.c(), opt.k());
    vol(d1_inv_raw(delta_lower(c, k).quantile(), k))
}

/// `H(Φ(d1(u)))` for an upper bound `u`; the result lies between the implied
/// volatility and `u`.
pub fn tighten_upper(u: Vol, opt: StandardizedOption) -> Result<Vol> {
    let (c, k) = (opt.c(), opt.k());
    let s = u.get();
    if !(s > 0.0) {
        return Err(domain("tighten_upper requires u > 0", s));
    }
    let d1 = d1_raw(s, k);
    let d2 = d1 - s;
    // Φ(d1) - c = e^k·Φ(d2) + (C(u) - c)
    let gap = norm_pdf(d1) * mills_ratio(-d2) + (price_raw(s, k) - c);
    let d = DeltaEstimate {
        dq: 0.5 * erf(d1 * FRAC_1_SQRT_2),
        tail: 0.5 * erfc(d1.abs() * FRAC_1_SQRT_2),
        gap,
    };
    if !(gap > 0.0) {
        return Err(domain("tighten_upper requires Φ(d1(u)) > c", s));
    }
    Ok(vol(h_of(d, c, k)))
}

/// Bounds on `Φ(d1)` at the implied volatility:
/// `(c·[½ + e^k/(c(e^k + 1) + e^k - 1)], min((1 + c)/2, c + e^k·Φ(-√(2k))))`.
pub fn delta_bounds(opt: StandardizedOption) -> (f64, f64) {
    let (c, k) = (opt.c(), opt.k());
    (delta_lower(c, k).value(), delta_upper(c, k).value())
}

/// Every bound evaluated at one `(c, k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundSet {
    pub l1: Vol,
    pub l2: Vol,
    pub l_inv: Vol,
    pub l3: Vol,
    pub l_u23: Vol,
    pub u1: Vol,
    pub u2: Option<Vol>,
    pub u3: Vol,
    pub u3_prime: Vol,
    pub u23: Vol,
}

impl BoundSet {
    /// The guaranteed chain `l_inv ≤ l2 ≤ l3 ≤ l_u23 ≤ u23 ≤ u3 ≤ u1`, in order.
    pub fn chain(&self) -> [(&'static str, f64); 7] {
        [
            ("l_inv", self.l_inv.get()),
            ("l2", self.l2.get()),
            ("l3", self.l3.get()),
            ("l_u23", self.l_u23.get()),
            ("u23", self.u23.get()),
            ("u3", self.u3.get()),
            ("u1", self.u1.get()),
        ]
    }

    /// Tightest lower and upper bound.
    pub fn bracket(&self) -> (Vol, Vol) {
        (self.l_u23, self.u23)
    }
}

pub fn all_bounds(opt: StandardizedOption) -> BoundSet {
    BoundSet {
        l1: lower_l1(opt),
        l2: lower_l2(opt),
        l_inv: lower_l_inv(opt),
        l3: lower_l3(opt),
        l_u23: lower_l_u23(opt),
        u1: upper_u1(opt),
        u2: upper_u2(opt),
        u3: upper_u3(opt),
        u3_prime: upper_u3_prime(opt),
        u23: upper_u23(opt),
    }
}
