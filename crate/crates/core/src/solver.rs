//! Implied volatility by Newton-Raphson on the log price.
//!
//! The objective is `g(y) = ln C_BS(y) - ln c`. It is increasing and concave in
//! `y` with `g′ = 1/C_V`, so a Newton step `y - g(y)·C_V(y)` taken from below
//! the root stays below it and every iterate improves on the last. Seeded at
//! [`lower_l3`] the iteration reaches machine precision in four or five steps
//! across the whole `(c, k)` domain, including prices far below `1e-300` in
//! relative terms to the strike.

use serde::Serialize;

use crate::bounds::{lower_l1, lower_l2, lower_l3, lower_l_u23, upper_u1};
use crate::bs::{
    destandardize, inflection_sigma, log_price_and_cv, log_price_raw, price_raw, standardize,
    vega_raw, RawQuote, StandardizedOption, Vol,
};
use crate::error::{domain, Error, Result};

/// Where the iteration starts.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum InitialGuess {
    #[default]
    L3,
    L2,
    LU23,
    /// `√(2k)`, the inflection point of the price curve.
    Inflection,
    /// Any positive volatility. Convergence from below is only guaranteed when
    /// it is a lower bound.
    User(Vol),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub max_iter: u32,
    /// Stop once `|g(σn)|` is at most this.
    pub tol_log: f64,
    pub record_trace: bool,
    pub initial_guess: InitialGuess,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iter: 8,
            tol_log: 1e-12,
            record_trace: false,
            initial_guess: InitialGuess::L3,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be at least 1"));
        }
        if !(self.tol_log > 0.0) {
            return Err(Error::InvalidConfig("tol_log must be positive"));
        }
        if let InitialGuess::User(v) = self.initial_guess {
            if !(v.get() > 0.0) {
                return Err(Error::InvalidConfig("user initial guess must be positive"));
            }
        }
        Ok(())
    }
}

/// One iterate and its signed log residual `g(σn)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub sigma: f64,
    pub log_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverResult {
    pub sigma: Vol,
    pub iterations: u32,
    /// `|ln C_BS(sigma) - ln c|`.
    pub final_log_error: f64,
    pub converged: bool,
    /// `σ0, σ1, …` with their residuals; empty unless requested.
    pub trace: Vec<TracePoint>,
}

#[inline]
fn residual(s: f64, c_ln: f64, k: f64) -> f64 {
    if s > 0.0 {
        log_price_raw(s, k) - c_ln
    } else {
        f64::NEG_INFINITY
    }
}

/// `y - g(y)·C_V(y)`; the residual `g(y)` is returned alongside.
#[inline]
pub(crate) fn nr_log_step_raw(y: f64, c_ln: f64, k: f64) -> (f64, f64) {
    let (lp, cv) = log_price_and_cv(y, k);
    let g = lp - c_ln;
    (y - g * cv, g)
}

/// One Newton step on the log price. From any `y` below the implied
/// volatility the result lies in `[y, σ]`.
pub fn nr_log_step(y: Vol, opt: StandardizedOption) -> Result<Vol> {
    let s = y.get();
    if !(s > 0.0) {
        return Err(domain("nr_log_step requires y > 0", s));
    }
    let (next, _) = nr_log_step_raw(s, opt.c().ln(), opt.k());
    Ok(Vol::raw(next.max(0.0)))
}

fn seed(opt: StandardizedOption, guess: InitialGuess) -> f64 {
    match guess {
        InitialGuess::L3 => lower_l3(opt).get(),
        InitialGuess::L2 => lower_l2(opt).get(),
        InitialGuess::LU23 => lower_l_u23(opt).get(),
        InitialGuess::Inflection => inflection_sigma(opt.k()).get(),
        InitialGuess::User(v) => v.get(),
    }
}

struct Recorder {
    on: bool,
    trace: Vec<TracePoint>,
}

impl Recorder {
    fn new(on: bool, cap: u32) -> Self {
        let trace = if on {
            Vec::with_capacity(cap as usize + 1)
        } else {
            Vec::new()
        };
        Recorder { on, trace }
    }

    #[inline]
    fn push(&mut self, sigma: f64, log_residual: f64) {
        if self.on {
            self.trace.push(TracePoint {
                sigma,
                log_residual,
            });
        }
    }
}

/// Newton-Raphson on `g(y) = ln C_BS(y) - ln c`.
///
/// At the money the closed form `2Φ⁻¹((1 + c)/2)` is returned without
/// iterating. An iterate that would move below its predecessor while the
/// residual is still negative is held in place, so from a lower-bound seed the
/// trace is nondecreasing in floating point as well.
pub fn solve_log_nr(opt: StandardizedOption, cfg: &SolverConfig) -> Result<SolverResult> {
    cfg.validate()?;
    Ok(log_nr(opt, cfg))
}

fn log_nr(opt: StandardizedOption, cfg: &SolverConfig) -> SolverResult {
    let k = opt.k();
    let c_ln = opt.c().ln();
    let mut rec = Recorder::new(cfg.record_trace, cfg.max_iter);

    if k == 0.0 {
        let s = lower_l1(opt).get();
        let g = residual(s, c_ln, k);
        rec.push(s, g);
        return SolverResult {
            sigma: Vol::raw(s),
            iterations: 0,
            final_log_error: g.abs(),
            converged: true,
            trace: rec.trace,
        };
    }

    let mut y = seed(opt, cfg.initial_guess);
    let mut g = residual(y, c_ln, k);
    rec.push(y, g);
    let mut iterations = 0;
    while iterations < cfg.max_iter && !(g.abs() <= cfg.tol_log) {
        let (mut next, _) = nr_log_step_raw(y, c_ln, k);
        if g < 0.0 {
            next = next.max(y);
        } else if !(next > 0.0) {
            // an overshoot from above the root; halving keeps the iterate valid
            next = 0.5 * y;
        }
        if !next.is_finite() {
            break;
        }
        iterations += 1;
        y = next;
        g = residual(y, c_ln, k);
        rec.push(y, g);
    }
    SolverResult {
        sigma: Vol::raw(y),
        iterations,
        final_log_error: g.abs(),
        converged: g.abs() <= cfg.tol_log,
        trace: rec.trace,
    }
}

/// Plain Newton-Raphson on `C_BS(y) - c`, started at the inflection point
/// `√(2k)`. Kept as a baseline; it is very slow for deep out-of-the-money
/// quotes. Stops early if the vega vanishes or a step is not finite.
pub fn solve_naive_nr(opt: StandardizedOption, cfg: &SolverConfig) -> Result<SolverResult> {
    cfg.validate()?;
    let (c, k) = (opt.c(), opt.k());
    let c_ln = c.ln();
    let mut rec = Recorder::new(cfg.record_trace, cfg.max_iter);
    let mut y = inflection_sigma(k).get();
    let mut g = residual(y, c_ln, k);
    rec.push(y, g);
    let mut iterations = 0;
    while iterations < cfg.max_iter && !(g.abs() <= cfg.tol_log) {
        let v = vega_raw(y, k);
        if v == 0.0 {
            break;
        }
        let next = y - (price_raw(y, k) - c) / v;
        if !next.is_finite() {
            break;
        }
        iterations += 1;
        y = next;
        g = residual(y, c_ln, k);
        rec.push(y, g);
    }
    Ok(SolverResult {
        sigma: Vol::raw(y.max(0.0)),
        iterations,
        final_log_error: g.abs(),
        converged: g.abs() <= cfg.tol_log,
        trace: rec.trace,
    })
}

/// Log Newton-Raphson with the default configuration.
pub fn solve(opt: StandardizedOption) -> SolverResult {
    log_nr(opt, &SolverConfig::default())
}

/// Result of inverting a market quote.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RawSolution {
    pub c: f64,
    pub k: f64,
    /// Annualized volatility `Σ = σ/√T`.
    pub implied_vol: f64,
    pub result: SolverResult,
}

/// Standardizes the quote, solves, and converts `σ` back to `Σ`.
pub fn solve_raw(quote: &RawQuote, cfg: &SolverConfig) -> Result<RawSolution> {
    let opt = standardize(quote)?;
    let result = solve_log_nr(opt, cfg)?;
    Ok(RawSolution {
        c: opt.c(),
        k: opt.k(),
        implied_vol: destandardize(result.sigma, quote.expiry),
        result,
    })
}

/// Bisection on the log price inside `[L2, U1]`, independent of the Newton
/// machinery. Stops once `|g| ≤ tol` or the bracket can no longer be split.
pub fn oracle_bisection(opt: StandardizedOption, tol: f64) -> Result<Vol> {
    let (c, k) = (opt.c(), opt.k());
    if k == 0.0 {
        return Ok(lower_l1(opt));
    }
    let c_ln = c.ln();
    let (l2, u1) = (lower_l2(opt).get(), upper_u1(opt).get());
    // both bounds can be exact to rounding; widen by a few ulps if needed
    let mut lo = l2;
    let mut hi = u1;
    let mut widen = 4.0 * f64::EPSILON;
    loop {
        let g_lo = residual(lo, c_ln, k);
        let g_hi = residual(hi, c_ln, k);
        if g_lo.abs() <= tol {
            return Ok(Vol::raw(lo));
        }
        if g_hi.abs() <= tol {
            return Ok(Vol::raw(hi));
        }
        if g_lo < 0.0 && g_hi > 0.0 {
            break;
        }
        if widen > 1e-9 {
            return Err(Error::BracketFailure {
                c,
                k,
                lo: l2,
                hi: u1,
            });
        }
        if !(g_lo < 0.0) {
            lo = l2 * (1.0 - widen);
        }
        if !(g_hi > 0.0) {
            hi = u1 * (1.0 + widen);
        }
        widen *= 4.0;
    }
    loop {
        let mid = if lo > 0.0 && hi > 2.0 * lo {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if mid <= lo || mid >= hi {
            // adjacent floats: keep the endpoint with the smaller residual
            let (gl, gh) = (residual(lo, c_ln, k), residual(hi, c_ln, k));
            return Ok(Vol::raw(if gl.abs() <= gh.abs() { lo } else { hi }));
        }
        let g = residual(mid, c_ln, k);
        if g.abs() <= tol {
            return Ok(Vol::raw(mid));
        }
        if g < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}
