//! C ABI for `ivbounds`.
//!
//! Every fallible function returns an [`IvbStatus`] and writes its result
//! through an out-pointer, which is left untouched on failure. The message
//! of the most recent failure on the calling thread is available from
//! [`ivb_last_error`]. Panics never cross the boundary; they surface as
//! [`IvbStatus::Internal`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use ivbounds::bs::{self, OptionKind, RawQuote};
use ivbounds::solver::{self, InitialGuess, SolverConfig, SolverResult};
use ivbounds::{BandSide, Error, StandardizedOption, Vol};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IvbStatus {
    Ok = 0,
    /// An argument is outside the domain of the function.
    Domain = 1,
    /// The premium is at or below intrinsic value.
    BandBelow = 2,
    /// The premium is at or above the maximum option value.
    BandAbove = 3,
    NullPointer = 4,
    InvalidConfig = 5,
    Internal = 6,
}

pub const IVB_CALL: i32 = 0;
pub const IVB_PUT: i32 = 1;

pub const IVB_SEED_L3: i32 = 0;
pub const IVB_SEED_L2: i32 = 1;
pub const IVB_SEED_LU23: i32 = 2;
pub const IVB_SEED_INFLECTION: i32 = 3;
pub const IVB_SEED_USER: i32 = 4;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: String) {
    // interior NULs cannot occur in our messages but must not abort here
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> IvbStatus {
    match e {
        Error::Domain { .. } | Error::InvalidQuote(_) => IvbStatus::Domain,
        Error::BandViolation {
            side: BandSide::Lower,
            ..
        } => IvbStatus::BandBelow,
        Error::BandViolation {
            side: BandSide::Upper,
            ..
        } => IvbStatus::BandAbove,
        Error::InvalidConfig(_) | Error::UnknownFigure(_) => IvbStatus::InvalidConfig,
        _ => IvbStatus::Internal,
    }
}

/// Runs `f`, records any error, and maps it to a status.
fn guard(f: impl FnOnce() -> Result<(), IvbStatusOr>) -> IvbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => IvbStatus::Ok,
        Ok(Err(IvbStatusOr::Lib(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(IvbStatusOr::Null(what))) => {
            set_last_error(format!("null pointer: {what}"));
            IvbStatus::NullPointer
        }
        Err(_) => {
            set_last_error("internal error: panic in ivbounds".into());
            IvbStatus::Internal
        }
    }
}

enum IvbStatusOr {
    Lib(Error),
    Null(&'static str),
}

impl From<Error> for IvbStatusOr {
    fn from(e: Error) -> Self {
        IvbStatusOr::Lib(e)
    }
}

/// Writes through `out` after checking it for null.
///
/// # Safety
/// `out` must be null or valid for a write of `T`.
unsafe fn write_out<T>(out: *mut T, what: &'static str, v: T) -> Result<(), IvbStatusOr> {
    if out.is_null() {
        return Err(IvbStatusOr::Null(what));
    }
    // SAFETY: non-null and valid per the caller's contract
    unsafe { out.write(v) };
    Ok(())
}

fn check_out<T>(out: *const T, what: &'static str) -> Result<(), IvbStatusOr> {
    if out.is_null() {
        Err(IvbStatusOr::Null(what))
    } else {
        Ok(())
    }
}

/// Message of the last failure on this thread, or an empty string.
///
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ivb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ivb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

fn option_kind(kind: i32) -> Result<OptionKind, Error> {
    match kind {
        IVB_CALL => Ok(OptionKind::Call),
        IVB_PUT => Ok(OptionKind::Put),
        _ => Err(Error::InvalidQuote(
            "option kind must be IVB_CALL or IVB_PUT",
        )),
    }
}

fn quote(
    premium: f64,
    forward: f64,
    strike: f64,
    expiry: f64,
    kind: i32,
    discount_factor: f64,
) -> Result<RawQuote, Error> {
    Ok(
        RawQuote::new(premium, forward, strike, expiry, option_kind(kind)?)
            .with_discount_factor(discount_factor),
    )
}

/// Maps a quote to its standardized out-of-the-money call `(c, k)`.
///
/// # Safety
/// `out_c` and `out_k` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ivb_standardize(
    premium: f64,
    forward: f64,
    strike: f64,
    expiry: f64,
    kind: i32,
    discount_factor: f64,
    out_c: *mut f64,
    out_k: *mut f64,
) -> IvbStatus {
    guard(|| {
        check_out(out_c, "out_c")?;
        check_out(out_k, "out_k")?;
        let q = quote(premium, forward, strike, expiry, kind, discount_factor)?;
        let o = bs::standardize(&q)?;
        // SAFETY: both checked non-null above
        unsafe {
            write_out(out_c, "out_c", o.c())?;
            write_out(out_k, "out_k", o.k())
        }
    })
}

/// Standardized call price at volatility `sigma >= 0`.
///
/// # Safety
/// `out` must be null or valid for a write.
#[no_mangle]
pub unsafe extern "C" fn ivb_price(sigma: f64, k: f64, out: *mut f64) -> IvbStatus {
    guard(|| {
        let s = Vol::new(sigma)?;
        StandardizedOption::new(0.5, k)?;
        // SAFETY: forwarded caller contract
        unsafe { write_out(out, "out", bs::price(s, k)) }
    })
}

/// Natural log of the standardized call price, for `sigma > 0`.
///
/// # Safety
/// `out` must be null or valid for a write.
#[no_mangle]
pub unsafe extern "C" fn ivb_log_price(sigma: f64, k: f64, out: *mut f64) -> IvbStatus {
    guard(|| {
        let v = bs::log_price(Vol::new(sigma)?, k)?;
        // SAFETY: forwarded caller contract
        unsafe { write_out(out, "out", v) }
    })
}

/// Every closed-form bound. `u2` is only meaningful when `u2_defined`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IvbBoundSet {
    pub l1: f64,
    pub l2: f64,
    pub l_inv: f64,
    pub l3: f64,
    pub l_u23: f64,
    pub u1: f64,
    pub u2: f64,
    pub u2_defined: bool,
    pub u3: f64,
    pub u3_prime: f64,
    pub u23: f64,
}

/// Every closed-form bound of `(c, k)`.
///
/// # Safety
/// `out` must be null or valid for a write.
#[no_mangle]
pub unsafe extern "C" fn ivb_bounds(c: f64, k: f64, out: *mut IvbBoundSet) -> IvbStatus {
    guard(|| {
        let b = ivbounds::all_bounds(StandardizedOption::new(c, k)?);
        let set = IvbBoundSet {
            l1: b.l1.get(),
            l2: b.l2.get(),
            l_inv: b.l_inv.get(),
            l3: b.l3.get(),
            l_u23: b.l_u23.get(),
            u1: b.u1.get(),
            u2: b.u2.map_or(f64::NAN, Vol::get),
            u2_defined: b.u2.is_some(),
            u3: b.u3.get(),
            u3_prime: b.u3_prime.get(),
            u23: b.u23.get(),
        };
        // SAFETY: forwarded caller contract
        unsafe { write_out(out, "out", set) }
    })
}

/// Implied volatility by bisection on the log price, to `|g| <= tol`.
///
/// # Safety
/// `out` must be null or valid for a write.
#[no_mangle]
pub unsafe extern "C" fn ivb_oracle(c: f64, k: f64, tol: f64, out: *mut f64) -> IvbStatus {
    guard(|| {
        if !(tol >= 0.0) {
            return Err(Error::InvalidConfig("tolerance must be non-negative").into());
        }
        let s = solver::oracle_bisection(StandardizedOption::new(c, k)?, tol)?;
        // SAFETY: forwarded caller contract
        unsafe { write_out(out, "out", s.get()) }
    })
}

/// Opaque solver configuration.
pub struct IvbSolver {
    config: SolverConfig,
}

/// A solver with the default configuration: seed L3, 8 iterations, log
/// tolerance 1e-12. Release with [`ivb_solver_free`].
#[no_mangle]
pub extern "C" fn ivb_solver_new() -> *mut IvbSolver {
    Box::into_raw(Box::new(IvbSolver {
        config: SolverConfig::default(),
    }))
}

/// # Safety
/// `solver` must be null or a pointer from [`ivb_solver_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ivb_solver_free(solver: *mut IvbSolver) {
    if !solver.is_null() {
        // SAFETY: allocated by ivb_solver_new and owned by the caller
        drop(unsafe { Box::from_raw(solver) });
    }
}

/// Applies `edit` to a copy of the configuration and keeps it only if valid.
///
/// # Safety
/// `solver` must be null or a live handle.
unsafe fn configure(solver: *mut IvbSolver, edit: impl FnOnce(&mut SolverConfig)) -> IvbStatus {
    guard(|| {
        // SAFETY: live handle per the caller's contract
        let h = unsafe { solver.as_mut() }.ok_or(IvbStatusOr::Null("solver"))?;
        let mut cfg = h.config;
        edit(&mut cfg);
        cfg.validate()?;
        h.config = cfg;
        Ok(())
    })
}

/// # Safety
/// `solver` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ivb_solver_set_max_iter(
    solver: *mut IvbSolver,
    max_iter: u32,
) -> IvbStatus {
    // SAFETY: forwarded caller contract
    unsafe { configure(solver, |c| c.max_iter = max_iter) }
}

/// Stop once `|ln C(σ) - ln c| <= tol`.
///
/// # Safety
/// `solver` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ivb_solver_set_tolerance(solver: *mut IvbSolver, tol: f64) -> IvbStatus {
    // SAFETY: forwarded caller contract
    unsafe { configure(solver, |c| c.tol_log = tol) }
}

/// One of the `IVB_SEED_*` policies. `sigma0` is read only for
/// `IVB_SEED_USER`; convergence is guaranteed only from a lower bound.
///
/// # Safety
/// `solver` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ivb_solver_set_seed(
    solver: *mut IvbSolver,
    seed: i32,
    sigma0: f64,
) -> IvbStatus {
    let guess = match seed {
        IVB_SEED_L3 => Ok(InitialGuess::L3),
        IVB_SEED_L2 => Ok(InitialGuess::L2),
        IVB_SEED_LU23 => Ok(InitialGuess::LU23),
        IVB_SEED_INFLECTION => Ok(InitialGuess::Inflection),
        IVB_SEED_USER => Vol::new(sigma0).map(InitialGuess::User),
        _ => Err(Error::InvalidConfig("unknown seed policy")),
    };
    match guess {
        // SAFETY: forwarded caller contract
        Ok(g) => unsafe { configure(solver, |c| c.initial_guess = g) },
        Err(e) => guard(|| Err(e.into())),
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IvbSolveResult {
    /// Standardized volatility `σ = Σ·√T`.
    pub sigma: f64,
    pub iterations: u32,
    /// `|ln C(σ) - ln c|` at the returned `σ`.
    pub final_log_error: f64,
    pub converged: bool,
}

impl From<&SolverResult> for IvbSolveResult {
    fn from(r: &SolverResult) -> Self {
        IvbSolveResult {
            sigma: r.sigma.get(),
            iterations: r.iterations,
            final_log_error: r.final_log_error,
            converged: r.converged,
        }
    }
}

/// # Safety
/// `solver` must be null or a live handle.
unsafe fn config_of(solver: *const IvbSolver) -> Result<SolverConfig, IvbStatusOr> {
    // SAFETY: live handle per the caller's contract
    unsafe { solver.as_ref() }
        .map(|h| h.config)
        .ok_or(IvbStatusOr::Null("solver"))
}

/// Solves for the standardized volatility of `(c, k)`.
///
/// # Safety
/// `solver` must be null or a live handle; `out` null or valid for a write.
#[no_mangle]
pub unsafe extern "C" fn ivb_solve(
    solver: *const IvbSolver,
    c: f64,
    k: f64,
    out: *mut IvbSolveResult,
) -> IvbStatus {
    guard(|| {
        // SAFETY: forwarded caller contract
        let mut cfg = unsafe { config_of(solver) }?;
        check_out(out, "out")?;
        cfg.record_trace = false;
        let r = solver::solve_log_nr(StandardizedOption::new(c, k)?, &cfg)?;
        // SAFETY: forwarded caller contract
        unsafe { write_out(out, "out", IvbSolveResult::from(&r)) }
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IvbRawSolution {
    pub c: f64,
    pub k: f64,
    /// Annualized volatility `Σ = σ/√T`.
    pub implied_vol: f64,
    pub result: IvbSolveResult,
}

/// Standardizes a market quote, solves, and annualizes.
///
/// # Safety
/// `solver` must be null or a live handle; `out` null or valid for a write.
#[no_mangle]
pub unsafe extern "C" fn ivb_solve_raw(
    solver: *const IvbSolver,
    premium: f64,
    forward: f64,
    strike: f64,
    expiry: f64,
    kind: i32,
    discount_factor: f64,
    out: *mut IvbRawSolution,
) -> IvbStatus {
    guard(|| {
        // SAFETY: forwarded caller contract
        let mut cfg = unsafe { config_of(solver) }?;
        check_out(out, "out")?;
        cfg.record_trace = false;
        let q = quote(premium, forward, strike, expiry, kind, discount_factor)?;
        let s = solver::solve_raw(&q, &cfg)?;
        let sol = IvbRawSolution {
            c: s.c,
            k: s.k,
            implied_vol: s.implied_vol,
            result: IvbSolveResult::from(&s.result),
        };
        // SAFETY: forwarded caller contract
        unsafe { write_out(out, "out", sol) }
    })
}

/// Opaque iterate history of one solve.
pub struct IvbTrace {
    result: IvbSolveResult,
    sigma: Vec<f64>,
    log_residual: Vec<f64>,
}

/// Like [`ivb_solve`] but keeps every iterate. Release with [`ivb_trace_free`].
///
/// # Safety
/// `solver` must be null or a live handle; `out` null or valid for a write.
#[no_mangle]
pub unsafe extern "C" fn ivb_solve_traced(
    solver: *const IvbSolver,
    c: f64,
    k: f64,
    out: *mut *mut IvbTrace,
) -> IvbStatus {
    guard(|| {
        // SAFETY: forwarded caller contract
        let mut cfg = unsafe { config_of(solver) }?;
        check_out(out, "out")?;
        cfg.record_trace = true;
        let r = solver::solve_log_nr(StandardizedOption::new(c, k)?, &cfg)?;
        let trace = Box::new(IvbTrace {
            result: IvbSolveResult::from(&r),
            sigma: r.trace.iter().map(|t| t.sigma).collect(),
            log_residual: r.trace.iter().map(|t| t.log_residual).collect(),
        });
        // SAFETY: forwarded caller contract
        unsafe { write_out(out, "out", Box::into_raw(trace)) }
    })
}

/// Number of iterates including the seed; 0 for a null handle.
///
/// # Safety
/// `trace` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ivb_trace_len(trace: *const IvbTrace) -> usize {
    // SAFETY: live handle per the caller's contract
    unsafe { trace.as_ref() }.map_or(0, |t| t.sigma.len())
}

/// Iterate `index` as `(σ, ln C(σ) - ln c)`.
///
/// # Safety
/// `trace` must be null or a live handle; the out-pointers null or valid.
#[no_mangle]
pub unsafe extern "C" fn ivb_trace_get(
    trace: *const IvbTrace,
    index: usize,
    out_sigma: *mut f64,
    out_log_residual: *mut f64,
) -> IvbStatus {
    guard(|| {
        // SAFETY: live handle per the caller's contract
        let t = unsafe { trace.as_ref() }.ok_or(IvbStatusOr::Null("trace"))?;
        check_out(out_sigma, "out_sigma")?;
        check_out(out_log_residual, "out_log_residual")?;
        let (Some(&s), Some(&g)) = (t.sigma.get(index), t.log_residual.get(index)) else {
            return Err(Error::Domain {
                what: "trace index out of range",
                value: index as f64,
            }
            .into());
        };
        // SAFETY: both checked non-null above
        unsafe {
            write_out(out_sigma, "out_sigma", s)?;
            write_out(out_log_residual, "out_log_residual", g)
        }
    })
}

/// Summary of the traced solve.
///
/// # Safety
/// `trace` must be null or a live handle; `out` null or valid for a write.
#[no_mangle]
pub unsafe extern "C" fn ivb_trace_result(
    trace: *const IvbTrace,
    out: *mut IvbSolveResult,
) -> IvbStatus {
    guard(|| {
        // SAFETY: live handle per the caller's contract
        let t = unsafe { trace.as_ref() }.ok_or(IvbStatusOr::Null("trace"))?;
        // SAFETY: forwarded caller contract
        unsafe { write_out(out, "out", t.result) }
    })
}

/// # Safety
/// `trace` must be null or a pointer from [`ivb_solve_traced`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ivb_trace_free(trace: *mut IvbTrace) {
    if !trace.is_null() {
        // SAFETY: allocated by ivb_solve_traced and owned by the caller
        drop(unsafe { Box::from_raw(trace) });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_mapping() {
        let band = |side| Error::BandViolation {
            side,
            premium: 0.0,
            lower: 0.0,
            upper: 1.0,
        };
        assert_eq!(status_of(&band(BandSide::Lower)), IvbStatus::BandBelow);
        assert_eq!(status_of(&band(BandSide::Upper)), IvbStatus::BandAbove);
        assert_eq!(
            status_of(&Error::InvalidConfig("x")),
            IvbStatus::InvalidConfig
        );
        assert_eq!(status_of(&Error::InvalidQuote("x")), IvbStatus::Domain);
    }

    #[test]
    fn panics_become_internal() {
        assert_eq!(guard(|| panic!("boom")), IvbStatus::Internal);
    }
}
