use std::ffi::CStr;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use ivbounds_ffi::*;

fn last_error() -> String {
    // SAFETY: ivb_last_error always returns a valid NUL-terminated string
    unsafe { CStr::from_ptr(ivb_last_error()) }
        .to_str()
        .unwrap()
        .to_owned()
}

struct Solver(*mut IvbSolver);

impl Solver {
    fn new() -> Self {
        Solver(ivb_solver_new())
    }
}

impl Drop for Solver {
    fn drop(&mut self) {
        // SAFETY: handle from ivb_solver_new, freed once
        unsafe { ivb_solver_free(self.0) };
    }
}

#[test]
fn standardize_and_band_errors() {
    let (mut c, mut k) = (0.0, 0.0);
    // SAFETY: valid out-pointers throughout
    unsafe {
        assert_eq!(
            ivb_standardize(12.0, 100.0, 110.0, 1.0, IVB_PUT, 1.0, &mut c, &mut k),
            IvbStatus::Ok
        );
        assert!((c - 0.02).abs() < 1e-15);
        assert!((k - 1.1f64.ln()).abs() < 1e-15);

        let before = (c, k);
        assert_eq!(
            ivb_standardize(5.0, 100.0, 90.0, 1.0, IVB_CALL, 1.0, &mut c, &mut k),
            IvbStatus::BandBelow
        );
        assert!(last_error().contains("intrinsic"));
        assert_eq!((c, k), before, "outputs untouched on failure");
        assert_eq!(
            ivb_standardize(200.0, 100.0, 90.0, 1.0, IVB_CALL, 1.0, &mut c, &mut k),
            IvbStatus::BandAbove
        );
        assert_eq!(
            ivb_standardize(5.0, 100.0, 90.0, 1.0, 7, 1.0, &mut c, &mut k),
            IvbStatus::Domain
        );
        assert_eq!(
            ivb_standardize(
                5.0,
                100.0,
                90.0,
                1.0,
                IVB_CALL,
                1.0,
                ptr::null_mut(),
                &mut k
            ),
            IvbStatus::NullPointer
        );
    }
}

#[test]
fn price_and_log_price() {
    let mut p = 0.0;
    let mut lp = 0.0;
    // SAFETY: valid out-pointers
    unsafe {
        assert_eq!(ivb_price(0.2, 0.0, &mut p), IvbStatus::Ok);
        assert!((p - 0.079_655_674_554_057_963).abs() < 1e-16);
        assert_eq!(ivb_log_price(0.2, 0.0, &mut lp), IvbStatus::Ok);
        assert!((lp - p.ln()).abs() < 1e-15);
        assert_eq!(ivb_price(0.0, 1.0, &mut p), IvbStatus::Ok);
        assert_eq!(p, 0.0);
        assert_eq!(ivb_log_price(0.0, 1.0, &mut lp), IvbStatus::Domain);
        assert_eq!(ivb_price(-1.0, 1.0, &mut p), IvbStatus::Domain);
        assert!(last_error().contains("volatility"));
    }
}

#[test]
fn bounds_struct() {
    let mut b = IvbBoundSet::default();
    // SAFETY: valid out-pointer
    unsafe {
        assert_eq!(
            ivb_bounds(0.2, std::f64::consts::LN_2, &mut b),
            IvbStatus::Ok
        );
    }
    assert!(b.l_inv <= b.l2 && b.l2 <= b.l3 && b.l3 <= b.l_u23 && b.l_u23 <= b.u23);
    assert!(b.u23 <= b.u3 && b.u3 <= b.u1);
    assert!(b.u2_defined && b.u2 >= b.u23);

    // the inflection mass is 1 at c close enough to 1, leaving U2 undefined
    let mut found_undefined = false;
    for i in 1..1000 {
        let c = 1.0 - f64::from(i) * 1e-4;
        // SAFETY: valid out-pointer
        assert_eq!(unsafe { ivb_bounds(c, 0.01, &mut b) }, IvbStatus::Ok);
        if !b.u2_defined {
            assert!(b.u2.is_nan());
            found_undefined = true;
        }
    }
    assert!(found_undefined);
    // SAFETY: valid out-pointer
    assert_eq!(unsafe { ivb_bounds(0.0, 0.1, &mut b) }, IvbStatus::Domain);
}

#[test]
fn solver_handle() {
    let s = Solver::new();
    let mut r = IvbSolveResult::default();
    let mut p = 0.0;
    // SAFETY: live handle and valid out-pointers
    unsafe {
        assert_eq!(ivb_price(0.04, 1.5f64.ln(), &mut p), IvbStatus::Ok);
        assert_eq!(ivb_solve(s.0, p, 1.5f64.ln(), &mut r), IvbStatus::Ok);
        assert!(r.converged);
        assert!((r.sigma - 0.04).abs() < 1e-12);
        assert!(r.iterations <= 4);

        assert_eq!(ivb_solver_set_max_iter(s.0, 0), IvbStatus::InvalidConfig);
        assert_eq!(
            ivb_solver_set_tolerance(s.0, f64::NAN),
            IvbStatus::InvalidConfig
        );
        assert_eq!(ivb_solver_set_seed(s.0, 99, 0.0), IvbStatus::InvalidConfig);
        assert_eq!(
            ivb_solver_set_seed(s.0, IVB_SEED_USER, -1.0),
            IvbStatus::Domain
        );
        // a rejected setting leaves the previous configuration in place
        assert_eq!(ivb_solve(s.0, p, 1.5f64.ln(), &mut r), IvbStatus::Ok);
        assert!(r.converged);

        assert_eq!(ivb_solver_set_max_iter(s.0, 2), IvbStatus::Ok);
        assert_eq!(ivb_solve(s.0, p, 1.5f64.ln(), &mut r), IvbStatus::Ok);
        assert_eq!(r.iterations, 2);
        assert!(!r.converged);

        for seed in [IVB_SEED_L3, IVB_SEED_L2, IVB_SEED_LU23, IVB_SEED_INFLECTION] {
            assert_eq!(ivb_solver_set_seed(s.0, seed, 0.0), IvbStatus::Ok);
        }
        assert_eq!(
            ivb_solve(ptr::null(), 0.2, 0.1, &mut r),
            IvbStatus::NullPointer
        );
        assert_eq!(
            ivb_solve(s.0, 0.2, 0.1, ptr::null_mut()),
            IvbStatus::NullPointer
        );
        assert_eq!(
            ivb_solver_set_max_iter(ptr::null_mut(), 3),
            IvbStatus::NullPointer
        );
        ivb_solver_free(ptr::null_mut());
    }
}

#[test]
fn solve_raw_quote() {
    let s = Solver::new();
    let mut sol = IvbRawSolution::default();
    // SAFETY: live handle and valid out-pointer
    unsafe {
        assert_eq!(
            ivb_solve_raw(
                s.0,
                7.965_567_455_405_796,
                100.0,
                100.0,
                4.0,
                IVB_CALL,
                1.0,
                &mut sol
            ),
            IvbStatus::Ok
        );
        assert!((sol.implied_vol - 0.1).abs() < 1e-13);
        assert!((sol.result.sigma - 0.2).abs() < 1e-13);
        assert_eq!(sol.k, 0.0);
        assert_eq!(
            ivb_solve_raw(s.0, 1.0, 100.0, 100.0, 0.0, IVB_CALL, 1.0, &mut sol),
            IvbStatus::Domain
        );
        assert!(last_error().contains("expiry"));
    }
}

#[test]
fn traced_solve() {
    let s = Solver::new();
    let mut t: *mut IvbTrace = ptr::null_mut();
    // SAFETY: live handles and valid out-pointers
    unsafe {
        assert_eq!(ivb_solver_set_seed(s.0, IVB_SEED_USER, 0.1), IvbStatus::Ok);
        assert_eq!(ivb_solve_traced(s.0, 0.2, 0.5, &mut t), IvbStatus::Ok);
        let n = ivb_trace_len(t);
        assert!(n >= 2);
        let (mut sigma, mut g) = (0.0, 0.0);
        assert_eq!(ivb_trace_get(t, 0, &mut sigma, &mut g), IvbStatus::Ok);
        assert_eq!(sigma, 0.1);
        assert!(g < 0.0);
        let mut r = IvbSolveResult::default();
        assert_eq!(ivb_trace_result(t, &mut r), IvbStatus::Ok);
        assert_eq!(ivb_trace_get(t, n - 1, &mut sigma, &mut g), IvbStatus::Ok);
        assert_eq!(sigma, r.sigma);
        assert_eq!(r.iterations as usize, n - 1);
        assert_eq!(ivb_trace_get(t, n, &mut sigma, &mut g), IvbStatus::Domain);
        ivb_trace_free(t);
        assert_eq!(ivb_trace_len(ptr::null()), 0);
        ivb_trace_free(ptr::null_mut());
    }
}

#[test]
fn oracle_and_version() {
    let mut v = 0.0;
    // SAFETY: valid out-pointer; version string is static
    unsafe {
        assert_eq!(ivb_oracle(0.3, 0.7, 0.0, &mut v), IvbStatus::Ok);
        let mut p = 0.0;
        ivb_price(v, 0.7, &mut p);
        assert!((p - 0.3).abs() < 1e-15);
        assert_eq!(ivb_oracle(0.3, 0.7, -1.0, &mut v), IvbStatus::InvalidConfig);
        let version = CStr::from_ptr(ivb_version()).to_str().unwrap();
        assert_eq!(version, env!("CARGO_PKG_VERSION"));
    }
}

#[test]
fn errors_are_thread_local() {
    let mut p = 0.0;
    // SAFETY: valid out-pointer
    unsafe { ivb_price(-1.0, 0.0, &mut p) };
    let here = last_error();
    std::thread::spawn(|| assert_eq!(last_error(), ""))
        .join()
        .unwrap();
    assert_eq!(last_error(), here);
}

fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

/// `target/<profile>`, the parent of this test's `deps` directory.
fn profile_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

fn have_cc() -> bool {
    Command::new("cc").arg("--version").output().is_ok()
}

#[test]
fn header_is_current() {
    let header = std::fs::read_to_string(manifest_dir().join("include/ivbounds.h")).unwrap();
    for sym in [
        "ivb_standardize",
        "ivb_solve_raw",
        "ivb_solve_traced",
        "ivb_bounds",
        "ivb_last_error",
        "IVB_STATUS_BAND_BELOW",
        "IVB_SEED_USER",
        "typedef struct IvbSolver IvbSolver;",
    ] {
        assert!(header.contains(sym), "{sym} missing from header");
    }
}

#[test]
fn c_program_links_and_runs() {
    if !have_cc() {
        eprintln!("skipping: no C compiler on PATH");
        return;
    }
    let lib = profile_dir().join("libivbounds_ffi.a");
    assert!(lib.exists(), "{} not built", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let include: &Path = &manifest_dir().join("include");
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Wextra", "-Werror", "-I"])
        .arg(include)
        .arg(manifest_dir().join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
