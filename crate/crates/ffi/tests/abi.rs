// frozen reference digits are kept at full length
#![allow(clippy::excessive_precision, clippy::approx_constant)]

use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use opx_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(opx_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn equilibrium_roundtrip() {
    let id = CString::new("c2lip(0,1)").unwrap();
    let mut h = ptr::null_mut();
    unsafe {
        assert_eq!(opx_equilibrium_solve(id.as_ptr(), 1.0, 0, &mut h), OpxStatus::Ok);
        assert!(!h.is_null());
        let (mut a, mut b, mut l) = (0.0, 0.0, 0.0);
        assert_eq!(opx_equilibrium_constants(h, &mut a, &mut b, &mut l), OpxStatus::Ok);
        assert!((a + 2.1182798162936088781).abs() < 1e-10);
        assert!((b - 0.9829070084249322953).abs() < 1e-10);
        assert!((l + 1.4297585888312774853).abs() < 1e-8);
        let mut v = 0.0;
        assert_eq!(opx_equilibrium_theta(h, 0.3, &mut v), OpxStatus::Ok);
        assert!((v - 1.7268908563350878961).abs() < 1e-9);
        assert_eq!(opx_equilibrium_phi(h, b + 0.5, &mut v), OpxStatus::Ok);
        assert!((v - 1.9484990592807596817).abs() < 1e-6);
        assert_eq!(last_error(), "");
        assert_eq!(opx_equilibrium_phi(h, 0.0, &mut v), OpxStatus::Domain);
        assert!(last_error().contains("domain"));
        let mut s = ptr::null_mut();
        assert_eq!(opx_equilibrium_summary_json(h, &mut s), OpxStatus::Ok);
        let j: serde_json::Value = serde_json::from_str(CStr::from_ptr(s).to_str().unwrap()).unwrap();
        assert_eq!(j["condition_report"]["all_pass"], true);
        opx_string_free(s);
        opx_equilibrium_free(h);
    }
}

#[test]
fn error_codes() {
    let mut h = ptr::null_mut();
    unsafe {
        let bad = CString::new("cosh").unwrap();
        assert_eq!(opx_equilibrium_solve(bad.as_ptr(), 1.0, 0, &mut h), OpxStatus::UnknownField);
        assert!(h.is_null());
        let gue = CString::new("gue").unwrap();
        assert_eq!(opx_equilibrium_solve(gue.as_ptr(), -1.0, 0, &mut h), OpxStatus::Validation);
        assert_eq!(opx_equilibrium_solve(ptr::null(), 1.0, 0, &mut h), OpxStatus::NullPointer);
        assert_eq!(opx_equilibrium_solve(gue.as_ptr(), 1.0, 0, ptr::null_mut()), OpxStatus::NullPointer);
        let latin1 = [0xe9u8, 0];
        assert_eq!(opx_equilibrium_solve(latin1.as_ptr().cast(), 1.0, 0, &mut h), OpxStatus::InvalidString);
        let mut v = 0.0;
        assert_eq!(opx_equilibrium_psi(ptr::null(), 0.0, &mut v), OpxStatus::NullPointer);
        opx_equilibrium_free(ptr::null_mut());
        opx_recurrence_free(ptr::null_mut());
        opx_phase_free(ptr::null_mut());
        opx_string_free(ptr::null_mut());
        let mut p = ptr::null_mut();
        let sextic = CString::new("sextic").unwrap();
        assert_ne!(opx_phase_new(sextic.as_ptr(), &mut p), OpxStatus::Ok);
    }
}

#[test]
fn recurrence_matches_hermite() {
    // e^{-N x²}: a_k = 0, b_k = √(k / 2N)
    let gue = CString::new("gue").unwrap();
    let mut h = ptr::null_mut();
    unsafe {
        assert_eq!(opx_recurrence_build(gue.as_ptr(), 10, 12, &mut h), OpxStatus::Ok);
        assert_eq!(opx_recurrence_len(h), 12);
        for k in 0..12 {
            let (mut a, mut b) = (1.0, 0.0);
            assert_eq!(opx_recurrence_coefficients(h, k, &mut a, &mut b), OpxStatus::Ok);
            assert!(a.abs() < 1e-13);
            assert!((b - ((k + 1) as f64 / 20.0).sqrt()).abs() < 1e-13);
        }
        let (mut a, mut b) = (0.0, 0.0);
        assert_eq!(opx_recurrence_coefficients(h, 12, &mut a, &mut b), OpxStatus::Validation);
        let mut lk = 0.0;
        assert_eq!(opx_recurrence_log_kappa_sq(h, 13, &mut lk), OpxStatus::Validation);
        assert_eq!(opx_recurrence_log_kappa_sq(h, 2, &mut lk), OpxStatus::Ok);
        let (mut re, mut im, mut s) = (0.0, 0.0, 0.0);
        assert_eq!(opx_recurrence_eval(h, 2, 0.3, 0.0, &mut re, &mut im, &mut s), OpxStatus::Ok);
        // p₂(x) = κ₂ (x² − b₁²) with b₁² = 1/20
        let p2 = (0.5 * lk).exp() * (0.09 - 0.05);
        assert!((re * s.exp() - p2).abs() < 1e-12 * p2.abs().max(1.0), "{} vs {p2}", re * s.exp());
        assert_eq!(im, 0.0);
        opx_recurrence_free(h);
    }
}

#[test]
fn phase_integral() {
    let name = CString::new("cubic").unwrap();
    let mut p = ptr::null_mut();
    unsafe {
        assert_eq!(opx_phase_new(name.as_ptr(), &mut p), OpxStatus::Ok);
        let (mut re, mut im) = (0.0, 0.0);
        assert_eq!(opx_phase_integral(p, 100.0, &mut re, &mut im), OpxStatus::Ok);
        assert!((re - 0.129048478206898974582).abs() < 1e-12 && (im - 0.120949173421707267801).abs() < 1e-12);
        assert_eq!(opx_phase_integral(p, 0.0, &mut re, &mut im), OpxStatus::Validation);
        opx_phase_free(p);
    }
}

#[test]
fn errors_are_per_thread() {
    let gue = CString::new("cosh").unwrap();
    let mut h = ptr::null_mut();
    unsafe { opx_equilibrium_solve(gue.as_ptr(), 1.0, 0, &mut h) };
    assert!(!last_error().is_empty());
    std::thread::spawn(|| assert_eq!(last_error(), "")).join().unwrap();
}

#[test]
fn header_is_current() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let h = std::fs::read_to_string(dir.join("include/opx.h")).unwrap();
    for sym in [
        "opx_last_error",
        "opx_equilibrium_solve",
        "opx_equilibrium_summary_json",
        "opx_recurrence_eval",
        "opx_phase_integral",
        "OPX_STATUS_NO_CONVERGENCE = 7",
        "typedef struct OpxEquilibrium OpxEquilibrium;",
    ] {
        assert!(h.contains(sym), "{sym} missing from header");
    }
}

// Compiles tests/smoke.c against the generated header and the static library.
#[test]
fn c_program_links_and_runs() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    // the test binary sits next to the freshly built static library in deps/
    let lib = exe.parent().unwrap().join("libopx_ffi.a");
    if !lib.exists() {
        eprintln!("skipping: {} not built", lib.display());
        return;
    }
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let tmp = tempfile::tempdir().unwrap();
    let bin = tmp.path().join("smoke");
    let status = Command::new(&cc)
        .arg(dir.join("tests/smoke.c"))
        .arg("-I")
        .arg(dir.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status();
    let Ok(status) = status else {
        eprintln!("skipping: no C compiler ({cc})");
        return;
    };
    assert!(status.success(), "C compile failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
