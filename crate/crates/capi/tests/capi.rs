//! Exercises the C ABI from Rust: handles, status codes, error strings, and
//! a syntax check of the generated header.

use arcdim_capi::*;
use std::ffi::{CStr, CString};
use std::ptr;

#[test]
fn build_query_free_roundtrip() {
    unsafe {
        let family = CString::new("gasket").unwrap();
        let f = CString::new("const:0").unwrap();
        let mut handle: *mut ArcdimFamily = ptr::null_mut();
        let st = arcdim_family_build(family.as_ptr(), f.as_ptr(), 3, &mut handle);
        assert!(matches!(st, ArcdimStatus::Ok));
        assert!(!handle.is_null());

        let mut v = 0u64;
        assert!(matches!(
            arcdim_family_vertex_count(handle, &mut v),
            ArcdimStatus::Ok
        ));
        assert_eq!(v, 42); // (3^4 + 3) / 2

        let mut e = 0u64;
        assert!(matches!(
            arcdim_family_edge_count(handle, &mut e),
            ArcdimStatus::Ok
        ));
        assert_eq!(e, 81); // 3^4

        // R(0, far corner) = (2/3)(5/3)^3 = 250/81.
        let far = ((2u64 * 8) << 32) | 0; // encode(2 * |G_3|, 0)
        let mut r = 0f64;
        assert!(matches!(
            arcdim_resistance(handle, 0, far, &mut r),
            ArcdimStatus::Ok
        ));
        assert!((r - 250.0 / 81.0).abs() < 1e-9, "r = {r}");

        let mut json: *mut libc::c_char = ptr::null_mut();
        assert!(matches!(
            arcdim_family_export_json(handle, &mut json),
            ArcdimStatus::Ok
        ));
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        assert!(text.contains("\"vertices\""));
        arcdim_string_free(json);

        arcdim_family_free(handle);
    }
}

#[test]
fn energy_and_heat_via_ffi() {
    unsafe {
        let family = CString::new("dyadic").unwrap();
        let mut handle: *mut ArcdimFamily = ptr::null_mut();
        let st = arcdim_family_build(family.as_ptr(), ptr::null(), 7, &mut handle);
        assert!(matches!(st, ArcdimStatus::Ok));

        let mut value = 0f64;
        let mut certified = 0i32;
        let st = arcdim_energy(handle, 2.0, 3, 0, 2, 1, &mut value, &mut certified);
        assert!(matches!(st, ArcdimStatus::Ok));
        assert_eq!(certified, 1);
        // The base cell sits at the half-line end (farthest from the
        // truncation boundary), so only one side ramp contributes:
        // (2 * 2^3 + 1)^(1-2).
        let expect = 1.0 / 17.0;
        assert!((value - expect).abs() < 1e-9, "value = {value}");

        let mut slope = 0f64;
        let mut ds = 0f64;
        let st = arcdim_heat_slope(handle, 120, &mut slope, &mut ds);
        assert!(matches!(st, ArcdimStatus::Ok));
        assert!((ds - 1.0).abs() < 0.25, "d_s = {ds}");

        // Horizon violation surfaces as a truncation status with a message.
        let st = arcdim_heat_slope(handle, 100_000, &mut slope, &mut ds);
        assert!(matches!(st, ArcdimStatus::Truncated));
        let msg = arcdim_last_error();
        assert!(!msg.is_null());
        let text = CStr::from_ptr(msg).to_str().unwrap();
        assert!(text.contains("horizon"), "{text}");

        arcdim_family_free(handle);
    }
}

#[test]
fn gasket_pattern_dims_via_ffi() {
    unsafe {
        let family = CString::new("gasket").unwrap();
        let f = CString::new("pattern:l3").unwrap();
        let mut handle: *mut ArcdimFamily = ptr::null_mut();
        let st = arcdim_family_build(family.as_ptr(), f.as_ptr(), 27, &mut handle);
        assert!(matches!(st, ArcdimStatus::Ok));
        let mut d_walk = 0f64;
        let mut d_s2 = 0f64;
        let st = arcdim_gasket_dims(handle, &mut d_walk, &mut d_s2);
        assert!(matches!(st, ArcdimStatus::Ok));
        assert!((d_walk - 2.0 * 3f64.ln() / 5f64.ln()).abs() < 0.05);
        assert!((d_s2 - 2.0 * 6f64.ln() / (90f64.ln() - 7f64.ln())).abs() < 0.05);
        arcdim_family_free(handle);
    }
}

#[test]
fn invalid_family_reports_error() {
    unsafe {
        let family = CString::new("nonsense").unwrap();
        let mut handle: *mut ArcdimFamily = ptr::null_mut();
        let st = arcdim_family_build(family.as_ptr(), ptr::null(), 3, &mut handle);
        assert!(matches!(st, ArcdimStatus::InvalidArgument));
        assert!(handle.is_null());
        let msg = arcdim_last_error();
        assert!(!msg.is_null());
    }
}

#[test]
fn generated_header_compiles_as_c() {
    let header = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("include/arcdim.h");
    if !header.exists() {
        panic!("header missing; build script should have generated it");
    }
    let status = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-x", "c"])
        .arg(&header)
        .status();
    match status {
        Ok(s) => assert!(s.success(), "header failed C syntax check"),
        Err(_) => eprintln!("cc unavailable; skipping header syntax check"),
    }
}
