use std::ffi::{c_char, CStr, CString};
use std::ptr;

use taupsd_ffi::*;

fn last_error() -> String {
    let mut needed = 0usize;
    unsafe {
        taupsd_last_error_message(ptr::null_mut(), 0, &mut needed);
        let mut buf = vec![0 as c_char; needed];
        assert_eq!(
            taupsd_last_error_message(buf.as_mut_ptr(), buf.len(), ptr::null_mut()),
            TaupsdStatus::Ok
        );
        CStr::from_ptr(buf.as_ptr()).to_str().unwrap().to_owned()
    }
}

fn grid(dim: usize, n: usize, l: f64) -> *mut TaupsdGrid {
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { taupsd_grid_new(dim, n, l, &mut g) }, TaupsdStatus::Ok);
    g
}

fn corpus_symbol(g: *const TaupsdGrid, reference: &str) -> *mut TaupsdPhaseSymbol {
    let r = CString::new(reference).unwrap();
    let mut a = ptr::null_mut();
    assert_eq!(
        unsafe { taupsd_phase_symbol_from_corpus(r.as_ptr(), g, &mut a) },
        TaupsdStatus::Ok,
        "{}",
        last_error()
    );
    a
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(taupsd_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn hs_identity_through_the_abi() {
    let g = grid(1, 64, 10.0);
    let a = corpus_symbol(g, "gauss(sigma=1)");
    let mut len = 0;
    unsafe {
        assert_eq!(taupsd_grid_len(g, &mut len), TaupsdStatus::Ok);
    }
    assert_eq!(len, 64);

    // ||a||_{L2} of the sampled symbol, by the phase-space quadrature
    let h = 20.0 / 64.0;
    let dp = std::f64::consts::PI / 10.0;
    let l2: f64 = (0..64)
        .flat_map(|i| (0..64).map(move |j| (i, j)))
        .map(|(i, j)| {
            let x = -10.0 + i as f64 * h;
            let p = (j as f64 - 32.0) * dp;
            (-(x * x + p * p)).exp() * h * dp
        })
        .sum::<f64>()
        .sqrt();
    for tau in [0.0, 0.5, 1.0] {
        let mut k = ptr::null_mut();
        let mut hs = 0.0;
        unsafe {
            assert_eq!(taupsd_quantize_scalar(a, tau, &mut k), TaupsdStatus::Ok);
            assert_eq!(taupsd_kernel_hs_norm(k, &mut hs), TaupsdStatus::Ok);
            taupsd_kernel_free(k);
        }
        let ratio = hs / l2;
        assert!(
            (ratio - (2.0 * std::f64::consts::PI).powf(-0.5)).abs() < 1e-6,
            "tau {tau}: {ratio}"
        );
    }
    unsafe {
        taupsd_phase_symbol_free(a);
        taupsd_grid_free(g);
    }
}

#[test]
fn kernel_values_and_schatten() {
    let g = grid(1, 16, 6.0);
    let a = corpus_symbol(g, "gauss(sigma=1)");
    let mut k = ptr::null_mut();
    let tau = [0.5];
    unsafe {
        assert_eq!(taupsd_quantize(a, tau.as_ptr(), 1, &mut k), TaupsdStatus::Ok);
        let mut size = 0;
        assert_eq!(taupsd_kernel_size(k, &mut size), TaupsdStatus::Ok);
        assert_eq!(size, 16);
        let mut re = vec![0.0; size * size];
        let mut im = vec![0.0; size * size];
        assert_eq!(
            taupsd_kernel_values(k, re.as_mut_ptr(), im.as_mut_ptr(), 3),
            TaupsdStatus::InvalidArgument
        );
        assert_eq!(
            taupsd_kernel_values(k, re.as_mut_ptr(), im.as_mut_ptr(), re.len()),
            TaupsdStatus::Ok
        );
        // same values as the core crate, row-major
        let cg = taupsd::euclid::Grid::new(1, 16, 6.0).unwrap();
        let core = taupsd::harness::corpus::parse("gauss(sigma=1)")
            .unwrap()
            .phase(cg)
            .unwrap();
        let expected = taupsd::quantize::quantize(&core, &taupsd::euclid::Endo::scalar(1, 0.5).unwrap()).unwrap();
        for i in 0..size {
            for j in 0..size {
                assert_eq!(re[i * size + j], expected.values[(i, j)].re);
                assert_eq!(im[i * size + j], expected.values[(i, j)].im);
            }
        }

        let p = [1.0, 2.0, f64::INFINITY];
        let mut norms = [0.0; 3];
        assert_eq!(
            taupsd_kernel_schatten(k, p.as_ptr(), 3, norms.as_mut_ptr()),
            TaupsdStatus::Ok
        );
        assert!(
            norms[0] >= norms[1] && norms[1] >= norms[2] && norms[2] > 0.0,
            "{norms:?}"
        );
        let mut hs = 0.0;
        taupsd_kernel_hs_norm(k, &mut hs);
        assert!((norms[1] - hs).abs() < 1e-10 * hs);

        let bad = [0.5];
        assert_eq!(
            taupsd_kernel_schatten(k, bad.as_ptr(), 1, norms.as_mut_ptr()),
            TaupsdStatus::InvalidArgument
        );
        taupsd_kernel_free(k);
        taupsd_phase_symbol_free(a);
        taupsd_grid_free(g);
    }
}

#[test]
fn values_constructor_checks_length() {
    let g = grid(1, 8, 4.0);
    let re = vec![1.0; 64];
    let mut a = ptr::null_mut();
    unsafe {
        assert_eq!(
            taupsd_phase_symbol_from_values(g, re.as_ptr(), ptr::null(), 63, &mut a),
            TaupsdStatus::InvalidArgument
        );
        assert!(a.is_null());
        assert!(last_error().contains("64"));
        assert_eq!(
            taupsd_phase_symbol_from_values(g, re.as_ptr(), ptr::null(), 64, &mut a),
            TaupsdStatus::Ok
        );
        assert!(!a.is_null());
        taupsd_phase_symbol_free(a);
        taupsd_grid_free(g);
    }
}

#[test]
fn error_codes() {
    let mut g = ptr::null_mut();
    unsafe {
        assert_eq!(taupsd_grid_new(1, 0, 1.0, &mut g), TaupsdStatus::InvalidArgument);
        assert!(!last_error().is_empty());
        assert_eq!(taupsd_grid_new(1, 8, 1.0, ptr::null_mut()), TaupsdStatus::NullPointer);
        assert_eq!(taupsd_grid_len(ptr::null(), &mut 0), TaupsdStatus::NullPointer);
    }
    let g = grid(1, 8, 4.0);
    let bad = CString::new("nosuch(a=1)").unwrap();
    let mut a = ptr::null_mut();
    unsafe {
        assert_eq!(
            taupsd_phase_symbol_from_corpus(bad.as_ptr(), g, &mut a),
            TaupsdStatus::Lookup
        );
    }
    assert!(last_error().contains("nosuch"));
    let a = corpus_symbol(g, "gauss(sigma=1)");
    assert!(last_error().is_empty());
    let tau = [0.5; 4];
    let mut k = ptr::null_mut();
    unsafe {
        assert_eq!(
            taupsd_quantize(a, tau.as_ptr(), 2, &mut k),
            TaupsdStatus::InvalidArgument
        );
        taupsd_phase_symbol_free(a);
        taupsd_grid_free(g);
        // freeing null is a no-op
        taupsd_grid_free(ptr::null_mut());
        taupsd_kernel_free(ptr::null_mut());
        taupsd_report_free(ptr::null_mut());
    }
}

#[test]
fn run_config_and_read_report() {
    let cfg = CString::new(r#"{"experiment":"hs-identity","grid":{"dim":1,"N":32,"L":8},"symbol":"gauss(sigma=1)"}"#)
        .unwrap();
    let mut r = ptr::null_mut();
    unsafe {
        assert_eq!(
            taupsd_run_config_json(cfg.as_ptr(), &mut r),
            TaupsdStatus::Ok,
            "{}",
            last_error()
        );
        let mut code = -1;
        assert_eq!(taupsd_report_exit_code(r, &mut code), TaupsdStatus::Ok);
        assert_eq!(code, 0);
        let mut rows = 0;
        taupsd_report_row_count(r, &mut rows);
        assert_eq!(rows, 3);

        let mut needed = 0;
        let mut small = [0 as c_char; 4];
        assert_eq!(
            taupsd_report_json(r, small.as_mut_ptr(), 4, &mut needed),
            TaupsdStatus::BufferTooSmall
        );
        let mut buf = vec![0 as c_char; needed];
        assert_eq!(
            taupsd_report_json(r, buf.as_mut_ptr(), buf.len(), ptr::null_mut()),
            TaupsdStatus::Ok
        );
        let json: serde_json::Value = serde_json::from_str(CStr::from_ptr(buf.as_ptr()).to_str().unwrap()).unwrap();
        assert_eq!(json["summary"]["pass"], 3);

        taupsd_report_csv(r, ptr::null_mut(), 0, &mut needed);
        let mut buf = vec![0 as c_char; needed];
        assert_eq!(
            taupsd_report_csv(r, buf.as_mut_ptr(), buf.len(), ptr::null_mut()),
            TaupsdStatus::Ok
        );
        let csv = CStr::from_ptr(buf.as_ptr()).to_str().unwrap();
        assert_eq!(csv.lines().count(), 4);
        taupsd_report_free(r);
    }

    let bad = CString::new(r#"{"experiment":"schatten"}"#).unwrap();
    let mut r = ptr::null_mut();
    unsafe {
        assert_eq!(taupsd_run_config_json(bad.as_ptr(), &mut r), TaupsdStatus::Config);
    }
    assert!(r.is_null());
    assert!(last_error().contains("p_list"));
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/taupsd.h")).unwrap();
    for name in [
        "taupsd_version",
        "taupsd_last_error_message",
        "taupsd_grid_new",
        "taupsd_phase_symbol_from_corpus",
        "taupsd_quantize",
        "taupsd_kernel_schatten",
        "taupsd_run_config_json",
        "taupsd_report_free",
        "TAUPSD_STATUS_BUFFER_TOO_SMALL",
        "typedef struct TaupsdKernel TaupsdKernel;",
    ] {
        assert!(header.contains(name), "{name} missing from the header");
    }
}
