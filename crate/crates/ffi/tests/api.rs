use std::ffi::{c_void, CStr, CString};
use std::ptr;

use adctr_ffi::*;

unsafe extern "C" fn sphere(x: *const f64, n: usize, _user: *mut c_void) -> f64 {
    let x = std::slice::from_raw_parts(x, n);
    0.5 * x.iter().map(|v| v * v).sum::<f64>()
}

unsafe extern "C" fn sphere_grad(x: *const f64, n: usize, g: *mut f64, user: *mut c_void) -> i32 {
    if !user.is_null() {
        *(user as *mut usize) += 1;
    }
    ptr::copy_nonoverlapping(x, g, n);
    0
}

unsafe extern "C" fn failing_grad(_x: *const f64, _n: usize, _g: *mut f64, _user: *mut c_void) -> i32 {
    1
}

fn last_error() -> String {
    let p = adctr_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn user_callbacks_on_a_quadratic() {
    unsafe {
        let cfg = adctr_config_new();
        assert_eq!(adctr_config_set_delta0(cfg, 10.0), AdctrCode::Ok);
        let x0 = [3.0, 4.0];
        let mut grads = 0usize;
        let mut report = ptr::null_mut();
        let code = adctr_minimize(
            cfg,
            2,
            x0.as_ptr(),
            Some(sphere),
            Some(sphere_grad),
            &mut grads as *mut usize as *mut c_void,
            &mut report,
        );
        assert_eq!(code, AdctrCode::Ok);
        assert_eq!(adctr_report_status(report), AdctrStatus::Converged);
        let mut c = AdctrCounters::default();
        assert_eq!(adctr_report_counters(report, &mut c), AdctrCode::Ok);
        assert!(c.iters <= 2);
        assert_eq!(c.nf, c.iters + 1);
        assert_eq!(c.ng, grads);
        assert_eq!(adctr_report_dim(report), 2);
        let mut x = [f64::NAN; 2];
        assert_eq!(adctr_report_x(report, x.as_mut_ptr(), 2), AdctrCode::Ok);
        assert!(x.iter().all(|v| v.abs() < 1e-8));
        assert_eq!(adctr_report_x(report, x.as_mut_ptr(), 1), AdctrCode::BufferTooSmall);
        adctr_report_free(report);
        adctr_config_free(cfg);
    }
}

#[test]
fn catalogue_problem_by_name() {
    unsafe {
        let cfg = adctr_config_new();
        assert_eq!(adctr_config_set_strategy(cfg, AdctrStrategy::Dctr as i32), AdctrCode::Ok);
        assert_eq!(adctr_config_set_check_bounds(cfg, true), AdctrCode::Ok);
        let name = CString::new("Rosenbrock").unwrap();
        let mut report = ptr::null_mut();
        assert_eq!(adctr_minimize_problem(cfg, name.as_ptr(), 2, &mut report), AdctrCode::Ok);
        let mut c = AdctrCounters::default();
        adctr_report_counters(report, &mut c);
        assert_eq!(adctr_report_status(report), AdctrStatus::Converged);
        assert!(c.gnorm_final <= 1e-5 && c.f_final <= 1e-8);
        assert_eq!(c.ng, c.accepted + 1);
        adctr_report_free(report);
        adctr_config_free(cfg);
    }
}

#[test]
fn error_codes_and_messages() {
    unsafe {
        let cfg = adctr_config_new();
        assert_eq!(adctr_config_set_grad_tol(cfg, -1.0), AdctrCode::InvalidArgument);
        assert!(last_error().contains("grad_tol"));
        assert_eq!(adctr_config_set_strategy(cfg, 7), AdctrCode::InvalidArgument);
        assert_eq!(adctr_config_set_max_iter(ptr::null_mut(), 3), AdctrCode::NullPointer);

        let mut report = ptr::null_mut();
        let bad = CString::new("Extended Powell").unwrap();
        assert_eq!(adctr_minimize_problem(cfg, bad.as_ptr(), 6, &mut report), AdctrCode::BadDimension);
        let unknown = CString::new("nope").unwrap();
        assert_eq!(adctr_minimize_problem(cfg, unknown.as_ptr(), 2, &mut report), AdctrCode::UnknownProblem);
        assert!(report.is_null());

        let x0 = [f64::NAN, 1.0];
        let code = adctr_minimize(cfg, 2, x0.as_ptr(), Some(sphere), Some(sphere_grad), ptr::null_mut(), &mut report);
        assert_eq!(code, AdctrCode::NonFiniteStart);
        let code = adctr_minimize(cfg, 2, x0.as_ptr(), None, Some(sphere_grad), ptr::null_mut(), &mut report);
        assert_eq!(code, AdctrCode::NullPointer);

        // a gradient that always fails makes the start point unusable
        let x0 = [1.0, 1.0];
        let code = adctr_minimize(cfg, 2, x0.as_ptr(), Some(sphere), Some(failing_grad), ptr::null_mut(), &mut report);
        assert_eq!(code, AdctrCode::NonFiniteStart);

        assert_eq!(adctr_report_status(ptr::null()), AdctrStatus::SubproblemFailure);
        assert_eq!(adctr_report_dim(ptr::null()), 0);
        adctr_report_free(ptr::null_mut());
        adctr_config_free(cfg);
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(adctr_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
