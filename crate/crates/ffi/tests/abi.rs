use std::ffi::{c_char, CStr, CString};
use std::ptr;

use drinfeld_ffi::*;

fn owned(s: *mut c_char) -> String {
    assert!(!s.is_null());
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_owned();
    unsafe { drinfeld_string_free(s) };
    out
}

fn parse(p: u64, text: &str) -> *mut DrinfeldFunction {
    let c = CString::new(text).unwrap();
    let mut f = ptr::null_mut();
    assert_eq!(unsafe { drinfeld_function_parse(p, c.as_ptr(), &mut f) }, DrinfeldStatus::Ok);
    f
}

#[test]
fn parse_print_and_free() {
    let f = parse(3, "(z-1)^2/(z-3)");
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { drinfeld_function_to_string(f, &mut s) }, DrinfeldStatus::Ok);
    let text = owned(s);
    let g = parse(3, &text);
    let mut same = false;
    assert_eq!(unsafe { drinfeld_function_equal(f, g, &mut same) }, DrinfeldStatus::Ok);
    assert!(same, "{text}");
    unsafe {
        drinfeld_function_free(f);
        drinfeld_function_free(g);
        drinfeld_function_free(ptr::null_mut());
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    let bad = CString::new("1/(z-").unwrap();
    let mut f = ptr::null_mut();
    assert_eq!(unsafe { drinfeld_function_parse(2, bad.as_ptr(), &mut f) }, DrinfeldStatus::Parse);
    assert!(f.is_null());
    assert!(owned(drinfeld_last_error_message()).contains("parse"));
    let ok = CString::new("z").unwrap();
    assert_eq!(unsafe { drinfeld_function_parse(4, ok.as_ptr(), &mut f) }, DrinfeldStatus::InvalidParameters);
    assert_eq!(unsafe { drinfeld_function_parse(2, ptr::null(), &mut f) }, DrinfeldStatus::NullPointer);
    assert_eq!(unsafe { drinfeld_function_parse(2, ok.as_ptr(), ptr::null_mut()) }, DrinfeldStatus::NullPointer);
    let msg = unsafe { CStr::from_ptr(drinfeld_status_message(DrinfeldStatus::Parse as i32)) };
    assert_eq!(msg.to_str().unwrap(), "parse error");
    let msg = unsafe { CStr::from_ptr(drinfeld_status_message(99)) };
    assert_eq!(msg.to_str().unwrap(), "unknown status");
}

#[test]
fn singular_matrix_is_rejected() {
    let f = parse(2, "z");
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { drinfeld_function_act(f, 1, 2, 2, 4, 0, &mut g) }, DrinfeldStatus::SingularMatrix);
    unsafe { drinfeld_function_free(f) };
}

#[test]
fn translation_and_theta() {
    let f = parse(3, "(z-1)^2/(z-3)");
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { drinfeld_function_act(f, 1, 1, 0, 1, 0, &mut g) }, DrinfeldStatus::Ok);
    let want = parse(3, "z^2/(z-2)");
    let mut same = false;
    unsafe { drinfeld_function_equal(g, want, &mut same) };
    assert!(same);
    let cubic = parse(3, "z^3");
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { drinfeld_function_theta(cubic, 2, &mut t) }, DrinfeldStatus::Ok);
    let six = parse(3, "6");
    unsafe { drinfeld_function_equal(t, six, &mut same) };
    assert!(same);
    for h in [f, g, want, cubic, t, six] {
        unsafe { drinfeld_function_free(h) };
    }
}

#[test]
fn gauss_valuation_in_half_units() {
    let f = parse(2, "1/z");
    let mut v = 0i64;
    assert_eq!(unsafe { drinfeld_function_gauss_valuation(f, 0, 0, 1, &mut v) }, DrinfeldStatus::Ok);
    assert_eq!(v, 0);
    assert_eq!(unsafe { drinfeld_function_gauss_valuation(f, 2, 0, 1, &mut v) }, DrinfeldStatus::Ok);
    assert_eq!(v, 4);
    assert_eq!(unsafe { drinfeld_function_gauss_valuation(f, 0, 0, 0, &mut v) }, DrinfeldStatus::InvalidParameters);
    unsafe { drinfeld_function_free(f) };
}

#[test]
fn tree_and_residues() {
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { drinfeld_tree_new(3, 2, &mut t) }, DrinfeldStatus::Ok);
    let (mut nv, mut ne) = (0usize, 0usize);
    assert_eq!(unsafe { drinfeld_tree_size(t, &mut nv, &mut ne) }, DrinfeldStatus::Ok);
    assert_eq!((nv, ne), (17, 16));
    let f = parse(3, "1/(z-1)");
    let (mut zero, mut harmonic) = (true, false);
    assert_eq!(unsafe { drinfeld_residue_check(f, 0, t, &mut zero, &mut harmonic) }, DrinfeldStatus::Ok);
    assert!(!zero && harmonic);
    let other = parse(2, "z");
    assert_eq!(unsafe { drinfeld_residue_check(other, 0, t, &mut zero, &mut harmonic) }, DrinfeldStatus::InvalidParameters);
    unsafe {
        drinfeld_function_free(f);
        drinfeld_function_free(other);
        drinfeld_tree_free(t);
    }
}

#[test]
fn geometry_entry_points() {
    let mut d = 0i64;
    assert_eq!(unsafe { drinfeld_component_degree(3, 4, &mut d) }, DrinfeldStatus::Ok);
    assert_eq!(d, 4);
    assert_eq!(unsafe { drinfeld_component_degree(3, 5, &mut d) }, DrinfeldStatus::Ok);
    assert_eq!(d, 3);
    let (mut dim, mut expected) = (9usize, 9usize);
    assert_eq!(unsafe { drinfeld_truncated_sections(2, 1, 2, &mut dim, &mut expected) }, DrinfeldStatus::Ok);
    assert_eq!((dim, expected), (0, 0));
}

#[test]
fn run_returns_the_cli_report() {
    let args: Vec<CString> = ["local-dims", "--p", "2", "--k", "2"].iter().map(|s| CString::new(*s).unwrap()).collect();
    let ptrs: Vec<*const c_char> = args.iter().map(|s| s.as_ptr()).collect();
    let (mut json, mut pass) = (ptr::null_mut(), false);
    assert_eq!(unsafe { drinfeld_run(ptrs.len(), ptrs.as_ptr(), &mut json, &mut pass) }, DrinfeldStatus::Ok);
    assert!(pass);
    assert!(owned(json).contains("\"command\": \"local-dims\""));
    let bad = [CString::new("no-such-command").unwrap()];
    let ptrs: Vec<*const c_char> = bad.iter().map(|s| s.as_ptr()).collect();
    assert_eq!(unsafe { drinfeld_run(1, ptrs.as_ptr(), &mut json, &mut pass) }, DrinfeldStatus::Parse);
}
