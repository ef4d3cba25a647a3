//! C ABI over the `drinfeld` crate.
//!
//! Every fallible entry point returns a [`DrinfeldStatus`] and writes its
//! result through an out-pointer. Objects are opaque handles released by the
//! matching `*_free` function; strings returned to the caller are released
//! with [`drinfeld_string_free`]. A description of the most recent failure on
//! the calling thread is available from [`drinfeld_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use clap::Parser;
use drinfeld::cli::{run, Cli, RunConfig};
use drinfeld::harmonic::{is_harmonic, res0, Boundary};
use drinfeld::modp_geometry::{component_degree, global_sections_truncated};
use drinfeld::rational::{parse_function, FactoredRational};
use drinfeld::scalars::{Prime, Rat};
use drinfeld::symrep::automorphic_act;
use drinfeld::theta::theta;
use drinfeld::tree::{GroupElement, TreeVertex, TruncatedTree};
use drinfeld::Error;

/// Result codes shared by all entry points.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrinfeldStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidParameters = 3,
    Parse = 4,
    SingularMatrix = 5,
    Arithmetic = 6,
    InvariantViolation = 7,
    Panic = 8,
}

impl From<&Error> for DrinfeldStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidParameters(_) | Error::ResidueFieldMismatch { .. } => Self::InvalidParameters,
            Error::Parse(_) => Self::Parse,
            Error::SingularMatrix | Error::NonInvertibleDeterminant => Self::SingularMatrix,
            Error::NegativeValuation | Error::ZeroFunction | Error::PoleInsideAnnulus { .. } | Error::DivisionByZero => {
                Self::Arithmetic
            }
            Error::InvariantViolation(_) => Self::InvariantViolation,
        }
    }
}

/// A rational function over the completed field.
pub struct DrinfeldFunction(FactoredRational);

/// A ball in the Bruhat-Tits tree around the root vertex.
pub struct DrinfeldTree(TruncatedTree);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

struct Failure(DrinfeldStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure((&e).into(), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(DrinfeldStatus::NullPointer, format!("{what} is null"))
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> DrinfeldStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => DrinfeldStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            DrinfeldStatus::Panic
        }
    }
}

fn prime(p: u64) -> Result<Prime, Failure> {
    Ok(Prime::new(p)?)
}

unsafe fn c_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Failure(DrinfeldStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn handle<'a, T>(h: *const T, what: &str) -> Result<&'a T, Failure> {
    h.as_ref().ok_or_else(|| null(what))
}

fn string_out(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("no interior nul").into_raw()
}

/// Static description of a status code. Never null; do not free.
/// Unknown codes map to `"unknown status"`.
#[no_mangle]
pub extern "C" fn drinfeld_status_message(status: i32) -> *const c_char {
    let s: &'static CStr = match status {
        0 => c"ok",
        1 => c"null pointer argument",
        2 => c"string is not valid UTF-8",
        3 => c"invalid parameters",
        4 => c"parse error",
        5 => c"singular matrix",
        6 => c"arithmetic error",
        7 => c"invariant violated",
        8 => c"internal panic",
        _ => c"unknown status",
    };
    s.as_ptr()
}

/// Copy of the last error message on this thread, or null if none.
/// Release it with `drinfeld_string_free`.
#[no_mangle]
pub extern "C" fn drinfeld_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null_mut(), |c| c.clone().into_raw()))
}

/// # Safety
///
/// `s` must be null or a pointer returned by this library as an owned
/// string that has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn drinfeld_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parse a rational function such as `"(z-1)^-2*(z-2)/3"` for the prime `p`.
///
/// # Safety
///
/// `text` must be a valid nul-terminated string and `out` a valid pointer to
/// writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn drinfeld_function_parse(p: u64, text: *const c_char, out: *mut *mut DrinfeldFunction) -> DrinfeldStatus {
    guard(|| {
        let f = parse_function(prime(p)?, c_str(text, "text")?)?;
        write(out, Box::into_raw(Box::new(DrinfeldFunction(f))), "out")
    })
}

/// # Safety
///
/// `f` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn drinfeld_function_free(f: *mut DrinfeldFunction) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Render a function; release the string with `drinfeld_string_free`.
///
/// # Safety
///
/// `f` must be a live function handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn drinfeld_function_to_string(f: *const DrinfeldFunction, out: *mut *mut c_char) -> DrinfeldStatus {
    guard(|| {
        let f = handle(f, "f")?;
        write(out, string_out(f.0.to_string()), "out")
    })
}

/// Sets `*out` to whether the two handles hold the same function.
///
/// # Safety
///
/// `f` and `g` must be live function handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn drinfeld_function_equal(f: *const DrinfeldFunction, g: *const DrinfeldFunction, out: *mut bool) -> DrinfeldStatus {
    guard(|| {
        let (f, g) = (handle(f, "f")?, handle(g, "g")?);
        write(out, f.0.same_function(&g.0), "out")
    })
}

/// The `(k+1)`-st derivative of `f`, as a new handle.
///
/// # Safety
///
/// `f` must be a live function handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn drinfeld_function_theta(f: *const DrinfeldFunction, k: u32, out: *mut *mut DrinfeldFunction) -> DrinfeldStatus {
    guard(|| {
        let f = handle(f, "f")?;
        write(out, Box::into_raw(Box::new(DrinfeldFunction(theta(&f.0, k as usize)))), "out")
    })
}

/// Weight-`k` automorphic transform of `f` by the integer matrix `[[a, b], [c, d]]`.
///
/// # Safety
///
/// `f` must be a live function handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn drinfeld_function_act(
    f: *const DrinfeldFunction,
    a: i64,
    b: i64,
    c: i64,
    d: i64,
    k: i64,
    out: *mut *mut DrinfeldFunction,
) -> DrinfeldStatus {
    guard(|| {
        let f = handle(f, "f")?;
        let g = GroupElement::from_ints(f.0.prime(), a, b, c, d)?;
        write(out, Box::into_raw(Box::new(DrinfeldFunction(automorphic_act(&g, &f.0, k)))), "out")
    })
}

/// Gauss valuation of `f` on the disc `num/den + p^-level O`, in half-units.
///
/// # Safety
///
/// `f` must be a live function handle and `out_halves` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn drinfeld_function_gauss_valuation(
    f: *const DrinfeldFunction,
    level: i64,
    offset_num: i64,
    offset_den: i64,
    out_halves: *mut i64,
) -> DrinfeldStatus {
    guard(|| {
        let f = handle(f, "f")?;
        if offset_den == 0 {
            return Err(Failure(DrinfeldStatus::InvalidParameters, "zero denominator".into()));
        }
        let v = TreeVertex::new(f.0.prime(), level, &Rat::new(offset_num.into(), offset_den.into()));
        write(out_halves, f.0.gauss_valuation(&v)?.halves(), "out_halves")
    })
}

/// Ball of the given radius around the root vertex.
///
/// # Safety
///
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn drinfeld_tree_new(p: u64, radius: u32, out: *mut *mut DrinfeldTree) -> DrinfeldStatus {
    guard(|| {
        let t = TruncatedTree::new(prime(p)?, TreeVertex::root(), radius)?;
        write(out, Box::into_raw(Box::new(DrinfeldTree(t))), "out")
    })
}

/// # Safety
///
/// `t` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn drinfeld_tree_free(t: *mut DrinfeldTree) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// # Safety
///
/// `t` must be a live tree handle and both out-pointers valid.
#[no_mangle]
pub unsafe extern "C" fn drinfeld_tree_size(t: *const DrinfeldTree, out_vertices: *mut usize, out_edges: *mut usize) -> DrinfeldStatus {
    guard(|| {
        let t = handle(t, "t")?;
        write(out_vertices, t.0.vertices().len(), "out_vertices")?;
        write(out_edges, t.0.edge_indices().len(), "out_edges")
    })
}

/// Computes the residue cochain of `f` in weight `k + 2` on the tree and
/// reports whether it vanishes and whether it is harmonic at interior vertices.
///
/// # Safety
///
/// `f` and `t` must be live handles over the same prime and both out-pointers valid.
#[no_mangle]
pub unsafe extern "C" fn drinfeld_residue_check(
    f: *const DrinfeldFunction,
    k: u32,
    t: *const DrinfeldTree,
    out_zero: *mut bool,
    out_harmonic: *mut bool,
) -> DrinfeldStatus {
    guard(|| {
        let (f, t) = (handle(f, "f")?, handle(t, "t")?);
        if f.0.prime() != t.0.prime() {
            return Err(Failure(DrinfeldStatus::InvalidParameters, "function and tree use different primes".into()));
        }
        let c = res0(&f.0, k as usize, &t.0)?;
        write(out_zero, c.is_zero(), "out_zero")?;
        write(out_harmonic, is_harmonic(&t.0, &c, Boundary::Free), "out_harmonic")
    })
}

/// Degree of the weight-`k` line bundle on a component with `q + 1` marked points.
///
/// # Safety
///
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn drinfeld_component_degree(q: u64, k: i64, out: *mut i64) -> DrinfeldStatus {
    guard(|| write(out, component_degree(q, k).degree, "out"))
}

/// Dimension of glued sections on the ball of radius `radius`, with the closed-form prediction.
///
/// # Safety
///
/// Both out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn drinfeld_truncated_sections(
    p: u64,
    k: i64,
    radius: u32,
    out_dim: *mut usize,
    out_expected: *mut usize,
) -> DrinfeldStatus {
    guard(|| {
        let s = global_sections_truncated(prime(p)?, k, radius)?;
        write(out_dim, s.dim, "out_dim")?;
        write(out_expected, s.expected, "out_expected")
    })
}

/// Runs a command-line invocation (without the program name) and returns the
/// JSON report. `*out_pass` receives the report verdict.
///
/// # Safety
///
/// `argv` must point to `argc` valid nul-terminated strings; `out_json` and
/// `out_pass` must be valid pointers. Release the JSON with `drinfeld_string_free`.
#[no_mangle]
pub unsafe extern "C" fn drinfeld_run(
    argc: usize,
    argv: *const *const c_char,
    out_json: *mut *mut c_char,
    out_pass: *mut bool,
) -> DrinfeldStatus {
    guard(|| {
        if argv.is_null() && argc > 0 {
            return Err(null("argv"));
        }
        let mut args = vec!["drinfeld".to_string()];
        for i in 0..argc {
            args.push(c_str(*argv.add(i), "argv entry")?.to_string());
        }
        let cli = Cli::try_parse_from(args).map_err(|e| Failure(DrinfeldStatus::Parse, e.to_string()))?;
        let report = run(&cli.command, &RunConfig::resolve(&cli.config)?)?;
        write(out_pass, report.pass, "out_pass")?;
        write(out_json, string_out(report.to_json()), "out_json")
    })
}
