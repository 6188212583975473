//! C ABI for `mitree`.
//!
//! Trees and certificates are opaque handles owned by the caller and
//! released with the matching `_free` function. Every fallible call returns
//! a [`MitreeStatus`]; on failure, [`mitree_last_error`] describes the
//! problem for the calling thread. Strings handed out by the library must
//! be released with [`mitree_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use mitree::interleaving::{distance_value, monotone_interleaving_distance};
use mitree::io::{parse_certificate, parse_tree, serialise_certificate, serialise_tree, Certificate};
use mitree::OrderedMergeTree;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MitreeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    VerificationFailed = 4,
    InvalidArgument = 5,
    Panic = 6,
}

/// Selects one of the three certificate forms.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MitreeCertificateKind {
    Interleaving = 0,
    GoodMap = 1,
    Labelling = 2,
}

/// An ordered merge tree.
pub struct MitreeTree(OrderedMergeTree);

/// A distance certificate in all three forms, with copies of its trees.
pub struct MitreeCertificate {
    src: OrderedMergeTree,
    tgt: OrderedMergeTree,
    delta: f64,
    forms: [Certificate; 3],
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(MitreeStatus, String);

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

/// Runs `f`, recording any failure or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MitreeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            MitreeStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| (*s).to_owned())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_owned());
            set_last_error(&format!("panic: {msg}"));
            MitreeStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(MitreeStatus::NullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(MitreeStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s).expect("JSON has no NUL bytes").into_raw()
}

/// Message describing the last failure on this thread, or an empty string.
/// The pointer stays valid until the next call into the library from the
/// same thread.
#[no_mangle]
pub extern "C" fn mitree_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses a tree document.
///
/// # Safety
/// `json` must be null or a NUL-terminated string; `out` must be null or
/// point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn mitree_tree_parse(json: *const c_char, out: *mut *mut MitreeTree) -> MitreeStatus {
    guard(|| {
        let json = text(json, "json")?;
        let tree = parse_tree(json).map_err(|e| Failure(MitreeStatus::ParseError, e.to_string()))?;
        write_out(out, Box::into_raw(Box::new(MitreeTree(tree))), "out")
    })
}

/// Releases a tree. Null is ignored.
///
/// # Safety
/// `tree` must be null or a handle from [`mitree_tree_parse`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mitree_tree_free(tree: *mut MitreeTree) {
    if !tree.is_null() {
        drop(Box::from_raw(tree));
    }
}

/// # Safety
/// `tree` must be a live handle or null; `out` must be writable or null.
#[no_mangle]
pub unsafe extern "C" fn mitree_tree_leaf_count(tree: *const MitreeTree, out: *mut usize) -> MitreeStatus {
    guard(|| {
        let t = handle(tree, "tree")?;
        write_out(out, t.0.tree().leaves().len(), "out")
    })
}

/// Canonical JSON of a tree; free the result with [`mitree_string_free`].
///
/// # Safety
/// `tree` must be a live handle or null; `out` must be writable or null.
#[no_mangle]
pub unsafe extern "C" fn mitree_tree_to_json(tree: *const MitreeTree, out: *mut *mut c_char) -> MitreeStatus {
    guard(|| {
        let t = handle(tree, "tree")?;
        write_out(out, owned_string(serialise_tree(&t.0)), "out")
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mitree_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Monotone interleaving distance between two trees.
///
/// # Safety
/// `a` and `b` must be live handles or null; `out` must be writable or null.
#[no_mangle]
pub unsafe extern "C" fn mitree_distance(
    a: *const MitreeTree,
    b: *const MitreeTree,
    out: *mut f64,
) -> MitreeStatus {
    guard(|| {
        let (a, b) = (handle(a, "a")?, handle(b, "b")?);
        write_out(out, distance_value(&a.0, &b.0), "out")
    })
}

/// Distance together with an interleaving, good map and labelling
/// attaining it.
///
/// # Safety
/// `a` and `b` must be live handles or null; `out` must be writable or null.
#[no_mangle]
pub unsafe extern "C" fn mitree_certificate_compute(
    a: *const MitreeTree,
    b: *const MitreeTree,
    out: *mut *mut MitreeCertificate,
) -> MitreeStatus {
    guard(|| {
        let (a, b) = (handle(a, "a")?, handle(b, "b")?);
        let cert = monotone_interleaving_distance(&a.0, &b.0);
        let forms = Certificate::all_forms(&a.0, &b.0, &cert)
            .map_err(|e| Failure(MitreeStatus::VerificationFailed, e.to_string()))?;
        let boxed = Box::new(MitreeCertificate {
            src: a.0.clone(),
            tgt: b.0.clone(),
            delta: cert.delta,
            forms,
        });
        write_out(out, Box::into_raw(boxed), "out")
    })
}

/// # Safety
/// `cert` must be a live handle or null; `out` must be writable or null.
#[no_mangle]
pub unsafe extern "C" fn mitree_certificate_delta(
    cert: *const MitreeCertificate,
    out: *mut f64,
) -> MitreeStatus {
    guard(|| write_out(out, handle(cert, "cert")?.delta, "out"))
}

/// JSON document of one certificate form; free the result with
/// [`mitree_string_free`].
///
/// # Safety
/// `cert` must be a live handle or null; `out` must be writable or null.
#[no_mangle]
pub unsafe extern "C" fn mitree_certificate_to_json(
    cert: *const MitreeCertificate,
    kind: MitreeCertificateKind,
    out: *mut *mut c_char,
) -> MitreeStatus {
    guard(|| {
        let c = handle(cert, "cert")?;
        let form = &c.forms[kind as usize];
        write_out(
            out,
            owned_string(serialise_certificate(&c.src, &c.tgt, form)),
            "out",
        )
    })
}

/// # Safety
/// `cert` must be null or a handle from [`mitree_certificate_compute`] not
/// yet freed.
#[no_mangle]
pub unsafe extern "C" fn mitree_certificate_free(cert: *mut MitreeCertificate) {
    if !cert.is_null() {
        drop(Box::from_raw(cert));
    }
}

/// Checks a certificate document of the given kind against two trees at
/// threshold `delta`; pass NaN to use the threshold stored in the document.
/// Returns `MITREE_STATUS_VERIFICATION_FAILED` when the check fails.
///
/// # Safety
/// `a` and `b` must be live handles or null; `json` must be null or a
/// NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mitree_verify(
    a: *const MitreeTree,
    b: *const MitreeTree,
    kind: MitreeCertificateKind,
    json: *const c_char,
    delta: f64,
) -> MitreeStatus {
    guard(|| {
        let (a, b) = (handle(a, "a")?, handle(b, "b")?);
        let json = text(json, "json")?;
        let cert = parse_certificate(&a.0, &b.0, json)
            .map_err(|e| Failure(MitreeStatus::ParseError, e.to_string()))?;
        let wanted = match kind {
            MitreeCertificateKind::Interleaving => "interleaving",
            MitreeCertificateKind::GoodMap => "goodmap",
            MitreeCertificateKind::Labelling => "labelling",
        };
        if cert.kind() != wanted {
            return Err(Failure(
                MitreeStatus::InvalidArgument,
                format!("document holds a {} certificate, not {wanted}", cert.kind()),
            ));
        }
        let d = if delta.is_nan() { cert.delta() } else { delta };
        cert.verify(&a.0, &b.0, d)
            .map_err(|e| Failure(MitreeStatus::VerificationFailed, e.to_string()))
    })
}
