//! C ABI over the `intdiff` kernel.
//!
//! Objects cross the boundary as opaque handles owned by the caller and
//! released with the matching `*_free`. Every fallible call returns an
//! [`IntdiffStatus`]; on failure `intdiff_last_error` describes the cause.
//! Strings handed out by the library are freed with `intdiff_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use intdiff::eval::{eval_term_with, EvalOptions};
use intdiff::monoid::{normalize, word_eq, WordEq};
use intdiff::prederiv::{eval_smooth, PreDeriv};
use intdiff::rational::fmt_q;
use intdiff::relations::check_relation;
use intdiff::term::{parse_term, Env};
use intdiff::{CompMode, Error, Orientation, PolyFun, Word};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntdiffStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Domain = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntdiffOrientation {
    Ftc = 0,
    Swapped = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntdiffWordEq {
    Equal = 0,
    NotEqual = 1,
    Unknown = 2,
}

/// A polynomial map on an open box.
pub struct IntdiffPoly(PolyFun);

/// A word of the integro-differential monoid.
pub struct IntdiffWord(Word);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

enum Fail {
    Null(&'static str),
    Utf8,
    Core(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Fail {
        Fail::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> IntdiffStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => IntdiffStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(&format!("null pointer for `{what}`"));
            IntdiffStatus::NullArgument
        }
        Ok(Err(Fail::Utf8)) => {
            set_error("string argument is not valid UTF-8");
            IntdiffStatus::InvalidUtf8
        }
        Ok(Err(Fail::Core(e))) => {
            set_error(&e.to_string());
            if matches!(e, Error::Parse(_)) {
                IntdiffStatus::Parse
            } else {
                IntdiffStatus::Domain
            }
        }
        Err(_) => {
            set_error("internal panic");
            IntdiffStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail::Utf8)
}

unsafe fn href<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn put<T>(out: *mut T, v: T, what: &'static str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null(what));
    }
    out.write(v);
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Fail> {
    let c = CString::new(s).map_err(|_| Fail::Utf8)?;
    put(out, c.into_raw(), "out")
}

fn orientation(o: IntdiffOrientation) -> Orientation {
    match o {
        IntdiffOrientation::Ftc => Orientation::Ftc,
        IntdiffOrientation::Swapped => Orientation::Swapped,
    }
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next library call on the same thread.
#[no_mangle]
pub extern "C" fn intdiff_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn intdiff_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn intdiff_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses `poly m->n on <box> : c1; c2; ...`.
///
/// # Safety
/// `src` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn intdiff_poly_parse(
    src: *const c_char,
    out: *mut *mut IntdiffPoly,
) -> IntdiffStatus {
    guard(|| {
        let f: PolyFun = text(src, "src")?.parse()?;
        put(out, Box::into_raw(Box::new(IntdiffPoly(f))), "out")
    })
}

/// # Safety
/// `p` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn intdiff_poly_free(p: *mut IntdiffPoly) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// # Safety
/// `p` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn intdiff_poly_to_string(
    p: *const IntdiffPoly,
    out: *mut *mut c_char,
) -> IntdiffStatus {
    guard(|| put_string(out, href(p, "p")?.0.to_string()))
}

/// Arity and codimension.
///
/// # Safety
/// `p` must be a live handle; `arity` and `codim` must be writable.
#[no_mangle]
pub unsafe extern "C" fn intdiff_poly_shape(
    p: *const IntdiffPoly,
    arity: *mut usize,
    codim: *mut usize,
) -> IntdiffStatus {
    guard(|| {
        let f = &href(p, "p")?.0;
        put(arity, f.arity(), "arity")?;
        put(codim, f.codim(), "codim")
    })
}

/// # Safety
/// `a` and `b` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn intdiff_poly_equal(
    a: *const IntdiffPoly,
    b: *const IntdiffPoly,
    out: *mut bool,
) -> IntdiffStatus {
    guard(|| put(out, href(a, "a")?.0 == href(b, "b")?.0, "out"))
}

/// The action `w . f` (rightmost letter first).
///
/// # Safety
/// `f` and `w` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn intdiff_poly_apply_word(
    f: *const IntdiffPoly,
    w: *const IntdiffWord,
    o: IntdiffOrientation,
    out: *mut *mut IntdiffPoly,
) -> IntdiffStatus {
    guard(|| {
        let g = href(f, "f")?
            .0
            .apply_word_with(&href(w, "w")?.0, orientation(o));
        put(out, Box::into_raw(Box::new(IntdiffPoly(g))), "out")
    })
}

/// `f ∘ g` under the strict range guard.
///
/// # Safety
/// `f` and `g` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn intdiff_poly_compose(
    f: *const IntdiffPoly,
    g: *const IntdiffPoly,
    out: *mut *mut IntdiffPoly,
) -> IntdiffStatus {
    guard(|| {
        let h = href(f, "f")?
            .0
            .compose(&href(g, "g")?.0, CompMode::Strict)?;
        put(out, Box::into_raw(Box::new(IntdiffPoly(h))), "out")
    })
}

/// Parses whitespace-separated letters such as `D2 I1`.
///
/// # Safety
/// `src` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn intdiff_word_parse(
    src: *const c_char,
    out: *mut *mut IntdiffWord,
) -> IntdiffStatus {
    guard(|| {
        let w: Word = text(src, "src")?.parse()?;
        put(out, Box::into_raw(Box::new(IntdiffWord(w))), "out")
    })
}

/// # Safety
/// `w` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn intdiff_word_free(w: *mut IntdiffWord) {
    if !w.is_null() {
        drop(Box::from_raw(w));
    }
}

/// # Safety
/// `w` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn intdiff_word_to_string(
    w: *const IntdiffWord,
    out: *mut *mut c_char,
) -> IntdiffStatus {
    guard(|| put_string(out, href(w, "w")?.0.to_string()))
}

/// # Safety
/// `w` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn intdiff_word_normalize(
    w: *const IntdiffWord,
    out: *mut *mut IntdiffWord,
) -> IntdiffStatus {
    guard(|| {
        let n = normalize(&href(w, "w")?.0);
        put(out, Box::into_raw(Box::new(IntdiffWord(n))), "out")
    })
}

/// # Safety
/// `a` and `b` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn intdiff_word_eq(
    a: *const IntdiffWord,
    b: *const IntdiffWord,
    seed: u64,
    out: *mut IntdiffWordEq,
) -> IntdiffStatus {
    guard(|| {
        let r = match word_eq(&href(a, "a")?.0, &href(b, "b")?.0, seed) {
            WordEq::Equal => IntdiffWordEq::Equal,
            WordEq::NotEqual(_) => IntdiffWordEq::NotEqual,
            WordEq::Unknown => IntdiffWordEq::Unknown,
        };
        put(out, r, "out")
    })
}

/// Evaluates a term with no opaque leaves. `env` may be NULL or hold
/// declarations, one per line.
///
/// # Safety
/// `src` must be a NUL-terminated string, `env` NULL or NUL-terminated, and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn intdiff_term_eval(
    src: *const c_char,
    env: *const c_char,
    o: IntdiffOrientation,
    out: *mut *mut IntdiffPoly,
) -> IntdiffStatus {
    guard(|| {
        let env = if env.is_null() {
            Env::default()
        } else {
            Env::parse(text(env, "env")?)?
        };
        let t = parse_term(text(src, "src")?, &env)?;
        let opts = EvalOptions {
            mode: CompMode::Strict,
            orientation: orientation(o),
        };
        let f = eval_term_with(&t, opts)?;
        put(out, Box::into_raw(Box::new(IntdiffPoly(f))), "out")
    })
}

/// Runs one catalogue checker; `verified` receives the verdict.
///
/// # Safety
/// `rule` must be a NUL-terminated string and `verified` writable.
#[no_mangle]
pub unsafe extern "C" fn intdiff_check_relation(
    rule: *const c_char,
    trials: usize,
    seed: u64,
    o: IntdiffOrientation,
    verified: *mut bool,
) -> IntdiffStatus {
    guard(|| {
        let r = check_relation(text(rule, "rule")?, trials, seed, orientation(o))?;
        put(verified, r.verified(), "verified")
    })
}

/// Smooth evaluation of a pre-derivation given in text form, as `(a, b, ...)`.
///
/// # Safety
/// `src` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn intdiff_prederiv_eval_smooth(
    src: *const c_char,
    out: *mut *mut c_char,
) -> IntdiffStatus {
    guard(|| {
        let d: PreDeriv = text(src, "src")?.parse()?;
        let parts: Vec<String> = eval_smooth(&d).iter().map(fmt_q).collect();
        put_string(out, format!("({})", parts.join(", ")))
    })
}
