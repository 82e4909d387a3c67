use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use intdiff_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take(s: *mut c_char) -> String {
    let out = CStr::from_ptr(s).to_str().unwrap().to_string();
    intdiff_string_free(s);
    out
}

unsafe fn last_error() -> String {
    let p = intdiff_last_error();
    assert!(!p.is_null());
    CStr::from_ptr(p).to_str().unwrap().to_string()
}

#[test]
fn word_round_trip() {
    unsafe {
        let mut w = ptr::null_mut();
        assert_eq!(
            intdiff_word_parse(c("q1").as_ptr(), &mut w),
            IntdiffStatus::Ok
        );
        let mut n = ptr::null_mut();
        assert_eq!(intdiff_word_normalize(w, &mut n), IntdiffStatus::Ok);
        let mut s = ptr::null_mut();
        assert_eq!(intdiff_word_to_string(n, &mut s), IntdiffStatus::Ok);
        assert_eq!(take(s), "D2 I1");
        let mut eq = IntdiffWordEq::Unknown;
        assert_eq!(intdiff_word_eq(w, n, 7, &mut eq), IntdiffStatus::Ok);
        assert_eq!(eq, IntdiffWordEq::Equal);
        intdiff_word_free(w);
        intdiff_word_free(n);
    }
}

#[test]
fn poly_operations() {
    unsafe {
        let (mut f, mut g, mut h) = (ptr::null_mut(), ptr::null_mut(), ptr::null_mut());
        assert_eq!(
            intdiff_poly_parse(c("poly 1->1 on R : x1^2").as_ptr(), &mut f),
            IntdiffStatus::Ok
        );
        assert_eq!(
            intdiff_poly_parse(c("poly 1->1 on (0,1) : x1 + 1").as_ptr(), &mut g),
            IntdiffStatus::Ok
        );
        assert_eq!(intdiff_poly_compose(f, g, &mut h), IntdiffStatus::Ok);
        let mut s = ptr::null_mut();
        assert_eq!(intdiff_poly_to_string(h, &mut s), IntdiffStatus::Ok);
        assert_eq!(take(s), "poly 1->1 on (0,1) : x1^2 + 2 x1 + 1");
        let (mut m, mut n) = (0usize, 0usize);
        assert_eq!(intdiff_poly_shape(h, &mut m, &mut n), IntdiffStatus::Ok);
        assert_eq!((m, n), (1, 1));
        let mut w = ptr::null_mut();
        assert_eq!(
            intdiff_word_parse(c("D1").as_ptr(), &mut w),
            IntdiffStatus::Ok
        );
        let mut d = ptr::null_mut();
        assert_eq!(
            intdiff_poly_apply_word(f, w, IntdiffOrientation::Ftc, &mut d),
            IntdiffStatus::Ok
        );
        let mut e = ptr::null_mut();
        assert_eq!(
            intdiff_poly_parse(c("poly 1->1 on R : 2 x1").as_ptr(), &mut e),
            IntdiffStatus::Ok
        );
        let mut same = false;
        assert_eq!(intdiff_poly_equal(d, e, &mut same), IntdiffStatus::Ok);
        assert!(same);
        // Guard failure: x^2 on (0,1) after a map into (1,2).
        let (mut narrow, mut bad) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(
            intdiff_poly_parse(c("poly 1->1 on (0,1) : x1").as_ptr(), &mut narrow),
            IntdiffStatus::Ok
        );
        assert_eq!(
            intdiff_poly_compose(narrow, g, &mut bad),
            IntdiffStatus::Domain
        );
        assert!(bad.is_null());
        assert!(last_error().contains("range"));
        for p in [f, g, h, d, e, narrow] {
            intdiff_poly_free(p);
        }
        intdiff_word_free(w);
    }
}

#[test]
fn status_codes() {
    unsafe {
        let mut f = ptr::null_mut();
        assert_eq!(
            intdiff_poly_parse(ptr::null(), &mut f),
            IntdiffStatus::NullArgument
        );
        assert_eq!(
            intdiff_poly_parse(c("poly 1->1 on R : x1").as_ptr(), ptr::null_mut()),
            IntdiffStatus::NullArgument
        );
        let bad = [0xffu8, 0];
        assert_eq!(
            intdiff_poly_parse(bad.as_ptr().cast(), &mut f),
            IntdiffStatus::InvalidUtf8
        );
        assert_eq!(
            intdiff_poly_parse(c("poly 1->1 on R : x1 +").as_ptr(), &mut f),
            IntdiffStatus::Parse
        );
        assert!(f.is_null());
        let mut w = ptr::null_mut();
        assert_eq!(
            intdiff_word_parse(c("D1 I1").as_ptr(), &mut w),
            IntdiffStatus::Ok
        );
        assert!(intdiff_last_error().is_null());
        intdiff_word_free(w);
        intdiff_poly_free(ptr::null_mut());
        intdiff_word_free(ptr::null_mut());
        intdiff_string_free(ptr::null_mut());
        assert_eq!(
            CStr::from_ptr(intdiff_version()).to_str().unwrap(),
            env!("CARGO_PKG_VERSION")
        );
    }
}

#[test]
fn term_eval_and_checks() {
    unsafe {
        let mut f = ptr::null_mut();
        let env = c("sq = poly 1->1 on R : x1^2\n");
        assert_eq!(
            intdiff_term_eval(
                c("[I1] sq").as_ptr(),
                env.as_ptr(),
                IntdiffOrientation::Ftc,
                &mut f
            ),
            IntdiffStatus::Ok
        );
        let mut s = ptr::null_mut();
        assert_eq!(intdiff_poly_to_string(f, &mut s), IntdiffStatus::Ok);
        assert_eq!(take(s), "poly 2->1 on RxR : -1/3 x1^3 + 1/3 x2^3");
        intdiff_poly_free(f);
        assert_eq!(
            intdiff_term_eval(
                c("c").as_ptr(),
                ptr::null(),
                IntdiffOrientation::Ftc,
                &mut f
            ),
            IntdiffStatus::Parse
        );
        let mut ok = false;
        assert_eq!(
            intdiff_check_relation(c("R16").as_ptr(), 5, 1, IntdiffOrientation::Ftc, &mut ok),
            IntdiffStatus::Ok
        );
        assert!(ok);
        assert_eq!(
            intdiff_check_relation(
                c("R16").as_ptr(),
                5,
                1,
                IntdiffOrientation::Swapped,
                &mut ok
            ),
            IntdiffStatus::Ok
        );
        assert!(!ok);
        assert_eq!(
            intdiff_check_relation(c("R0").as_ptr(), 5, 1, IntdiffOrientation::Ftc, &mut ok),
            IntdiffStatus::Domain
        );
        let mut v = ptr::null_mut();
        let d = c("D{ core=poly 1->2 on R : x1; x1^2; u=(1); }");
        assert_eq!(
            intdiff_prederiv_eval_smooth(d.as_ptr(), &mut v),
            IntdiffStatus::Ok
        );
        assert_eq!(take(v), "(1, 0)");
    }
}

#[test]
fn header_lists_exports() {
    let h =
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/intdiff.h")).unwrap();
    for name in [
        "intdiff_last_error",
        "intdiff_string_free",
        "intdiff_poly_parse",
        "intdiff_poly_apply_word",
        "intdiff_word_normalize",
        "intdiff_word_eq",
        "intdiff_term_eval",
        "intdiff_check_relation",
        "intdiff_prederiv_eval_smooth",
        "typedef struct IntdiffPoly IntdiffPoly",
        "INTDIFF_STATUS_PARSE = 3",
    ] {
        assert!(h.contains(name), "{name} missing from header");
    }
}

/// Compiles and runs a C client against the static library.
#[test]
fn c_client_links() {
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libintdiff_ffi.a");
    assert!(
        lib.exists(),
        "static library not found at {}",
        lib.display()
    );
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let bin = std::env::temp_dir().join(format!("intdiff-smoke-{}", std::process::id()));
    let status = Command::new("cc")
        .arg(root.join("tests/smoke.c"))
        .arg("-I")
        .arg(root.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .expect("C compiler available");
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    let _ = std::fs::remove_file(&bin);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(
        String::from_utf8_lossy(&out.stdout).trim(),
        "poly 2->1 on (0,1)x(0,1) : x2"
    );
}
