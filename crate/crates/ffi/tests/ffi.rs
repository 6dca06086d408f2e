use std::ffi::{CStr, CString};
use std::ptr;

use percoflow_ffi::*;

fn make(f: impl FnOnce(*mut *mut PercoflowDist) -> PercoflowStatus) -> *mut PercoflowDist {
    let mut d = ptr::null_mut();
    assert_eq!(f(&mut d), PercoflowStatus::Ok);
    assert!(!d.is_null());
    d
}

fn last_error() -> String {
    let p = percoflow_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(percoflow_version()) }.to_str().unwrap();
    assert!(v.starts_with('v'));
}

#[test]
fn constructors_and_cdf() {
    let u = make(|o| unsafe { percoflow_dist_uniform(4, o) });
    let mut f = 0.0;
    assert_eq!(unsafe { percoflow_dist_cdf(u, 1, &mut f) }, PercoflowStatus::Ok);
    assert!((f - 0.5).abs() < 1e-15);
    unsafe { percoflow_dist_free(u) };

    let json = CString::new(r#"{"head": [0.25], "tail": {"model": "geometric", "p": 0.5}}"#).unwrap();
    let g = make(|o| unsafe { percoflow_dist_from_json(json.as_ptr(), o) });
    assert_eq!(unsafe { percoflow_dist_cdf(g, 0, &mut f) }, PercoflowStatus::Ok);
    assert!((f - 0.25).abs() < 1e-15);
    unsafe { percoflow_dist_free(g) };
    unsafe { percoflow_dist_free(ptr::null_mut()) };
}

#[test]
fn errors_are_reported() {
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { percoflow_dist_uniform(1, &mut d) }, PercoflowStatus::InvalidArgument);
    assert!(d.is_null());
    assert!(last_error().contains("m >= 2"));
    let bad = CString::new("{not json").unwrap();
    assert_eq!(unsafe { percoflow_dist_from_json(bad.as_ptr(), &mut d) }, PercoflowStatus::InvalidArgument);
    assert_eq!(unsafe { percoflow_dist_from_json(ptr::null(), &mut d) }, PercoflowStatus::NullPointer);
    assert_eq!(unsafe { percoflow_dist_geometric(0.5, ptr::null_mut()) }, PercoflowStatus::NullPointer);
    let mut f = 0.0;
    assert_eq!(unsafe { percoflow_dist_cdf(ptr::null(), 0, &mut f) }, PercoflowStatus::NullPointer);
}

#[test]
fn classification() {
    let mut class = PercoflowClass::PositiveRecurrent;
    let cases = [
        (make(|o| unsafe { percoflow_dist_power(0.5, o) }), PercoflowClass::NullRecurrent),
        (make(|o| unsafe { percoflow_dist_power(1.0, o) }), PercoflowClass::NullRecurrent),
        (make(|o| unsafe { percoflow_dist_power(2.0, o) }), PercoflowClass::Transient),
        (make(|o| unsafe { percoflow_dist_geometric(0.5, o) }), PercoflowClass::PositiveRecurrent),
    ];
    for (d, want) in cases {
        assert_eq!(unsafe { percoflow_classify(d, &mut class) }, PercoflowStatus::Ok);
        assert_eq!(class, want);
        unsafe { percoflow_dist_free(d) };
    }
}

#[test]
fn stationary_into_buffer() {
    let u = make(|o| unsafe { percoflow_dist_uniform(2, o) });
    let mut buf = [0.0; 8];
    let mut written = 0;
    let s = unsafe { percoflow_stationary(u, true, buf.as_mut_ptr(), buf.len(), &mut written) };
    assert_eq!(s, PercoflowStatus::Ok);
    assert_eq!(written, 2);
    assert!((buf[0] - 0.5).abs() < 1e-15 && (buf[1] - 0.5).abs() < 1e-15);
    let s = unsafe { percoflow_stationary(u, true, buf.as_mut_ptr(), 1, &mut written) };
    assert_eq!(s, PercoflowStatus::BufferTooSmall);
    unsafe { percoflow_dist_free(u) };

    let p = make(|o| unsafe { percoflow_dist_power(2.0, o) });
    let s = unsafe { percoflow_stationary(p, true, buf.as_mut_ptr(), buf.len(), &mut written) };
    assert_eq!(s, PercoflowStatus::InvalidArgument);
    let s = unsafe { percoflow_stationary(p, false, buf.as_mut_ptr(), buf.len(), &mut written) };
    assert_eq!(s, PercoflowStatus::Ok);
    assert_eq!((written, buf[0]), (8, 1.0));
    unsafe { percoflow_dist_free(p) };
}

#[test]
fn sequences_and_spectra() {
    let u = make(|o| unsafe { percoflow_dist_uniform(2, o) });
    let mut q = [0.0; 5];
    assert_eq!(unsafe { percoflow_q_sequence(u, q.as_mut_ptr(), q.len()) }, PercoflowStatus::Ok);
    assert!(q.iter().all(|v| (v - 0.5).abs() < 1e-15));
    let mut r = [0.0; 4];
    assert_eq!(unsafe { percoflow_r_sequence(u, 2, r.as_mut_ptr(), r.len()) }, PercoflowStatus::Ok);
    assert!((r[3] - 0.99609375).abs() < 1e-15);
    let mut rho = 0.0;
    assert_eq!(unsafe { percoflow_spectral_radius(u, 2, 1e-14, &mut rho) }, PercoflowStatus::Ok);
    assert!((rho - 1.0).abs() < 1e-12);
    unsafe { percoflow_dist_free(u) };

    let e5 = make(|o| unsafe { percoflow_dist_two_point(2, 0.5, o) });
    assert_eq!(unsafe { percoflow_rho_m(e5, 2, 1e-15, &mut rho) }, PercoflowStatus::Ok);
    assert!((rho - (0.5 + 1.25f64.sqrt()) / 2.0).abs() < 1e-9);
    unsafe { percoflow_dist_free(e5) };
}

#[test]
fn monte_carlo_entry_points() {
    let p = make(|o| unsafe { percoflow_dist_power(2.0, o) });
    assert_eq!(unsafe { percoflow_coupling_check(p, 10_000, 7) }, PercoflowStatus::Ok);
    let mut a = [0u64; 16];
    let mut b = [0u64; 16];
    assert_eq!(unsafe { percoflow_dist_sample(p, 3, 0, a.as_mut_ptr(), 16) }, PercoflowStatus::Ok);
    assert_eq!(unsafe { percoflow_dist_sample(p, 3, 0, b.as_mut_ptr(), 16) }, PercoflowStatus::Ok);
    assert_eq!(a, b);
    let (mut mean, mut var) = (0.0, 0.0);
    let s = unsafe { percoflow_census_line(p, 200, 200, 1, 1, &mut mean, &mut var) };
    assert_eq!(s, PercoflowStatus::Ok);
    assert!(mean.is_finite() && var >= 0.0);
    let s = unsafe { percoflow_census_line(p, 200, 0, 1, 1, &mut mean, &mut var) };
    assert_eq!(s, PercoflowStatus::InvalidArgument);
    unsafe { percoflow_dist_free(p) };
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/percoflow.h")).unwrap();
    for name in [
        "percoflow_dist_from_json",
        "percoflow_dist_free",
        "percoflow_stationary",
        "percoflow_rho_m",
        "percoflow_last_error",
        "typedef struct PercoflowDist PercoflowDist",
        "PERCOFLOW_STATUS_NULL_POINTER = 5",
    ] {
        assert!(header.contains(name), "missing {name}");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = std::process::Command::new("cc").arg("--version").output() else {
        eprintln!("no C compiler; skipping");
        return;
    };
    if !cc.status.success() {
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"percoflow.h\"\nint main(void) { PercoflowDist *d = 0; (void)d; return PERCOFLOW_STATUS_OK; }\n",
    )
    .unwrap();
    let status = std::process::Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg(&src)
        .status()
        .unwrap();
    assert!(status.success());
}
