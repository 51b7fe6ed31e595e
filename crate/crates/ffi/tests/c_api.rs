use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use isoposterior_ffi::*;

fn last_error() -> String {
    let p = ip_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

/// Symmetric 1-D data: "−" at -3,-2,-1,0.5,1.5 and "+" at the mirror images.
fn mirrored() -> *mut IpDataset {
    let xs = [-3.0, -2.0, -1.0, 0.5, 1.5];
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for x in xs {
        points.extend([x, -x]);
        labels.extend([-1, 1]);
    }
    let mut ds = ptr::null_mut();
    let st = unsafe { ip_dataset_new(points.as_ptr(), 10, 1, labels.as_ptr(), ptr::null(), &mut ds) };
    assert_eq!(st, IpStatus::Ok);
    ds
}

#[test]
fn scalar_helpers() {
    let mut p = 0.0;
    assert_eq!(unsafe { ip_posterior_from_theta(0.25, 0.5, &mut p) }, IpStatus::Ok);
    assert!((p - 0.75).abs() < 1e-12);
    let mut t = 0.0;
    assert_eq!(unsafe { ip_theta_for_level(0.75, 0.5, &mut t) }, IpStatus::Ok);
    assert!((t - 0.25).abs() < 1e-12);

    let mut w = IpClassWeights { w_plus: 0.0, w_minus: 0.0, theta: 0.0 };
    assert_eq!(unsafe { ip_derive_class_weights(0.75, 1000.0, 1000.0, &mut w) }, IpStatus::Ok);
    assert!((w.w_plus - 1.5).abs() < 1e-12 && (w.w_minus - 0.5).abs() < 1e-12);
}

#[test]
fn domain_errors_set_a_message() {
    let mut p = 0.0;
    assert_eq!(unsafe { ip_posterior_from_theta(1.5, 0.5, &mut p) }, IpStatus::Domain);
    assert!(last_error().contains("theta"), "{}", last_error());
    assert_eq!(unsafe { ip_posterior_from_theta(0.5, 0.5, ptr::null_mut()) }, IpStatus::NullPointer);
    assert!(last_error().contains("out"));
}

#[test]
fn dataset_validation() {
    let points = [0.0, 1.0];
    let mut ds = ptr::null_mut();
    let bad = [1, 0];
    let st = unsafe { ip_dataset_new(points.as_ptr(), 2, 1, bad.as_ptr(), ptr::null(), &mut ds) };
    assert_eq!(st, IpStatus::Domain);
    assert!(ds.is_null());
    let one_class = [1, 1];
    let st = unsafe { ip_dataset_new(points.as_ptr(), 2, 1, one_class.as_ptr(), ptr::null(), &mut ds) };
    assert_ne!(st, IpStatus::Ok);

    let ds = mirrored();
    unsafe {
        assert_eq!(ip_dataset_len(ds), 10);
        assert_eq!(ip_dataset_dim(ds), 1);
        assert_eq!(ip_dataset_positive_proportion(ds), 0.5);
        ip_dataset_free(ds);
        assert_eq!(ip_dataset_len(ptr::null()), 0);
        ip_dataset_free(ptr::null_mut());
    }
}

#[test]
fn load_reports_io_and_utf8() {
    let mut ds = ptr::null_mut();
    let path = CString::new("/nonexistent/data.csv").unwrap();
    assert_eq!(unsafe { ip_dataset_load(path.as_ptr(), &mut ds) }, IpStatus::Io);
    let bytes = [0xffu8, 0xfe, 0];
    assert_eq!(unsafe { ip_dataset_load(bytes.as_ptr().cast(), &mut ds) }, IpStatus::InvalidUtf8);
}

#[test]
fn gaussian_spec_json() {
    let spec = CString::new(r#"{"n_per_class": 50, "seed": 3}"#).unwrap();
    let mut ds = ptr::null_mut();
    assert_eq!(unsafe { ip_dataset_gaussian(spec.as_ptr(), &mut ds) }, IpStatus::Ok);
    unsafe {
        assert_eq!(ip_dataset_len(ds), 100);
        assert_eq!(ip_dataset_dim(ds), 2);
        ip_dataset_free(ds);
    }
    let bad = CString::new(r#"{"n_per_class": "many"}"#).unwrap();
    assert_eq!(unsafe { ip_dataset_gaussian(bad.as_ptr(), &mut ds) }, IpStatus::Parse);
}

#[test]
fn model_round_trip() {
    let ds = mirrored();
    let mut model = ptr::null_mut();
    unsafe {
        assert_eq!(ip_model_train(ds, IpClassifier::Logreg, f64::NAN, &mut model), IpStatus::Ok);
        let mut s = f64::NAN;
        assert_eq!(ip_model_score(model, [0.0].as_ptr(), 1, &mut s), IpStatus::Ok);
        assert!(s.abs() < 1e-8, "{s}");
        let mut label = 0;
        assert_eq!(ip_model_predict(model, [2.0].as_ptr(), 1, &mut label), IpStatus::Ok);
        assert_eq!(label, 1);
        assert_eq!(ip_model_score(model, [0.0, 1.0].as_ptr(), 2, &mut s), IpStatus::Dimension);

        let mut len = 0;
        assert_eq!(ip_model_to_json(model, ptr::null_mut(), 0, &mut len), IpStatus::Ok);
        let mut buf = vec![0u8; len + 1];
        assert_eq!(ip_model_to_json(model, buf.as_mut_ptr().cast(), buf.len(), &mut len), IpStatus::Ok);
        let text = CStr::from_bytes_with_nul(&buf).unwrap().to_str().unwrap();
        assert!(text.contains(r#""kind":"logreg""#), "{text}");

        ip_model_free(model);
        ip_dataset_free(ds);
    }
}

#[test]
fn estimator_symmetric_midpoint() {
    let ds = mirrored();
    let mut est = ptr::null_mut();
    unsafe {
        assert_eq!(ip_estimator_new(ds, IpClassifier::Logreg, ptr::null(), &mut est), IpStatus::Ok);
        ip_dataset_free(ds);
        assert_eq!(ip_estimator_pi_plus(est), 0.5);
        let mut e = std::mem::zeroed::<IpEstimate>();
        assert_eq!(ip_estimator_estimate(est, [0.0].as_ptr(), 1, &mut e), IpStatus::Ok);
        assert!((e.probability - 0.5).abs() < 1e-3, "{e:?}");
        assert_eq!(e.status, IpEstimateStatus::Converged);
        assert!(e.probability_lo <= e.probability && e.probability <= e.probability_hi);

        let mut n = 0;
        let mut roots = [0.0; 4];
        assert_eq!(ip_estimator_roots(est, [0.0].as_ptr(), 1, roots.as_mut_ptr(), 4, &mut n), IpStatus::Ok);
        assert_eq!(n, e.n_roots);
        assert!((roots[0] - 0.5).abs() < 1e-3);
        ip_estimator_free(est);
    }
}

#[test]
fn tree_estimates_are_label_only() {
    // Two stacked sites: the x=0 leaf (two "−", one "+") flips at θ = 2/3.
    let points = [0.0, 0.0, 0.0, 1.0, 1.0, 1.0];
    let labels = [-1, -1, 1, 1, 1, -1];
    let mut ds = ptr::null_mut();
    let mut est = ptr::null_mut();
    unsafe {
        assert_eq!(ip_dataset_new(points.as_ptr(), 6, 1, labels.as_ptr(), ptr::null(), &mut ds), IpStatus::Ok);
        let mut config = ip_estimator_config_default();
        config.filter_support_vectors = 0;
        assert_eq!(ip_estimator_new(ds, IpClassifier::Tree, &config, &mut est), IpStatus::Ok);
        let mut e = std::mem::zeroed::<IpEstimate>();
        assert_eq!(ip_estimator_estimate(est, [0.0].as_ptr(), 1, &mut e), IpStatus::Ok);
        assert_eq!(e.label_only, 1);
        assert!(e.bracket_lo <= e.bracket_hi);
        ip_estimator_free(est);
        ip_dataset_free(ds);
    }
}

#[test]
fn bad_config_is_rejected() {
    let ds = mirrored();
    let mut est = ptr::null_mut();
    let mut config = ip_estimator_config_default();
    config.theta_lo = 0.9;
    config.theta_hi = 0.1;
    unsafe {
        assert_eq!(ip_estimator_new(ds, IpClassifier::Svm, &config, &mut est), IpStatus::Domain);
        config = ip_estimator_config_default();
        config.filter_support_vectors = 7;
        assert_eq!(ip_estimator_new(ds, IpClassifier::Svm, &config, &mut est), IpStatus::Domain);
        assert!(est.is_null());
        ip_dataset_free(ds);
    }
}

#[test]
fn version_is_set() {
    let v = unsafe { CStr::from_ptr(ip_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/isoposterior.h")).unwrap();
    for name in [
        "ip_last_error_message",
        "ip_dataset_new",
        "ip_dataset_free",
        "ip_model_train",
        "ip_estimator_new",
        "ip_estimator_estimate",
        "ip_estimator_roots",
        "typedef struct IpEstimator IpEstimator;",
        "IP_STATUS_NON_CONVERGENCE = 6",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
    // The header must be valid C when a compiler is available.
    if let Ok(out) = Command::new("cc")
        .args(["-std=c99", "-fsyntax-only", "-x", "c", "-"])
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .stderr(std::process::Stdio::piped())
        .spawn()
        .and_then(|mut child| {
            use std::io::Write;
            let src = format!("{header}\nint main(void) {{ return 0; }}\n");
            child.stdin.take().unwrap().write_all(src.as_bytes())?;
            child.wait_with_output()
        })
    {
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}
