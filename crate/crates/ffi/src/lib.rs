//! C ABI over the `isoposterior` crate.
//!
//! Objects cross the boundary as opaque handles that the caller frees with
//! the matching `*_free` function. Every fallible call returns an
//! [`IpStatus`]; on failure a message is available from
//! [`ip_last_error_message`] on the same thread. Panics are caught and
//! reported as [`IpStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use isoposterior::classifiers::{Classifier, WeightedTrainer};
use isoposterior::dataset::{gen_gaussian, load_dataset};
use isoposterior::{
    derive_class_weights, posterior_from_theta, theta_for_level, ClassifierKind, Error,
    EstimatorConfig, GaussianSpec, Label, LabeledDataset, PosteriorEstimator, Status,
    TrainConfig, TrainedModel, Trainer,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IpStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Dimension = 3,
    Parse = 4,
    Io = 5,
    NonConvergence = 6,
    Estimation = 7,
    InvalidUtf8 = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IpClassifier {
    Svm = 0,
    Logreg = 1,
    Tree = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IpEstimateStatus {
    Converged = 0,
    ClampedLow = 1,
    ClampedHigh = 2,
    Degenerate = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IpClassWeights {
    pub w_plus: f64,
    pub w_minus: f64,
    pub theta: f64,
}

/// Estimator settings. Obtain defaults from [`ip_estimator_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IpEstimatorConfig {
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub theta_tolerance: f64,
    pub score_tolerance: f64,
    pub degeneracy_scan_points: usize,
    /// -1 for the classifier default (on for svm), 0 off, 1 on.
    pub filter_support_vectors: i32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IpEstimate {
    pub probability: f64,
    pub probability_lo: f64,
    pub probability_hi: f64,
    pub theta_star: f64,
    pub bracket_lo: f64,
    pub bracket_hi: f64,
    pub status: IpEstimateStatus,
    /// Number of θ roots found; fetch them with `ip_estimator_roots`.
    pub n_roots: usize,
    /// Nonzero when the estimate comes from label-flip bracketing (trees).
    pub label_only: i32,
}

pub struct IpDataset(LabeledDataset);
pub struct IpModel(TrainedModel);
pub struct IpEstimator(PosteriorEstimator<Trainer>);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes were replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> IpStatus {
    match err {
        Error::Domain(_) => IpStatus::Domain,
        Error::Dimension { .. } => IpStatus::Dimension,
        Error::Parse { .. } | Error::NoDataRows | Error::Json(_) => IpStatus::Parse,
        Error::Io { .. } => IpStatus::Io,
        Error::NonConvergence { .. } => IpStatus::NonConvergence,
        Error::Estimation(_) => IpStatus::Estimation,
    }
}

enum Failure {
    Null(&'static str),
    Utf8,
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

/// Runs `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> IpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => IpStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_last_error(format!("null pointer: {what}"));
            IpStatus::NullPointer
        }
        Ok(Err(Failure::Utf8)) => {
            set_last_error("string argument is not valid UTF-8".into());
            IpStatus::InvalidUtf8
        }
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            IpStatus::Panic
        }
    }
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn in_ref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn in_slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn in_str<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure::Utf8)
}

fn kind_of(c: IpClassifier) -> ClassifierKind {
    match c {
        IpClassifier::Svm => ClassifierKind::Svm,
        IpClassifier::Logreg => ClassifierKind::Logreg,
        IpClassifier::Tree => ClassifierKind::Tree,
    }
}

fn boxed<T>(out: &mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ip_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ip_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Class weights for effective positive proportion `theta` with the total
/// weight `n_plus + n_minus` held fixed.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ip_derive_class_weights(
    theta: f64,
    n_plus: f64,
    n_minus: f64,
    out: *mut IpClassWeights,
) -> IpStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let w = derive_class_weights(theta, n_plus, n_minus)?;
        *out = IpClassWeights {
            w_plus: w.w_plus,
            w_minus: w.w_minus,
            theta: w.theta,
        };
        Ok(())
    })
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ip_posterior_from_theta(theta: f64, pi_plus: f64, out: *mut f64) -> IpStatus {
    guard(|| {
        *out_ref(out, "out")? = posterior_from_theta(theta, pi_plus)?;
        Ok(())
    })
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ip_theta_for_level(level: f64, pi_plus: f64, out: *mut f64) -> IpStatus {
    guard(|| {
        *out_ref(out, "out")? = theta_for_level(level, pi_plus)?;
        Ok(())
    })
}

/// Builds a dataset from `n` row-major points of dimension `dim`, labels
/// `+1`/`-1`, and optional per-point weights (NULL for all ones).
///
/// # Safety
/// `points` must hold `n * dim` values, `labels` and (if non-NULL)
/// `weights` `n` values each; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ip_dataset_new(
    points: *const f64,
    n: usize,
    dim: usize,
    labels: *const i32,
    weights: *const f64,
    out: *mut *mut IpDataset,
) -> IpStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let total = n
            .checked_mul(dim)
            .ok_or_else(|| Error::Domain("n * dim overflows".into()))?;
        let flat = in_slice(points, total, "points")?.to_vec();
        let labels = in_slice(labels, n, "labels")?
            .iter()
            .map(|&l| match l {
                1 => Ok(Label::Plus),
                -1 => Ok(Label::Minus),
                other => Err(Error::Domain(format!("label must be +1 or -1, got {other}"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let weights = if weights.is_null() {
            vec![1.0; n]
        } else {
            in_slice(weights, n, "weights")?.to_vec()
        };
        let ds = LabeledDataset::from_flat(dim, flat, labels, weights)?;
        boxed(out, IpDataset(ds));
        Ok(())
    })
}

/// Reads a dataset CSV (`x1,...,xd,label[,weight]`).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ip_dataset_load(path: *const c_char, out: *mut *mut IpDataset) -> IpStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let ds = load_dataset(in_str(path, "path")?)?;
        boxed(out, IpDataset(ds));
        Ok(())
    })
}

/// Samples two Gaussian classes. `spec_json` holds GaussianSpec fields;
/// NULL or `{}` gives the defaults.
///
/// # Safety
/// `spec_json` must be NULL or NUL-terminated; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ip_dataset_gaussian(
    spec_json: *const c_char,
    out: *mut *mut IpDataset,
) -> IpStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let spec = if spec_json.is_null() {
            GaussianSpec::default()
        } else {
            serde_json::from_str(in_str(spec_json, "spec_json")?).map_err(Error::from)?
        };
        let ds = gen_gaussian(&spec)?;
        boxed(out, IpDataset(ds));
        Ok(())
    })
}

/// Number of points, or 0 for NULL.
///
/// # Safety
/// `ds` must be NULL or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn ip_dataset_len(ds: *const IpDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.len())
}

/// Dimension, or 0 for NULL.
///
/// # Safety
/// `ds` must be NULL or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn ip_dataset_dim(ds: *const IpDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.dim())
}

/// Observed positive proportion (by base weight), or NaN for NULL.
///
/// # Safety
/// `ds` must be NULL or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn ip_dataset_positive_proportion(ds: *const IpDataset) -> f64 {
    ds.as_ref().map_or(f64::NAN, |d| d.0.positive_proportion())
}

/// # Safety
/// `ds` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ip_dataset_free(ds: *mut IpDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Trains a classifier with default settings at effective positive
/// proportion `theta`; pass NaN to train at the original weights.
///
/// # Safety
/// `ds` must be a live dataset handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ip_model_train(
    ds: *const IpDataset,
    classifier: IpClassifier,
    theta: f64,
    out: *mut *mut IpModel,
) -> IpStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let ds = &in_ref(ds, "ds")?.0;
        let (trainer, data) = Trainer::new(kind_of(classifier), TrainConfig::default()).prepare(ds, false)?;
        let weights = if theta.is_nan() {
            data.original_weights()
        } else {
            data.weights_for(theta)?
        };
        let model = trainer.train(&data, &weights)?;
        boxed(out, IpModel(model));
        Ok(())
    })
}

/// Signed score at `x`: `w·x + b` for linear models, normalized leaf mass
/// difference for trees.
///
/// # Safety
/// `model` must be a live handle, `x` must hold `dim` values and `out` must
/// be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ip_model_score(
    model: *const IpModel,
    x: *const f64,
    dim: usize,
    out: *mut f64,
) -> IpStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let model = &in_ref(model, "model")?.0;
        *out = model.score(in_slice(x, dim, "x")?)?;
        Ok(())
    })
}

/// Predicted label (+1 or -1) at `x`; ties go to +1.
///
/// # Safety
/// As for [`ip_model_score`].
#[no_mangle]
pub unsafe extern "C" fn ip_model_predict(
    model: *const IpModel,
    x: *const f64,
    dim: usize,
    out: *mut i32,
) -> IpStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let model = &in_ref(model, "model")?.0;
        *out = match model.predict(in_slice(x, dim, "x")?)? {
            Label::Plus => 1,
            Label::Minus => -1,
        };
        Ok(())
    })
}

/// Serializes the model to JSON. Writes at most `cap` bytes including the
/// terminating NUL and stores the full length (excluding NUL) in `len`;
/// call with `cap = 0` to query the size.
///
/// # Safety
/// `model` must be a live handle, `buf` valid for `cap` bytes (or NULL when
/// `cap` is 0) and `len` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ip_model_to_json(
    model: *const IpModel,
    buf: *mut c_char,
    cap: usize,
    len: *mut usize,
) -> IpStatus {
    guard(|| {
        let len = out_ref(len, "len")?;
        let model = &in_ref(model, "model")?.0;
        let text = serde_json::to_string(model).map_err(Error::from)?;
        *len = text.len();
        if cap > 0 {
            if buf.is_null() {
                return Err(Failure::Null("buf"));
            }
            let n = text.len().min(cap - 1);
            ptr::copy_nonoverlapping(text.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        Ok(())
    })
}

/// # Safety
/// `model` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ip_model_free(model: *mut IpModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

#[no_mangle]
pub extern "C" fn ip_estimator_config_default() -> IpEstimatorConfig {
    let d = EstimatorConfig::default();
    IpEstimatorConfig {
        theta_lo: d.theta_bracket.0,
        theta_hi: d.theta_bracket.1,
        theta_tolerance: d.theta_tolerance,
        score_tolerance: d.score_tolerance,
        degeneracy_scan_points: d.degeneracy_scan_points,
        filter_support_vectors: -1,
    }
}

/// Binds a posterior estimator to a copy of `ds`. `config` may be NULL for
/// defaults.
///
/// # Safety
/// `ds` must be a live handle, `config` NULL or valid, `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ip_estimator_new(
    ds: *const IpDataset,
    classifier: IpClassifier,
    config: *const IpEstimatorConfig,
    out: *mut *mut IpEstimator,
) -> IpStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let ds = &in_ref(ds, "ds")?.0;
        let c = config.as_ref().copied().unwrap_or_else(|| ip_estimator_config_default());
        let config = EstimatorConfig {
            theta_bracket: (c.theta_lo, c.theta_hi),
            theta_tolerance: c.theta_tolerance,
            score_tolerance: c.score_tolerance,
            degeneracy_scan_points: c.degeneracy_scan_points,
            filter_support_vectors: match c.filter_support_vectors {
                -1 => None,
                0 => Some(false),
                1 => Some(true),
                v => {
                    return Err(Error::Domain(format!(
                        "filter_support_vectors must be -1, 0 or 1, got {v}"
                    ))
                    .into())
                }
            },
        };
        let trainer = Trainer::new(kind_of(classifier), TrainConfig::default());
        let est = PosteriorEstimator::for_classifier(&trainer, ds, config)?;
        boxed(out, IpEstimator(est));
        Ok(())
    })
}

/// Posterior estimate at `x`. Safe to call concurrently on one handle.
///
/// # Safety
/// `est` must be a live handle, `x` must hold `dim` values and `out` must be
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ip_estimator_estimate(
    est: *const IpEstimator,
    x: *const f64,
    dim: usize,
    out: *mut IpEstimate,
) -> IpStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let est = &in_ref(est, "est")?.0;
        let e = est.estimate(in_slice(x, dim, "x")?)?;
        *out = IpEstimate {
            probability: e.probability,
            probability_lo: e.probability_bounds.0,
            probability_hi: e.probability_bounds.1,
            theta_star: e.theta_star,
            bracket_lo: e.bracket.0,
            bracket_hi: e.bracket.1,
            status: match e.status {
                Status::Converged => IpEstimateStatus::Converged,
                Status::ClampedLow => IpEstimateStatus::ClampedLow,
                Status::ClampedHigh => IpEstimateStatus::ClampedHigh,
                Status::Degenerate => IpEstimateStatus::Degenerate,
            },
            n_roots: e.all_roots.len(),
            label_only: e.label_only as i32,
        };
        Ok(())
    })
}

/// Every θ at which the retrained boundary passes through `x`, increasing.
/// Writes up to `cap` roots to `roots` and the total count to `n_roots`.
///
/// # Safety
/// `est` must be a live handle, `x` must hold `dim` values, `roots` must be
/// valid for `cap` writes (or NULL when `cap` is 0), `n_roots` valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn ip_estimator_roots(
    est: *const IpEstimator,
    x: *const f64,
    dim: usize,
    roots: *mut f64,
    cap: usize,
    n_roots: *mut usize,
) -> IpStatus {
    guard(|| {
        let n_out = out_ref(n_roots, "n_roots")?;
        let est = &in_ref(est, "est")?.0;
        let found = est.detect_degeneracy(in_slice(x, dim, "x")?)?;
        *n_out = found.len();
        if cap > 0 {
            if roots.is_null() {
                return Err(Failure::Null("roots"));
            }
            let n = found.len().min(cap);
            slice::from_raw_parts_mut(roots, n).copy_from_slice(&found[..n]);
        }
        Ok(())
    })
}

/// Positive proportion of the data the estimator retrains on, or NaN.
///
/// # Safety
/// `est` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ip_estimator_pi_plus(est: *const IpEstimator) -> f64 {
    est.as_ref().map_or(f64::NAN, |e| e.0.pi_plus())
}

/// # Safety
/// `est` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ip_estimator_free(est: *mut IpEstimator) {
    if !est.is_null() {
        drop(Box::from_raw(est));
    }
}
