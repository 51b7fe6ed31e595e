#ifndef ISOPOSTERIOR_H
#define ISOPOSTERIOR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum IpStatus {
  IP_STATUS_OK = 0,
  IP_STATUS_NULL_POINTER = 1,
  IP_STATUS_DOMAIN = 2,
  IP_STATUS_DIMENSION = 3,
  IP_STATUS_PARSE = 4,
  IP_STATUS_IO = 5,
  IP_STATUS_NON_CONVERGENCE = 6,
  IP_STATUS_ESTIMATION = 7,
  IP_STATUS_INVALID_UTF8 = 8,
  IP_STATUS_PANIC = 9,
} IpStatus;

typedef enum IpClassifier {
  IP_CLASSIFIER_SVM = 0,
  IP_CLASSIFIER_LOGREG = 1,
  IP_CLASSIFIER_TREE = 2,
} IpClassifier;

typedef enum IpEstimateStatus {
  IP_ESTIMATE_STATUS_CONVERGED = 0,
  IP_ESTIMATE_STATUS_CLAMPED_LOW = 1,
  IP_ESTIMATE_STATUS_CLAMPED_HIGH = 2,
  IP_ESTIMATE_STATUS_DEGENERATE = 3,
} IpEstimateStatus;

typedef struct IpDataset IpDataset;

typedef struct IpEstimator IpEstimator;

typedef struct IpModel IpModel;

typedef struct IpClassWeights {
  double w_plus;
  double w_minus;
  double theta;
} IpClassWeights;

// Estimator settings. Obtain defaults from [`ip_estimator_config_default`].
typedef struct IpEstimatorConfig {
  double theta_lo;
  double theta_hi;
  double theta_tolerance;
  double score_tolerance;
  size_t degeneracy_scan_points;
  // -1 for the classifier default (on for svm), 0 off, 1 on.
  int32_t filter_support_vectors;
} IpEstimatorConfig;

typedef struct IpEstimate {
  double probability;
  double probability_lo;
  double probability_hi;
  double theta_star;
  double bracket_lo;
  double bracket_hi;
  enum IpEstimateStatus status;
  // Number of θ roots found; fetch them with `ip_estimator_roots`.
  size_t n_roots;
  // Nonzero when the estimate comes from label-flip bracketing (trees).
  int32_t label_only;
} IpEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. The pointer
// stays valid until the next failing call on the same thread.
const char *ip_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *ip_version(void);

// Class weights for effective positive proportion `theta` with the total
// weight `n_plus + n_minus` held fixed.
//
// # Safety
// `out` must be valid for writes.
enum IpStatus ip_derive_class_weights(double theta,
                                      double n_plus,
                                      double n_minus,
                                      struct IpClassWeights *out);

// # Safety
// `out` must be valid for writes.
enum IpStatus ip_posterior_from_theta(double theta, double pi_plus, double *out);

// # Safety
// `out` must be valid for writes.
enum IpStatus ip_theta_for_level(double level, double pi_plus, double *out);

// Builds a dataset from `n` row-major points of dimension `dim`, labels
// `+1`/`-1`, and optional per-point weights (NULL for all ones).
//
// # Safety
// `points` must hold `n * dim` values, `labels` and (if non-NULL)
// `weights` `n` values each; `out` must be valid for writes.
enum IpStatus ip_dataset_new(const double *points,
                             size_t n,
                             size_t dim,
                             const int32_t *labels,
                             const double *weights,
                             struct IpDataset **out);

// Reads a dataset CSV (`x1,...,xd,label[,weight]`).
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be valid for writes.
enum IpStatus ip_dataset_load(const char *path, struct IpDataset **out);

// Samples two Gaussian classes. `spec_json` holds GaussianSpec fields;
// NULL or `{}` gives the defaults.
//
// # Safety
// `spec_json` must be NULL or NUL-terminated; `out` must be valid for writes.
enum IpStatus ip_dataset_gaussian(const char *spec_json, struct IpDataset **out);

// Number of points, or 0 for NULL.
//
// # Safety
// `ds` must be NULL or a live dataset handle.
size_t ip_dataset_len(const struct IpDataset *ds);

// Dimension, or 0 for NULL.
//
// # Safety
// `ds` must be NULL or a live dataset handle.
size_t ip_dataset_dim(const struct IpDataset *ds);

// Observed positive proportion (by base weight), or NaN for NULL.
//
// # Safety
// `ds` must be NULL or a live dataset handle.
double ip_dataset_positive_proportion(const struct IpDataset *ds);

// # Safety
// `ds` must be NULL or a handle not yet freed.
void ip_dataset_free(struct IpDataset *ds);

// Trains a classifier with default settings at effective positive
// proportion `theta`; pass NaN to train at the original weights.
//
// # Safety
// `ds` must be a live dataset handle; `out` must be valid for writes.
enum IpStatus ip_model_train(const struct IpDataset *ds,
                             enum IpClassifier classifier,
                             double theta,
                             struct IpModel **out);

// Signed score at `x`: `w·x + b` for linear models, normalized leaf mass
// difference for trees.
//
// # Safety
// `model` must be a live handle, `x` must hold `dim` values and `out` must
// be valid for writes.
enum IpStatus ip_model_score(const struct IpModel *model, const double *x, size_t dim, double *out);

// Predicted label (+1 or -1) at `x`; ties go to +1.
//
// # Safety
// As for [`ip_model_score`].
enum IpStatus ip_model_predict(const struct IpModel *model,
                               const double *x,
                               size_t dim,
                               int32_t *out);

// Serializes the model to JSON. Writes at most `cap` bytes including the
// terminating NUL and stores the full length (excluding NUL) in `len`;
// call with `cap = 0` to query the size.
//
// # Safety
// `model` must be a live handle, `buf` valid for `cap` bytes (or NULL when
// `cap` is 0) and `len` valid for writes.
enum IpStatus ip_model_to_json(const struct IpModel *model, char *buf, size_t cap, size_t *len);

// # Safety
// `model` must be NULL or a handle not yet freed.
void ip_model_free(struct IpModel *model);

struct IpEstimatorConfig ip_estimator_config_default(void);

// Binds a posterior estimator to a copy of `ds`. `config` may be NULL for
// defaults.
//
// # Safety
// `ds` must be a live handle, `config` NULL or valid, `out` valid for writes.
enum IpStatus ip_estimator_new(const struct IpDataset *ds,
                               enum IpClassifier classifier,
                               const struct IpEstimatorConfig *config,
                               struct IpEstimator **out);

// Posterior estimate at `x`. Safe to call concurrently on one handle.
//
// # Safety
// `est` must be a live handle, `x` must hold `dim` values and `out` must be
// valid for writes.
enum IpStatus ip_estimator_estimate(const struct IpEstimator *est,
                                    const double *x,
                                    size_t dim,
                                    struct IpEstimate *out);

// Every θ at which the retrained boundary passes through `x`, increasing.
// Writes up to `cap` roots to `roots` and the total count to `n_roots`.
//
// # Safety
// `est` must be a live handle, `x` must hold `dim` values, `roots` must be
// valid for `cap` writes (or NULL when `cap` is 0), `n_roots` valid for
// writes.
enum IpStatus ip_estimator_roots(const struct IpEstimator *est,
                                 const double *x,
                                 size_t dim,
                                 double *roots,
                                 size_t cap,
                                 size_t *n_roots);

// Positive proportion of the data the estimator retrains on, or NaN.
//
// # Safety
// `est` must be NULL or a live handle.
double ip_estimator_pi_plus(const struct IpEstimator *est);

// # Safety
// `est` must be NULL or a handle not yet freed.
void ip_estimator_free(struct IpEstimator *est);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ISOPOSTERIOR_H */
