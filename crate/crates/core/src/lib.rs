//! Class posterior probabilities for arbitrary classifiers.
//!
//! The classifier is retrained under varied class weights, with the total
//! effective weight held fixed, until its decision surface passes through the
//! query point. At that point the class-conditional density ratio equals the
//! inverse ratio of the effective class proportions, which turns the required
//! proportion into a posterior probability for the unweighted model.
//!
//! The crate ships three weighted trainers (linear SVM, logistic regression,
//! pruned decision tree), iso-probability curve extraction, isotonic
//! calibration and a closed-form Gaussian oracle for validation.

pub mod calibration;
pub mod classifiers;
pub mod contour;
pub mod dataset;
pub mod error;
pub mod isocurves;
pub mod oracle;
pub mod posterior;
pub mod svg;

pub use classifiers::{
    Classifier, ClassifierKind, LinearModel, TrainConfig, TrainedModel, Trainer, WeightedTrainer,
};
pub use dataset::{derive_class_weights, ClassWeights, GaussianSpec, Label, LabeledDataset};
pub use error::{Error, Result};

pub use isocurves::{theta_for_level, Grid2D, IsoCurveSet};
pub use oracle::GaussianOracle;
pub use posterior::{
    posterior_from_theta, EstimatorConfig, PosteriorEstimate, PosteriorEstimator, Status,
};
