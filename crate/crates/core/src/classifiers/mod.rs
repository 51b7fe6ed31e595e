//! Class-weight-aware classifiers behind one interface.
//!
//! Every trainer receives the dataset plus a [`ClassWeights`] pair; the
//! effective cost of point `i` is `class weight × base weight`. The posterior
//! estimator only needs [`WeightedTrainer`] and [`Classifier`], so any other
//! model can be plugged in by implementing those two traits.

mod logreg;
mod svm;
mod tree;

use serde::{Deserialize, Serialize};

use crate::dataset::{ClassWeights, Label, LabeledDataset};
use crate::error::{Error, Result};

pub use logreg::train_logreg;
pub use svm::{filter_support_vectors, train_svm};
pub use tree::{train_tree, TreeModel, TreeNode, TreeSplit};

/// A trained model that can place a query point on one side of its boundary.
pub trait Classifier {
    /// Signed score; the decision surface is its zero set.
    fn score(&self, x: &[f64]) -> Result<f64>;

    /// Predicted label, `+1` on a zero score.
    fn predict(&self, x: &[f64]) -> Result<Label> {
        self.score(x).map(Label::from_score)
    }
}

/// Something that can be retrained under arbitrary class weights.
pub trait WeightedTrainer: Sync {
    type Model: Classifier + Send + Sync;

    fn train(&self, dataset: &LabeledDataset, weights: &ClassWeights) -> Result<Self::Model>;

    /// Whether the score is a usable continuous function of the query point.
    /// Label-only models are handled by label-flip bracketing instead.
    fn score_based(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Svm,
    Logreg,
    Tree,
}

impl ClassifierKind {
    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::Svm => "svm",
            ClassifierKind::Logreg => "logreg",
            ClassifierKind::Tree => "tree",
        }
    }
}

impl std::str::FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "svm" => Ok(ClassifierKind::Svm),
            "logreg" => Ok(ClassifierKind::Logreg),
            "tree" => Ok(ClassifierKind::Tree),
            other => Err(Error::domain(format!("unknown classifier {other:?}"))),
        }
    }
}

impl std::fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Soft-margin penalty; per-point bounds are `C × class weight × base weight`.
    pub svm_c: f64,
    /// Stop once the relative duality gap falls below this value...
    pub svm_gap_tolerance: f64,
    /// ...and the maximal KKT violation is below this one.
    pub svm_kkt_tolerance: f64,
    pub svm_max_iter: usize,
    pub logreg_max_iter: usize,
    /// Bound on the gradient ∞-norm of the weighted negative log-likelihood.
    pub logreg_tolerance: f64,
    /// Minimum base (unreweighted) weight per leaf.
    pub tree_min_leaf_weight: f64,
    /// Cost-complexity pruning strength. `None` picks it by weighted
    /// cross-validation on the unweighted dataset (see [`Trainer::prepare`]).
    pub tree_ccp_alpha: Option<f64>,
    pub tree_cv_folds: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            svm_c: 1.0,
            svm_gap_tolerance: 1e-9,
            svm_kkt_tolerance: 1e-9,
            svm_max_iter: 2_000_000,
            logreg_max_iter: 100,
            logreg_tolerance: 1e-8,
            tree_min_leaf_weight: 1.0,
            tree_ccp_alpha: None,
            tree_cv_folds: 5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("svm_c", self.svm_c),
            ("svm_gap_tolerance", self.svm_gap_tolerance),
            ("svm_kkt_tolerance", self.svm_kkt_tolerance),
            ("logreg_tolerance", self.logreg_tolerance),
            ("tree_min_leaf_weight", self.tree_min_leaf_weight),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("{name} must be positive, got {v}")));
            }
        }
        if self.svm_max_iter == 0 || self.logreg_max_iter == 0 {
            return Err(Error::domain("iteration budgets must be positive"));
        }
        if let Some(a) = self.tree_ccp_alpha {
            if !(a >= 0.0 && a.is_finite()) {
                return Err(Error::domain("tree_ccp_alpha must be >= 0"));
            }
        }
        if self.tree_cv_folds < 2 {
            return Err(Error::domain("tree_cv_folds must be >= 2"));
        }
        Ok(())
    }
}

/// Solver diagnostics for the linear models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub iterations: usize,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub objective: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub duality_gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gradient_norm: Option<f64>,
    #[serde(default)]
    pub separable: bool,
}

/// `score(x) = w·x + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub fit: FitReport,
}

impl LinearModel {
    pub fn new(weights: Vec<f64>, intercept: f64) -> Self {
        Self {
            weights,
            intercept,
            fit: FitReport {
                iterations: 0,
                converged: true,
                objective: None,
                duality_gap: None,
                gradient_norm: None,
                separable: false,
            },
        }
    }

    #[inline]
    pub(crate) fn raw_score(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.intercept
    }
}

impl Classifier for LinearModel {
    fn score(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.weights.len(), x)?;
        Ok(self.raw_score(x))
    }
}

/// A model produced by one of the built-in trainers. Serializes as JSON with a
/// `kind` tag: `{"kind":"svm","weights":[..],"intercept":..,"fit":{..}}` for
/// the linear models and `{"kind":"tree","dim":..,"ccp_alpha":..,"nodes":[..]}`
/// for trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TrainedModel {
    Svm(LinearModel),
    Logreg(LinearModel),
    Tree(TreeModel),
}

impl TrainedModel {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            TrainedModel::Svm(_) => ClassifierKind::Svm,
            TrainedModel::Logreg(_) => ClassifierKind::Logreg,
            TrainedModel::Tree(_) => ClassifierKind::Tree,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            TrainedModel::Svm(m) | TrainedModel::Logreg(m) => m.weights.len(),
            TrainedModel::Tree(t) => t.dim,
        }
    }

    pub fn linear(&self) -> Option<&LinearModel> {
        match self {
            TrainedModel::Svm(m) | TrainedModel::Logreg(m) => Some(m),
            TrainedModel::Tree(_) => None,
        }
    }
}

impl Classifier for TrainedModel {
    fn score(&self, x: &[f64]) -> Result<f64> {
        match self {
            TrainedModel::Svm(m) | TrainedModel::Logreg(m) => m.score(x),
            TrainedModel::Tree(t) => t.score(x),
        }
    }
}

/// One of the built-in trainers with its configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Trainer {
    pub kind: ClassifierKind,
    pub config: TrainConfig,
}

impl Trainer {
    pub fn new(kind: ClassifierKind, config: TrainConfig) -> Self {
        Self { kind, config }
    }

    /// Fixes data-dependent settings before a reweighting sweep: the tree
    /// pruning strength is chosen once at the original weights and then held
    /// for every retraining, and SVM data is optionally reduced to support
    /// vectors of the unweighted model.
    pub fn prepare(
        &self,
        dataset: &LabeledDataset,
        filter_svm: bool,
    ) -> Result<(Trainer, LabeledDataset)> {
        self.config.validate()?;
        let original = dataset.original_weights();
        match self.kind {
            ClassifierKind::Svm if filter_svm => {
                let model = train_svm(dataset, &original, &self.config)?;
                let filtered = filter_support_vectors(&model, dataset)?;
                Ok((self.clone(), filtered))
            }
            ClassifierKind::Tree if self.config.tree_ccp_alpha.is_none() => {
                let alpha = tree::cross_validate_alpha(dataset, &original, &self.config)?;
                let mut config = self.config.clone();
                config.tree_ccp_alpha = Some(alpha);
                Ok((Trainer::new(self.kind, config), dataset.clone()))
            }
            _ => Ok((self.clone(), dataset.clone())),
        }
    }
}

impl WeightedTrainer for Trainer {
    type Model = TrainedModel;

    fn train(&self, dataset: &LabeledDataset, weights: &ClassWeights) -> Result<TrainedModel> {
        match self.kind {
            ClassifierKind::Svm => train_svm(dataset, weights, &self.config),
            ClassifierKind::Logreg => train_logreg(dataset, weights, &self.config),
            ClassifierKind::Tree => train_tree(dataset, weights, &self.config),
        }
    }

    fn score_based(&self) -> bool {
        self.kind != ClassifierKind::Tree
    }
}

/// Score of `model` at `x`.
pub fn score(model: &TrainedModel, x: &[f64]) -> Result<f64> {
    model.score(x)
}

/// Predicted label of `model` at `x`, `+1` on ties.
pub fn predict(model: &TrainedModel, x: &[f64]) -> Result<Label> {
    model.predict(x)
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn check_dim(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() == expected {
        Ok(())
    } else {
        Err(Error::Dimension {
            expected,
            got: x.len(),
        })
    }
}
