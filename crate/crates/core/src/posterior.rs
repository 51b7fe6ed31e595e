//! Posterior estimation by reweighting.
//!
//! For a query point `x` the classifier is retrained at effective positive
//! proportions `θ` (total weight fixed) until its decision surface passes
//! through `x`. On that surface the reweighted posterior odds are one, so
//! `f(x|+)/f(x|−) = (1 − θ*)/θ*`, and the posterior of the unweighted model
//! follows from the observed proportion `π⁺`:
//!
//! ```text
//! R = (1 − θ*)·π⁺ / (θ*·(1 − π⁺)),     P(+|x) = R / (1 + R)
//! ```
//!
//! `θ*` is located by bisection on `g(θ) = score_θ(x)`. Before bisecting, `g`
//! is sampled on a uniform θ grid so that every sign change is found: crossing
//! reweighted boundaries give one point several roots, which is reported as a
//! degenerate estimate. Models on the scan grid are trained once and shared
//! by every query.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::classifiers::{Classifier, Trainer, WeightedTrainer};
use crate::dataset::{Label, LabeledDataset};
use crate::error::{Error, Result};

/// Posterior of the unweighted model at a point whose boundary-crossing
/// proportion is `theta_star`, given the observed positive proportion.
pub fn posterior_from_theta(theta_star: f64, pi_plus: f64) -> Result<f64> {
    for (name, v) in [("theta", theta_star), ("pi_plus", pi_plus)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::domain(format!("{name} must lie in (0, 1), got {v}")));
        }
    }
    // R/(1+R) with both odds factors kept as products so that θ* = π⁺ gives
    // exactly one half.
    let num = (1.0 - theta_star) * pi_plus;
    let den = theta_star * (1.0 - pi_plus);
    Ok(num / (num + den))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorConfig {
    /// Admissible effective proportions `(lo, hi)`.
    pub theta_bracket: (f64, f64),
    pub theta_tolerance: f64,
    pub score_tolerance: f64,
    /// Size of the uniform θ grid scanned for multiple roots. Values below 2
    /// disable the scan and bisect the whole bracket directly.
    pub degeneracy_scan_points: usize,
    /// Reduce SVM training data to the support vectors of the unweighted
    /// model before reweighting. `None` means on for SVM, off otherwise.
    pub filter_support_vectors: Option<bool>,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            theta_bracket: (0.01, 0.99),
            theta_tolerance: 1e-4,
            score_tolerance: 1e-8,
            degeneracy_scan_points: 99,
            filter_support_vectors: None,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.theta_bracket;
        if !(0.0 < lo && lo < hi && hi < 1.0) {
            return Err(Error::domain(format!(
                "theta_bracket must satisfy 0 < lo < hi < 1, got ({lo}, {hi})"
            )));
        }
        if !(self.theta_tolerance > 0.0) || !(self.score_tolerance > 0.0) {
            return Err(Error::domain("tolerances must be positive"));
        }
        Ok(())
    }

    fn scan_grid(&self) -> Vec<f64> {
        let (lo, hi) = self.theta_bracket;
        let n = self.degeneracy_scan_points.max(2);
        let mut grid: Vec<f64> = (0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect();
        grid[n - 1] = hi;
        grid
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    /// No admissible θ moves the boundary to `x`; it would need a proportion
    /// below the bracket. The probability is a lower bound.
    ClampedLow,
    /// As above, beyond the upper end. The probability is an upper bound.
    ClampedHigh,
    /// Several θ place the boundary through `x`.
    Degenerate,
}

/// Result of the boundary search alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryTheta {
    pub theta_star: f64,
    pub bracket: (f64, f64),
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorEstimate {
    /// Point estimate; for clamped results the bound itself.
    pub probability: f64,
    /// `[lo, hi]` containing the posterior: the image of the θ bracket, the
    /// one-sided range of a clamped result, or the spread of candidates.
    pub probability_bounds: (f64, f64),
    pub theta_star: f64,
    pub bracket: (f64, f64),
    pub status: Status,
    /// Every θ root found, increasing.
    pub all_roots: Vec<f64>,
    /// Posterior for each entry of `all_roots`.
    pub candidates: Vec<f64>,
    /// Positive proportion of the data the classifier is retrained on.
    pub pi_plus: f64,
    /// The estimate came from label-flip bracketing rather than score roots.
    pub label_only: bool,
}

impl PosteriorEstimate {
    pub fn is_degenerate(&self) -> bool {
        self.status == Status::Degenerate
    }
}

/// Reweighting posterior estimator bound to one trainer and dataset.
///
/// Cheap to share across threads: query methods take `&self`, and the scan
/// grid models are trained lazily on first use.
pub struct PosteriorEstimator<T: WeightedTrainer> {
    trainer: T,
    dataset: LabeledDataset,
    pi_plus: f64,
    config: EstimatorConfig,
    grid: Vec<f64>,
    cache: Vec<OnceLock<T::Model>>,
}

impl<T: WeightedTrainer> std::fmt::Debug for PosteriorEstimator<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PosteriorEstimator")
            .field("points", &self.dataset.len())
            .field("pi_plus", &self.pi_plus)
            .field("config", &self.config)
            .finish()
    }
}

impl PosteriorEstimator<Trainer> {
    /// Estimator for a built-in classifier. Applies SVM support-vector
    /// filtering (per `config`) and fixes the tree pruning strength.
    pub fn for_classifier(
        trainer: &Trainer,
        dataset: &LabeledDataset,
        config: EstimatorConfig,
    ) -> Result<Self> {
        let filter = config
            .filter_support_vectors
            .unwrap_or(trainer.kind == crate::ClassifierKind::Svm);
        let (trainer, data) = trainer.prepare(dataset, filter)?;
        Self::new(trainer, data, config)
    }
}

impl<T: WeightedTrainer> PosteriorEstimator<T> {
    pub fn new(trainer: T, dataset: LabeledDataset, config: EstimatorConfig) -> Result<Self> {
        config.validate()?;
        let grid = config.scan_grid();
        let cache = grid.iter().map(|_| OnceLock::new()).collect();
        Ok(Self {
            trainer,
            pi_plus: dataset.positive_proportion(),
            dataset,
            config,
            grid,
            cache,
        })
    }

    pub fn trainer(&self) -> &T {
        &self.trainer
    }

    /// The data the classifier is retrained on (support vectors only when
    /// SVM filtering is active).
    pub fn dataset(&self) -> &LabeledDataset {
        &self.dataset
    }

    pub fn pi_plus(&self) -> f64 {
        self.pi_plus
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.config
    }

    pub fn posterior(&self, theta: f64) -> Result<f64> {
        posterior_from_theta(theta, self.pi_plus)
    }

    /// Retrains at effective positive proportion `theta`.
    pub fn train_at(&self, theta: f64) -> Result<T::Model> {
        let weights = self.dataset.weights_for(theta)?;
        self.trainer.train(&self.dataset, &weights)
    }

    /// The model at the original weights (`θ = π⁺`).
    pub fn original_model(&self) -> Result<T::Model> {
        self.trainer
            .train(&self.dataset, &self.dataset.original_weights())
    }

    fn grid_model(&self, k: usize) -> Result<&T::Model> {
        if let Some(m) = self.cache[k].get() {
            return Ok(m);
        }
        let model = self.train_at(self.grid[k])?;
        // A concurrent caller may have won the race; either copy is identical.
        let _ = self.cache[k].set(model);
        Ok(self.cache[k].get().expect("cache slot was just filled"))
    }

    /// Trains every scan-grid model up front (otherwise done lazily).
    pub fn warm_up(&self) -> Result<()> {
        (0..self.grid.len()).try_for_each(|k| self.grid_model(k).map(|_| ()))
    }

    fn g(model: &T::Model, x: &[f64]) -> Result<f64> {
        let s = model.score(x)?;
        if s.is_finite() {
            Ok(s)
        } else {
            Err(Error::Estimation(format!("non-finite score {s} at {x:?}")))
        }
    }

    fn g_at(&self, theta: f64, x: &[f64]) -> Result<f64> {
        Self::g(&self.train_at(theta)?, x)
    }

    /// Bisection inside a sign-change bracket. Returns `θ*` and the final
    /// bracket.
    fn refine(
        &self,
        x: &[f64],
        (mut lo, mut g_lo): (f64, f64),
        (mut hi, mut g_hi): (f64, f64),
    ) -> Result<(f64, (f64, f64))> {
        let tol = self.config.score_tolerance;
        if g_lo.abs() <= tol {
            return Ok((lo, (lo, lo)));
        }
        if g_hi.abs() <= tol {
            return Ok((hi, (hi, hi)));
        }
        while hi - lo > self.config.theta_tolerance {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let g_mid = self.g_at(mid, x)?;
            if g_mid.abs() <= tol {
                return Ok((mid, (mid, mid)));
            }
            if (g_mid >= 0.0) == (g_lo >= 0.0) {
                (lo, g_lo) = (mid, g_mid);
            } else {
                (hi, g_hi) = (mid, g_mid);
            }
        }
        // Secant point of the final bracket.
        let t = g_lo / (g_lo - g_hi);
        let theta = if t.is_finite() {
            (lo + t * (hi - lo)).clamp(lo, hi)
        } else {
            0.5 * (lo + hi)
        };
        Ok((theta, (lo, hi)))
    }

    fn endpoint_scores(&self, x: &[f64]) -> Result<(f64, f64)> {
        let last = self.grid.len() - 1;
        Ok((
            Self::g(self.grid_model(0)?, x)?,
            Self::g(self.grid_model(last)?, x)?,
        ))
    }

    fn clamped(&self, g_lo: f64) -> BoundaryTheta {
        let (lo, hi) = self.config.theta_bracket;
        // g grows with θ; a positive score at both ends means the boundary
        // would only reach x below the bracket.
        if g_lo >= 0.0 {
            BoundaryTheta {
                theta_star: lo,
                bracket: (lo, lo),
                status: Status::ClampedLow,
            }
        } else {
            BoundaryTheta {
                theta_star: hi,
                bracket: (hi, hi),
                status: Status::ClampedHigh,
            }
        }
    }

    /// Plain bisection of `g` over the whole bracket.
    pub fn find_boundary_theta(&self, x: &[f64]) -> Result<BoundaryTheta> {
        self.dataset.check_point(x)?;
        let (lo, hi) = self.config.theta_bracket;
        let (g_lo, g_hi) = self.endpoint_scores(x)?;
        if (g_lo >= 0.0) == (g_hi >= 0.0) && g_lo.abs() > self.config.score_tolerance {
            return Ok(self.clamped(g_lo));
        }
        let (theta_star, bracket) = self.refine(x, (lo, g_lo), (hi, g_hi))?;
        Ok(BoundaryTheta {
            theta_star,
            bracket,
            status: Status::Converged,
        })
    }

    fn roots_with_brackets(&self, x: &[f64]) -> Result<Vec<(f64, (f64, f64))>> {
        let scores: Vec<f64> = (0..self.grid.len())
            .map(|k| Self::g(self.grid_model(k)?, x))
            .collect::<Result<_>>()?;
        let tol = self.config.score_tolerance;
        let zero = |k: usize| scores[k].abs() <= tol;
        let mut roots: Vec<(f64, (f64, f64))> = Vec::new();
        let mut k = 0;
        while k < self.grid.len() {
            let root = if zero(k) {
                // A run of zero scores: the boundary stays on x over a whole
                // θ interval (hinge losses do this). One root at its middle.
                let start = k;
                while k + 1 < self.grid.len() && zero(k + 1) {
                    k += 1;
                }
                let (a, b) = (self.grid[start], self.grid[k]);
                Some((0.5 * (a + b), (a, b)))
            } else if k + 1 < self.grid.len()
                && !zero(k + 1)
                && (scores[k] > 0.0) != (scores[k + 1] > 0.0)
            {
                Some(self.refine(x, (self.grid[k], scores[k]), (self.grid[k + 1], scores[k + 1]))?)
            } else {
                None
            };
            if let Some(root) = root {
                let dup = roots
                    .last()
                    .is_some_and(|r| (root.0 - r.0).abs() <= self.config.theta_tolerance);
                if !dup {
                    roots.push(root);
                }
            }
            k += 1;
        }
        Ok(roots)
    }

    /// All θ in the bracket at which the retrained boundary passes through
    /// `x`, increasing. Empty when the score keeps one sign.
    pub fn detect_degeneracy(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.dataset.check_point(x)?;
        Ok(self
            .roots_with_brackets(x)?
            .into_iter()
            .map(|(t, _)| t)
            .collect())
    }

    /// Posterior of the unweighted model at `x`.
    pub fn estimate(&self, x: &[f64]) -> Result<PosteriorEstimate> {
        self.dataset.check_point(x)?;
        if !self.trainer.score_based() {
            return self.tree_flip_interval(x);
        }
        let roots = if self.config.degeneracy_scan_points >= 2 {
            self.roots_with_brackets(x)?
        } else {
            let b = self.find_boundary_theta(x)?;
            if b.status == Status::Converged {
                vec![(b.theta_star, b.bracket)]
            } else {
                return self.clamped_estimate(b, false);
            }
        };
        match roots.len() {
            0 => {
                let (g_lo, _) = self.endpoint_scores(x)?;
                self.clamped_estimate(self.clamped(g_lo), false)
            }
            n => {
                let (theta_star, bracket) = *roots
                    .iter()
                    .min_by(|a, b| {
                        (a.0 - self.pi_plus)
                            .abs()
                            .total_cmp(&(b.0 - self.pi_plus).abs())
                    })
                    .expect("non-empty");
                let candidates: Vec<f64> = roots
                    .iter()
                    .map(|(t, _)| self.posterior(*t))
                    .collect::<Result<_>>()?;
                let probability = self.posterior(theta_star)?;
                let bounds = if n == 1 {
                    (self.posterior(bracket.1)?, self.posterior(bracket.0)?)
                } else {
                    let lo = candidates.iter().copied().fold(f64::INFINITY, f64::min);
                    let hi = candidates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    (lo, hi)
                };
                Ok(PosteriorEstimate {
                    probability,
                    probability_bounds: bounds,
                    theta_star,
                    bracket,
                    status: if n == 1 {
                        Status::Converged
                    } else {
                        Status::Degenerate
                    },
                    all_roots: roots.iter().map(|(t, _)| *t).collect(),
                    candidates,
                    pi_plus: self.pi_plus,
                    label_only: false,
                })
            }
        }
    }

    fn clamped_estimate(&self, b: BoundaryTheta, label_only: bool) -> Result<PosteriorEstimate> {
        let p = self.posterior(b.theta_star)?;
        let bounds = match b.status {
            Status::ClampedLow => (p, 1.0),
            _ => (0.0, p),
        };
        Ok(PosteriorEstimate {
            probability: p,
            probability_bounds: bounds,
            theta_star: b.theta_star,
            bracket: b.bracket,
            status: b.status,
            all_roots: Vec::new(),
            candidates: Vec::new(),
            pi_plus: self.pi_plus,
            label_only,
        })
    }

    /// Label-flip bracketing for models without a usable score: bisects the
    /// predicted label at `x` over θ and maps the final bracket to a
    /// probability interval.
    pub fn tree_flip_interval(&self, x: &[f64]) -> Result<PosteriorEstimate> {
        self.dataset.check_point(x)?;
        let last = self.grid.len() - 1;
        let (mut lo, mut hi) = self.config.theta_bracket;
        let label_lo = self.grid_model(0)?.predict(x)?;
        let label_hi = self.grid_model(last)?.predict(x)?;
        if label_lo == label_hi {
            let b = if label_lo == Label::Plus {
                BoundaryTheta {
                    theta_star: lo,
                    bracket: (lo, lo),
                    status: Status::ClampedLow,
                }
            } else {
                BoundaryTheta {
                    theta_star: hi,
                    bracket: (hi, hi),
                    status: Status::ClampedHigh,
                }
            };
            return self.clamped_estimate(b, true);
        }
        while hi - lo > self.config.theta_tolerance {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.train_at(mid)?.predict(x)? == label_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let theta_star = 0.5 * (lo + hi);
        Ok(PosteriorEstimate {
            probability: self.posterior(theta_star)?,
            probability_bounds: (self.posterior(hi)?, self.posterior(lo)?),
            theta_star,
            bracket: (lo, hi),
            status: Status::Converged,
            all_roots: vec![theta_star],
            candidates: vec![self.posterior(theta_star)?],
            pi_plus: self.pi_plus,
            label_only: true,
        })
    }
}

/// One-shot [`PosteriorEstimator::estimate`] for a built-in classifier.
pub fn estimate_posterior(
    x: &[f64],
    trainer: &Trainer,
    dataset: &LabeledDataset,
    config: EstimatorConfig,
) -> Result<PosteriorEstimate> {
    PosteriorEstimator::for_classifier(trainer, dataset, config)?.estimate(x)
}

/// One-shot [`PosteriorEstimator::find_boundary_theta`].
pub fn find_boundary_theta(
    x: &[f64],
    trainer: &Trainer,
    dataset: &LabeledDataset,
    config: EstimatorConfig,
) -> Result<BoundaryTheta> {
    PosteriorEstimator::for_classifier(trainer, dataset, config)?.find_boundary_theta(x)
}

/// One-shot [`PosteriorEstimator::detect_degeneracy`].
pub fn detect_degeneracy(
    x: &[f64],
    trainer: &Trainer,
    dataset: &LabeledDataset,
    config: EstimatorConfig,
) -> Result<Vec<f64>> {
    PosteriorEstimator::for_classifier(trainer, dataset, config)?.detect_degeneracy(x)
}

/// One-shot [`PosteriorEstimator::tree_flip_interval`].
pub fn tree_flip_interval(
    x: &[f64],
    dataset: &LabeledDataset,
    trainer: &Trainer,
    config: EstimatorConfig,
) -> Result<PosteriorEstimate> {
    PosteriorEstimator::for_classifier(trainer, dataset, config)?.tree_flip_interval(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{ClassifierKind, TrainConfig};
    use crate::dataset::{gen_gaussian, GaussianSpec};
    use proptest::prelude::*;

    fn line(xs: &[f64], labels: &[Label]) -> LabeledDataset {
        LabeledDataset::new(xs.iter().map(|&x| vec![x]).collect(), labels.to_vec()).unwrap()
    }

    fn mirrored_1d() -> LabeledDataset {
        let xs = [-3.0, -2.0, -1.0, 0.5, 1.5];
        let mut pts = Vec::new();
        let mut labels = Vec::new();
        for x in xs {
            pts.push(x);
            labels.push(Label::Minus);
            pts.push(-x);
            labels.push(Label::Plus);
        }
        line(&pts, &labels)
    }

    #[test]
    fn posterior_from_theta_examples() {
        assert_eq!(posterior_from_theta(0.5, 0.5).unwrap(), 0.5);
        // Odds 3 and 1/3.
        assert!((posterior_from_theta(0.25, 0.5).unwrap() - 0.75).abs() < 1e-15);
        assert!((posterior_from_theta(0.75, 0.5).unwrap() - 0.25).abs() < 1e-15);
        for bad in [0.0, 1.0, -0.1, f64::NAN] {
            assert!(posterior_from_theta(bad, 0.5).is_err());
            assert!(posterior_from_theta(0.5, bad).is_err());
        }
    }

    proptest! {
        #[test]
        fn half_exactly_at_the_original_proportion(pi in 0.001f64..0.999) {
            prop_assert_eq!(posterior_from_theta(pi, pi).unwrap(), 0.5);
        }

        #[test]
        fn monotone_in_both_arguments(t in 0.01f64..0.98, pi in 0.01f64..0.98, d in 0.001f64..0.01) {
            let p = posterior_from_theta(t, pi).unwrap();
            prop_assert!(posterior_from_theta(t + d, pi).unwrap() < p);
            prop_assert!(posterior_from_theta(t, pi + d).unwrap() > p);
        }

        #[test]
        fn balanced_symmetry(t in 0.001f64..0.999) {
            let s = posterior_from_theta(t, 0.5).unwrap() + posterior_from_theta(1.0 - t, 0.5).unwrap();
            prop_assert!((s - 1.0).abs() <= 1e-12);
            prop_assert!((posterior_from_theta(t, 0.5).unwrap() - (1.0 - t)).abs() <= 1e-12);
        }
    }

    #[test]
    fn config_validation() {
        let bad = EstimatorConfig {
            theta_bracket: (0.5, 0.4),
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let grid = EstimatorConfig::default().scan_grid();
        assert_eq!(grid.len(), 99);
        assert_eq!((grid[0], grid[98]), (0.01, 0.99));
    }

    #[test]
    fn symmetric_midpoint_gives_one_half() {
        let trainer = Trainer::new(ClassifierKind::Logreg, TrainConfig::default());
        let est = PosteriorEstimator::for_classifier(&trainer, &mirrored_1d(), Default::default()).unwrap();
        let b = est.find_boundary_theta(&[0.0]).unwrap();
        assert_eq!(b.status, Status::Converged);
        assert!((b.theta_star - 0.5).abs() <= 1e-4);
        assert!(b.bracket.1 - b.bracket.0 <= 1e-4);
        let e = est.estimate(&[0.0]).unwrap();
        assert_eq!(e.status, Status::Converged);
        assert!((e.probability - 0.5).abs() <= 1e-4);
        assert_eq!(e.all_roots.len(), 1);
    }

    #[test]
    fn hinge_plateau_is_one_centred_root() {
        // The SVM intercept stays at 0 for a whole range of θ around 0.5.
        let trainer = Trainer::new(ClassifierKind::Svm, TrainConfig::default());
        let config = EstimatorConfig {
            filter_support_vectors: Some(false),
            ..Default::default()
        };
        let est = PosteriorEstimator::for_classifier(&trainer, &mirrored_1d(), config).unwrap();
        let e = est.estimate(&[0.0]).unwrap();
        assert_eq!(e.status, Status::Converged);
        assert_eq!(e.all_roots.len(), 1);
        assert!(e.bracket.1 > e.bracket.0);
        assert!((e.probability - 0.5).abs() <= 1e-9, "{e:?}");
        assert!(e.probability_bounds.0 < 0.5 && 0.5 < e.probability_bounds.1);
    }

    #[test]
    fn balanced_estimate_is_one_minus_theta() {
        let trainer = Trainer::new(ClassifierKind::Logreg, TrainConfig::default());
        let est = PosteriorEstimator::for_classifier(&trainer, &mirrored_1d(), Default::default()).unwrap();
        for x in [-0.7, 0.3, 1.1] {
            let e = est.estimate(&[x]).unwrap();
            assert_eq!(e.status, Status::Converged);
            assert!((e.probability - (1.0 - e.theta_star)).abs() <= 1e-9);
            assert!(e.bracket.0 <= e.theta_star && e.theta_star <= e.bracket.1);
            assert!(e.probability_bounds.0 <= e.probability && e.probability <= e.probability_bounds.1);
        }
    }

    #[test]
    fn gaussian_logreg_matches_closed_form_at_one_point_five() {
        let ds = gen_gaussian(&GaussianSpec::default()).unwrap();
        let trainer = Trainer::new(ClassifierKind::Logreg, TrainConfig::default());
        let e = estimate_posterior(&[1.5, 0.0], &trainer, &ds, Default::default()).unwrap();
        let truth = 1.0 / (1.0 + (-1.0f64).exp());
        assert!((e.probability - truth).abs() <= 0.05, "{} vs {truth}", e.probability);
    }

    #[test]
    fn deep_positive_point_is_clamped_low() {
        let ds = gen_gaussian(&GaussianSpec::default()).unwrap();
        let trainer = Trainer::new(ClassifierKind::Logreg, TrainConfig::default());
        let est = PosteriorEstimator::for_classifier(&trainer, &ds, Default::default()).unwrap();
        let x = [12.0, 0.0];
        assert!(est.detect_degeneracy(&x).unwrap().is_empty());
        let b = est.find_boundary_theta(&x).unwrap();
        assert_eq!(b.status, Status::ClampedLow);
        let e = est.estimate(&x).unwrap();
        assert_eq!(e.status, Status::ClampedLow);
        let floor = posterior_from_theta(0.01, est.pi_plus()).unwrap();
        assert_eq!(e.probability, floor);
        assert_eq!(e.probability_bounds, (floor, 1.0));
    }

    #[test]
    fn tree_flip_interval_contains_exact_flip() {
        let ds = line(
            &[0.0, 0.0, 0.0, 1.0, 1.0, 1.0],
            &[Label::Minus, Label::Minus, Label::Plus, Label::Plus, Label::Plus, Label::Minus],
        );
        let config = TrainConfig {
            tree_ccp_alpha: Some(0.0),
            ..TrainConfig::default()
        };
        let trainer = Trainer::new(ClassifierKind::Tree, config);
        let e = tree_flip_interval(&[0.0], &ds, &trainer, Default::default()).unwrap();
        let (lo, hi) = e.bracket;
        assert!(e.label_only);
        assert!(lo <= hi && hi - lo <= 1e-4);
        assert!(lo <= 2.0 / 3.0 && 2.0 / 3.0 <= hi, "({lo}, {hi})");
        assert!(e.probability_bounds.0 <= e.probability_bounds.1);
    }

    #[test]
    fn tree_constant_label_is_one_sided() {
        let ds = line(&[0.0, 1.0, 2.0, 3.0], &[Label::Minus, Label::Minus, Label::Plus, Label::Plus]);
        let trainer = Trainer::new(
            ClassifierKind::Tree,
            TrainConfig {
                tree_ccp_alpha: Some(0.0),
                ..TrainConfig::default()
            },
        );
        let e = tree_flip_interval(&[3.0], &ds, &trainer, Default::default()).unwrap();
        assert_eq!(e.status, Status::ClampedLow);
        assert_eq!(e.probability_bounds.1, 1.0);
    }
}
