//! Weighted logistic regression fitted by damped Newton steps.
//!
//! Minimizes `Σ cᵢ log(1 + exp(−yᵢ(w·xᵢ + b)))` with `cᵢ = class weight × base
//! weight`, starting from zero. Steps use backtracking (Armijo) and fall back
//! to the negative gradient whenever the Hessian is not positive definite.

use nalgebra::{DMatrix, DVector};

use super::{dot, FitReport, LinearModel, TrainConfig, TrainedModel};
use crate::dataset::{ClassWeights, LabeledDataset};
use crate::error::Result;

/// `log(1 + exp(-m))` without overflow.
#[inline]
fn softplus_neg(m: f64) -> f64 {
    if m > 0.0 {
        (-m).exp().ln_1p()
    } else {
        -m + m.exp().ln_1p()
    }
}

/// `1 / (1 + exp(m))`.
#[inline]
fn sigmoid_neg(m: f64) -> f64 {
    if m > 0.0 {
        let e = (-m).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + m.exp())
    }
}

struct Objective<'a> {
    dataset: &'a LabeledDataset,
    cost: Vec<f64>,
}

impl Objective<'_> {
    fn margins(&self, beta: &[f64]) -> impl Iterator<Item = f64> + '_ {
        let d = self.dataset.dim();
        let (w, b) = (beta[..d].to_vec(), beta[d]);
        self.dataset
            .points()
            .zip(self.dataset.labels())
            .map(move |(p, l)| l.sign() * (dot(&w, p) + b))
    }

    fn loss(&self, beta: &[f64]) -> f64 {
        self.margins(beta)
            .zip(&self.cost)
            .map(|(m, c)| c * softplus_neg(m))
            .sum()
    }

    /// Gradient and Hessian in the augmented coordinates `(w, b)`.
    fn derivatives(&self, beta: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let d = self.dataset.dim();
        let k = d + 1;
        let mut g = DVector::zeros(k);
        let mut h = DMatrix::zeros(k, k);
        let mut xt = vec![1.0; k];
        for ((m, c), (p, l)) in self
            .margins(beta)
            .zip(&self.cost)
            .zip(self.dataset.points().zip(self.dataset.labels()))
        {
            xt[..d].copy_from_slice(p);
            let s = sigmoid_neg(m);
            let coef = -c * l.sign() * s;
            let curv = c * s * (1.0 - s);
            for a in 0..k {
                g[a] += coef * xt[a];
                for b in 0..=a {
                    h[(a, b)] += curv * xt[a] * xt[b];
                }
            }
        }
        for a in 0..k {
            for b in 0..a {
                h[(b, a)] = h[(a, b)];
            }
        }
        (g, h)
    }
}

/// Fits the weighted logistic model. On perfectly separable data the
/// likelihood has no finite optimum: the iterate after the budget is returned
/// with `fit.separable = true`.
pub fn train_logreg(
    dataset: &LabeledDataset,
    weights: &ClassWeights,
    config: &TrainConfig,
) -> Result<TrainedModel> {
    let d = dataset.dim();
    let obj = Objective {
        dataset,
        cost: dataset.effective_weights(weights),
    };
    let mut beta = vec![0.0; d + 1];
    let mut loss = obj.loss(&beta);
    let mut grad_norm = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < config.logreg_max_iter {
        let (g, h) = obj.derivatives(&beta);
        grad_norm = g.amax();
        // A separating iterate keeps shrinking the gradient without an optimum.
        if grad_norm <= config.logreg_tolerance && !obj.margins(&beta).all(|m| m > 0.0) {
            converged = true;
            break;
        }
        iterations += 1;
        let mut dir = match h.cholesky() {
            Some(ch) => -ch.solve(&g),
            None => -g.clone(),
        };
        let mut slope = dir.dot(&g);
        if !(slope < 0.0) || dir.iter().any(|v| !v.is_finite()) {
            dir = -g.clone();
            slope = dir.dot(&g);
        }
        let mut step = 1.0;
        let mut accepted = false;
        while step > 1e-16 {
            let trial: Vec<f64> = beta.iter().zip(dir.iter()).map(|(b, s)| b + step * s).collect();
            let trial_loss = obj.loss(&trial);
            if trial_loss <= loss + 1e-4 * step * slope {
                beta = trial;
                loss = trial_loss;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // Rounding floor: no representable decrease along the direction.
            let (g, _) = obj.derivatives(&beta);
            grad_norm = g.amax();
            break;
        }
    }
    let separable = obj.margins(&beta).all(|m| m > 0.0);
    if !converged && !separable {
        let (g, _) = obj.derivatives(&beta);
        grad_norm = g.amax();
        converged = grad_norm <= config.logreg_tolerance;
    }

    let intercept = beta[d];
    beta.truncate(d);
    Ok(TrainedModel::Logreg(LinearModel {
        weights: beta,
        intercept,
        fit: FitReport {
            iterations,
            converged,
            objective: Some(loss),
            duality_gap: None,
            gradient_norm: Some(grad_norm),
            separable,
        },
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{derive_class_weights, Label};

    fn boundary(m: &TrainedModel) -> f64 {
        let l = m.linear().unwrap();
        -l.intercept / l.weights[0]
    }

    fn overlapping_1d() -> LabeledDataset {
        // Mirror-symmetric classes with overlap so the optimum is finite.
        let xs = [-3.0, -2.0, -1.0, 0.5, 1.5];
        let mut points = Vec::new();
        let mut labels = Vec::new();
        for &x in &xs {
            points.push(vec![x]);
            labels.push(Label::Minus);
            points.push(vec![-x]);
            labels.push(Label::Plus);
        }
        LabeledDataset::new(points, labels).unwrap()
    }

    #[test]
    fn separable_pair_is_flagged_and_symmetric() {
        let ds = LabeledDataset::new(vec![vec![-1.0], vec![1.0]], vec![Label::Minus, Label::Plus]).unwrap();
        let m = train_logreg(&ds, &ds.original_weights(), &TrainConfig::default()).unwrap();
        let l = m.linear().unwrap();
        assert!(l.fit.separable && !l.fit.converged);
        assert!(l.weights[0].is_finite() && l.weights[0] > 0.0);
        assert_eq!(boundary(&m), 0.0);
    }

    #[test]
    fn gradient_is_below_tolerance_at_optimum() {
        let ds = overlapping_1d();
        let m = train_logreg(&ds, &ds.original_weights(), &TrainConfig::default()).unwrap();
        let l = m.linear().unwrap();
        assert!(l.fit.converged);
        assert!(l.fit.gradient_norm.unwrap() <= 1e-8);
        assert!(boundary(&m).abs() < 1e-9);
    }

    #[test]
    fn boundary_moves_toward_negatives_as_theta_grows() {
        let ds = overlapping_1d();
        let config = TrainConfig::default();
        let at = |theta: f64| {
            let w = derive_class_weights(theta, 5.0, 5.0).unwrap();
            boundary(&train_logreg(&ds, &w, &config).unwrap())
        };
        // Finite difference of the boundary coordinate in theta.
        let h = 1e-3;
        for theta in [0.2, 0.5, 0.75] {
            let slope = (at(theta + h) - at(theta - h)) / (2.0 * h);
            assert!(slope < 0.0, "theta {theta}: slope {slope}");
        }
        let w3 = derive_class_weights(0.75, 5.0, 5.0).unwrap();
        assert!((w3.w_plus / w3.w_minus - 3.0).abs() < 1e-12);
        assert!(at(0.75) < 0.0);
    }

    #[test]
    fn training_is_deterministic() {
        let ds = overlapping_1d();
        let w = derive_class_weights(0.3, 5.0, 5.0).unwrap();
        let a = train_logreg(&ds, &w, &TrainConfig::default()).unwrap();
        let b = train_logreg(&ds, &w, &TrainConfig::default()).unwrap();
        assert_eq!(a, b);
    }
}
