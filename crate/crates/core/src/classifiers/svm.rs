//! Linear soft-margin SVM with per-point penalties.
//!
//! Primal: `½‖w‖² + Σ Cᵢ max(0, 1 − yᵢ(w·xᵢ + b))` with `Cᵢ = C·w±·baseᵢ`.
//! The dual `max Σαᵢ − ½‖Σ αᵢyᵢxᵢ‖²` subject to `0 ≤ αᵢ ≤ Cᵢ`, `Σ αᵢyᵢ = 0`
//! is solved by two-coordinate ascent (SMO) with second-order working-set
//! selection. The kernel is linear, so `w` is kept explicitly and gradients
//! are recomputed from it each step.

use super::{check_dim, dot, FitReport, LinearModel, TrainConfig, TrainedModel};
use crate::dataset::{ClassWeights, LabeledDataset};
use crate::error::{Error, Result};

const TAU: f64 = 1e-12;

/// Slack on the unit margin when deciding support-vector membership.
pub const SUPPORT_VECTOR_SLACK: f64 = 1e-8;

struct Problem<'a> {
    dim: usize,
    x: &'a [f64],
    y: Vec<f64>,
    bound: Vec<f64>,
    sq_norm: Vec<f64>,
}

impl Problem<'_> {
    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    fn primal(&self, w: &[f64], b: f64) -> f64 {
        let hinge: f64 = (0..self.y.len())
            .map(|i| self.bound[i] * (1.0 - self.y[i] * (dot(w, self.row(i)) + b)).max(0.0))
            .sum();
        0.5 * dot(w, w) + hinge
    }
}

/// Trains the weighted SVM. Iterates until both the duality gap and KKT
/// tolerances are met; at the iteration budget the gap alone suffices. Fails
/// with [`Error::NonConvergence`] (carrying the best iterate) if the gap is
/// still open then.
pub fn train_svm(
    dataset: &LabeledDataset,
    weights: &ClassWeights,
    config: &TrainConfig,
) -> Result<TrainedModel> {
    let n = dataset.len();
    let dim = dataset.dim();
    let cost = dataset.effective_weights(weights);
    let prob = Problem {
        dim,
        x: dataset.flat_points(),
        y: dataset.labels().iter().map(|l| l.sign()).collect(),
        bound: cost.iter().map(|c| config.svm_c * c).collect(),
        sq_norm: dataset.points().map(|p| dot(p, p)).collect(),
    };

    let mut alpha = vec![0.0; n];
    let mut w = vec![0.0; dim];
    // Gradient of ½αᵀQα − Σα: Gᵢ = yᵢ w·xᵢ − 1.
    let mut grad = vec![-1.0; n];
    let mut iterations = 0;

    let (bias, gap, primal) = loop {
        let pair = match select_working_set(&prob, &alpha, &grad, config.svm_kkt_tolerance) {
            Some(pair) => pair,
            None => {
                let bias = compute_bias(&prob, &alpha, &grad);
                let primal = prob.primal(&w, bias);
                let dual = alpha.iter().sum::<f64>() - 0.5 * dot(&w, &w);
                let gap = (primal - dual).max(0.0);
                let scale = primal.abs().max(dual.abs()).max(1e-300);
                if gap <= config.svm_gap_tolerance * scale {
                    break (bias, gap, primal);
                }
                // The KKT test is scale-dependent; keep stepping on any
                // violating pair until the gap closes.
                match select_working_set(&prob, &alpha, &grad, 0.0) {
                    Some(pair) => pair,
                    // No pair can improve the dual: optimal up to rounding.
                    None => break (bias, gap, primal),
                }
            }
        };
        if iterations >= config.svm_max_iter {
            let bias = compute_bias(&prob, &alpha, &grad);
            let primal = prob.primal(&w, bias);
            let dual = alpha.iter().sum::<f64>() - 0.5 * dot(&w, &w);
            let gap = (primal - dual).max(0.0);
            // Near-degenerate problems (e.g. just before the optimum collapses
            // to w = 0) can stall on the KKT test with the gap already closed.
            if gap <= config.svm_gap_tolerance * primal.abs().max(dual.abs()).max(1e-300) {
                break (bias, gap, primal);
            }
            return Err(Error::NonConvergence {
                iterations,
                gap,
                best: Box::new(TrainedModel::Svm(linear(w, bias, iterations, false, primal, gap))),
            });
        }
        iterations += 1;
        update_pair(&prob, &mut alpha, &mut w, &mut grad, pair);
    };

    Ok(TrainedModel::Svm(linear(w, bias, iterations, true, primal, gap)))
}

fn linear(w: Vec<f64>, b: f64, iterations: usize, converged: bool, primal: f64, gap: f64) -> LinearModel {
    LinearModel {
        weights: w,
        intercept: b,
        fit: FitReport {
            iterations,
            converged,
            objective: Some(primal),
            duality_gap: Some(gap),
            gradient_norm: None,
            separable: false,
        },
    }
}

#[inline]
fn at_upper(alpha: f64, bound: f64) -> bool {
    alpha >= bound
}

#[inline]
fn at_lower(alpha: f64) -> bool {
    alpha <= 0.0
}

/// Maximal violating pair with second-order choice of the partner. Returns
/// `None` once the KKT violation `m(α) − M(α)` is at most `eps`.
fn select_working_set(
    prob: &Problem<'_>,
    alpha: &[f64],
    grad: &[f64],
    eps: f64,
) -> Option<(usize, usize)> {
    let n = alpha.len();
    let mut gmax = f64::NEG_INFINITY;
    let mut gmax_idx = None;
    for t in 0..n {
        let v = -prob.y[t] * grad[t];
        let movable = if prob.y[t] > 0.0 {
            !at_upper(alpha[t], prob.bound[t])
        } else {
            !at_lower(alpha[t])
        };
        if movable && v >= gmax {
            gmax = v;
            gmax_idx = Some(t);
        }
    }
    let i = gmax_idx?;
    let xi = prob.row(i);

    let mut gmax2 = f64::NEG_INFINITY;
    let mut best = None;
    let mut best_obj = f64::INFINITY;
    for j in 0..n {
        let movable = if prob.y[j] > 0.0 {
            !at_lower(alpha[j])
        } else {
            !at_upper(alpha[j], prob.bound[j])
        };
        if !movable {
            continue;
        }
        let v = prob.y[j] * grad[j];
        gmax2 = gmax2.max(v);
        let diff = gmax + v;
        if diff > 0.0 {
            let kij = dot(xi, prob.row(j));
            let mut quad = prob.sq_norm[i] + prob.sq_norm[j] - 2.0 * kij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let obj = -(diff * diff) / quad;
            if obj <= best_obj {
                best_obj = obj;
                best = Some(j);
            }
        }
    }
    if gmax + gmax2 <= eps {
        return None;
    }
    best.map(|j| (i, j))
}

fn update_pair(
    prob: &Problem<'_>,
    alpha: &mut [f64],
    w: &mut [f64],
    grad: &mut [f64],
    (i, j): (usize, usize),
) {
    let (ci, cj) = (prob.bound[i], prob.bound[j]);
    let (yi, yj) = (prob.y[i], prob.y[j]);
    let (old_i, old_j) = (alpha[i], alpha[j]);
    let kij = dot(prob.row(i), prob.row(j));
    let qij = yi * yj * kij;
    let (mut ai, mut aj) = (old_i, old_j);

    if yi != yj {
        let mut quad = prob.sq_norm[i] + prob.sq_norm[j] + 2.0 * qij;
        if quad <= 0.0 {
            quad = TAU;
        }
        let delta = (-grad[i] - grad[j]) / quad;
        let diff = ai - aj;
        ai += delta;
        aj += delta;
        if diff > 0.0 {
            if aj < 0.0 {
                aj = 0.0;
                ai = diff;
            }
        } else if ai < 0.0 {
            ai = 0.0;
            aj = -diff;
        }
        if diff > ci - cj {
            if ai > ci {
                ai = ci;
                aj = ci - diff;
            }
        } else if aj > cj {
            aj = cj;
            ai = cj + diff;
        }
    } else {
        let mut quad = prob.sq_norm[i] + prob.sq_norm[j] - 2.0 * qij;
        if quad <= 0.0 {
            quad = TAU;
        }
        let delta = (grad[i] - grad[j]) / quad;
        let sum = ai + aj;
        ai -= delta;
        aj += delta;
        if sum > ci {
            if ai > ci {
                ai = ci;
                aj = sum - ci;
            }
        } else if aj < 0.0 {
            aj = 0.0;
            ai = sum;
        }
        if sum > cj {
            if aj > cj {
                aj = cj;
                ai = sum - cj;
            }
        } else if ai < 0.0 {
            ai = 0.0;
            aj = sum;
        }
    }
    alpha[i] = ai;
    alpha[j] = aj;

    let (di, dj) = ((ai - old_i) * yi, (aj - old_j) * yj);
    for ((wk, xi), xj) in w.iter_mut().zip(prob.row(i)).zip(prob.row(j)) {
        *wk += di * xi + dj * xj;
    }
    for (t, g) in grad.iter_mut().enumerate() {
        *g = prob.y[t] * dot(w, prob.row(t)) - 1.0;
    }
}

/// Intercept from the KKT conditions: average over free vectors, or the
/// midpoint of the feasible interval when every α sits at a bound.
fn compute_bias(prob: &Problem<'_>, alpha: &[f64], grad: &[f64]) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut free = 0usize;
    let mut sum_free = 0.0;
    for t in 0..alpha.len() {
        let yg = prob.y[t] * grad[t];
        if at_upper(alpha[t], prob.bound[t]) {
            if prob.y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if at_lower(alpha[t]) {
            if prob.y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    let rho = if free > 0 {
        sum_free / free as f64
    } else {
        0.5 * (ub + lb)
    };
    -rho
}

/// Keeps the points with `yᵢ(w·xᵢ + b) ≤ 1 + 1e-8`, i.e. the margin and
/// margin-violating points that determine the solution.
pub fn filter_support_vectors(model: &TrainedModel, dataset: &LabeledDataset) -> Result<LabeledDataset> {
    let TrainedModel::Svm(m) = model else {
        return Err(Error::domain("support-vector filtering needs an svm model"));
    };
    check_dim(dataset.dim(), &m.weights)?;
    let keep: Vec<usize> = dataset
        .points()
        .zip(dataset.labels())
        .enumerate()
        .filter(|(_, (p, l))| l.sign() * m.raw_score(p) <= 1.0 + SUPPORT_VECTOR_SLACK)
        .map(|(i, _)| i)
        .collect();
    dataset.subset(&keep).map_err(|_| {
        Error::Estimation("support-vector filtering leaves a class empty".to_string())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{derive_class_weights, Label};

    fn pair() -> LabeledDataset {
        LabeledDataset::new(vec![vec![-1.0], vec![1.0]], vec![Label::Minus, Label::Plus]).unwrap()
    }

    fn boundary(m: &TrainedModel) -> f64 {
        let l = m.linear().unwrap();
        -l.intercept / l.weights[0]
    }

    /// Brute-force minimizer of the 2-point weighted primal over a (w, b) grid,
    /// refined twice around the best cell.
    fn brute_force_boundary(c_plus: f64, c_minus: f64) -> f64 {
        let primal = |w: f64, b: f64| {
            0.5 * w * w + c_plus * (1.0 - (w + b)).max(0.0) + c_minus * (1.0 - (w - b)).max(0.0)
        };
        let (mut wc, mut bc, mut span) = (1.0, 0.0, 2.0);
        for _ in 0..4 {
            let mut best = (f64::INFINITY, wc, bc);
            for a in 0..=400 {
                for k in 0..=400 {
                    let w = wc - span + 2.0 * span * a as f64 / 400.0;
                    let b = bc - span + 2.0 * span * k as f64 / 400.0;
                    let v = primal(w, b);
                    if v < best.0 {
                        best = (v, w, b);
                    }
                }
            }
            (wc, bc) = (best.1, best.2);
            span /= 20.0;
        }
        -bc / wc
    }

    #[test]
    fn symmetric_pair_splits_at_zero() {
        let ds = pair();
        let m = train_svm(&ds, &ds.original_weights(), &TrainConfig::default()).unwrap();
        assert!(boundary(&m).abs() < 1e-12);
        let l = m.linear().unwrap();
        assert!((l.weights[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn heavier_positive_class_shifts_boundary_toward_negatives() {
        let ds = pair();
        for theta in [0.75, 0.8, 0.9] {
            let w = derive_class_weights(theta, 1.0, 1.0).unwrap();
            let m = train_svm(&ds, &w, &TrainConfig::default()).unwrap();
            let oracle = brute_force_boundary(w.w_plus, w.w_minus);
            assert!((boundary(&m) - oracle).abs() < 1e-3, "theta {theta}: {} vs {oracle}", boundary(&m));
        }
        // Once the negative bound binds (C·w- < ½) the boundary moves left.
        let w = derive_class_weights(0.8, 1.0, 1.0).unwrap();
        let m = train_svm(&ds, &w, &TrainConfig::default()).unwrap();
        assert!((boundary(&m) + 0.25).abs() < 1e-9);
    }

    #[test]
    fn far_interior_point_is_filtered() {
        let ds = LabeledDataset::new(
            vec![vec![-1.0], vec![1.0], vec![5.0]],
            vec![Label::Minus, Label::Plus, Label::Plus],
        )
        .unwrap();
        let m = train_svm(&ds, &ds.original_weights(), &TrainConfig::default()).unwrap();
        assert!((m.score(&[5.0]).unwrap() - 5.0).abs() < 1e-9);
        let kept = filter_support_vectors(&m, &ds).unwrap();
        assert_eq!(kept.len(), 2);
        assert_eq!(kept.point(1), &[1.0]);
    }

    #[test]
    fn filtering_keeps_both_points_of_a_pair() {
        let ds = LabeledDataset::new(vec![vec![-10.0], vec![10.0]], vec![Label::Minus, Label::Plus]).unwrap();
        let m = train_svm(&ds, &ds.original_weights(), &TrainConfig::default()).unwrap();
        assert_eq!(filter_support_vectors(&m, &ds).unwrap().len(), 2);
    }

    #[test]
    fn exhausted_budget_reports_best_iterate() {
        let ds = crate::dataset::gen_gaussian(&crate::dataset::GaussianSpec {
            n_per_class: 50,
            ..Default::default()
        })
        .unwrap();
        let config = TrainConfig {
            svm_max_iter: 3,
            ..TrainConfig::default()
        };
        match train_svm(&ds, &ds.original_weights(), &config) {
            Err(Error::NonConvergence { iterations, best, .. }) => {
                assert_eq!(iterations, 3);
                assert!(best.linear().unwrap().weights.iter().all(|w| w.is_finite()));
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    use crate::classifiers::Classifier;
}
