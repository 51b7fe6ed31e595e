//! Weighted CART tree: greedy axis-aligned splits minimizing weighted Gini
//! impurity, followed by weakest-link cost-complexity pruning.
//!
//! Node risk is `R(t) = mass(t)·gini(t) / mass(root)`. A subtree `T_t` is
//! collapsed while `(R(t) − R(T_t)) / (|leaves(T_t)| − 1) ≤ alpha`.

use serde::{Deserialize, Serialize};

use super::{check_dim, Classifier, TrainConfig, TrainedModel};
use crate::dataset::{ClassWeights, Label, LabeledDataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeSplit {
    pub feature: usize,
    /// Points with `x[feature] <= threshold` go left.
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub plus_mass: f64,
    pub minus_mass: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub split: Option<TreeSplit>,
}

impl TreeNode {
    fn leaf(plus_mass: f64, minus_mass: f64) -> Self {
        Self {
            plus_mass,
            minus_mass,
            split: None,
        }
    }

    pub fn mass(&self) -> f64 {
        self.plus_mass + self.minus_mass
    }

    /// `mass × gini = 2 p m / (p + m)`.
    fn weighted_gini(&self) -> f64 {
        gini_mass(self.plus_mass, self.minus_mass)
    }

    pub fn is_leaf(&self) -> bool {
        self.split.is_none()
    }
}

#[inline]
fn gini_mass(p: f64, m: f64) -> f64 {
    let t = p + m;
    if t > 0.0 {
        2.0 * p * m / t
    } else {
        0.0
    }
}

/// Nodes in pre-order; the root is `nodes[0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub dim: usize,
    pub ccp_alpha: f64,
    pub nodes: Vec<TreeNode>,
}

impl TreeModel {
    pub fn leaf_for(&self, x: &[f64]) -> Result<&TreeNode> {
        check_dim(self.dim, x)?;
        let mut node = &self.nodes[0];
        while let Some(s) = &node.split {
            node = if x[s.feature] <= s.threshold {
                &self.nodes[s.left]
            } else {
                &self.nodes[s.right]
            };
        }
        Ok(node)
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    fn root_mass(&self) -> f64 {
        self.nodes[0].mass()
    }

    /// Leaves and total risk of the subtree rooted at every node.
    fn subtree_stats(&self) -> Vec<(usize, f64)> {
        let total = self.root_mass();
        let mut stats = vec![(0usize, 0.0); self.nodes.len()];
        // Children always follow their parent, so a reverse sweep is post-order.
        for i in (0..self.nodes.len()).rev() {
            let node = &self.nodes[i];
            stats[i] = match &node.split {
                None => (1, node.weighted_gini() / total),
                Some(s) => {
                    let (l, r) = (stats[s.left], stats[s.right]);
                    (l.0 + r.0, l.1 + r.1)
                }
            };
        }
        stats
    }

    /// Weakest link among internal nodes reachable from the root:
    /// `(alpha_eff, node)`. Ties go to the lowest node index.
    fn weakest_link(&self) -> Option<(f64, usize)> {
        let total = self.root_mass();
        let stats = self.subtree_stats();
        let mut best: Option<(f64, usize)> = None;
        let mut stack = vec![0];
        while let Some(i) = stack.pop() {
            let node = &self.nodes[i];
            if let Some(s) = &node.split {
                let (leaves, risk) = stats[i];
                let own = node.weighted_gini() / total;
                let g = ((own - risk) / (leaves as f64 - 1.0)).max(0.0);
                if best.is_none_or(|(bg, bi)| g < bg || (g == bg && i < bi)) {
                    best = Some((g, i));
                }
                stack.push(s.right);
                stack.push(s.left);
            }
        }
        best
    }

    /// Collapses weakest links while their effective alpha is `<= alpha`.
    pub fn prune(&mut self, alpha: f64) {
        while let Some((g, i)) = self.weakest_link() {
            if g > alpha {
                break;
            }
            self.nodes[i].split = None;
        }
        self.ccp_alpha = alpha;
        self.compact();
    }

    /// Full weakest-link sequence: effective alphas (nondecreasing) and the
    /// node collapsed at each step.
    fn pruning_path(&self) -> Vec<(f64, usize)> {
        let mut tree = self.clone();
        let mut path = Vec::new();
        let mut running = 0.0f64;
        while let Some((g, i)) = tree.weakest_link() {
            running = running.max(g);
            path.push((running, i));
            tree.nodes[i].split = None;
        }
        path
    }

    /// Drops unreachable nodes and renumbers in pre-order.
    fn compact(&mut self) {
        let mut out = Vec::with_capacity(self.nodes.len());
        fn visit(src: &[TreeNode], i: usize, out: &mut Vec<TreeNode>) -> usize {
            let idx = out.len();
            let mut node = src[i].clone();
            let split = node.split.take();
            out.push(node);
            if let Some(s) = split {
                let left = visit(src, s.left, out);
                let right = visit(src, s.right, out);
                out[idx].split = Some(TreeSplit { left, right, ..s });
            }
            idx
        }
        visit(&self.nodes, 0, &mut out);
        self.nodes = out;
    }
}

impl Classifier for TreeModel {
    /// `(plus_mass − minus_mass) / mass` at the leaf containing `x`.
    fn score(&self, x: &[f64]) -> Result<f64> {
        let leaf = self.leaf_for(x)?;
        Ok((leaf.plus_mass - leaf.minus_mass) / leaf.mass())
    }

    fn predict(&self, x: &[f64]) -> Result<Label> {
        let leaf = self.leaf_for(x)?;
        Ok(if leaf.plus_mass >= leaf.minus_mass {
            Label::Plus
        } else {
            Label::Minus
        })
    }
}

struct Builder<'a> {
    dataset: &'a LabeledDataset,
    cost: Vec<f64>,
    min_leaf: f64,
    nodes: Vec<TreeNode>,
}

impl Builder<'_> {
    /// Unreweighted mass, so the leaf-size limit does not move with θ.
    fn base_mass(&self, idx: &[usize]) -> f64 {
        idx.iter().map(|&i| self.dataset.base_weights()[i]).sum()
    }
}

struct Candidate {
    impurity: f64,
    feature: usize,
    threshold: f64,
}

impl Builder<'_> {
    fn masses(&self, idx: &[usize]) -> (f64, f64) {
        idx.iter().fold((0.0, 0.0), |(p, m), &i| match self.dataset.labels()[i] {
            Label::Plus => (p + self.cost[i], m),
            Label::Minus => (p, m + self.cost[i]),
        })
    }

    fn grow(&mut self, idx: Vec<usize>) -> usize {
        let (p, m) = self.masses(&idx);
        let id = self.nodes.len();
        self.nodes.push(TreeNode::leaf(p, m));
        if p == 0.0 || m == 0.0 || self.base_mass(&idx) < 2.0 * self.min_leaf {
            return id;
        }
        let Some(best) = self.best_split(&idx, p, m) else {
            return id;
        };
        let (left, right): (Vec<usize>, Vec<usize>) = idx
            .into_iter()
            .partition(|&i| self.dataset.point(i)[best.feature] <= best.threshold);
        let l = self.grow(left);
        let r = self.grow(right);
        self.nodes[id].split = Some(TreeSplit {
            feature: best.feature,
            threshold: best.threshold,
            left: l,
            right: r,
        });
        id
    }

    /// Lowest weighted child impurity; ties keep the lowest feature, then the
    /// lowest threshold.
    fn best_split(&self, idx: &[usize], p: f64, m: f64) -> Option<Candidate> {
        let parent = gini_mass(p, m);
        let total = p + m;
        let eps = 1e-12 * total;
        let mut best: Option<Candidate> = None;
        let base_total = self.base_mass(idx);
        let mut order = idx.to_vec();
        for f in 0..self.dataset.dim() {
            let value = |i: usize| self.dataset.point(i)[f];
            order.sort_by(|&a, &b| value(a).total_cmp(&value(b)).then(a.cmp(&b)));
            let (mut lp, mut lm, mut lb) = (0.0, 0.0, 0.0);
            for k in 0..order.len() - 1 {
                let i = order[k];
                lb += self.dataset.base_weights()[i];
                match self.dataset.labels()[i] {
                    Label::Plus => lp += self.cost[i],
                    Label::Minus => lm += self.cost[i],
                }
                let (a, b) = (value(i), value(order[k + 1]));
                if a == b {
                    continue;
                }
                let (rp, rm) = (p - lp, m - lm);
                if lb < self.min_leaf || base_total - lb < self.min_leaf {
                    continue;
                }
                let impurity = gini_mass(lp, lm) + gini_mass(rp.max(0.0), rm.max(0.0));
                if best.as_ref().is_none_or(|c| impurity < c.impurity - eps) {
                    let mut threshold = a + (b - a) / 2.0;
                    if threshold >= b {
                        threshold = a;
                    }
                    best = Some(Candidate {
                        impurity,
                        feature: f,
                        threshold,
                    });
                }
            }
        }
        best.filter(|c| c.impurity < parent - eps)
    }
}

fn grow_full(dataset: &LabeledDataset, weights: &ClassWeights, min_leaf: f64) -> TreeModel {
    let mut b = Builder {
        dataset,
        cost: dataset.effective_weights(weights),
        min_leaf,
        nodes: Vec::new(),
    };
    b.grow((0..dataset.len()).collect());
    TreeModel {
        dim: dataset.dim(),
        ccp_alpha: 0.0,
        nodes: b.nodes,
    }
}

/// Grows the full weighted tree and prunes it at the configured alpha. A
/// missing alpha is resolved by cross-validation first.
pub fn train_tree(
    dataset: &LabeledDataset,
    weights: &ClassWeights,
    config: &TrainConfig,
) -> Result<TrainedModel> {
    let alpha = match config.tree_ccp_alpha {
        Some(a) => a,
        None => cross_validate_alpha(dataset, weights, config)?,
    };
    let mut tree = grow_full(dataset, weights, config.tree_min_leaf_weight);
    tree.prune(alpha);
    Ok(TrainedModel::Tree(tree))
}

/// Picks the pruning strength minimizing weighted misclassification over
/// `tree_cv_folds` folds (point `i` goes to fold `i mod k`). Candidates are
/// the geometric midpoints of the full-data pruning path; ties go to the
/// larger alpha.
pub(crate) fn cross_validate_alpha(
    dataset: &LabeledDataset,
    weights: &ClassWeights,
    config: &TrainConfig,
) -> Result<f64> {
    let k = config.tree_cv_folds;
    if dataset.len() < 2 * k {
        return Ok(0.0);
    }
    let full = grow_full(dataset, weights, config.tree_min_leaf_weight);
    let path: Vec<f64> = full.pruning_path().into_iter().map(|(a, _)| a).collect();
    let mut candidates = vec![0.0];
    for w in path.windows(2) {
        candidates.push((w[0] * w[1]).sqrt());
    }
    if let Some(&last) = path.last() {
        candidates.push(last);
    }
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    let cost = dataset.effective_weights(weights);
    let mut errors = vec![0.0; candidates.len()];
    for fold in 0..k {
        let train: Vec<usize> = (0..dataset.len()).filter(|i| i % k != fold).collect();
        let test: Vec<usize> = (0..dataset.len()).filter(|i| i % k == fold).collect();
        let Ok(sub) = dataset.subset(&train) else {
            continue;
        };
        let mut tree = grow_full(&sub, weights, config.tree_min_leaf_weight);
        let test_error = |tree: &TreeModel| -> Result<f64> {
            test.iter().try_fold(0.0, |acc, &i| {
                let wrong = tree.predict(dataset.point(i))? != dataset.labels()[i];
                Ok(acc + if wrong { cost[i] } else { 0.0 })
            })
        };
        // Walk the fold's own pruning sequence once, tracking the error of
        // each intermediate subtree.
        let mut states = vec![(0.0, test_error(&tree)?)];
        let mut running = 0.0f64;
        while let Some((g, i)) = tree.weakest_link() {
            running = running.max(g);
            tree.nodes[i].split = None;
            states.push((running, test_error(&tree)?));
        }
        for (c, err) in candidates.iter().zip(errors.iter_mut()) {
            let state = states.iter().rev().find(|(a, _)| *a <= *c).unwrap_or(&states[0]);
            *err += state.1;
        }
    }
    let mut best = 0;
    for (i, e) in errors.iter().enumerate() {
        if *e <= errors[best] + 1e-12 * errors[best].abs() {
            best = i;
        }
    }
    candidates
        .get(best)
        .copied()
        .ok_or_else(|| Error::Estimation("empty pruning path".into()))
}
