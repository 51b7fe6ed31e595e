#![allow(dead_code)]

use isoposterior::dataset::gen_gaussian;
use isoposterior::{GaussianSpec, Label, LabeledDataset};

/// The default toy data: two unit-covariance Gaussians at (2,0) and (0,0),
/// 1000 points each, seed 7.
pub fn toy() -> LabeledDataset {
    gen_gaussian(&GaussianSpec::default()).unwrap()
}

/// True posterior for the default toy spec with prior `pi`: the log-odds of
/// two unit-covariance Gaussians at (2,0) and (0,0) are `2·x1 − 2`.
pub fn toy_truth(x: &[f64], pi: f64) -> f64 {
    let z = 2.0 * x[0] - 2.0 + (pi / (1.0 - pi)).ln();
    1.0 / (1.0 + (-z).exp())
}

pub fn line(xs: &[f64], labels: &[Label]) -> LabeledDataset {
    LabeledDataset::new(xs.iter().map(|&x| vec![x]).collect(), labels.to_vec()).unwrap()
}

/// Twelve points on which two logistic boundaries, one at θ ≈ 1/3 and one
/// at θ = 1/2, cross. The returned query point sits at the crossing, so the
/// boundary passes through it for two distinct θ.
pub fn crossing_surfaces() -> (LabeledDataset, [f64; 2]) {
    use Label::{Minus as M, Plus as P};
    let pts = [
        ([1.0, 0.0], P),
        ([1.0, -2.0], P),
        ([1.5, 0.0], P),
        ([1.5, 1.5], P),
        ([1.0, -1.5], P),
        ([1.5, 1.0], P),
        ([0.0, -0.5], M),
        ([1.0, 0.5], M),
        ([-1.0, -0.5], M),
        ([0.5, 1.5], M),
        ([1.5, 1.0], M),
        ([0.0, 1.0], M),
    ];
    let ds = LabeledDataset::new(
        pts.iter().map(|(p, _)| p.to_vec()).collect(),
        pts.iter().map(|(_, l)| *l).collect(),
    )
    .unwrap();
    (ds, [0.164, -1.897])
}

/// Two stacked 1-D sites: x=0 holds two "−" and one "+", x=1 the mirror.
/// The left leaf flips to "+" once `w⁺·1 ≥ w⁻·2`.
pub fn stacked_sites() -> LabeledDataset {
    use Label::{Minus as M, Plus as P};
    line(&[0.0, 0.0, 0.0, 1.0, 1.0, 1.0], &[M, M, P, P, P, M])
}
