//! Labeled datasets, class reweighting under a fixed total weight, synthetic
//! Gaussian data and the CSV file format.
//!
//! # CSV format
//!
//! ```text
//! x1,x2,label,weight
//! 0.25,-1.5,+1,1
//! 1.75,0.5,-1,2
//! ```
//!
//! The header names the feature columns `x1..xd` followed by `label` and an
//! optional `weight` column. Label tokens are exactly `+1` and `-1`. LF and
//! CRLF line endings are both accepted. Floats are written with the shortest
//! representation that round-trips, so save→load is bit-exact.
//!
//! # Gaussian generator
//!
//! [`gen_gaussian`] seeds a `ChaCha8Rng` with `seed_from_u64(spec.seed)`,
//! factors the shared covariance as `L Lᵀ` (Cholesky) and emits all `+1`
//! points first, then all `-1` points. Each point is `mu + L z` where `z` holds
//! `d` successive standard-normal draws (`rand_distr::StandardNormal`).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary class label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "+1")]
    Plus,
    #[serde(rename = "-1")]
    Minus,
}

impl Label {
    /// `+1.0` or `-1.0`.
    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Label::Plus => 1.0,
            Label::Minus => -1.0,
        }
    }

    /// Sign of a score, with ties going to `Plus`.
    #[inline]
    pub fn from_score(score: f64) -> Self {
        if score >= 0.0 {
            Label::Plus
        } else {
            Label::Minus
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            Label::Plus => "+1",
            Label::Minus => "-1",
        }
    }

    pub fn parse_token(token: &str) -> Option<Self> {
        match token {
            "+1" => Some(Label::Plus),
            "-1" => Some(Label::Minus),
            _ => None,
        }
    }
}

/// Points in `R^d` with binary labels and positive per-point base weights.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    dim: usize,
    points: Vec<f64>,
    labels: Vec<Label>,
    base_weights: Vec<f64>,
}

impl LabeledDataset {
    /// Builds a dataset with unit base weights.
    pub fn new(points: Vec<Vec<f64>>, labels: Vec<Label>) -> Result<Self> {
        let n = points.len();
        Self::with_weights(points, labels, vec![1.0; n])
    }

    pub fn with_weights(
        points: Vec<Vec<f64>>,
        labels: Vec<Label>,
        base_weights: Vec<f64>,
    ) -> Result<Self> {
        let dim = points.first().map(Vec::len).unwrap_or(0);
        if let Some(bad) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::Dimension {
                expected: dim,
                got: bad.len(),
            });
        }
        let flat = points.into_iter().flatten().collect();
        Self::from_flat(dim, flat, labels, base_weights)
    }

    /// Builds a dataset from row-major point storage.
    pub fn from_flat(
        dim: usize,
        points: Vec<f64>,
        labels: Vec<Label>,
        base_weights: Vec<f64>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("points must have dimension >= 1"));
        }
        if points.len() != dim * labels.len() || labels.len() != base_weights.len() {
            return Err(Error::domain(
                "points, labels and base_weights must have equal length",
            ));
        }
        if labels.len() < 2 {
            return Err(Error::domain("dataset needs at least 2 points"));
        }
        if !labels.contains(&Label::Plus) || !labels.contains(&Label::Minus) {
            return Err(Error::domain("both labels must be present"));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("points must be finite"));
        }
        if base_weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::domain("base weights must be positive and finite"));
        }
        Ok(Self {
            dim,
            points,
            labels,
            base_weights,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }

    pub fn flat_points(&self) -> &[f64] {
        &self.points
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn base_weights(&self) -> &[f64] {
        &self.base_weights
    }

    /// Number of points per class, `(n_plus, n_minus)`.
    pub fn class_counts(&self) -> (usize, usize) {
        let plus = self.labels.iter().filter(|&&l| l == Label::Plus).count();
        (plus, self.len() - plus)
    }

    /// Total base weight per class. Equals the class counts for unit weights.
    pub fn class_mass(&self) -> (f64, f64) {
        self.labels
            .iter()
            .zip(&self.base_weights)
            .fold((0.0, 0.0), |(p, m), (l, w)| match l {
                Label::Plus => (p + w, m),
                Label::Minus => (p, m + w),
            })
    }

    /// Positive share of the base weight mass (the observed class proportion).
    pub fn positive_proportion(&self) -> f64 {
        let (p, m) = self.class_mass();
        p / (p + m)
    }

    /// Class weights that reproduce the dataset as given (`w+ = w- = 1`).
    pub fn original_weights(&self) -> ClassWeights {
        ClassWeights::identity(self.positive_proportion())
    }

    /// Class weights for an effective positive proportion `theta`.
    pub fn weights_for(&self, theta: f64) -> Result<ClassWeights> {
        let (p, m) = self.class_mass();
        derive_class_weights(theta, p, m)
    }

    /// Per-point cost `class weight × base weight`.
    pub fn effective_weights(&self, weights: &ClassWeights) -> Vec<f64> {
        self.labels
            .iter()
            .zip(&self.base_weights)
            .map(|(l, b)| weights.for_label(*l) * b)
            .collect()
    }

    /// Keeps the points at `indices`, in order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut points = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            points.extend_from_slice(self.point(i));
        }
        Self::from_flat(
            self.dim,
            points,
            indices.iter().map(|&i| self.labels[i]).collect(),
            indices.iter().map(|&i| self.base_weights[i]).collect(),
        )
    }

    /// Per-feature `(min, max)`.
    pub fn bounding_box(&self) -> Vec<(f64, f64)> {
        let mut bounds = vec![(f64::INFINITY, f64::NEG_INFINITY); self.dim];
        for p in self.points() {
            for (b, &v) in bounds.iter_mut().zip(p) {
                b.0 = b.0.min(v);
                b.1 = b.1.max(v);
            }
        }
        bounds
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("query point must be finite"));
        }
        Ok(())
    }
}

/// Per-class weight multipliers derived from an effective positive proportion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub w_plus: f64,
    pub w_minus: f64,
    pub theta: f64,
}

impl ClassWeights {
    fn identity(theta: f64) -> Self {
        Self {
            w_plus: 1.0,
            w_minus: 1.0,
            theta,
        }
    }

    #[inline]
    pub fn for_label(&self, label: Label) -> f64 {
        match label {
            Label::Plus => self.w_plus,
            Label::Minus => self.w_minus,
        }
    }
}

/// Splits the total mass `n_plus + n_minus` so that a share `theta` sits on the
/// positive class while the total stays unchanged.
///
/// `w_plus = theta (n+ + n-) / n+`, `w_minus = (1 - theta)(n+ + n-) / n-`.
pub fn derive_class_weights(theta: f64, n_plus: f64, n_minus: f64) -> Result<ClassWeights> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::domain(format!("theta must lie in (0, 1), got {theta}")));
    }
    if !(n_plus > 0.0 && n_minus > 0.0 && n_plus.is_finite() && n_minus.is_finite()) {
        return Err(Error::domain("class masses must be positive"));
    }
    let total = n_plus + n_minus;
    // An exact match with the observed proportion returns the identity pair.
    if theta == n_plus / total {
        return Ok(ClassWeights::identity(theta));
    }
    Ok(ClassWeights {
        w_plus: theta * total / n_plus,
        w_minus: (1.0 - theta) * total / n_minus,
        theta,
    })
}

/// Two Gaussian classes sharing one covariance matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianSpec {
    #[serde(default = "default_mu_plus")]
    pub mu_plus: Vec<f64>,
    #[serde(default = "default_mu_minus")]
    pub mu_minus: Vec<f64>,
    #[serde(default = "default_cov")]
    pub cov: Vec<Vec<f64>>,
    #[serde(default = "default_n_per_class")]
    pub n_per_class: usize,
    #[serde(default = "default_prior_plus")]
    pub prior_plus: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_mu_plus() -> Vec<f64> {
    vec![2.0, 0.0]
}
fn default_mu_minus() -> Vec<f64> {
    vec![0.0, 0.0]
}
fn default_cov() -> Vec<Vec<f64>> {
    vec![vec![1.0, 0.0], vec![0.0, 1.0]]
}
fn default_n_per_class() -> usize {
    1000
}
fn default_prior_plus() -> f64 {
    0.5
}
fn default_seed() -> u64 {
    7
}

impl Default for GaussianSpec {
    /// `mu+ = (2, 0)`, `mu- = (0, 0)`, identity covariance, 1000 points per
    /// class. The Bayes boundary is the line `x1 = 1`.
    fn default() -> Self {
        Self {
            mu_plus: default_mu_plus(),
            mu_minus: default_mu_minus(),
            cov: default_cov(),
            n_per_class: default_n_per_class(),
            prior_plus: default_prior_plus(),
            seed: default_seed(),
        }
    }
}

impl GaussianSpec {
    pub fn dim(&self) -> usize {
        self.mu_plus.len()
    }

    /// Validates the spec and returns the lower Cholesky factor of `cov`.
    pub fn cholesky(&self) -> Result<DMatrix<f64>> {
        let d = self.dim();
        if d == 0 {
            return Err(Error::domain("mu_plus must be non-empty"));
        }
        if self.mu_minus.len() != d {
            return Err(Error::domain(format!(
                "mu_minus has dimension {}, expected {d}",
                self.mu_minus.len()
            )));
        }
        if self.mu_plus.iter().chain(&self.mu_minus).any(|v| !v.is_finite()) {
            return Err(Error::domain("mu_plus/mu_minus must be finite"));
        }
        if self.cov.len() != d || self.cov.iter().any(|row| row.len() != d) {
            return Err(Error::domain(format!("cov must be a {d}x{d} matrix")));
        }
        if self.n_per_class == 0 {
            return Err(Error::domain("n_per_class must be >= 1"));
        }
        if !(self.prior_plus > 0.0 && self.prior_plus < 1.0) {
            return Err(Error::domain("prior_plus must lie in (0, 1)"));
        }
        let cov = self.cov_matrix();
        for i in 0..d {
            for j in 0..i {
                let (a, b) = (cov[(i, j)], cov[(j, i)]);
                if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::domain("cov must be symmetric"));
                }
            }
        }
        if cov.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("cov must be finite"));
        }
        cov.cholesky()
            .map(|c| c.l())
            .ok_or_else(|| Error::domain("cov must be positive definite"))
    }

    pub fn cov_matrix(&self) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |i, j| self.cov[i][j])
    }
}

/// Draws `n_per_class` points from each class Gaussian. Pure in `spec`.
pub fn gen_gaussian(spec: &GaussianSpec) -> Result<LabeledDataset> {
    let chol = spec.cholesky()?;
    let d = spec.dim();
    let n = spec.n_per_class;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut points = Vec::with_capacity(2 * n * d);
    let mut labels = Vec::with_capacity(2 * n);
    for (label, mu) in [(Label::Plus, &spec.mu_plus), (Label::Minus, &spec.mu_minus)] {
        let mu = DVector::from_column_slice(mu);
        for _ in 0..n {
            let z = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
            let x = &mu + &chol * z;
            points.extend(x.iter());
            labels.push(label);
        }
    }
    LabeledDataset::from_flat(d, points, labels, vec![1.0; 2 * n])
}

pub fn read_dataset<R: Read>(reader: R) -> Result<LabeledDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let parse_err = |line: u64, message: String| Error::Parse { line, message };

    let header = rdr
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    if header.is_empty() || header.iter().all(str::is_empty) {
        return Err(Error::NoDataRows);
    }
    let cols: Vec<&str> = header.iter().collect();
    let has_weight = cols.last() == Some(&"weight");
    let label_col = if has_weight { cols.len() - 2 } else { cols.len() - 1 };
    if cols.len() < 2 || cols[label_col] != "label" {
        return Err(parse_err(
            1,
            "header must be x1,...,xd,label[,weight]".to_string(),
        ));
    }
    let dim = label_col;
    for (j, name) in cols[..dim].iter().enumerate() {
        if *name != format!("x{}", j + 1) {
            return Err(parse_err(
                1,
                format!("expected column x{} but found {name:?}", j + 1),
            ));
        }
    }

    let mut points = Vec::new();
    let mut labels = Vec::new();
    let mut weights = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != cols.len() {
            return Err(parse_err(
                line,
                format!("expected {} columns, found {}", cols.len(), record.len()),
            ));
        }
        for j in 0..dim {
            let v: f64 = record[j]
                .trim()
                .parse()
                .map_err(|_| parse_err(line, format!("x{}: bad number {:?}", j + 1, &record[j])))?;
            points.push(v);
        }
        let token = &record[label_col];
        let label = Label::parse_token(token)
            .ok_or_else(|| parse_err(line, format!("unknown label token {token:?}")))?;
        labels.push(label);
        let w = if has_weight {
            record[dim + 1]
                .trim()
                .parse()
                .map_err(|_| parse_err(line, format!("bad weight {:?}", &record[dim + 1])))?
        } else {
            1.0
        };
        weights.push(w);
    }
    if labels.is_empty() {
        return Err(Error::NoDataRows);
    }
    LabeledDataset::from_flat(dim, points, labels, weights)
}

pub fn write_dataset<W: Write>(dataset: &LabeledDataset, writer: W) -> Result<()> {
    let with_weight = dataset.base_weights().iter().any(|&w| w != 1.0);
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    let csv_err = |e: csv::Error| Error::domain(format!("csv write failed: {e}"));

    let mut header: Vec<String> = (1..=dataset.dim()).map(|j| format!("x{j}")).collect();
    header.push("label".into());
    if with_weight {
        header.push("weight".into());
    }
    wtr.write_record(&header).map_err(csv_err)?;
    let mut row = Vec::with_capacity(header.len());
    for (i, p) in dataset.points().enumerate() {
        row.clear();
        row.extend(p.iter().map(f64::to_string));
        row.push(dataset.labels()[i].token().to_string());
        if with_weight {
            row.push(dataset.base_weights()[i].to_string());
        }
        wtr.write_record(&row).map_err(csv_err)?;
    }
    wtr.flush()
        .map_err(|e| Error::domain(format!("csv flush failed: {e}")))?;
    Ok(())
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(BufReader::new(file))
}

pub fn save_dataset(dataset: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_dataset(dataset, BufWriter::new(file))
}
