//! Score-vs-posterior tables and isotonic repair of non-monotone mappings.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::classifiers::{Classifier, TrainedModel};
use crate::error::{Error, Result};
use crate::isocurves::IsoCurveSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelSource {
    /// Row comes from an iso-curve sweep at a fixed θ.
    Theta,
    /// Row comes from a per-point estimate.
    PerPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    pub score: f64,
    pub probability: f64,
    pub theta: Option<f64>,
    pub source: LevelSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTable {
    pub rows: Vec<CalibrationRow>,
    pub resolution: f64,
    /// Levels whose contour was empty and so produced no row.
    pub omitted_levels: Vec<f64>,
}

impl CalibrationTable {
    pub fn pairs(&self) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r.score, r.probability)).collect()
    }

    /// Scores strictly increase along increasing probability.
    pub fn is_strictly_increasing(&self) -> bool {
        let mut rows = self.rows.clone();
        rows.sort_by(|a, b| a.probability.total_cmp(&b.probability));
        rows.windows(2).all(|w| w[0].score < w[1].score)
    }

    /// `score,probability` rows.
    pub fn write_csv<W: Write>(&self, mut writer: W) -> Result<()> {
        let io = |e| Error::io("calibration csv", e);
        writeln!(writer, "score,probability").map_err(io)?;
        for r in &self.rows {
            writeln!(writer, "{},{}", r.score, r.probability).map_err(io)?;
        }
        writer.flush().map_err(io)
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Scores every iso-curve's vertices under the unweighted model and pairs the
/// median score with the curve's level.
pub fn build_calibration_table(model: &TrainedModel, curves: &IsoCurveSet) -> Result<CalibrationTable> {
    if model.linear().is_none() {
        return Err(Error::domain(
            "calibration tables need a score-based model (svm or logreg)",
        ));
    }
    let mut rows = Vec::new();
    let mut omitted = Vec::new();
    for c in &curves.curves {
        let mut scores: Vec<f64> = c
            .vertices()
            .map(|v| model.score(v))
            .collect::<Result<_>>()?;
        if scores.is_empty() {
            omitted.push(c.level);
            continue;
        }
        rows.push(CalibrationRow {
            score: median(&mut scores),
            probability: c.level,
            theta: Some(c.theta),
            source: LevelSource::Theta,
        });
    }
    let levels = curves.levels();
    let resolution = levels
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let resolution = if resolution.is_finite() {
        // Level sets come from decimal steps; strip float noise.
        (resolution * 1e9).round() / 1e9
    } else {
        1.0
    };
    Ok(CalibrationTable {
        rows,
        resolution,
        omitted_levels: omitted,
    })
}

/// Nondecreasing piecewise-linear map from score to probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneMap {
    /// Strictly increasing scores.
    pub breakpoints: Vec<f64>,
    /// Nondecreasing fitted values, one per breakpoint.
    pub values: Vec<f64>,
    /// Total input weight behind each breakpoint.
    pub weights: Vec<f64>,
}

impl MonotoneMap {
    /// Linear interpolation between breakpoints, clamped to the end values.
    pub fn evaluate(&self, score: f64) -> f64 {
        let b = &self.breakpoints;
        let v = &self.values;
        if score <= b[0] {
            return v[0];
        }
        let last = b.len() - 1;
        if score >= b[last] {
            return v[last];
        }
        let k = b.partition_point(|&x| x <= score);
        let (x0, x1, y0, y1) = (b[k - 1], b[k], v[k - 1], v[k]);
        if score == x0 {
            return y0;
        }
        y0 + (y1 - y0) * (score - x0) / (x1 - x0)
    }
}

/// [`MonotoneMap::evaluate`].
pub fn evaluate_map(map: &MonotoneMap, score: f64) -> f64 {
    map.evaluate(score)
}

/// Weighted isotonic regression by pool-adjacent-violators. Pairs sharing a
/// score are first merged into their weighted mean.
pub fn isotonic_fit(pairs: &[(f64, f64)], weights: Option<&[f64]>) -> Result<MonotoneMap> {
    if pairs.is_empty() {
        return Err(Error::domain("isotonic_fit needs at least one pair"));
    }
    let weights: Vec<f64> = match weights {
        Some(w) if w.len() != pairs.len() => {
            return Err(Error::domain("weights must match pairs in length"));
        }
        Some(w) => w.to_vec(),
        None => vec![1.0; pairs.len()],
    };
    if pairs.iter().any(|(s, p)| !s.is_finite() || !p.is_finite()) {
        return Err(Error::domain("pairs must be finite"));
    }
    if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
        return Err(Error::domain("weights must be positive"));
    }

    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.sort_by(|&a, &b| pairs[a].0.total_cmp(&pairs[b].0).then(a.cmp(&b)));

    // (score, weighted sum of targets, weight) per distinct score.
    let mut merged: Vec<(f64, f64, f64)> = Vec::new();
    for i in order {
        let (s, p) = pairs[i];
        let w = weights[i];
        match merged.last_mut() {
            Some(last) if last.0 == s => {
                last.1 += w * p;
                last.2 += w;
            }
            _ => merged.push((s, w * p, w)),
        }
    }

    // Blocks of consecutive distinct scores: (sum, weight, first, last).
    let mut blocks: Vec<(f64, f64, usize, usize)> = Vec::with_capacity(merged.len());
    for (k, &(_, sum, w)) in merged.iter().enumerate() {
        let mut cur = (sum, w, k, k);
        while let Some(&prev) = blocks.last() {
            if prev.0 / prev.1 > cur.0 / cur.1 {
                blocks.pop();
                cur = (prev.0 + cur.0, prev.1 + cur.1, prev.2, cur.3);
            } else {
                break;
            }
        }
        blocks.push(cur);
    }

    let mut values = vec![0.0; merged.len()];
    for (sum, w, first, last) in blocks {
        values[first..=last].fill(sum / w);
    }
    Ok(MonotoneMap {
        breakpoints: merged.iter().map(|m| m.0).collect(),
        values,
        weights: merged.iter().map(|m| m.2).collect(),
    })
}
