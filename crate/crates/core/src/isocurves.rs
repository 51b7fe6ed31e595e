//! Iso-probability curves by sweeping the effective class proportion.
//!
//! The boundary of the model retrained at `θ` is the set of points whose
//! estimated posterior is `posterior_from_theta(θ, π⁺)`. One retraining per
//! requested level therefore yields a whole iso-probability curve.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{Classifier, WeightedTrainer};
use crate::contour::{extract_label_boundary, extract_zero_contour, Polyline};
use crate::dataset::{Label, LabeledDataset};
use crate::error::{Error, Result};

pub use crate::contour::Grid2D;

/// Effective proportion whose boundary carries posterior `level`; the exact
/// inverse of [`posterior_from_theta`].
pub fn theta_for_level(level: f64, pi_plus: f64) -> Result<f64> {
    for (name, v) in [("level", level), ("pi_plus", pi_plus)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::domain(format!("{name} must lie in (0, 1), got {v}")));
        }
    }
    let a = pi_plus * (1.0 - level);
    let b = level * (1.0 - pi_plus);
    Ok(a / (a + b))
}

/// `start, start + step, ...` up to `end` inclusive, rounded to the step's
/// decimal resolution so that e.g. 0.05..0.95 yields exact-looking levels.
pub fn level_range(start: f64, end: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(start <= end) {
        return Err(Error::domain("level range needs step > 0 and start <= end"));
    }
    let n = ((end - start) / step + 1e-9).floor() as usize;
    let scale = 1e12;
    Ok((0..=n)
        .map(|k| ((start + k as f64 * step) * scale).round() / scale)
        .collect())
}

/// The default level set `0.05, 0.10, ..., 0.95`.
pub fn default_levels() -> Vec<f64> {
    level_range(0.05, 0.95, 0.05).expect("valid range")
}

pub fn validate_levels(levels: &[f64]) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::domain("no levels requested"));
    }
    if levels.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
        return Err(Error::domain("levels must lie in (0, 1)"));
    }
    if levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("levels must be strictly increasing"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelCurves {
    pub level: f64,
    pub theta: f64,
    pub polylines: Vec<Polyline>,
    /// Training failure at this level; the other levels are unaffected.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

impl LevelCurves {
    pub fn vertices(&self) -> impl Iterator<Item = &[f64; 2]> {
        self.polylines.iter().flatten()
    }

    pub fn is_empty(&self) -> bool {
        self.polylines.iter().all(|p| p.is_empty())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsoCurveSet {
    pub pi_plus: f64,
    pub grid: Grid2D,
    pub curves: Vec<LevelCurves>,
}

impl IsoCurveSet {
    pub fn levels(&self) -> Vec<f64> {
        self.curves.iter().map(|c| c.level).collect()
    }

    pub fn theta_per_level(&self) -> Vec<f64> {
        self.curves.iter().map(|c| c.theta).collect()
    }

    /// `level,polyline_id,vertex_id,x,y` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        let err = |e: csv::Error| Error::domain(format!("csv write failed: {e}"));
        wtr.write_record(["level", "polyline_id", "vertex_id", "x", "y"])
            .map_err(err)?;
        for c in &self.curves {
            for (pid, line) in c.polylines.iter().enumerate() {
                for (vid, v) in line.iter().enumerate() {
                    wtr.write_record([
                        c.level.to_string(),
                        pid.to_string(),
                        vid.to_string(),
                        v[0].to_string(),
                        v[1].to_string(),
                    ])
                    .map_err(err)?;
                }
            }
        }
        wtr.flush()
            .map_err(|e| Error::domain(format!("csv flush failed: {e}")))
    }
}

/// One contour vertex read back from the curve CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveVertex {
    pub level: f64,
    pub polyline_id: usize,
    pub vertex_id: usize,
    pub point: [f64; 2],
}

pub fn read_curve_csv<R: Read>(reader: R) -> Result<Vec<CurveVertex>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["level", "polyline_id", "vertex_id", "x", "y"] {
        return Err(Error::Parse {
            line: 1,
            message: "header must be level,polyline_id,vertex_id,x,y".into(),
        });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let bad = |what: &str| Error::Parse {
            line,
            message: format!("bad {what}"),
        };
        out.push(CurveVertex {
            level: rec[0].parse().map_err(|_| bad("level"))?,
            polyline_id: rec[1].parse().map_err(|_| bad("polyline_id"))?,
            vertex_id: rec[2].parse().map_err(|_| bad("vertex_id"))?,
            point: [
                rec[3].parse().map_err(|_| bad("x"))?,
                rec[4].parse().map_err(|_| bad("y"))?,
            ],
        });
    }
    Ok(out)
}

fn level_curves<T: WeightedTrainer>(
    trainer: &T,
    dataset: &LabeledDataset,
    grid: &Grid2D,
    level: f64,
    theta: f64,
) -> Result<Vec<Polyline>> {
    let model = trainer.train(dataset, &dataset.weights_for(theta)?)?;
    if trainer.score_based() {
        let field = grid.sample(|p| model.score(&p))?;
        extract_zero_contour(grid, &field)
    } else {
        let labels: Vec<bool> = grid
            .nodes()
            .map(|p| model.predict(&p).map(|l| l == Label::Plus))
            .collect::<Result<_>>()?;
        extract_label_boundary(grid, &labels)
    }
    .map_err(|e| Error::Estimation(format!("level {level}: {e}")))
}

/// Retrains once per level at `θ = theta_for_level(level, π⁺)` and extracts
/// the model's boundary over `grid`. Levels run in parallel on the current
/// rayon pool; results keep level order.
pub fn sweep_isocurves<T: WeightedTrainer>(
    trainer: &T,
    dataset: &LabeledDataset,
    levels: &[f64],
    grid: &Grid2D,
) -> Result<IsoCurveSet> {
    if dataset.dim() != 2 {
        return Err(Error::Dimension {
            expected: 2,
            got: dataset.dim(),
        });
    }
    validate_levels(levels)?;
    grid.validate()?;
    let pi_plus = dataset.positive_proportion();
    let thetas: Vec<f64> = levels
        .iter()
        .map(|&p| theta_for_level(p, pi_plus))
        .collect::<Result<_>>()?;
    let curves = levels
        .par_iter()
        .zip(thetas.par_iter())
        .map(|(&level, &theta)| match level_curves(trainer, dataset, grid, level, theta) {
            Ok(polylines) => LevelCurves {
                level,
                theta,
                polylines,
                error: None,
            },
            Err(e) => LevelCurves {
                level,
                theta,
                polylines: Vec::new(),
                error: Some(e.to_string()),
            },
        })
        .collect();
    Ok(IsoCurveSet {
        pi_plus,
        grid: *grid,
        curves,
    })
}

/// Samples up to `per_level` vertices per level, evenly spaced through the
/// level's vertex list.
pub fn sample_vertices(set: &IsoCurveSet, per_level: usize) -> Vec<(f64, [f64; 2])> {
    let mut out = Vec::new();
    for c in &set.curves {
        let all: Vec<&[f64; 2]> = c.vertices().collect();
        if all.is_empty() || per_level == 0 {
            continue;
        }
        let take = per_level.min(all.len());
        for k in 0..take {
            let idx = ((2 * k + 1) * all.len()) / (2 * take);
            out.push((c.level, *all[idx]));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::posterior::posterior_from_theta;
    use proptest::prelude::*;

    #[test]
    fn theta_for_level_examples() {
        assert_eq!(theta_for_level(0.5, 0.5).unwrap(), 0.5);
        assert!((theta_for_level(0.75, 0.5).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn default_levels_are_nineteen_steps() {
        let levels = default_levels();
        assert_eq!(levels.len(), 19);
        assert_eq!(levels[0], 0.05);
        assert_eq!(levels[9], 0.5);
        assert_eq!(levels[18], 0.95);
    }

    #[test]
    fn round_trip_on_default_levels() {
        for pi in [0.5, 0.3, 0.81] {
            for p in default_levels() {
                let back = posterior_from_theta(theta_for_level(p, pi).unwrap(), pi).unwrap();
                assert!((back - p).abs() <= 1e-12, "{p} {pi} -> {back}");
            }
        }
    }

    proptest! {
        #[test]
        fn inverse_of_posterior_from_theta(p in 0.001f64..0.999, pi in 0.001f64..0.999) {
            let t = theta_for_level(p, pi).unwrap();
            prop_assert!(t > 0.0 && t < 1.0);
            prop_assert!((posterior_from_theta(t, pi).unwrap() - p).abs() <= 1e-12);
        }
    }

    #[test]
    fn bad_levels_are_rejected() {
        assert!(validate_levels(&[]).is_err());
        assert!(validate_levels(&[0.2, 0.2]).is_err());
        assert!(validate_levels(&[0.0, 0.5]).is_err());
        assert!(validate_levels(&[0.5, 0.3]).is_err());
    }

    #[test]
    fn curve_csv_round_trip() {
        let set = IsoCurveSet {
            pi_plus: 0.5,
            grid: Grid2D::new((0.0, 1.0), (0.0, 1.0), 2, 2).unwrap(),
            curves: vec![LevelCurves {
                level: 0.25,
                theta: 0.75,
                polylines: vec![vec![[0.1, 0.2], [0.3, 0.4]]],
                error: None,
            }],
        };
        let mut buf = Vec::new();
        set.write_csv(&mut buf).unwrap();
        let rows = read_curve_csv(buf.as_slice()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].point, [0.3, 0.4]);
        assert_eq!(rows[1].vertex_id, 1);
    }
}
