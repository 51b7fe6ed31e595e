//! Zero-level contours on a regular 2-D grid.
//!
//! Fields are stored row-major over grid nodes: `values[j * nx + i]` is the
//! value at `(x_i, y_j)`. A node is "inside" when its value is `>= 0`.

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Regular grid of `nx × ny` nodes spanning `x_range × y_range`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub nx: usize,
    pub ny: usize,
}

impl Grid2D {
    pub fn new(x_range: (f64, f64), y_range: (f64, f64), nx: usize, ny: usize) -> Result<Self> {
        let g = Self {
            x_range,
            y_range,
            nx,
            ny,
        };
        g.validate()?;
        Ok(g)
    }

    /// Bounding box of 2-D data expanded by `margin` of its extent per side.
    pub fn around(bounds: &[(f64, f64)], margin: f64, nx: usize, ny: usize) -> Result<Self> {
        if bounds.len() != 2 {
            return Err(Error::Dimension {
                expected: 2,
                got: bounds.len(),
            });
        }
        let expand = |(lo, hi): (f64, f64)| {
            let span = (hi - lo).max(1e-9);
            (lo - margin * span, hi + margin * span)
        };
        Self::new(expand(bounds[0]), expand(bounds[1]), nx, ny)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |(a, b): (f64, f64)| a.is_finite() && b.is_finite() && a < b;
        if !ok(self.x_range) || !ok(self.y_range) {
            return Err(Error::domain("grid ranges must be finite and non-degenerate"));
        }
        if self.nx < 2 || self.ny < 2 {
            return Err(Error::domain("grid needs at least 2 nodes per axis"));
        }
        Ok(())
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        let (a, b) = self.x_range;
        if i + 1 == self.nx {
            b
        } else {
            a + (b - a) * i as f64 / (self.nx - 1) as f64
        }
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        let (a, b) = self.y_range;
        if j + 1 == self.ny {
            b
        } else {
            a + (b - a) * j as f64 / (self.ny - 1) as f64
        }
    }

    pub fn dx(&self) -> f64 {
        (self.x_range.1 - self.x_range.0) / (self.nx - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y_range.1 - self.y_range.0) / (self.ny - 1) as f64
    }

    pub fn cell_diagonal(&self) -> f64 {
        self.dx().hypot(self.dy())
    }

    /// Node coordinates in storage order.
    pub fn nodes(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        (0..self.ny).flat_map(move |j| (0..self.nx).map(move |i| [self.x(i), self.y(j)]))
    }

    /// Samples `f` at every node.
    pub fn sample<F, E>(&self, mut f: F) -> std::result::Result<Vec<f64>, E>
    where
        F: FnMut([f64; 2]) -> std::result::Result<f64, E>,
    {
        self.nodes().map(&mut f).collect()
    }
}

pub type Polyline = Vec<[f64; 2]>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum EdgeKey {
    /// Edge from node (i, j) to (i + 1, j).
    H(usize, usize),
    /// Edge from node (i, j) to (i, j + 1).
    V(usize, usize),
}

/// Marching squares on a node field. Vertices are linearly interpolated on
/// cell edges; saddle cells are split according to the sign of the average
/// of the four corners. Polylines are ordered by the lowest cell index they
/// touch.
pub fn extract_zero_contour(grid: &Grid2D, values: &[f64]) -> Result<Vec<Polyline>> {
    grid.validate()?;
    if values.len() != grid.nx * grid.ny {
        return Err(Error::domain(format!(
            "field has {} values, grid has {} nodes",
            values.len(),
            grid.nx * grid.ny
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("field must be finite"));
    }
    let (nx, ny) = (grid.nx, grid.ny);
    let at = |i: usize, j: usize| values[j * nx + i];
    let inside = |v: f64| v >= 0.0;

    let mut segments = Vec::new();
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let c = [at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)];
            let s = c.map(inside);
            // Edges: bottom, right, top, left; edge k joins corners k, k+1.
            let edges = [
                EdgeKey::H(i, j),
                EdgeKey::V(i + 1, j),
                EdgeKey::H(i, j + 1),
                EdgeKey::V(i, j),
            ];
            let crossing: Vec<usize> = (0..4).filter(|&k| s[k] != s[(k + 1) % 4]).collect();
            match crossing.len() {
                2 => segments.push((edges[crossing[0]], edges[crossing[1]])),
                4 => {
                    let centre = inside(c.iter().sum::<f64>() / 4.0);
                    if centre == s[0] {
                        // Corners 0 and 2 connect through the centre: cut
                        // off corners 1 and 3.
                        segments.push((edges[0], edges[1]));
                        segments.push((edges[2], edges[3]));
                    } else {
                        segments.push((edges[3], edges[0]));
                        segments.push((edges[1], edges[2]));
                    }
                }
                _ => {}
            }
        }
    }

    let point = |e: EdgeKey| -> [f64; 2] {
        let ((i0, j0), (i1, j1)) = match e {
            EdgeKey::H(i, j) => ((i, j), (i + 1, j)),
            EdgeKey::V(i, j) => ((i, j), (i, j + 1)),
        };
        let (f0, f1) = (at(i0, j0), at(i1, j1));
        let t = f0 / (f0 - f1);
        let (x0, y0, x1, y1) = (grid.x(i0), grid.y(j0), grid.x(i1), grid.y(j1));
        [x0 + t * (x1 - x0), y0 + t * (y1 - y0)]
    };
    Ok(chain(&segments)
        .into_iter()
        .map(|keys| keys.into_iter().map(point).collect())
        .collect())
}

/// Boundary between nodes of different label, drawn along the midlines
/// between nodes so every segment is axis-aligned. Used for piecewise
/// constant models.
pub fn extract_label_boundary(grid: &Grid2D, labels: &[bool]) -> Result<Vec<Polyline>> {
    grid.validate()?;
    if labels.len() != grid.nx * grid.ny {
        return Err(Error::domain("label field does not match the grid"));
    }
    let (nx, ny) = (grid.nx, grid.ny);
    let at = |i: usize, j: usize| labels[j * nx + i];
    // Lattice corner (ci, cj) sits between nodes ci-1 and ci (clamped to the
    // grid range at the ends).
    let cx = |ci: usize| match ci {
        0 => grid.x_range.0,
        c if c == nx => grid.x_range.1,
        c => 0.5 * (grid.x(c - 1) + grid.x(c)),
    };
    let cy = |cj: usize| match cj {
        0 => grid.y_range.0,
        c if c == ny => grid.y_range.1,
        c => 0.5 * (grid.y(c - 1) + grid.y(c)),
    };
    let mut segments = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            if i + 1 < nx && at(i, j) != at(i + 1, j) {
                segments.push(((i + 1, j), (i + 1, j + 1)));
            }
            if j + 1 < ny && at(i, j) != at(i, j + 1) {
                segments.push(((i, j + 1), (i + 1, j + 1)));
            }
        }
    }
    Ok(chain(&segments)
        .into_iter()
        .map(|keys| keys.into_iter().map(|(ci, cj)| [cx(ci), cy(cj)]).collect())
        .collect())
}

/// Joins undirected segments sharing endpoints into polylines. Closed loops
/// repeat their first vertex at the end. Output order follows the first
/// unused segment in input order.
fn chain<K: Copy + Eq + Hash>(segments: &[(K, K)]) -> Vec<Vec<K>> {
    let mut incident: HashMap<K, Vec<usize>> = HashMap::new();
    for (s, (a, b)) in segments.iter().enumerate() {
        incident.entry(*a).or_default().push(s);
        incident.entry(*b).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let next = |v: K, used: &mut [bool]| -> Option<K> {
        let s = *incident[&v].iter().find(|&&s| !used[s])?;
        used[s] = true;
        let (a, b) = segments[s];
        Some(if a == v { b } else { a })
    };

    let mut out = Vec::new();
    for s in 0..segments.len() {
        if used[s] {
            continue;
        }
        used[s] = true;
        let (a, b) = segments[s];
        let mut forward = vec![a, b];
        while let Some(v) = next(*forward.last().unwrap(), &mut used) {
            forward.push(v);
            if v == a {
                break;
            }
        }
        if *forward.last().unwrap() != a || forward.len() < 3 {
            let mut backward = Vec::new();
            let mut v = a;
            while let Some(u) = next(v, &mut used) {
                backward.push(u);
                v = u;
            }
            backward.reverse();
            backward.extend(forward);
            forward = backward;
        }
        out.push(forward);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(grid: &Grid2D, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        grid.nodes().map(|[x, y]| f(x, y)).collect()
    }

    #[test]
    fn linear_field_gives_exact_vertical_line() {
        let grid = Grid2D::new((-1.0, 3.0), (-2.0, 2.0), 21, 21).unwrap();
        let lines = extract_zero_contour(&grid, &field(&grid, |x, _| x - 1.0)).unwrap();
        assert_eq!(lines.len(), 1);
        assert_eq!(lines[0].len(), 21);
        assert!(lines[0].iter().all(|p| (p[0] - 1.0).abs() < 1e-12));
        let ys: Vec<f64> = lines[0].iter().map(|p| p[1]).collect();
        assert!(ys.first().unwrap().min(*ys.last().unwrap()) == -2.0);
    }

    #[test]
    fn linear_field_off_nodes_is_exact() {
        let grid = Grid2D::new((-1.0, 3.0), (-2.0, 2.0), 10, 7).unwrap();
        let lines = extract_zero_contour(&grid, &field(&grid, |x, y| x - 0.3 * y - 1.1)).unwrap();
        assert_eq!(lines.len(), 1);
        for p in &lines[0] {
            assert!((p[0] - 0.3 * p[1] - 1.1).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_field_is_empty() {
        let grid = Grid2D::new((0.0, 1.0), (0.0, 1.0), 5, 5).unwrap();
        assert!(extract_zero_contour(&grid, &vec![1.0; 25]).unwrap().is_empty());
        assert!(extract_zero_contour(&grid, &vec![-1.0; 25]).unwrap().is_empty());
    }

    #[test]
    fn circle_is_closed_and_close_to_unit_radius() {
        let grid = Grid2D::new((-2.0, 2.0), (-2.0, 2.0), 161, 161).unwrap();
        let lines = extract_zero_contour(&grid, &field(&grid, |x, y| x * x + y * y - 1.0)).unwrap();
        assert_eq!(lines.len(), 1);
        let line = &lines[0];
        assert_eq!(line.first(), line.last());
        let worst = line
            .iter()
            .map(|p| (p[0].hypot(p[1]) - 1.0).abs())
            .fold(0.0, f64::max);
        assert!(worst <= grid.cell_diagonal(), "{worst}");
    }

    #[test]
    fn saddle_uses_centre_average() {
        let grid = Grid2D::new((0.0, 1.0), (0.0, 1.0), 2, 2).unwrap();
        // Diagonal corners positive, centre average positive: two segments,
        // each cutting off a negative corner.
        let lines = extract_zero_contour(&grid, &[1.0, -0.5, -0.5, 1.0]).unwrap();
        assert_eq!(lines.len(), 2);
        // With a negative centre the positive corners are cut off instead.
        let flipped = extract_zero_contour(&grid, &[0.5, -1.0, -1.0, 0.5]).unwrap();
        assert_eq!(flipped.len(), 2);
        assert_ne!(lines, flipped);
    }

    #[test]
    fn label_boundary_is_axis_aligned() {
        let grid = Grid2D::new((0.0, 4.0), (0.0, 4.0), 9, 9).unwrap();
        let labels: Vec<bool> = grid.nodes().map(|[x, y]| x > 1.2 && y < 2.7).collect();
        let lines = extract_label_boundary(&grid, &labels).unwrap();
        assert_eq!(lines.len(), 1);
        for w in lines[0].windows(2) {
            assert!(w[0][0] == w[1][0] || w[0][1] == w[1][1]);
        }
    }

    #[test]
    fn output_is_deterministic() {
        let grid = Grid2D::new((-2.0, 2.0), (-2.0, 2.0), 41, 41).unwrap();
        let f = field(&grid, |x, y| (3.0 * x).sin() * (2.0 * y).cos());
        assert_eq!(
            extract_zero_contour(&grid, &f).unwrap(),
            extract_zero_contour(&grid, &f).unwrap()
        );
    }
}
