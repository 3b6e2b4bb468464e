//! Optimal placement of embedded points on a square grid, and montage rendering.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::lap::{solve_lap, CostMatrix};
use crate::raster::SketchImage;
use crate::scalar::Scalar;
use crate::tsne::Embedding2D;

pub const MIN_THUMB: usize = 8;

/// Point-to-cell assignment on an `s x s` grid; cells are numbered row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GridAssignment<T> {
    pub side: usize,
    pub assignment: Vec<usize>,
    /// Sum of squared displacements in unit-square coordinates.
    pub total_cost: T,
}

impl<T: Scalar> GridAssignment<T> {
    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    /// `(row, col)` of point `i`.
    pub fn cell_of(&self, i: usize) -> (usize, usize) {
        let c = self.assignment[i];
        (c / self.side, c % self.side)
    }

    pub fn is_injective(&self) -> bool {
        let mut seen = vec![false; self.side * self.side];
        self.assignment
            .iter()
            .all(|&c| c < seen.len() && !std::mem::replace(&mut seen[c], true))
    }

    /// CSV with header `point_index,row,col`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("point_index,row,col\n");
        for i in 0..self.len() {
            let (r, c) = self.cell_of(i);
            writeln!(out, "{i},{r},{c}").unwrap();
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Smallest `s` with `s * s >= n`.
pub fn grid_side(n: usize) -> usize {
    let mut s = (n as f64).sqrt() as usize;
    while s * s < n {
        s += 1;
    }
    while s > 0 && (s - 1) * (s - 1) >= n {
        s -= 1;
    }
    s
}

/// Min-max normalizes each axis into `[0, 1]`; a constant axis maps to 0.5.
pub fn normalize_unit<T: Scalar>(points: &[[T; 2]]) -> Vec<[T; 2]> {
    let mut lo = [T::infinity(); 2];
    let mut hi = [T::neg_infinity(); 2];
    for p in points {
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    let half = T::lit(0.5);
    points
        .iter()
        .map(|p| {
            let mut q = [half; 2];
            for d in 0..2 {
                let span = hi[d] - lo[d];
                if span > T::zero() {
                    q[d] = (p[d] - lo[d]) / span;
                }
            }
            q
        })
        .collect()
}

/// Center of cell `cell` on an `s x s` grid, `(x, y)` in the unit square.
pub fn cell_center<T: Scalar>(cell: usize, side: usize) -> [T; 2] {
    let s = T::from_usize_lossy(side);
    let half = T::lit(0.5);
    [
        (T::from_usize_lossy(cell % side) + half) / s,
        (T::from_usize_lossy(cell / side) + half) / s,
    ]
}

/// Squared-distance cost of every normalized point to every cell center.
pub fn grid_costs<T: Scalar>(unit: &[[T; 2]], side: usize) -> Result<CostMatrix<T>> {
    let centers: Vec<[T; 2]> = (0..side * side).map(|c| cell_center(c, side)).collect();
    CostMatrix::from_fn(unit.len(), centers.len(), |i, c| {
        let dx = unit[i][0] - centers[c][0];
        let dy = unit[i][1] - centers[c][1];
        dx * dx + dy * dy
    })
}

/// Assigns points to cells of the smallest square grid that holds them,
/// minimizing total squared displacement.
pub fn gridify_points<T: Scalar>(points: &[[T; 2]]) -> Result<GridAssignment<T>> {
    if points.is_empty() {
        return Err(Error::DegenerateCorpus(
            "gridify needs at least one point".into(),
        ));
    }
    if points
        .iter()
        .any(|p| !(p[0].is_finite() && p[1].is_finite()))
    {
        return Err(Error::InvalidCost("non-finite embedding coordinate".into()));
    }
    let side = grid_side(points.len());
    let unit = normalize_unit(points);
    let cost = grid_costs(&unit, side)?;
    let sol = solve_lap(&cost)?;
    Ok(GridAssignment {
        side,
        assignment: sol.row_to_col,
        total_cost: sol.total_cost,
    })
}

pub fn gridify<T: Scalar>(embedding: &Embedding2D<T>) -> Result<GridAssignment<T>> {
    gridify_points(&embedding.coords)
}

/// Pastes each image, downscaled to `thumb x thumb`, into its assigned cell.
pub fn render_montage<T: Scalar>(
    corpus: &[SketchImage],
    grid: &GridAssignment<T>,
    thumb: usize,
) -> Result<SketchImage> {
    if thumb < MIN_THUMB {
        return Err(Error::InvalidMontage(format!(
            "thumbnail size {thumb} below minimum {MIN_THUMB}"
        )));
    }
    if corpus.len() != grid.len() {
        return Err(Error::InvalidMontage(format!(
            "{} images for {} grid points",
            corpus.len(),
            grid.len()
        )));
    }
    let side = grid.side * thumb;
    let mut out = SketchImage::black(side, side);
    for (i, img) in corpus.iter().enumerate() {
        let (r, c) = grid.cell_of(i);
        out.paste(&img.resize_bilinear(thumb, thumb), c * thumb, r * thumb);
    }
    Ok(out)
}
