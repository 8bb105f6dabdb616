use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Rectangular capture grid. Positions are numbered row-major; column
/// index grows along `x`, row index along `z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    pub spacing_m: f64,
    pub origin_x: f64,
    pub origin_z: f64,
}

impl Default for GridSpec {
    /// 4 rows by 5 columns at 1 m: 20 positions over a 4 m x 3 m area.
    fn default() -> Self {
        Self {
            rows: 4,
            cols: 5,
            spacing_m: 1.0,
            origin_x: 0.0,
            origin_z: 0.0,
        }
    }
}

impl GridSpec {
    pub fn new(rows: usize, cols: usize, spacing_m: f64) -> Result<Self> {
        let grid = Self {
            rows,
            cols,
            spacing_m,
            origin_x: 0.0,
            origin_z: 0.0,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn with_origin(mut self, origin_x: f64, origin_z: f64) -> Self {
        self.origin_x = origin_x;
        self.origin_z = origin_z;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::InvalidGrid(format!(
                "rows and cols must be at least 1 (got {}x{})",
                self.rows, self.cols
            )));
        }
        if !(self.spacing_m > 0.0 && self.spacing_m.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "spacing must be positive (got {})",
                self.spacing_m
            )));
        }
        if !(self.origin_x.is_finite() && self.origin_z.is_finite()) {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        Ok(())
    }

    pub fn position_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn row_col(&self, p: usize) -> Result<(usize, usize)> {
        self.check(p)?;
        Ok((p / self.cols, p % self.cols))
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        debug_assert!(row < self.rows && col < self.cols);
        row * self.cols + col
    }

    /// World coordinates `(x, z)` of position `p`.
    pub fn position_coords(&self, p: usize) -> Result<(f64, f64)> {
        let (row, col) = self.row_col(p)?;
        Ok(self.coords_unchecked(row, col))
    }

    pub(crate) fn coords_unchecked(&self, row: usize, col: usize) -> (f64, f64) {
        (
            self.origin_x + col as f64 * self.spacing_m,
            self.origin_z + row as f64 * self.spacing_m,
        )
    }

    /// `(x_min, x_max, z_min, z_max)` of the node rectangle.
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        (
            self.origin_x,
            self.origin_x + (self.cols - 1) as f64 * self.spacing_m,
            self.origin_z,
            self.origin_z + (self.rows - 1) as f64 * self.spacing_m,
        )
    }

    pub fn clamp(&self, x: f64, z: f64) -> (f64, f64) {
        let (x0, x1, z0, z1) = self.bounds();
        (x.clamp(x0, x1), z.clamp(z0, z1))
    }

    /// Corner positions of the grid cell containing `(x, z)` after clamping.
    /// Degenerate grids (a single row or column) yield fewer than four corners.
    pub fn enclosing_cell(&self, x: f64, z: f64) -> Vec<usize> {
        let (x, z) = self.clamp(x, z);
        let c0 = cell_start((x - self.origin_x) / self.spacing_m, self.cols);
        let r0 = cell_start((z - self.origin_z) / self.spacing_m, self.rows);
        let c1 = (c0 + 1).min(self.cols - 1);
        let r1 = (r0 + 1).min(self.rows - 1);
        let mut corners = vec![
            self.index(r0, c0),
            self.index(r0, c1),
            self.index(r1, c0),
            self.index(r1, c1),
        ];
        corners.sort_unstable();
        corners.dedup();
        corners
    }

    fn check(&self, p: usize) -> Result<()> {
        if p >= self.position_count() {
            return Err(Error::PositionOutOfRange {
                index: p,
                bound: self.position_count(),
            });
        }
        Ok(())
    }
}

fn cell_start(u: f64, n: usize) -> usize {
    if n < 2 {
        return 0;
    }
    (u.floor().max(0.0) as usize).min(n - 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn default_grid_layout() {
        let g = GridSpec::default();
        assert_eq!(g.position_count(), 20);
        assert_eq!(g.position_coords(0).unwrap(), (0.0, 0.0));
        assert_eq!(g.position_coords(6).unwrap(), (1.0, 1.0));
        assert_eq!(g.position_coords(19).unwrap(), (4.0, 3.0));
        let (x0, x1, z0, z1) = g.bounds();
        assert_eq!((x1 - x0) * (z1 - z0), 12.0);
    }

    #[test]
    fn out_of_range_index_is_rejected() {
        let err = GridSpec::default().position_coords(20).unwrap_err();
        assert!(matches!(
            err,
            Error::PositionOutOfRange {
                index: 20,
                bound: 20
            }
        ));
    }

    #[test]
    fn invalid_grids() {
        assert!(GridSpec::new(0, 5, 1.0).is_err());
        assert!(GridSpec::new(4, 5, 0.0).is_err());
        assert!(GridSpec::new(4, 5, f64::NAN).is_err());
        assert!(GridSpec::new(1, 1, 0.5).is_ok());
    }

    #[test]
    fn enclosing_cell_corners() {
        let g = GridSpec::default();
        assert_eq!(g.enclosing_cell(0.5, 0.5), vec![0, 1, 5, 6]);
        // right and top edges belong to the last cell
        assert_eq!(g.enclosing_cell(4.0, 3.0), vec![13, 14, 18, 19]);
        // clamped from outside
        assert_eq!(g.enclosing_cell(-3.0, 10.0), vec![10, 11, 15, 16]);
        let line = GridSpec::new(1, 3, 1.0).unwrap();
        assert_eq!(line.enclosing_cell(1.5, 0.0), vec![1, 2]);
        let single = GridSpec::new(1, 1, 1.0).unwrap();
        assert_eq!(single.enclosing_cell(0.3, 0.3), vec![0]);
    }

    proptest! {
        #[test]
        fn position_coords_is_injective(rows in 1usize..8, cols in 1usize..8, spacing in 0.1f64..3.0) {
            let g = GridSpec::new(rows, cols, spacing).unwrap().with_origin(-1.0, 2.0);
            let mut seen = std::collections::HashSet::new();
            for p in 0..g.position_count() {
                let (x, z) = g.position_coords(p).unwrap();
                prop_assert!(seen.insert((x.to_bits(), z.to_bits())));
                let (r, c) = g.row_col(p).unwrap();
                prop_assert_eq!(g.index(r, c), p);
            }
        }
    }
}
