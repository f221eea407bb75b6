//! Uniform grid geometry for one- and two-dimensional problems.

use crate::error::{Error, Result};

/// A uniformly spaced 1D grid with `n` points at distance `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    n: usize,
    h: f64,
}

impl Grid1D {
    /// Builds a 1D grid. Requires `n >= 1` and a finite spacing `h > 0`.
    pub fn new(n: usize, h: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("grid needs at least one point"));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidParameter("grid spacing must be positive and finite"));
        }
        Ok(Self { n, h })
    }

    /// Number of grid points.
    pub fn len(&self) -> usize {
        self.n
    }

    /// True only for the degenerate single-point grid.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid spacing.
    pub fn spacing(&self) -> f64 {
        self.h
    }
}

/// A uniformly spaced 2D grid: `n` rows (vertical, spacing `h1`) by
/// `m` columns (horizontal, spacing `h2`).
///
/// Arrays on this grid are stored flat in column-major order: entry
/// `(i, j)` (0-based row `i`, column `j`) lives at flat position
/// `j * n + i`, so each column occupies a contiguous block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    n: usize,
    m: usize,
    h1: f64,
    h2: f64,
}

impl Grid2D {
    /// Builds a 2D grid. Requires `n, m >= 1` and finite positive spacings.
    pub fn new(n: usize, m: usize, h1: f64, h2: f64) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::InvalidParameter("grid needs at least one point per axis"));
        }
        if !(h1 > 0.0 && h1.is_finite() && h2 > 0.0 && h2.is_finite()) {
            return Err(Error::InvalidParameter("grid spacings must be positive and finite"));
        }
        Ok(Self { n, m, h1, h2 })
    }

    /// Vertical point count (rows).
    pub fn rows(&self) -> usize {
        self.n
    }

    /// Horizontal point count (columns).
    pub fn cols(&self) -> usize {
        self.m
    }

    /// Vertical spacing.
    pub fn spacing_rows(&self) -> f64 {
        self.h1
    }

    /// Horizontal spacing.
    pub fn spacing_cols(&self) -> f64 {
        self.h2
    }

    /// Total number of grid points `n * m`.
    pub fn len(&self) -> usize {
        self.n * self.m
    }

    /// True never; grids are non-empty by construction.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Column-major flat position of entry `(i, j)`.
    pub fn flatten(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n && j < self.m);
        j * self.n + i
    }

    /// Inverse of [`flatten`](Self::flatten).
    pub fn unflatten(&self, k: usize) -> (usize, usize) {
        debug_assert!(k < self.len());
        (k % self.n, k / self.n)
    }
}

/// Either grid dimensionality, carried by measures and solver state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Grid {
    D1(Grid1D),
    D2(Grid2D),
}

impl Grid {
    /// Total number of points.
    pub fn len(&self) -> usize {
        match self {
            Grid::D1(g) => g.len(),
            Grid::D2(g) => g.len(),
        }
    }

    /// True never; grids are non-empty by construction.
    pub fn is_empty(&self) -> bool {
        false
    }
}

impl From<Grid1D> for Grid {
    fn from(g: Grid1D) -> Self {
        Grid::D1(g)
    }
}

impl From<Grid2D> for Grid {
    fn from(g: Grid2D) -> Self {
        Grid::D2(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_nonpositive_spacing() {
        assert!(Grid1D::new(0, 1.0).is_err());
        assert!(Grid1D::new(4, 0.0).is_err());
        assert!(Grid1D::new(4, -1.0).is_err());
        assert!(Grid1D::new(4, f64::NAN).is_err());
        assert!(Grid2D::new(0, 3, 1.0, 1.0).is_err());
        assert!(Grid2D::new(3, 3, 1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn flatten_is_column_major() {
        let g = Grid2D::new(3, 2, 1.0, 1.0).unwrap();
        // Column 0 first, then column 1.
        assert_eq!(g.flatten(0, 0), 0);
        assert_eq!(g.flatten(2, 0), 2);
        assert_eq!(g.flatten(0, 1), 3);
        assert_eq!(g.flatten(2, 1), 5);
    }

    #[test]
    fn flatten_round_trips() {
        let g = Grid2D::new(5, 7, 0.5, 0.25).unwrap();
        for k in 0..g.len() {
            let (i, j) = g.unflatten(k);
            assert_eq!(g.flatten(i, j), k);
        }
    }
}
