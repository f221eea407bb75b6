//! Discrete probability measures on uniform grids.

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Absolute tolerance on the total mass of a valid measure.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// A nonnegative weight vector on a grid, normalized to total mass 1.
///
/// Weights of zero are representable, but the solver rejects them: the
/// scaling iteration divides by kernel sums and a zero weight turns the
/// cost evaluation into a `0 * inf` hazard. Floor raw data first (see
/// [`crate::problems::normalize_signal`]).
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    weights: Vec<f64>,
    grid: Grid,
}

/// Checks the measure invariants and wraps the weights. Does **not**
/// renormalize: a mass off by more than [`MASS_TOLERANCE`] is an error.
pub fn validate_measure(weights: Vec<f64>, grid: impl Into<Grid>) -> Result<DiscreteMeasure> {
    let grid = grid.into();
    if weights.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            got: weights.len(),
        });
    }
    for (index, &w) in weights.iter().enumerate() {
        if !w.is_finite() {
            return Err(Error::NonFiniteInput);
        }
        if w < 0.0 {
            return Err(Error::NegativeWeight { index, value: w });
        }
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::MassNotOne {
            sum,
            tol: MASS_TOLERANCE,
        });
    }
    Ok(DiscreteMeasure { weights, grid })
}

impl DiscreteMeasure {
    /// Validating constructor; see [`validate_measure`].
    pub fn new(weights: Vec<f64>, grid: impl Into<Grid>) -> Result<Self> {
        validate_measure(weights, grid)
    }

    /// The weight vector (flat, column-major for 2D grids).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// The grid this measure lives on.
    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Number of weights.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    /// Measures are never empty (grids have at least one point).
    pub fn is_empty(&self) -> bool {
        false
    }

    /// True when every weight is strictly positive.
    pub fn is_strictly_positive(&self) -> bool {
        self.weights.iter().all(|&w| w > 0.0)
    }

    /// Errors with the first offending index unless strictly positive.
    pub fn require_strictly_positive(&self) -> Result<()> {
        match self.weights.iter().position(|&w| w <= 0.0) {
            Some(index) => Err(Error::NonPositiveInput { index }),
            None => Ok(()),
        }
    }

    /// Moves the same weights onto another grid of identical size.
    /// Useful when a generator's default spacing is not the one wanted.
    pub fn regrid(self, grid: impl Into<Grid>) -> Result<Self> {
        let grid = grid.into();
        if self.weights.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: self.weights.len(),
            });
        }
        Ok(Self {
            weights: self.weights,
            grid,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid1D;

    fn line(n: usize) -> Grid1D {
        Grid1D::new(n, 1.0).unwrap()
    }

    #[test]
    fn accepts_symmetric_two_point_mass() {
        let m = validate_measure(vec![0.5, 0.5], line(2)).unwrap();
        assert_eq!(m.weights(), &[0.5, 0.5]);
        assert!(m.is_strictly_positive());
    }

    #[test]
    fn rejects_wrong_mass() {
        let err = validate_measure(vec![0.5, 0.4], line(2)).unwrap_err();
        assert!(matches!(err, Error::MassNotOne { .. }));
    }

    #[test]
    fn rejects_negative_weight() {
        let err = validate_measure(vec![1.1, -0.1], line(2)).unwrap_err();
        assert!(matches!(err, Error::NegativeWeight { index: 1, .. }));
    }

    #[test]
    fn rejects_length_mismatch_and_non_finite() {
        assert!(matches!(
            validate_measure(vec![1.0], line(2)).unwrap_err(),
            Error::LengthMismatch { expected: 2, got: 1 }
        ));
        assert!(matches!(
            validate_measure(vec![f64::NAN, 1.0], line(2)).unwrap_err(),
            Error::NonFiniteInput
        ));
    }

    #[test]
    fn zero_weight_is_valid_but_not_strictly_positive() {
        let m = validate_measure(vec![0.0, 1.0], line(2)).unwrap();
        assert!(!m.is_strictly_positive());
        assert!(matches!(
            m.require_strictly_positive().unwrap_err(),
            Error::NonPositiveInput { index: 0 }
        ));
    }
}
