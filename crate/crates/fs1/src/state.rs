//! Scaling state carried across solver iterations.

use crate::grid::Grid;

/// The solver's iterate: scaling vectors `phi` (row side) and `psi`
/// (column side), plus per-point absorption offsets `alpha`, `beta`
/// accumulated by the stabilized path. The implied transport plan is
///
/// ```text
/// P_ij = exp((alpha_i + beta_j) / epsilon) * phi_i * K_ij * psi_j
/// ```
///
/// With `alpha = beta = 0` (the unstabilized default) this is the plain
/// diagonal scaling `diag(phi) K diag(psi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SinkhornState {
    pub(crate) phi: Vec<f64>,
    pub(crate) psi: Vec<f64>,
    pub(crate) alpha: Vec<f64>,
    pub(crate) beta: Vec<f64>,
    pub(crate) grid: Grid,
    pub(crate) iteration: usize,
}

impl SinkhornState {
    /// Uniform initialization: both scalings start at `1 / size` so that
    /// the initial plan has unit total mass, offsets start at zero.
    pub fn uniform_init(grid: impl Into<Grid>) -> Self {
        let grid = grid.into();
        let n = grid.len();
        let init = 1.0 / n as f64;
        Self {
            phi: vec![init; n],
            psi: vec![init; n],
            alpha: vec![0.0; n],
            beta: vec![0.0; n],
            grid,
            iteration: 0,
        }
    }

    /// Row-side scaling vector.
    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    /// Column-side scaling vector.
    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    /// Row-side absorption offsets (all zero until an absorption fires).
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// Column-side absorption offsets.
    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// Grid the state lives on.
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Number of completed full iterations.
    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// Number of grid points.
    pub fn len(&self) -> usize {
        self.phi.len()
    }

    /// Always false: states are built on grids with at least one point.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// True if any absorption offset is nonzero.
    pub fn has_absorbed(&self) -> bool {
        self.alpha.iter().any(|&a| a != 0.0) || self.beta.iter().any(|&b| b != 0.0)
    }
}
