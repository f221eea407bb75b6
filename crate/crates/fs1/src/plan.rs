//! On-demand views of the implied transport plan.
//!
//! The solver never forms the plan; these helpers exist for validation,
//! small-problem inspection, and tests. Entries are computed one at a
//! time in an overflow-safe way: the exponent is assembled in log space
//! before a single `exp`.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::kernel::KernelSpec;
use crate::state::SinkhornState;

/// Default entry cap for [`plan_materialize`].
pub const PLAN_CAP: usize = 16_000_000;

/// Borrowed view of a state + kernel pair exposing plan entries.
#[derive(Debug, Clone, Copy)]
pub struct TransportPlanView<'a> {
    state: &'a SinkhornState,
    kernel: &'a KernelSpec,
}

impl<'a> TransportPlanView<'a> {
    pub fn new(state: &'a SinkhornState, kernel: &'a KernelSpec) -> Self {
        Self { state, kernel }
    }

    /// Number of points per side (the plan is `size x size`).
    pub fn size(&self) -> usize {
        self.state.len()
    }

    /// Plan entry `P_ij`, flat indices (column-major on 2D grids).
    pub fn entry(&self, i: usize, j: usize) -> Result<f64> {
        plan_entry(*self, i, j)
    }
}

/// Computes one plan entry
/// `P_ij = exp((alpha_i + beta_j) / epsilon) * phi_i * lambda^d * psi_j`
/// where for 1D grids `d = |i - j|` and for 2D grids the decay factors
/// along both axes multiply.
///
/// The factor `lambda^d` is folded into the exponent as `d * ln(lambda)`
/// so that huge `phi`-side exponents and tiny kernel entries cancel
/// before any `exp` is taken.
pub fn plan_entry(view: TransportPlanView<'_>, i: usize, j: usize) -> Result<f64> {
    let n = view.state.len();
    if i >= n || j >= n {
        return Err(Error::IndexOutOfRange { i, j, size: n });
    }
    let s = view.state;
    let eps = view.kernel.epsilon();
    let log_scale = (s.alpha[i] + s.beta[j]) / eps;

    // d1/d2: per-axis index distances.
    let (d1, d2) = match s.grid {
        Grid::D1(_) => (i.abs_diff(j), 0usize),
        Grid::D2(g) => {
            let (r1, c1) = g.unflatten(i);
            let (r2, c2) = g.unflatten(j);
            (r1.abs_diff(r2), c1.abs_diff(c2))
        }
    };
    let l1 = view.kernel.lambda1();
    let l2 = view.kernel.lambda2().unwrap_or(1.0);

    let mut log_kernel = 0.0;
    for (d, l) in [(d1, l1), (d2, l2)] {
        if d == 0 {
            continue; // lambda^0 = 1 even when lambda = 0
        }
        if l == 0.0 {
            return Ok(0.0);
        }
        log_kernel += d as f64 * l.ln();
    }

    Ok((log_scale + log_kernel).exp() * s.phi[i] * s.psi[j])
}

/// Dense row-major plan matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanMatrix {
    size: usize,
    data: Vec<f64>,
}

impl PlanMatrix {
    pub fn size(&self) -> usize {
        self.size
    }

    /// Row-major backing storage, length `size * size`.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.size + j]
    }

    /// Total mass of the plan.
    pub fn total_mass(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Row sums (the first marginal).
    pub fn row_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.size];
        for (i, row) in self.data.chunks_exact(self.size).enumerate() {
            sums[i] = row.iter().sum();
        }
        sums
    }

    /// Column sums (the second marginal).
    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.size];
        for row in self.data.chunks_exact(self.size) {
            for (s, v) in sums.iter_mut().zip(row) {
                *s += v;
            }
        }
        sums
    }

    /// Frobenius norm of the difference to another plan of equal size.
    pub fn frobenius_diff(&self, other: &PlanMatrix) -> Result<f64> {
        if self.size != other.size {
            return Err(Error::LengthMismatch {
                expected: self.size,
                got: other.size,
            });
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }

    /// Builds a plan matrix directly from row-major data (for oracles).
    pub fn from_data(size: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != size * size {
            return Err(Error::LengthMismatch {
                expected: size * size,
                got: data.len(),
            });
        }
        Ok(Self { size, data })
    }
}

/// Materializes the full plan, guarded by an entry cap (`size^2 <=
/// max_size`) so an oversized request fails fast instead of allocating.
pub fn plan_materialize(view: TransportPlanView<'_>, max_size: usize) -> Result<PlanMatrix> {
    let n = view.size();
    let entries = n.checked_mul(n).ok_or(Error::TooLarge {
        size: usize::MAX,
        cap: max_size,
    })?;
    if entries > max_size {
        return Err(Error::TooLarge {
            size: entries,
            cap: max_size,
        });
    }
    let mut data = Vec::with_capacity(entries);
    for i in 0..n {
        for j in 0..n {
            data.push(plan_entry(view, i, j)?);
        }
    }
    Ok(PlanMatrix { size: n, data })
}
