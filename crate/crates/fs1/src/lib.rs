//! Entropy-regularized 1-Wasserstein distances on uniform 1D/2D grids
//! in linear time per iteration.
//!
//! The ground cost on a uniform grid makes the Gibbs kernel geometric,
//! `K_ij = lambda^{|i-j|}` with `lambda = exp(-h/epsilon)`, so a
//! kernel-vector product collapses to one forward and one backward
//! first-order recursion ([`fast_apply_1d`]); 2D kernels factor into an
//! axis-by-axis composition of the same sweeps ([`fast_apply_2d`]). The
//! scaling iteration built on top ([`solve`]) therefore costs `O(N)`
//! per iteration instead of the `O(N^2)` of a materialized kernel
//! ([`naive_solve`] keeps that path alive as an oracle and baseline).
//!
//! For small `epsilon` the scaling vectors overflow doubles; the
//! stabilized path absorbs them into log-domain offsets ([`absorb`])
//! and applies the rescaled kernel through neighboring-difference
//! exponentials ([`stabilized_fast_apply_1d`]) without ever forming it.
//!
//! ```
//! use fs1::{random_measure_1d, solve, SolverConfig};
//!
//! let u = random_measure_1d(256, 1).unwrap();
//! let v = random_measure_1d(256, 2).unwrap();
//! let (report, _state) = solve(&u, &v, &SolverConfig::new(0.1)).unwrap();
//! assert!(report.converged);
//! assert!(report.cost > 0.0);
//! ```

mod error;
mod grid;
mod io;
mod kernel;
mod measure;
mod plan;
mod problems;
mod solver;
mod stabilized;
mod state;

pub use error::{Error, Result};
pub use grid::{Grid, Grid1D, Grid2D};
pub use io::{image_to_measure, load_matrix, GridMatrix, MatrixFormat};
pub use kernel::{
    fast_apply_1d, fast_apply_2d, fast_weighted_apply_1d, lambda_from, naive_apply_1d,
    naive_apply_1d_capped, naive_apply_2d, naive_apply_2d_capped, weighted_apply_2d, KernelSpec,
    RecursionBuffers, NAIVE_CAP_1D, NAIVE_CAP_2D,
};
pub use measure::{validate_measure, DiscreteMeasure, MASS_TOLERANCE};
pub use plan::{plan_entry, plan_materialize, PlanMatrix, TransportPlanView, PLAN_CAP};
pub use problems::{
    normalize_signal, random_measure_1d, random_measure_2d, ricker, ricker_pair,
    SignalNormalizationParams, RNG_ALGORITHM,
};
pub use solver::{
    absorb, exact_w1_1d, marginal_error, naive_solve, sinkhorn_halfstep, solve, transport_cost_1d,
    transport_cost_2d, Side, SolveReport, SolverConfig, StabilizationEvent, TracePoint,
};
pub use stabilized::{stabilized_fast_apply_1d, stabilized_fast_apply_2d};
pub use state::SinkhornState;
