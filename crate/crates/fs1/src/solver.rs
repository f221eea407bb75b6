//! The scaling iteration, its termination logic, cost evaluation, and
//! the exact 1D reference metric.
//!
//! One full iteration updates `psi` from the current `phi`, then `phi`
//! from the new `psi`:
//!
//! ```text
//! psi <- v ⊘ (K phi)        (K symmetric, so Kᵀ apply = K apply)
//! phi <- u ⊘ (K psi)
//! ```
//!
//! All kernel products go through the linear-time sweeps ([`solve`]) or
//! the quadratic reference products ([`naive_solve`]); iteration
//! semantics, initialization, termination, and cost evaluation are
//! otherwise identical, which is what makes the naive path a usable
//! oracle and benchmark foil.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::grid::{Grid, Grid1D, Grid2D};
use crate::kernel::{
    naive_sweep_1d, naive_sweep_2d, stepwise_powers, sweep_1d, sweep_2d, weighted_apply_2d,
    weighted_sweep_1d, KernelSpec, NAIVE_CAP_1D, NAIVE_CAP_2D,
};
use crate::measure::{DiscreteMeasure, MASS_TOLERANCE};
use crate::stabilized::{stab_sweep_1d, stab_sweep_2d, stab_weighted_apply_2d, stab_weighted_sweep_1d};
use crate::state::SinkhornState;

/// Which scaling vector a half-step updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Psi,
    Phi,
}

/// Tuning knobs for [`solve`] / [`naive_solve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Regularization strength; must be positive and finite.
    pub epsilon: f64,
    /// Marginal-error threshold. `0.0` disables the convergence test so
    /// the loop runs exactly `itr_max` iterations (used for benchmarks).
    pub tol: f64,
    /// Hard iteration cap, at least 1.
    pub itr_max: usize,
    /// Enables absorption of large scalings into the log offsets.
    pub stabilized: bool,
    /// Absorption threshold on `max(‖phi‖_∞, ‖psi‖_∞)`; must exceed 1.
    pub tau: f64,
    /// Iterations between marginal-error checks, at least 1.
    pub check_interval: usize,
}

impl SolverConfig {
    /// Defaults: `tol = 1e-9`, `itr_max = 10000`, unstabilized,
    /// `tau = 1e10`, `check_interval = 1`.
    pub fn new(epsilon: f64) -> Self {
        Self {
            epsilon,
            tol: 1e-9,
            itr_max: 10_000,
            stabilized: false,
            tau: 1e10,
            check_interval: 1,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_itr_max(mut self, itr_max: usize) -> Self {
        self.itr_max = itr_max;
        self
    }

    pub fn with_stabilized(mut self, stabilized: bool) -> Self {
        self.stabilized = stabilized;
        self
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    pub fn with_check_interval(mut self, check_interval: usize) -> Self {
        self.check_interval = check_interval;
        self
    }

    /// Checks the field constraints listed on each field.
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::NonPositiveEpsilon(self.epsilon));
        }
        if !(self.tol >= 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidParameter("tol must be nonnegative and finite"));
        }
        if self.itr_max < 1 {
            return Err(Error::InvalidParameter("itr_max must be at least 1"));
        }
        if !(self.tau > 1.0 && self.tau.is_finite()) {
            return Err(Error::InvalidParameter("tau must be greater than 1 and finite"));
        }
        if self.check_interval < 1 {
            return Err(Error::InvalidParameter("check_interval must be at least 1"));
        }
        Ok(())
    }
}

/// One absorption of oversized scalings into the log offsets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilizationEvent {
    /// Full iteration after which the absorption fired.
    pub iteration: usize,
    /// `‖phi‖_∞` just before the absorption.
    pub max_phi: f64,
    /// `‖psi‖_∞` just before the absorption.
    pub max_psi: f64,
}

/// One marginal-error measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub iteration: usize,
    /// `‖diag(psi)·K·phi − v‖₁`; `+∞` marks an abnormal termination point.
    pub error: f64,
    /// Wall time since the solve started.
    pub elapsed_seconds: f64,
}

/// Outcome summary of a solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// Regularized transport cost at the final state; NaN after an
    /// abnormal termination.
    pub cost: f64,
    /// Completed full iterations.
    pub iterations: usize,
    /// True iff the marginal error reached `tol` (never with `tol = 0`).
    pub converged: bool,
    pub marginal_error_trace: Vec<TracePoint>,
    pub wall_time_seconds: f64,
    /// True iff a non-finite value appeared in `phi`, `psi`, or the
    /// marginal error; the state then holds the offending values.
    pub aborted_nonfinite: bool,
    pub stabilization_events: Vec<StabilizationEvent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Method {
    Fast,
    Naive,
}

/// Owned per-solve working memory plus the apply dispatch. Nothing here
/// allocates inside the iteration loop.
struct Engine {
    method: Method,
    kernel: KernelSpec,
    grid: Grid,
    inv_eps: f64,
    /// Set at the first absorption; until then the offsets are exactly
    /// zero and the plain sweeps are used, keeping the trajectory
    /// bitwise identical to an unstabilized run.
    stab_active: bool,
    denom: Vec<f64>,
    c1: Vec<f64>,
    c2: Vec<f64>,
    c3: Vec<f64>,
    /// 2D only: column-stage intermediate.
    z: Vec<f64>,
}

impl Engine {
    fn new(method: Method, kernel: KernelSpec, grid: Grid) -> Self {
        let size = grid.len();
        let col = match grid {
            Grid::D1(_) => size,
            Grid::D2(g) => g.rows(),
        };
        let z = match grid {
            Grid::D1(_) => Vec::new(),
            Grid::D2(_) => vec![0.0; size],
        };
        Self {
            method,
            kernel,
            grid,
            inv_eps: 1.0 / kernel.epsilon(),
            stab_active: false,
            denom: vec![0.0; size],
            c1: vec![0.0; col],
            c2: vec![0.0; col],
            c3: vec![0.0; col],
            z,
        }
    }

    /// Kernel product of `x` into `self.denom`, honoring the active
    /// offsets (`out_log`/`in_log` are ignored until absorption fires).
    fn apply(&mut self, x: &[f64], out_log: &[f64], in_log: &[f64]) {
        match (self.grid, self.method, self.stab_active) {
            (Grid::D1(_), Method::Fast, false) => {
                sweep_1d(x, self.kernel.lambda1(), &mut self.c1, &mut self.c2);
                for (d, (p, q)) in self.denom.iter_mut().zip(self.c1.iter().zip(self.c2.iter())) {
                    *d = p + q;
                }
            }
            (Grid::D1(_), Method::Fast, true) => {
                stab_sweep_1d(
                    x,
                    self.kernel.lambda1(),
                    self.inv_eps,
                    out_log,
                    in_log,
                    &mut self.c1,
                    &mut self.c2,
                    &mut self.c3,
                    &mut self.denom,
                );
            }
            (Grid::D1(_), Method::Naive, false) => {
                naive_sweep_1d(x, self.kernel.lambda1(), &mut self.denom);
            }
            (Grid::D1(_), Method::Naive, true) => {
                naive_stab_apply_1d(
                    x,
                    self.kernel.lambda1(),
                    self.inv_eps,
                    out_log,
                    in_log,
                    &mut self.denom,
                );
            }
            (Grid::D2(g), Method::Fast, false) => {
                sweep_2d(
                    x,
                    g.rows(),
                    g.cols(),
                    self.kernel.lambda1(),
                    self.kernel.lambda2().unwrap_or(0.0),
                    &mut self.z,
                    &mut self.c1,
                    &mut self.c2,
                    &mut self.denom,
                );
            }
            (Grid::D2(g), Method::Fast, true) => {
                stab_sweep_2d(
                    x,
                    g.rows(),
                    g.cols(),
                    self.kernel.lambda1(),
                    self.kernel.lambda2().unwrap_or(0.0),
                    self.inv_eps,
                    out_log,
                    in_log,
                    &mut self.z,
                    &mut self.c1,
                    &mut self.c2,
                    &mut self.c3,
                    &mut self.denom,
                );
            }
            (Grid::D2(g), Method::Naive, false) => {
                naive_sweep_2d(
                    x,
                    g.rows(),
                    g.cols(),
                    self.kernel.lambda1(),
                    self.kernel.lambda2().unwrap_or(0.0),
                    &mut self.denom,
                );
            }
            (Grid::D2(g), Method::Naive, true) => {
                naive_stab_apply_2d(
                    x,
                    g.rows(),
                    g.cols(),
                    self.kernel.lambda1(),
                    self.kernel.lambda2().unwrap_or(0.0),
                    self.inv_eps,
                    out_log,
                    in_log,
                    &mut self.denom,
                );
            }
        }
    }

    /// One half-step: replaces the named side with
    /// `target ⊘ K(other side)`. The update is committed even when it
    /// produces non-finite entries; the return value says whether the
    /// new side is entirely finite.
    fn halfstep(&mut self, side: Side, state: &mut SinkhornState, target: &[f64]) -> bool {
        match side {
            Side::Psi => {
                // K applied to phi, rescaled output on the psi side.
                let (phi, psi) = (&state.phi, &mut state.psi);
                self.apply(phi, &state.beta, &state.alpha);
                for (s, (t, d)) in psi.iter_mut().zip(target.iter().zip(self.denom.iter())) {
                    *s = t / d;
                }
                psi.iter().all(|v| v.is_finite())
            }
            Side::Phi => {
                let (psi, phi) = (&state.psi, &mut state.phi);
                self.apply(psi, &state.alpha, &state.beta);
                for (s, (t, d)) in phi.iter_mut().zip(target.iter().zip(self.denom.iter())) {
                    *s = t / d;
                }
                phi.iter().all(|v| v.is_finite())
            }
        }
    }

    /// `‖diag(psi)·K·phi − v‖₁`, or `+∞` if any intermediate is
    /// non-finite.
    fn marginal_error(&mut self, state: &SinkhornState, v: &[f64]) -> f64 {
        self.apply(&state.phi, &state.beta, &state.alpha);
        let mut err = 0.0;
        for ((p, d), t) in state.psi.iter().zip(self.denom.iter()).zip(v.iter()) {
            err += (p * d - t).abs();
        }
        if err.is_finite() {
            err
        } else {
            f64::INFINITY
        }
    }

    /// Folds the scalings into the offsets: `alpha += eps·ln(phi)`,
    /// `beta += eps·ln(psi)`, then resets both scalings to 1. Plan
    /// entries are unchanged by construction.
    fn absorb(&mut self, state: &mut SinkhornState) {
        let eps = self.kernel.epsilon();
        for (a, p) in state.alpha.iter_mut().zip(state.phi.iter_mut()) {
            *a += eps * p.ln();
            *p = 1.0;
        }
        for (b, p) in state.beta.iter_mut().zip(state.psi.iter_mut()) {
            *b += eps * p.ln();
            *p = 1.0;
        }
        self.stab_active = true;
    }

    /// Regularized transport cost at the current state.
    fn cost(&mut self, state: &SinkhornState) -> Result<f64> {
        let t = match self.grid {
            Grid::D1(g) => {
                let n = g.len();
                let mut t = vec![0.0; n];
                if self.stab_active {
                    let mut w = vec![0.0; n];
                    stab_weighted_sweep_1d(
                        &state.psi,
                        self.kernel.lambda1(),
                        g.spacing(),
                        self.inv_eps,
                        &state.alpha,
                        &state.beta,
                        &mut w,
                        &mut self.c1,
                        &mut self.c2,
                        &mut t,
                    );
                } else {
                    weighted_sweep_1d(
                        &state.psi,
                        self.kernel.lambda1(),
                        g.spacing(),
                        &mut self.c1,
                        &mut self.c2,
                        &mut t,
                    );
                }
                t
            }
            Grid::D2(g) => {
                let lambda2 = self.kernel.lambda2().unwrap_or(0.0);
                if self.stab_active {
                    stab_weighted_apply_2d(
                        &state.psi,
                        g.rows(),
                        g.cols(),
                        self.kernel.lambda1(),
                        lambda2,
                        g.spacing_rows(),
                        g.spacing_cols(),
                        self.inv_eps,
                        &state.alpha,
                        &state.beta,
                    )
                } else {
                    weighted_apply_2d(
                        &state.psi,
                        g.rows(),
                        g.cols(),
                        self.kernel.lambda1(),
                        lambda2,
                        g.spacing_rows(),
                        g.spacing_cols(),
                    )?
                }
            }
        };
        let cost: f64 = state.phi.iter().zip(t.iter()).map(|(p, ti)| p * ti).sum();
        if cost.is_finite() {
            Ok(cost)
        } else {
            Err(Error::NonFiniteResult)
        }
    }
}

/// Quadratic rescaled apply: materialization semantics, one entry at a
/// time. Oracle-grade, not overflow-safe for extreme offsets.
fn naive_stab_apply_1d(
    x: &[f64],
    lambda: f64,
    inv_eps: f64,
    out_log: &[f64],
    in_log: &[f64],
    y: &mut [f64],
) {
    let n = x.len();
    let pows = stepwise_powers(lambda, n);
    for i in 0..n {
        let mut acc = 0.0;
        for j in 0..n {
            acc += ((out_log[i] + in_log[j]) * inv_eps).exp() * pows[i.abs_diff(j)] * x[j];
        }
        y[i] = acc;
    }
}

#[allow(clippy::too_many_arguments)]
fn naive_stab_apply_2d(
    x: &[f64],
    n: usize,
    m: usize,
    lambda1: f64,
    lambda2: f64,
    inv_eps: f64,
    out_log: &[f64],
    in_log: &[f64],
    y: &mut [f64],
) {
    let pow1 = stepwise_powers(lambda1, n);
    let pow2 = stepwise_powers(lambda2, m);
    for j1 in 0..m {
        for i1 in 0..n {
            let o = out_log[j1 * n + i1];
            let mut acc = 0.0;
            for j2 in 0..m {
                let w2 = pow2[j1.abs_diff(j2)];
                if w2 == 0.0 {
                    continue;
                }
                for i2 in 0..n {
                    let idx = j2 * n + i2;
                    acc += ((o + in_log[idx]) * inv_eps).exp() * pow1[i1.abs_diff(i2)] * w2 * x[idx];
                }
            }
            y[j1 * n + i1] = acc;
        }
    }
}

// ---------------------------------------------------------------------------
// Public single-step operations.
// ---------------------------------------------------------------------------

/// Functional half-step: returns a state whose named side has been
/// replaced by `target ⊘ K(other side)`; the other side is untouched.
///
/// Errors with [`Error::NonFiniteResult`] if the quotient produced any
/// non-finite entry (the trigger for abnormal termination in
/// unstabilized solves).
pub fn sinkhorn_halfstep(
    side: Side,
    state: &SinkhornState,
    target: &DiscreteMeasure,
    kernel: &KernelSpec,
) -> Result<SinkhornState> {
    if target.len() != state.len() {
        return Err(Error::GridMismatch);
    }
    let mut next = state.clone();
    let mut engine = Engine::new(Method::Fast, *kernel, *state.grid());
    engine.stab_active = state.has_absorbed();
    if engine.halfstep(side, &mut next, target.weights()) {
        Ok(next)
    } else {
        Err(Error::NonFiniteResult)
    }
}

/// Functional absorption: moves `eps·ln(phi)` into `alpha` and
/// `eps·ln(psi)` into `beta`, resetting both scalings to all-ones.
/// Every transport-plan entry is unchanged up to rounding.
pub fn absorb(state: &SinkhornState, kernel: &KernelSpec) -> Result<SinkhornState> {
    let n = state.len();
    for (idx, v) in state.phi.iter().chain(state.psi.iter()).enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFiniteInput);
        }
        if *v <= 0.0 {
            return Err(Error::NonPositiveInput { index: idx % n });
        }
    }
    let mut next = state.clone();
    let mut engine = Engine::new(Method::Fast, *kernel, *state.grid());
    engine.absorb(&mut next);
    Ok(next)
}

/// `‖diag(psi)·K·phi − v‖₁`: the distance of the plan's second marginal
/// from its target. Returns `+∞` when a non-finite value appears
/// anywhere in the computation; it never errors.
pub fn marginal_error(state: &SinkhornState, v: &DiscreteMeasure, kernel: &KernelSpec) -> f64 {
    if v.len() != state.len() {
        return f64::INFINITY;
    }
    let mut engine = Engine::new(Method::Fast, *kernel, *state.grid());
    engine.stab_active = state.has_absorbed();
    engine.marginal_error(state, v.weights())
}

/// Transport cost `Σ_ij P_ij · |i−j| h` of the plan implied by `state`
/// on a 1D grid, in `O(N)` via the distance-weighted sweeps.
pub fn transport_cost_1d(state: &SinkhornState, kernel: &KernelSpec, grid: Grid1D) -> Result<f64> {
    if grid.len() != state.len() {
        return Err(Error::GridMismatch);
    }
    let mut engine = Engine::new(Method::Fast, *kernel, Grid::D1(grid));
    engine.stab_active = state.has_absorbed();
    engine.cost(state)
}

/// Transport cost with the anisotropic 2D ground distance
/// `|i1−i2| h1 + |j1−j2| h2`, in `O(NM)`.
pub fn transport_cost_2d(state: &SinkhornState, kernel: &KernelSpec, grid: Grid2D) -> Result<f64> {
    if grid.len() != state.len() {
        return Err(Error::GridMismatch);
    }
    let mut engine = Engine::new(Method::Fast, *kernel, Grid::D2(grid));
    engine.stab_active = state.has_absorbed();
    engine.cost(state)
}

// ---------------------------------------------------------------------------
// Full solves.
// ---------------------------------------------------------------------------

/// Runs the scaling iteration with the linear-time kernel products.
///
/// Returns the report plus the final state (which, after an abnormal
/// termination, holds the offending non-finite values for post-mortem).
pub fn solve(
    u: &DiscreteMeasure,
    v: &DiscreteMeasure,
    config: &SolverConfig,
) -> Result<(SolveReport, SinkhornState)> {
    solve_with(Method::Fast, u, v, config)
}

/// [`solve`] with quadratic-time kernel products: identical
/// initialization, iteration semantics, termination, and cost
/// evaluation. Exists as an oracle and benchmark baseline, hence the
/// size caps (16384 points in 1D, 65536 in 2D).
pub fn naive_solve(
    u: &DiscreteMeasure,
    v: &DiscreteMeasure,
    config: &SolverConfig,
) -> Result<(SolveReport, SinkhornState)> {
    let size = u.len();
    let cap = match u.grid() {
        Grid::D1(_) => NAIVE_CAP_1D,
        Grid::D2(_) => NAIVE_CAP_2D,
    };
    if size > cap {
        return Err(Error::TooLarge { size, cap });
    }
    solve_with(Method::Naive, u, v, config)
}

fn solve_with(
    method: Method,
    u: &DiscreteMeasure,
    v: &DiscreteMeasure,
    config: &SolverConfig,
) -> Result<(SolveReport, SinkhornState)> {
    config.validate()?;
    if u.grid() != v.grid() {
        return Err(Error::GridMismatch);
    }
    u.require_strictly_positive()?;
    v.require_strictly_positive()?;

    let grid = u.grid();
    let kernel = KernelSpec::for_grid(grid, config.epsilon)?;
    let mut engine = Engine::new(method, kernel, grid);
    let mut state = SinkhornState::uniform_init(grid);

    let start = Instant::now();
    let mut trace = Vec::new();
    let mut events = Vec::new();
    let mut converged = false;
    let mut aborted = false;

    for iter in 1..=config.itr_max {
        let psi_ok = engine.halfstep(Side::Psi, &mut state, v.weights());
        let phi_ok = psi_ok && engine.halfstep(Side::Phi, &mut state, u.weights());
        state.iteration = iter;

        if !psi_ok || !phi_ok {
            trace.push(TracePoint {
                iteration: iter,
                error: f64::INFINITY,
                elapsed_seconds: start.elapsed().as_secs_f64(),
            });
            aborted = true;
            break;
        }

        if config.stabilized {
            let max_phi = state.phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let max_psi = state.psi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if max_phi.max(max_psi) > config.tau {
                engine.absorb(&mut state);
                events.push(StabilizationEvent {
                    iteration: iter,
                    max_phi,
                    max_psi,
                });
            }
        }

        if iter % config.check_interval == 0 || iter == config.itr_max {
            let err = engine.marginal_error(&state, v.weights());
            trace.push(TracePoint {
                iteration: iter,
                error: err,
                elapsed_seconds: start.elapsed().as_secs_f64(),
            });
            if !err.is_finite() {
                aborted = true;
                break;
            }
            if config.tol > 0.0 && err <= config.tol {
                converged = true;
                break;
            }
        }
    }

    let cost = if aborted {
        f64::NAN
    } else {
        engine.cost(&state).unwrap_or(f64::NAN)
    };

    let report = SolveReport {
        cost,
        iterations: state.iteration,
        converged,
        marginal_error_trace: trace,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        aborted_nonfinite: aborted,
        stabilization_events: events,
    };
    Ok((report, state))
}

// ---------------------------------------------------------------------------
// Exact 1D reference metric.
// ---------------------------------------------------------------------------

/// Exact (unregularized) 1-Wasserstein distance between two measures on
/// the same uniform 1D grid: `h · Σ_k |Σ_{i≤k} (u_i − v_i)|`, the
/// closed form for transport on a line. `O(N)`.
pub fn exact_w1_1d(u: &[f64], v: &[f64], h: f64) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::LengthMismatch {
            expected: u.len(),
            got: v.len(),
        });
    }
    if u.iter().chain(v.iter()).any(|x| !x.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    if !(h >= 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter("spacing must be nonnegative and finite"));
    }
    let (su, sv): (f64, f64) = (u.iter().sum(), v.iter().sum());
    if (su - sv).abs() > MASS_TOLERANCE {
        return Err(Error::MassMismatch { left: su, right: sv });
    }
    let mut cum = 0.0;
    let mut total = 0.0;
    for k in 0..u.len().saturating_sub(1) {
        cum += u[k] - v[k];
        total += cum.abs();
    }
    Ok(h * total)
}
