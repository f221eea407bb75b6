//! Kernel–vector products for the geometric decay kernel
//! `K_ij = lambda^{|i-j|}`, in linear time, plus quadratic-time
//! reference implementations used as oracles and baselines.
//!
//! The linear-time path never materializes `K`. It splits the product
//! into a lower-triangular running sum `p` (forward sweep) and a
//! strictly-upper running sum `q` (backward sweep):
//!
//! ```text
//! p_0 = x_0          p_k = lambda * p_{k-1} + x_k
//! q_{N-1} = 0        q_k = lambda * (q_{k+1} + x_{k+1})
//! y_k = p_k + q_k  =  sum_j lambda^{|k-j|} x_j
//! ```
//!
//! Each sweep is a Horner-style evaluation: `2(N-1)` multiplications and
//! `2(N-1)` additions total, plus `N` final adds.

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Default size cap for the quadratic 1D reference apply.
pub const NAIVE_CAP_1D: usize = 16384;
/// Default entry cap (`n * m`) for the quadratic 2D reference apply.
pub const NAIVE_CAP_2D: usize = 65536;

/// Regularization strength together with the per-axis decay factors it
/// induces on a given grid: `lambda = exp(-h / epsilon)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    epsilon: f64,
    lambda1: f64,
    lambda2: Option<f64>,
}

/// Computes the decay factor `exp(-h / epsilon)`.
///
/// May underflow to exactly 0 for `h / epsilon` beyond ~745; that is an
/// effectively diagonal kernel and is allowed (see
/// [`KernelSpec::is_effectively_diagonal`]).
pub fn lambda_from(h: f64, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::NonPositiveEpsilon(epsilon));
    }
    if !(h >= 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter("spacing must be nonnegative and finite"));
    }
    Ok((-h / epsilon).exp())
}

impl KernelSpec {
    /// 1D kernel with an explicit decay factor in `[0, 1]`.
    pub fn new_1d(epsilon: f64, lambda1: f64) -> Result<Self> {
        check_lambda(lambda1)?;
        check_epsilon(epsilon)?;
        Ok(Self {
            epsilon,
            lambda1,
            lambda2: None,
        })
    }

    /// 2D kernel with explicit per-axis decay factors in `[0, 1]`.
    pub fn new_2d(epsilon: f64, lambda1: f64, lambda2: f64) -> Result<Self> {
        check_lambda(lambda1)?;
        check_lambda(lambda2)?;
        check_epsilon(epsilon)?;
        Ok(Self {
            epsilon,
            lambda1,
            lambda2: Some(lambda2),
        })
    }

    /// Derives the decay factors for `grid` at regularization `epsilon`.
    pub fn for_grid(grid: Grid, epsilon: f64) -> Result<Self> {
        match grid {
            Grid::D1(g) => Self::new_1d(epsilon, lambda_from(g.spacing(), epsilon)?),
            Grid::D2(g) => Self::new_2d(
                epsilon,
                lambda_from(g.spacing_rows(), epsilon)?,
                lambda_from(g.spacing_cols(), epsilon)?,
            ),
        }
    }

    /// Regularization strength.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Decay factor along the (only, or vertical) axis.
    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    /// Decay factor along the horizontal axis; `None` for 1D kernels.
    pub fn lambda2(&self) -> Option<f64> {
        self.lambda2
    }

    /// True when any decay factor is exactly 1 (zero spacing or
    /// effectively infinite epsilon) — outside the stability analysis.
    pub fn has_unit_lambda(&self) -> bool {
        self.lambda1 == 1.0 || self.lambda2 == Some(1.0)
    }

    /// True when any decay factor underflowed to exactly 0; the kernel
    /// degenerates to the identity and couples nothing.
    pub fn is_effectively_diagonal(&self) -> bool {
        self.lambda1 == 0.0 || self.lambda2 == Some(0.0)
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda.is_finite() && (0.0..=1.0).contains(&lambda)) {
        return Err(Error::LambdaOutOfRange(lambda));
    }
    Ok(())
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::NonPositiveEpsilon(epsilon));
    }
    Ok(())
}

fn check_finite(x: &[f64]) -> Result<()> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    Ok(())
}

/// Reusable scratch for the forward/backward sweeps, so the solver loop
/// allocates nothing per iteration. `p`/`q` serve one sweep pair and
/// `r`/`s` the other, mirroring the two halves of a full iteration.
#[derive(Debug, Default, Clone)]
pub struct RecursionBuffers {
    pub(crate) p: Vec<f64>,
    pub(crate) q: Vec<f64>,
    pub(crate) r: Vec<f64>,
    pub(crate) s: Vec<f64>,
}

impl RecursionBuffers {
    /// Empty buffers; they grow on first use.
    pub fn new() -> Self {
        Self::default()
    }

    /// Buffers pre-sized for operand length `n`.
    pub fn with_len(n: usize) -> Self {
        let mut b = Self::default();
        b.ensure(n);
        b
    }

    pub(crate) fn ensure(&mut self, n: usize) {
        if self.p.len() < n {
            self.p.resize(n, 0.0);
            self.q.resize(n, 0.0);
            self.r.resize(n, 0.0);
            self.s.resize(n, 0.0);
        }
    }
}

// ---------------------------------------------------------------------------
// Quadratic reference implementations (oracles / baselines).
// ---------------------------------------------------------------------------

/// Direct evaluation of `y_k = sum_j lambda^{|k-j|} x_j` with the default
/// size cap. Powers of `lambda` are formed by stepwise multiplication —
/// never as `exp(-m h / epsilon)` — so no power is recomputed from scratch.
pub fn naive_apply_1d(x: &[f64], lambda: f64) -> Result<Vec<f64>> {
    naive_apply_1d_capped(x, lambda, NAIVE_CAP_1D)
}

/// [`naive_apply_1d`] with a caller-chosen size cap.
pub fn naive_apply_1d_capped(x: &[f64], lambda: f64, cap: usize) -> Result<Vec<f64>> {
    check_lambda(lambda)?;
    check_finite(x)?;
    let n = x.len();
    if n > cap {
        return Err(Error::TooLarge { size: n, cap });
    }
    let mut y = vec![0.0; n];
    naive_sweep_1d(x, lambda, &mut y);
    Ok(y)
}

pub(crate) fn naive_sweep_1d(x: &[f64], lambda: f64, y: &mut [f64]) {
    let n = x.len();
    for k in 0..n {
        let mut acc = x[k];
        let mut pow = 1.0;
        for &xj in x[..k].iter().rev() {
            pow *= lambda;
            acc += pow * xj;
        }
        let mut pow = 1.0;
        for &xj in &x[k + 1..] {
            pow *= lambda;
            acc += pow * xj;
        }
        y[k] = acc;
    }
}

/// Direct evaluation of the 2D block-kernel product
/// `Y_{(i1,j1)} = sum_{i2,j2} lambda1^{|i1-i2|} lambda2^{|j1-j2|} X_{(i2,j2)}`
/// on a column-major flat array, with the default entry cap.
pub fn naive_apply_2d(x: &[f64], n: usize, m: usize, lambda1: f64, lambda2: f64) -> Result<Vec<f64>> {
    naive_apply_2d_capped(x, n, m, lambda1, lambda2, NAIVE_CAP_2D)
}

/// [`naive_apply_2d`] with a caller-chosen entry cap.
pub fn naive_apply_2d_capped(
    x: &[f64],
    n: usize,
    m: usize,
    lambda1: f64,
    lambda2: f64,
    cap: usize,
) -> Result<Vec<f64>> {
    check_lambda(lambda1)?;
    check_lambda(lambda2)?;
    check_finite(x)?;
    check_dims(x, n, m)?;
    if n * m > cap {
        return Err(Error::TooLarge { size: n * m, cap });
    }
    let mut y = vec![0.0; n * m];
    naive_sweep_2d(x, n, m, lambda1, lambda2, &mut y);
    Ok(y)
}

pub(crate) fn naive_sweep_2d(x: &[f64], n: usize, m: usize, lambda1: f64, lambda2: f64, y: &mut [f64]) {
    // Stepwise power tables along each axis.
    let pow1 = stepwise_powers(lambda1, n);
    let pow2 = stepwise_powers(lambda2, m);
    for j1 in 0..m {
        for i1 in 0..n {
            let mut acc = 0.0;
            for j2 in 0..m {
                let w2 = pow2[j1.abs_diff(j2)];
                if w2 == 0.0 {
                    continue;
                }
                let col = &x[j2 * n..(j2 + 1) * n];
                let mut inner = 0.0;
                for (i2, &xv) in col.iter().enumerate() {
                    inner += pow1[i1.abs_diff(i2)] * xv;
                }
                acc += w2 * inner;
            }
            y[j1 * n + i1] = acc;
        }
    }
}

/// `[1, lambda, lambda^2, ...]` of length `len`, built by repeated
/// multiplication.
pub(crate) fn stepwise_powers(lambda: f64, len: usize) -> Vec<f64> {
    let mut pows = Vec::with_capacity(len);
    let mut pow = 1.0;
    for _ in 0..len {
        pows.push(pow);
        pow *= lambda;
    }
    pows
}

fn check_dims(x: &[f64], n: usize, m: usize) -> Result<()> {
    if n == 0 || m == 0 || x.len() != n * m {
        return Err(Error::LengthMismatch {
            expected: n * m,
            got: x.len(),
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Linear-time sweeps.
// ---------------------------------------------------------------------------

/// Linear-time `y_k = sum_j lambda^{|k-j|} x_j`.
///
/// One forward and one backward sweep; `buffers` is caller-owned scratch
/// reused across calls. Accepts `lambda` in `[0, 1]`; `lambda = 1`
/// degenerates to plain prefix/suffix sums (see
/// [`KernelSpec::has_unit_lambda`]).
pub fn fast_apply_1d(x: &[f64], lambda: f64, buffers: &mut RecursionBuffers) -> Result<Vec<f64>> {
    check_lambda(lambda)?;
    check_finite(x)?;
    let n = x.len();
    buffers.ensure(n);
    sweep_1d(x, lambda, &mut buffers.p[..n], &mut buffers.q[..n]);
    Ok(buffers.p[..n]
        .iter()
        .zip(&buffers.q[..n])
        .map(|(p, q)| p + q)
        .collect())
}

/// Fills `p` with the forward (lower-triangular) partial sums and `q`
/// with the backward (strictly-upper) ones; `y = p + q` elementwise.
pub(crate) fn sweep_1d(x: &[f64], lambda: f64, p: &mut [f64], q: &mut [f64]) {
    let n = x.len();
    debug_assert!(p.len() == n && q.len() == n);
    if n == 0 {
        return;
    }
    p[0] = x[0];
    for k in 1..n {
        p[k] = lambda * p[k - 1] + x[k];
    }
    q[n - 1] = 0.0;
    for k in (0..n - 1).rev() {
        q[k] = lambda * (q[k + 1] + x[k + 1]);
    }
}

/// Linear-time distance-weighted product
/// `t_k = sum_j |k-j| * h * lambda^{|k-j|} * x_j`, the inner sum of the
/// transport-cost evaluation.
///
/// Uses the derivative recursions of the plain sweeps: with `p`, `q` as in
/// [`fast_apply_1d`],
///
/// ```text
/// p'_0 = 0          p'_k = lambda * (p'_{k-1} + p_{k-1})
/// q'_{N-1} = 0      q'_k = lambda * q'_{k+1} + q_k
/// t_k = h * (p'_k + q'_k)
/// ```
pub fn fast_weighted_apply_1d(x: &[f64], lambda: f64, h: f64) -> Result<Vec<f64>> {
    check_lambda(lambda)?;
    check_finite(x)?;
    if !(h >= 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter("spacing must be nonnegative and finite"));
    }
    let n = x.len();
    let mut t = vec![0.0; n];
    let mut state = vec![0.0; 2 * n];
    let (main, deriv) = state.split_at_mut(n);
    weighted_sweep_1d(x, lambda, h, main, deriv, &mut t);
    Ok(t)
}

/// Weighted sweep core: `scratch` holds the plain accumulation, `deriv`
/// the distance-weighted one; writes `t = h * deriv_total` into `out`.
pub(crate) fn weighted_sweep_1d(
    x: &[f64],
    lambda: f64,
    h: f64,
    scratch: &mut [f64],
    deriv: &mut [f64],
    out: &mut [f64],
) {
    let n = x.len();
    debug_assert!(scratch.len() == n && deriv.len() == n && out.len() == n);
    if n == 0 {
        return;
    }
    // Forward: scratch = p, deriv = p'.
    scratch[0] = x[0];
    deriv[0] = 0.0;
    for k in 1..n {
        deriv[k] = lambda * (deriv[k - 1] + scratch[k - 1]);
        scratch[k] = lambda * scratch[k - 1] + x[k];
    }
    out[..n].copy_from_slice(&deriv[..n]);
    // Backward: scratch = q, deriv = q'.
    scratch[n - 1] = 0.0;
    deriv[n - 1] = 0.0;
    for k in (0..n - 1).rev() {
        scratch[k] = lambda * (scratch[k + 1] + x[k + 1]);
        deriv[k] = lambda * deriv[k + 1] + scratch[k];
    }
    for k in 0..n {
        out[k] = h * (out[k] + deriv[k]);
    }
}

/// Linear-time 2D block-kernel product on a column-major flat array:
/// every column gets the `lambda1` sweep, then the same forward/backward
/// recursion runs across columns with `lambda2`. Cost `O(n*m)`.
pub fn fast_apply_2d(x: &[f64], n: usize, m: usize, lambda1: f64, lambda2: f64) -> Result<Vec<f64>> {
    check_lambda(lambda1)?;
    check_lambda(lambda2)?;
    check_finite(x)?;
    check_dims(x, n, m)?;
    let mut z = vec![0.0; n * m];
    let mut out = vec![0.0; n * m];
    let mut col = vec![0.0; 2 * n];
    let (cp, cq) = col.split_at_mut(n);
    sweep_2d(x, n, m, lambda1, lambda2, &mut z, cp, cq, &mut out);
    Ok(out)
}

/// 2D sweep core. `z` and `out` are `n*m` scratch/output; `cp`, `cq` are
/// length-`n` column scratch.
#[allow(clippy::too_many_arguments)]
pub(crate) fn sweep_2d(
    x: &[f64],
    n: usize,
    m: usize,
    lambda1: f64,
    lambda2: f64,
    z: &mut [f64],
    cp: &mut [f64],
    cq: &mut [f64],
    out: &mut [f64],
) {
    // Stage 1: apply the lambda1 kernel to every column.
    for j in 0..m {
        let src = &x[j * n..(j + 1) * n];
        sweep_1d(src, lambda1, cp, cq);
        for (zi, (p, q)) in z[j * n..(j + 1) * n].iter_mut().zip(cp.iter().zip(cq.iter())) {
            *zi = p + q;
        }
    }
    // Stage 2, backward across columns (reads original z, writes out):
    // Q_{m-1} = 0, Q_k = lambda2 * (Q_{k+1} + Z_{k+1}).
    out[(m - 1) * n..].fill(0.0);
    for k in (0..m - 1).rev() {
        let (head, tail) = out.split_at_mut((k + 1) * n);
        let dst = &mut head[k * n..];
        let prev = &tail[..n];
        let znext = &z[(k + 1) * n..(k + 2) * n];
        for i in 0..n {
            dst[i] = lambda2 * (prev[i] + znext[i]);
        }
    }
    // Stage 2, forward across columns in place: P_0 = Z_0,
    // P_k = lambda2 * P_{k-1} + Z_k overwrites Z_k.
    for k in 1..m {
        let (head, tail) = z.split_at_mut(k * n);
        let prev = &head[(k - 1) * n..];
        let dst = &mut tail[..n];
        for i in 0..n {
            dst[i] += lambda2 * prev[i];
        }
    }
    // Y = P + Q.
    for (o, zi) in out.iter_mut().zip(z.iter()) {
        *o += *zi;
    }
}

/// Linear-time 2D distance-weighted product
/// `T_{(k,l)} = sum_{i,j} lambda1^{|k-i|} lambda2^{|l-j|}
///             (|k-i| h1 + |l-j| h2) X_{(i,j)}`.
///
/// The weight splits into two separable terms, each a composition of one
/// weighted and one plain axis pass:
/// `T = weighted_1 (plain_2 X) + plain_1 (weighted_2 X)` up to axis order.
pub fn weighted_apply_2d(
    x: &[f64],
    n: usize,
    m: usize,
    lambda1: f64,
    lambda2: f64,
    h1: f64,
    h2: f64,
) -> Result<Vec<f64>> {
    check_lambda(lambda1)?;
    check_lambda(lambda2)?;
    check_finite(x)?;
    check_dims(x, n, m)?;
    if !(h1 >= 0.0 && h1.is_finite() && h2 >= 0.0 && h2.is_finite()) {
        return Err(Error::InvalidParameter("spacings must be nonnegative and finite"));
    }

    let mut col = vec![0.0; 4 * n];
    let (a, b) = col.split_at_mut(2 * n);
    let (c1, c2) = a.split_at_mut(n);
    let (c3, c4) = b.split_at_mut(n);

    // Term 1: distance-weighted along the column axis, plain across columns.
    let mut za = vec![0.0; n * m];
    for j in 0..m {
        let src = &x[j * n..(j + 1) * n];
        weighted_sweep_1d(src, lambda1, h1, c1, c2, &mut za[j * n..(j + 1) * n]);
    }
    let mut term1 = vec![0.0; n * m];
    cross_column_plain(&za, n, m, lambda2, &mut term1);

    // Term 2: plain along the column axis, distance-weighted across columns.
    let mut zb = vec![0.0; n * m];
    for j in 0..m {
        let src = &x[j * n..(j + 1) * n];
        sweep_1d(src, lambda1, c1, c2);
        for (zi, (p, q)) in zb[j * n..(j + 1) * n].iter_mut().zip(c1.iter().zip(c2.iter())) {
            *zi = p + q;
        }
    }
    let mut term2 = vec![0.0; n * m];
    cross_column_weighted(&zb, n, m, lambda2, h2, c1, c2, c3, c4, &mut term2);

    for (t1, t2) in term1.iter_mut().zip(term2.iter()) {
        *t1 += *t2;
    }
    Ok(term1)
}

/// Plain forward/backward recursion across columns (the stage-2 part of
/// [`sweep_2d`]) reading `z` immutably.
fn cross_column_plain(z: &[f64], n: usize, m: usize, lambda2: f64, out: &mut [f64]) {
    // Backward into out.
    out[(m - 1) * n..].fill(0.0);
    for k in (0..m - 1).rev() {
        let (head, tail) = out.split_at_mut((k + 1) * n);
        let dst = &mut head[k * n..];
        let prev = &tail[..n];
        let znext = &z[(k + 1) * n..(k + 2) * n];
        for i in 0..n {
            dst[i] = lambda2 * (prev[i] + znext[i]);
        }
    }
    // Forward, accumulating P on the fly in a running column.
    let mut running = z[..n].to_vec();
    for (o, r) in out[..n].iter_mut().zip(running.iter()) {
        *o += *r;
    }
    for k in 1..m {
        let zk = &z[k * n..(k + 1) * n];
        let dst = &mut out[k * n..(k + 1) * n];
        for i in 0..n {
            running[i] = lambda2 * running[i] + zk[i];
            dst[i] += running[i];
        }
    }
}

/// Distance-weighted recursion across columns: adds
/// `h2 * sum_j |l-j| lambda2^{|l-j|} z[:, j]` into `out`.
#[allow(clippy::too_many_arguments)]
fn cross_column_weighted(
    z: &[f64],
    n: usize,
    m: usize,
    lambda2: f64,
    h2: f64,
    p: &mut [f64],
    pp: &mut [f64],
    q: &mut [f64],
    qq: &mut [f64],
    out: &mut [f64],
) {
    // Forward: PP_k = lambda2 * (PP_{k-1} + P_{k-1}), P_k = lambda2 * P_{k-1} + Z_k.
    p.copy_from_slice(&z[..n]);
    pp.fill(0.0);
    out[..n].fill(0.0);
    for k in 1..m {
        let zk = &z[k * n..(k + 1) * n];
        let dst = &mut out[k * n..(k + 1) * n];
        for i in 0..n {
            pp[i] = lambda2 * (pp[i] + p[i]);
            p[i] = lambda2 * p[i] + zk[i];
            dst[i] = pp[i];
        }
    }
    // Backward: Q_k = lambda2 * (Q_{k+1} + Z_{k+1}), QQ_k = lambda2 * QQ_{k+1} + Q_k.
    q.fill(0.0);
    qq.fill(0.0);
    for k in (0..m - 1).rev() {
        let znext = &z[(k + 1) * n..(k + 2) * n];
        let dst = &mut out[k * n..(k + 1) * n];
        for i in 0..n {
            q[i] = lambda2 * (q[i] + znext[i]);
            qq[i] = lambda2 * qq[i] + q[i];
            dst[i] += qq[i];
        }
    }
    for o in out[..n * m].iter_mut() {
        *o *= h2;
    }
}
