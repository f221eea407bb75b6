//! Overflow-safe kernel applies for states with absorbed log offsets.
//!
//! These compute `diag(e^{a/eps}) K diag(e^{b/eps}) x` without ever
//! forming the rescaled kernel. Only two kinds of exponentials appear:
//!
//! * combined per-point weights `e^{(a_i + b_i)/eps}` — bounded, because
//!   `a + b` at one point tracks the log of a plan entry; and
//! * neighboring differences `e^{(a_{i+1} - a_i)/eps}` — bounded for the
//!   smooth offsets absorption produces.
//!
//! The absolute scale of the offsets never enters, so scalings that
//! would overflow `e^{a/eps}` on its own stay finite here. With all
//! offsets zero every factor is exactly 1 and the sweeps reduce bitwise
//! to their plain counterparts.

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;

/// Rescaled-kernel product
/// `y = diag(e^{out_log/eps}) K diag(e^{in_log/eps}) x` with
/// `K_ij = lambda^{|i-j|}`, in linear time.
///
/// `out_log`/`in_log` are the offsets on the output and input side
/// (`alpha`, `beta` in some order depending on which scaling is being
/// updated). With both all-zero the result equals
/// [`fast_apply_1d`](crate::kernel::fast_apply_1d) exactly.
pub fn stabilized_fast_apply_1d(
    x: &[f64],
    out_log: &[f64],
    in_log: &[f64],
    kernel: &KernelSpec,
) -> Result<Vec<f64>> {
    let n = x.len();
    if out_log.len() != n || in_log.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: out_log.len().min(in_log.len()),
        });
    }
    if x.iter().any(|v| !v.is_finite())
        || out_log.iter().any(|v| !v.is_finite())
        || in_log.iter().any(|v| !v.is_finite())
    {
        return Err(Error::NonFiniteInput);
    }
    let mut w = vec![0.0; n];
    let mut r = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut y = vec![0.0; n];
    stab_sweep_1d(
        x,
        kernel.lambda1(),
        1.0 / kernel.epsilon(),
        out_log,
        in_log,
        &mut w,
        &mut r,
        &mut s,
        &mut y,
    );
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteResult);
    }
    Ok(y)
}

/// Core of [`stabilized_fast_apply_1d`]: fills `y`, using `w`, `r`, `s`
/// as scratch (all length of `x`). Performs no validation.
#[allow(clippy::too_many_arguments)]
pub(crate) fn stab_sweep_1d(
    x: &[f64],
    lambda: f64,
    inv_eps: f64,
    out_log: &[f64],
    in_log: &[f64],
    w: &mut [f64],
    r: &mut [f64],
    s: &mut [f64],
    y: &mut [f64],
) {
    let n = x.len();
    if n == 0 {
        return;
    }
    for i in 0..n {
        w[i] = ((out_log[i] + in_log[i]) * inv_eps).exp() * x[i];
    }
    if lambda == 0.0 {
        // Diagonal kernel: no neighbor coupling, and the difference
        // factors (which could overflow on their own) must not be formed.
        y[..n].copy_from_slice(&w[..n]);
        return;
    }
    r[0] = w[0];
    for i in 1..n {
        let coef = lambda * ((out_log[i] - out_log[i - 1]) * inv_eps).exp();
        r[i] = coef * r[i - 1] + w[i];
    }
    s[n - 1] = 0.0;
    for i in (0..n - 1).rev() {
        let coef = lambda * ((out_log[i] - out_log[i + 1]) * inv_eps).exp();
        s[i] = coef * (s[i + 1] + w[i + 1]);
    }
    for i in 0..n {
        y[i] = r[i] + s[i];
    }
}

/// Distance-weighted analogue of [`stab_sweep_1d`]: fills `t` with
/// `t_i = sum_j e^{(out_i + in_j)/eps} |i-j| h lambda^{|i-j|} x_j`.
///
/// Scratch: `w`, `a`, `b` (all length of `x`).
#[allow(clippy::too_many_arguments)]
pub(crate) fn stab_weighted_sweep_1d(
    x: &[f64],
    lambda: f64,
    h: f64,
    inv_eps: f64,
    out_log: &[f64],
    in_log: &[f64],
    w: &mut [f64],
    a: &mut [f64],
    b: &mut [f64],
    t: &mut [f64],
) {
    let n = x.len();
    if n == 0 {
        return;
    }
    if lambda == 0.0 {
        // Every surviving kernel entry has distance zero, hence weight zero.
        t[..n].fill(0.0);
        return;
    }
    for i in 0..n {
        w[i] = ((out_log[i] + in_log[i]) * inv_eps).exp() * x[i];
    }
    // Forward: a = running plain sum P, b = distance-weighted sum PP.
    a[0] = w[0];
    b[0] = 0.0;
    for i in 1..n {
        let coef = lambda * ((out_log[i] - out_log[i - 1]) * inv_eps).exp();
        b[i] = coef * (b[i - 1] + a[i - 1]);
        a[i] = coef * a[i - 1] + w[i];
    }
    t[..n].copy_from_slice(&b[..n]);
    // Backward: a = Q, b = QQ.
    a[n - 1] = 0.0;
    b[n - 1] = 0.0;
    for i in (0..n - 1).rev() {
        let coef = lambda * ((out_log[i] - out_log[i + 1]) * inv_eps).exp();
        a[i] = coef * (a[i + 1] + w[i + 1]);
        b[i] = coef * b[i + 1] + a[i];
    }
    for i in 0..n {
        t[i] = h * (t[i] + b[i]);
    }
}

/// 2D rescaled-kernel product on a column-major flat array. `out_log`
/// and `in_log` are flat offset fields on the same grid; the column
/// stage consumes `in_log` plus same-column `out_log` weights, and the
/// cross-column stage sees only neighboring-column differences of
/// `out_log`, so absolute offset scale cancels throughout.
pub fn stabilized_fast_apply_2d(
    x: &[f64],
    n: usize,
    m: usize,
    out_log: &[f64],
    in_log: &[f64],
    kernel: &KernelSpec,
) -> Result<Vec<f64>> {
    let len = n * m;
    if n == 0 || m == 0 || x.len() != len {
        return Err(Error::LengthMismatch {
            expected: len,
            got: x.len(),
        });
    }
    if out_log.len() != len || in_log.len() != len {
        return Err(Error::LengthMismatch {
            expected: len,
            got: out_log.len().min(in_log.len()),
        });
    }
    if x.iter().any(|v| !v.is_finite())
        || out_log.iter().any(|v| !v.is_finite())
        || in_log.iter().any(|v| !v.is_finite())
    {
        return Err(Error::NonFiniteInput);
    }
    let lambda2 = kernel.lambda2().ok_or(Error::InvalidParameter(
        "2D apply requires a kernel with both decay factors",
    ))?;
    let mut z = vec![0.0; len];
    let mut out = vec![0.0; len];
    let mut col = vec![0.0; 3 * n];
    let (c1, rest) = col.split_at_mut(n);
    let (c2, c3) = rest.split_at_mut(n);
    stab_sweep_2d(
        x,
        n,
        m,
        kernel.lambda1(),
        lambda2,
        1.0 / kernel.epsilon(),
        out_log,
        in_log,
        &mut z,
        c1,
        c2,
        c3,
        &mut out,
    );
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteResult);
    }
    Ok(out)
}

/// Core of [`stabilized_fast_apply_2d`]. `z` and `out` are `n*m`
/// scratch/output, `c1`–`c3` length-`n` column scratch.
#[allow(clippy::too_many_arguments)]
pub(crate) fn stab_sweep_2d(
    x: &[f64],
    n: usize,
    m: usize,
    lambda1: f64,
    lambda2: f64,
    inv_eps: f64,
    out_log: &[f64],
    in_log: &[f64],
    z: &mut [f64],
    c1: &mut [f64],
    c2: &mut [f64],
    c3: &mut [f64],
    out: &mut [f64],
) {
    // Column stage: per-column rescaled apply along the lambda1 axis.
    for j in 0..m {
        let span = j * n..(j + 1) * n;
        stab_sweep_1d(
            &x[span.clone()],
            lambda1,
            inv_eps,
            &out_log[span.clone()],
            &in_log[span.clone()],
            c1,
            c2,
            c3,
            &mut z[span],
        );
    }
    row_pass_plain(z, n, m, lambda2, inv_eps, out_log, out);
}

/// Cross-column stage shared by the plain 2D applies: computes
/// `out[:,k] = sum_j lambda2^{|k-j|} e^{(A[:,k]-A[:,j])/eps} z[:,j]`
/// using only neighboring-column differences of `A`. Consumes `z`
/// (the ascending pass runs in place).
fn row_pass_plain(
    z: &mut [f64],
    n: usize,
    m: usize,
    lambda2: f64,
    inv_eps: f64,
    a_log: &[f64],
    out: &mut [f64],
) {
    if lambda2 == 0.0 {
        out[..n * m].copy_from_slice(&z[..n * m]);
        return;
    }
    // Descending pass into out (reads original z):
    // Q_{m-1} = 0, Q_k = lambda2 * e^{(A_k - A_{k+1})/eps} ⊙ (Q_{k+1} + Z_{k+1}).
    out[(m - 1) * n..m * n].fill(0.0);
    for k in (0..m - 1).rev() {
        let (head, tail) = out.split_at_mut((k + 1) * n);
        let dst = &mut head[k * n..];
        let prev = &tail[..n];
        let znext = &z[(k + 1) * n..(k + 2) * n];
        let ak = &a_log[k * n..(k + 1) * n];
        let anext = &a_log[(k + 1) * n..(k + 2) * n];
        for i in 0..n {
            let coef = lambda2 * ((ak[i] - anext[i]) * inv_eps).exp();
            dst[i] = coef * (prev[i] + znext[i]);
        }
    }
    // Ascending pass in place on z:
    // P_0 = Z_0, P_k = lambda2 * e^{(A_k - A_{k-1})/eps} ⊙ P_{k-1} + Z_k.
    for k in 1..m {
        let (head, tail) = z.split_at_mut(k * n);
        let prev = &head[(k - 1) * n..];
        let dst = &mut tail[..n];
        let ak = &a_log[k * n..(k + 1) * n];
        let aprev = &a_log[(k - 1) * n..k * n];
        for i in 0..n {
            let coef = lambda2 * ((ak[i] - aprev[i]) * inv_eps).exp();
            dst[i] += coef * prev[i];
        }
    }
    for (o, zi) in out[..n * m].iter_mut().zip(z[..n * m].iter()) {
        *o += *zi;
    }
}

/// Distance-weighted cross-column stage: adds nothing to `z`; writes
/// `out[:,k] = h2 * sum_j |k-j| lambda2^{|k-j|} e^{(A_k-A_j)/eps} z[:,j]`.
#[allow(clippy::too_many_arguments)]
fn row_pass_weighted(
    z: &[f64],
    n: usize,
    m: usize,
    lambda2: f64,
    h2: f64,
    inv_eps: f64,
    a_log: &[f64],
    p: &mut [f64],
    pp: &mut [f64],
    out: &mut [f64],
) {
    if lambda2 == 0.0 {
        out[..n * m].fill(0.0);
        return;
    }
    // Ascending: PP_k = c ⊙ (PP_{k-1} + P_{k-1}), P_k = c ⊙ P_{k-1} + Z_k,
    // c = lambda2 * e^{(A_k - A_{k-1})/eps}.
    p.copy_from_slice(&z[..n]);
    pp.fill(0.0);
    out[..n].fill(0.0);
    for k in 1..m {
        let zk = &z[k * n..(k + 1) * n];
        let dst = &mut out[k * n..(k + 1) * n];
        let ak = &a_log[k * n..(k + 1) * n];
        let aprev = &a_log[(k - 1) * n..k * n];
        for i in 0..n {
            let coef = lambda2 * ((ak[i] - aprev[i]) * inv_eps).exp();
            pp[i] = coef * (pp[i] + p[i]);
            p[i] = coef * p[i] + zk[i];
            dst[i] = pp[i];
        }
    }
    // Descending: Q_k = c ⊙ (Q_{k+1} + Z_{k+1}), QQ_k = c ⊙ QQ_{k+1} + Q_k,
    // c = lambda2 * e^{(A_k - A_{k+1})/eps}. Reuse p as Q, pp as QQ.
    p.fill(0.0);
    pp.fill(0.0);
    for k in (0..m - 1).rev() {
        let znext = &z[(k + 1) * n..(k + 2) * n];
        let dst = &mut out[k * n..(k + 1) * n];
        let ak = &a_log[k * n..(k + 1) * n];
        let anext = &a_log[(k + 1) * n..(k + 2) * n];
        for i in 0..n {
            let coef = lambda2 * ((ak[i] - anext[i]) * inv_eps).exp();
            p[i] = coef * (p[i] + znext[i]);
            pp[i] = coef * pp[i] + p[i];
            dst[i] += pp[i];
        }
    }
    for o in out[..n * m].iter_mut() {
        *o *= h2;
    }
}

/// 2D distance-weighted rescaled product: the weight
/// `|i1-i2| h1 + |j1-j2| h2` splits into a weighted-column/plain-row
/// term and a plain-column/weighted-row term. Allocates its scratch;
/// called once per cost evaluation, not per iteration.
#[allow(clippy::too_many_arguments)]
pub(crate) fn stab_weighted_apply_2d(
    x: &[f64],
    n: usize,
    m: usize,
    lambda1: f64,
    lambda2: f64,
    h1: f64,
    h2: f64,
    inv_eps: f64,
    out_log: &[f64],
    in_log: &[f64],
) -> Vec<f64> {
    let len = n * m;
    let mut col = vec![0.0; 4 * n];
    let (a, b) = col.split_at_mut(2 * n);
    let (c1, c2) = a.split_at_mut(n);
    let (c3, c4) = b.split_at_mut(n);

    // Term 1: weighted along columns, plain across columns.
    let mut za = vec![0.0; len];
    for j in 0..m {
        let span = j * n..(j + 1) * n;
        stab_weighted_sweep_1d(
            &x[span.clone()],
            lambda1,
            h1,
            inv_eps,
            &out_log[span.clone()],
            &in_log[span.clone()],
            c1,
            c2,
            c3,
            &mut za[span],
        );
    }
    let mut term1 = vec![0.0; len];
    row_pass_plain(&mut za, n, m, lambda2, inv_eps, out_log, &mut term1);

    // Term 2: plain along columns, weighted across columns.
    let mut zb = vec![0.0; len];
    for j in 0..m {
        let span = j * n..(j + 1) * n;
        stab_sweep_1d(
            &x[span.clone()],
            lambda1,
            inv_eps,
            &out_log[span.clone()],
            &in_log[span.clone()],
            c1,
            c2,
            c3,
            &mut zb[span],
        );
    }
    let mut term2 = vec![0.0; len];
    row_pass_weighted(&zb, n, m, lambda2, h2, inv_eps, out_log, c1, c4, &mut term2);

    for (t1, t2) in term1.iter_mut().zip(term2.iter()) {
        *t1 += *t2;
    }
    term1
}
