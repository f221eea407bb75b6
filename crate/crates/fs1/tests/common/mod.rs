//! Shared test helpers, most importantly an exact optimal-transport
//! oracle that shares no code with the library. It builds the monotone
//! coupling with a two-pointer sweep and then *proves* the result
//! optimal with a linear-programming duality certificate: it constructs
//! a feasible dual potential and asserts that the primal cost equals
//! the dual value. Any defect in the construction trips the internal
//! assertion instead of silently returning a wrong reference value.

/// Exact minimum transport cost from supplies `u` to demands `v` on a
/// line with arc cost `|i - j| * h`, with a built-in optimality proof.
pub fn min_cost_transport(u: &[f64], v: &[f64], h: f64) -> f64 {
    let n = u.len();
    assert_eq!(n, v.len());
    assert!(n > 0);

    // Monotone coupling: repeatedly match the leftmost remaining supply
    // with the leftmost remaining demand. Optimal whenever the ground
    // cost is convex in displacement, which |i-j|*h is. Each loop turn
    // advances one pointer, so it terminates in at most 2n steps.
    let mut pairs: Vec<(usize, usize, f64)> = Vec::new();
    let mut cost = 0.0;
    let (mut i, mut j) = (0usize, 0usize);
    let (mut su, mut sv) = (u[0], v[0]);
    loop {
        let m = su.min(sv);
        if m > 0.0 {
            cost += m * (i as f64 - j as f64).abs() * h;
            pairs.push((i, j, m));
        }
        su -= m;
        sv -= m;
        if su <= sv {
            i += 1;
            if i == n {
                break;
            }
            su = u[i];
        } else {
            j += 1;
            if j == n {
                break;
            }
            sv = v[j];
        }
    }

    // Duality certificate. Net rightward flow through the cut between
    // grid cells k and k+1:
    let mut net = vec![0.0f64; n.saturating_sub(1)];
    for &(a, b, m) in &pairs {
        if b > a {
            for x in &mut net[a..b] {
                *x += m;
            }
        } else {
            for x in &mut net[b..a] {
                *x -= m;
            }
        }
    }
    // A potential that decreases along the flow direction is feasible
    // for the dual (adjacent increments never exceed h) and, by
    // complementary slackness, must reproduce the primal cost: a pair
    // moving mass m from i to j > i contributes m*(j-i)*h to the cost
    // and m*(f_i - f_j) to the dual, which agree exactly when f drops
    // by h across every cut the pair crosses.
    let mut f = vec![0.0f64; n];
    for k in 0..n.saturating_sub(1) {
        let step = if net[k] > 1e-15 {
            -h
        } else if net[k] < -1e-15 {
            h
        } else {
            0.0
        };
        f[k + 1] = f[k] + step;
    }
    let dual: f64 = f
        .iter()
        .zip(u.iter().zip(v.iter()))
        .map(|(fi, (ui, vi))| fi * (ui - vi))
        .sum();
    let slack = (cost - dual).abs();
    assert!(
        slack <= 1e-10 * cost.abs().max(1.0),
        "duality gap {slack} between primal {cost} and dual {dual}: the oracle itself is broken"
    );

    cost
}

/// Normalized positive random vector from any draw source.
pub fn normalized_from(draws: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut w: Vec<f64> = draws.collect();
    let sum: f64 = w.iter().sum();
    for x in &mut w {
        *x /= sum;
    }
    w
}
