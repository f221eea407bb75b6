//! Randomized property tests for the kernel products, the normalizer,
//! and the cumulative-sum metric. Each property states an algebraic
//! fact that must hold for every input, not just the handful of pinned
//! examples in the unit tests.

mod common;

use fs1::{
    exact_w1_1d, fast_apply_1d, fast_apply_2d, fast_weighted_apply_1d, naive_apply_1d,
    naive_apply_2d, normalize_signal, stabilized_fast_apply_1d, Grid2D, KernelSpec,
    RecursionBuffers, SignalNormalizationParams,
};
use proptest::prelude::*;

fn lambda() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(0.999), 0.0f64..0.999]
}

fn signal(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 1..max_len)
}

fn grid_2d_signal() -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
    (1usize..16, 1usize..16).prop_flat_map(|(n, m)| {
        prop::collection::vec(-1.0f64..1.0, n * m).prop_map(move |x| (n, m, x))
    })
}

fn max_abs(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

proptest! {
    /// The two-sweep product agrees with the quadratic summation on
    /// every input, to a relative accuracy far below anything the
    /// solver tolerates.
    #[test]
    fn sweeps_match_quadratic_summation_1d(x in signal(300), l in lambda()) {
        let naive = naive_apply_1d(&x, l).unwrap();
        let fast = fast_apply_1d(&x, l, &mut RecursionBuffers::new()).unwrap();
        let scale = max_abs(&naive).max(1e-300);
        for (a, b) in fast.iter().zip(&naive) {
            prop_assert!((a - b).abs() <= 1e-12 * scale, "{a} vs {b} at scale {scale}");
        }
    }

    #[test]
    fn sweeps_match_quadratic_summation_2d(
        (n, m, x) in grid_2d_signal(),
        l1 in lambda(),
        l2 in lambda(),
    ) {
        let naive = naive_apply_2d(&x, n, m, l1, l2).unwrap();
        let fast = fast_apply_2d(&x, n, m, l1, l2).unwrap();
        let scale = max_abs(&naive).max(1e-300);
        for (a, b) in fast.iter().zip(&naive) {
            prop_assert!((a - b).abs() <= 1e-12 * scale);
        }
    }

    /// The kernel product is a linear operator.
    #[test]
    fn kernel_product_is_linear(
        x in signal(200),
        l in lambda(),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        // Second vector derived deterministically from the first so the
        // lengths always agree without a flat-map dance.
        let x2: Vec<f64> = x.iter().map(|v| (v * 7.3).sin()).collect();
        let mut buffers = RecursionBuffers::new();
        let combined: Vec<f64> = x.iter().zip(&x2).map(|(p, q)| a * p + b * q).collect();
        let lhs = fast_apply_1d(&combined, l, &mut buffers).unwrap();
        let y1 = fast_apply_1d(&x, l, &mut buffers).unwrap();
        let y2 = fast_apply_1d(&x2, l, &mut buffers).unwrap();
        let scale = max_abs(&lhs).max(max_abs(&y1)).max(max_abs(&y2)).max(1.0);
        for i in 0..x.len() {
            prop_assert!((lhs[i] - (a * y1[i] + b * y2[i])).abs() <= 1e-11 * scale);
        }
    }

    /// `K` is symmetric under simultaneous reversal of input and output
    /// (its entries depend only on `|i-j|`).
    #[test]
    fn kernel_product_commutes_with_reversal(x in signal(200), l in lambda()) {
        let mut buffers = RecursionBuffers::new();
        let forward = fast_apply_1d(&x, l, &mut buffers).unwrap();
        let reversed_in: Vec<f64> = x.iter().rev().copied().collect();
        let mut back = fast_apply_1d(&reversed_in, l, &mut buffers).unwrap();
        back.reverse();
        let scale = max_abs(&forward).max(1e-300);
        for (a, b) in forward.iter().zip(&back) {
            prop_assert!((a - b).abs() <= 1e-12 * scale);
        }
    }

    /// The distance-weighted product agrees with its quadratic
    /// definition `t_k = h * sum_j |k-j| lambda^{|k-j|} x_j`.
    #[test]
    fn weighted_sweeps_match_quadratic_summation(
        x in signal(120),
        l in lambda(),
        h in 0.0f64..2.0,
    ) {
        let n = x.len();
        let fast = fast_weighted_apply_1d(&x, l, h).unwrap();
        let mut scale = 1e-300f64;
        let brute: Vec<f64> = (0..n)
            .map(|k| {
                let mut acc = 0.0;
                for (j, xv) in x.iter().enumerate() {
                    let d = k.abs_diff(j);
                    if d > 0 {
                        acc += l.powi(d as i32) * d as f64 * h * xv;
                    }
                }
                acc
            })
            .collect();
        for v in &brute {
            scale = scale.max(v.abs());
        }
        // Brute force loses more to cancellation than the sweeps do, so
        // the gate is a little looser than the plain-product ones.
        for (a, b) in fast.iter().zip(&brute) {
            prop_assert!((a - b).abs() <= 1e-10 * scale.max(1.0));
        }
    }

    /// The log-offset product equals the elementwise-rescaled kernel
    /// applied directly, whenever the latter is representable.
    #[test]
    fn log_offset_product_matches_rescaled_kernel(
        x in prop::collection::vec(0.0f64..1.0, 1..48),
        l in lambda(),
        eps in 0.05f64..2.0,
        seed in 0u64..1000,
    ) {
        let n = x.len();
        let kernel = KernelSpec::new_1d(eps, l).unwrap();
        let logs: Vec<f64> = (0..2 * n)
            .map(|i| {
                let t = ((i as u64 + 1) * (seed + 17)) % 1000;
                (t as f64 / 1000.0) * 10.0 - 5.0
            })
            .collect();
        let (out_log, in_log) = logs.split_at(n);
        let fast = stabilized_fast_apply_1d(&x, out_log, in_log, &kernel).unwrap();
        let brute: Vec<f64> = (0..n)
            .map(|i| {
                let mut acc = 0.0;
                for j in 0..n {
                    let d = i.abs_diff(j) as i32;
                    let k = if l == 0.0 && d > 0 { 0.0 } else { l.powi(d) };
                    acc += ((out_log[i] + in_log[j]) / eps).exp() * k * x[j];
                }
                acc
            })
            .collect();
        let scale = max_abs(&brute).max(1e-300);
        for (a, b) in fast.iter().zip(&brute) {
            prop_assert!((a - b).abs() <= 1e-10 * scale);
        }
    }

    /// Perturbing one input coordinate by `delta` changes the output by
    /// exactly `delta` times that coordinate's kernel column; its total
    /// (1-norm) effect is the closed-form column sum. No amplification.
    #[test]
    fn single_coordinate_perturbations_stay_bounded(
        x in prop::collection::vec(0.1f64..1.0, 2..128),
        l in 0.05f64..0.999,
        delta in 1e-6f64..1e-3,
        pick in 0usize..10_000,
    ) {
        let n = x.len();
        let k = pick % n;
        let mut buffers = RecursionBuffers::new();
        let base = fast_apply_1d(&x, l, &mut buffers).unwrap();
        let mut bumped = x.clone();
        bumped[k] += delta;
        let moved = fast_apply_1d(&bumped, l, &mut buffers).unwrap();
        let total: f64 = base.iter().zip(&moved).map(|(a, b)| (b - a).abs()).sum();
        let column_sum =
            (2.0 - l.powi(k as i32 + 1) - l.powi((n - k) as i32)) / (1.0 - l) - 1.0;
        prop_assert!(total <= column_sum * delta * (1.0 + 1e-9) + 1e-15);
    }

    /// Squared-signal normalization always yields a strictly positive
    /// probability vector whose floor is the advertised closed form,
    /// and the result is invariant under rescaling the raw signal.
    #[test]
    fn normalization_yields_positive_probabilities(
        f in prop::collection::vec(-2.0f64..2.0, 1..100),
        delta in 1e-9f64..0.1,
        scale in 0.01f64..50.0,
    ) {
        prop_assume!(f.iter().map(|v| v * v).sum::<f64>() > 1e-12);
        let w = normalize_signal(&f, delta).unwrap();
        let sum: f64 = w.iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-12 * w.len() as f64);
        let floor = SignalNormalizationParams { delta, cells: f.len() }.floor();
        for v in &w {
            prop_assert!(*v >= floor * (1.0 - 1e-12));
        }
        let scaled: Vec<f64> = f.iter().map(|v| v * scale).collect();
        let w2 = normalize_signal(&scaled, delta).unwrap();
        for (a, b) in w.iter().zip(&w2) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    /// Metric axioms for the closed-form 1D distance, plus agreement
    /// with an independent min-cost-flow solver.
    #[test]
    fn cumulative_metric_satisfies_metric_axioms(
        raw_u in prop::collection::vec(0.01f64..1.0, 2..14),
        seed in 0u64..1_000_000,
        h in 0.01f64..2.0,
    ) {
        let n = raw_u.len();
        let u = common::normalized_from(raw_u.iter().copied());
        let v = common::normalized_from(
            (0..n).map(|i| (((seed + i as u64) * 2654435761) % 997) as f64 / 997.0 + 0.01),
        );
        let w = common::normalized_from(
            (0..n).map(|i| (((seed + 7 + i as u64) * 40503) % 1009) as f64 / 1009.0 + 0.01),
        );
        let duv = exact_w1_1d(&u, &v, h).unwrap();
        let dvu = exact_w1_1d(&v, &u, h).unwrap();
        let duw = exact_w1_1d(&u, &w, h).unwrap();
        let dvw = exact_w1_1d(&v, &w, h).unwrap();
        prop_assert!((duv - dvu).abs() <= 1e-15);
        prop_assert!(exact_w1_1d(&u, &u, h).unwrap() == 0.0);
        prop_assert!(duw <= duv + dvw + 1e-12);
        let flow = common::min_cost_transport(&u, &v, h);
        prop_assert!((duv - flow).abs() <= 1e-9, "cumulative {duv} vs flow {flow}");
    }

    /// Column-major index packing round-trips for every cell.
    #[test]
    fn grid_2d_index_roundtrip(n in 1usize..40, m in 1usize..40, pick in 0usize..10_000) {
        let grid = Grid2D::new(n, m, 1.0, 1.0).unwrap();
        let k = pick % (n * m);
        let (i, j) = grid.unflatten(k);
        prop_assert!(i < n && j < m);
        prop_assert_eq!(grid.flatten(i, j), k);
    }
}
