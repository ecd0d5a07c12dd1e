#![allow(dead_code)]

use std::f64::consts::PI;

use qgraph::{incommensurate_lengths, make_complete4, make_star, MetricGraph};

pub fn star4() -> MetricGraph {
    make_star(&incommensurate_lengths(4, 1.0)).unwrap()
}

pub fn equilateral_star4() -> MetricGraph {
    make_star(&[1.0; 4]).unwrap()
}

pub fn tetrahedron() -> MetricGraph {
    let lengths: [f64; 6] = incommensurate_lengths(6, 1.0).try_into().unwrap();
    make_complete4(&lengths).unwrap()
}

pub fn unit_tetrahedron() -> MetricGraph {
    make_complete4(&[1.0; 6]).unwrap()
}

/// Bisection to float resolution on a continuous function with a sign
/// change on `[lo, hi]`.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let f_lo = f(lo);
    assert!(f_lo * f(hi) <= 0.0, "no sign change on [{lo}, {hi}]");
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return mid;
        }
        if (f(mid) > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// `n`-th wave number (1-based) of `[0, ℓ]` with `f′(0) = σ f(0)` taken
/// outward and Neumann at `ℓ`: the root of `k tan(kℓ) = σ` on branch
/// `((n−1)π/ℓ, (n−½)π/ℓ)`.
pub fn robin_interval_k(sigma: f64, ell: f64, n: usize) -> f64 {
    let j = (n - 1) as f64;
    if sigma == 0.0 {
        return j * PI / ell;
    }
    let g = |k: f64| k * (k * ell).sin() - sigma * (k * ell).cos();
    bisect(g, j * PI / ell, (j + 0.5) * PI / ell)
}

/// Sizes of groups of consecutive values closer than `rel` relatively.
pub fn cluster_sizes(values: &[f64], rel: f64) -> Vec<usize> {
    let mut sizes = Vec::new();
    let mut current = 0;
    for (i, &v) in values.iter().enumerate() {
        if i > 0 && (v - values[i - 1]).abs() > rel * v.abs().max(1.0) {
            sizes.push(current);
            current = 0;
        }
        current += 1;
    }
    if current > 0 {
        sizes.push(current);
    }
    sizes
}

/// Composite Gauss-Legendre quadrature (5 points per panel).
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    const X: [f64; 5] = [
        0.0,
        -0.538_469_310_105_683_1,
        0.538_469_310_105_683_1,
        -0.906_179_845_938_664,
        0.906_179_845_938_664,
    ];
    const W: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|p| {
            let mid = a + (p as f64 + 0.5) * h;
            X.iter()
                .zip(&W)
                .map(|(x, w)| w * f(mid + 0.5 * h * x))
                .sum::<f64>()
                * 0.5
                * h
        })
        .sum()
}

/// Connected graphs on 2..=5 vertices: a random spanning tree plus up to
/// three extra edges, loops and parallel edges included.
pub fn arb_graph() -> impl proptest::strategy::Strategy<Value = MetricGraph> {
    use proptest::prelude::*;
    (2usize..=5)
        .prop_flat_map(|n| {
            let tree = proptest::collection::vec((any::<prop::sample::Index>(), 0.3f64..2.0), n - 1);
            let extra = proptest::collection::vec((0..n, 0..n, 0.3f64..2.0), 0..=3);
            (Just(n), tree, extra)
        })
        .prop_map(|(n, tree, extra)| {
            let mut edges = Vec::new();
            for (v, (parent, len)) in tree.into_iter().enumerate() {
                edges.push((parent.index(v + 1), v + 1, len));
            }
            edges.extend(extra);
            MetricGraph::new(n, edges).unwrap()
        })
}
