//! Gauss-Legendre rules on finite intervals.

use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`,
/// nodes ascending.
///
/// Roots of `P_n` are found by Newton iteration from the Tricomi initial
/// guess. Only the non-negative half is computed; the negative half is its
/// exact mirror, so the rule is symmetric bit for bit.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let half = n.div_ceil(2);
    let mut pos_nodes = Vec::with_capacity(half);
    let mut pos_weights = Vec::with_capacity(half);
    let nf = n as f64;
    for i in 0..half {
        // i-th root counted from the right end
        let mut x = ((i as f64 + 0.75) / (nf + 0.5) * PI).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
        let (_, d) = legendre_and_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        pos_nodes.push(x);
        pos_weights.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    if n % 2 == 1 {
        // middle root is exactly zero
        let mid = half - 1;
        pos_nodes[mid] = 0.0;
        let (_, d) = legendre_and_derivative(n, 0.0);
        pos_weights[mid] = 2.0 / (d * d);
    }

    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    // pos_nodes is descending (largest root first); the mirror goes first.
    for i in 0..n / 2 {
        nodes.push(-pos_nodes[i]);
        weights.push(pos_weights[i]);
    }
    if n % 2 == 1 {
        nodes.push(0.0);
        weights.push(pos_weights[half - 1]);
    }
    for i in (0..n / 2).rev() {
        nodes.push(pos_nodes[i]);
        weights.push(pos_weights[i]);
    }
    (nodes, weights)
}

/// `P_n(x)` and `P_n'(x)` by the three-term recurrence.
fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss-Legendre rule mapped affinely onto `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let nodes = x.iter().map(|&t| mid + half * t).collect();
    let weights = w.iter().map(|&wi| half * wi).collect();
    (nodes, weights)
}
