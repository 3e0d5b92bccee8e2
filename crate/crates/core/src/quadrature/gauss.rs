//! Gauss–Legendre rules on [0, 1] and collapsed rules on the reference triangle.

use std::sync::OnceLock;

const MAX_ORDER: usize = 64;

/// Gauss–Legendre nodes and weights on [0, 1].
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

fn compute(n: usize) -> GaussRule {
    let mut points = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Newton iteration on P_n from the Chebyshev-like initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        points[i] = 0.5 * (1.0 - x);
        points[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    GaussRule { points, weights }
}

/// Cached `n`-point Gauss–Legendre rule on [0, 1], `1 <= n <= 64`.
pub fn gauss_legendre(n: usize) -> &'static GaussRule {
    static TABLE: OnceLock<Vec<GaussRule>> = OnceLock::new();
    assert!((1..=MAX_ORDER).contains(&n), "Gauss order {n} out of range");
    &TABLE.get_or_init(|| (1..=MAX_ORDER).map(compute).collect())[n - 1]
}

/// Collapsed tensor rule on the reference triangle `{0 <= u2 <= u1 <= 1}`
/// (area 1/2): `u = (s, s t)` with Jacobian `s`.
pub fn triangle_rule(n: usize) -> Vec<([f64; 2], f64)> {
    let g = gauss_legendre(n);
    let mut out = Vec::with_capacity(n * n);
    for (&s, &ws) in g.points.iter().zip(&g.weights) {
        for (&t, &wt) in g.points.iter().zip(&g.weights) {
            out.push(([s, s * t], ws * wt * s));
        }
    }
    out
}
