//! Relative-coordinate transforms for singular triangle pairs.
//!
//! Both triangles are parametrised over the reference triangle
//! `{0 <= u2 <= u1 <= 1}` by `u -> A + u1 (B - A) + u2 (C - B)`. The shared
//! vertex of a common-vertex pair sits at `u = (0, 0)` in both triangles, the
//! shared edge of a common-edge pair at `u2 = 0` with matching orientation.
//! Each transform splits the 4D domain into subregions whose Jacobians cancel
//! the `1/|x - y|` singularity, leaving smooth integrands over `[0, 1]^4`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use super::gauss::gauss_legendre;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SingularCase {
    Coincident,
    CommonEdge,
    CommonVertex,
}

/// One sample `(x_hat, y_hat, weight)` of a rule on the product of reference triangles.
pub type PairSample = ([f64; 2], [f64; 2], f64);

/// Cached sample set for `case` with `order` Gauss points per dimension.
pub fn singular_rule(case: SingularCase, order: usize) -> Arc<Vec<PairSample>> {
    type RuleCache = Mutex<HashMap<(SingularCase, usize), Arc<Vec<PairSample>>>>;
    static CACHE: OnceLock<RuleCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(rule) = cache.lock().unwrap().get(&(case, order)) {
        return rule.clone();
    }
    let rule = Arc::new(build(case, order));
    cache.lock().unwrap().insert((case, order), rule.clone());
    rule
}

fn build(case: SingularCase, order: usize) -> Vec<PairSample> {
    let g = gauss_legendre(order);
    let mut out = Vec::new();
    for (&xi, &w0) in g.points.iter().zip(&g.weights) {
        for (&e1, &w1) in g.points.iter().zip(&g.weights) {
            for (&e2, &w2) in g.points.iter().zip(&g.weights) {
                for (&e3, &w3) in g.points.iter().zip(&g.weights) {
                    let w = w0 * w1 * w2 * w3;
                    match case {
                        SingularCase::Coincident => coincident(xi, e1, e2, e3, w, &mut out),
                        SingularCase::CommonEdge => common_edge(xi, e1, e2, e3, w, &mut out),
                        SingularCase::CommonVertex => common_vertex(xi, e1, e2, e3, w, &mut out),
                    }
                }
            }
        }
    }
    out
}

fn coincident(xi: f64, e1: f64, e2: f64, e3: f64, w: f64, out: &mut Vec<PairSample>) {
    let w = w * xi.powi(3) * e1 * e1 * e2;
    let a = [xi, xi * (1.0 - e1 + e1 * e2)];
    let b = [xi * (1.0 - e1 * e2 * e3), xi * (1.0 - e1)];
    out.push((a, b, w));
    out.push((b, a, w));
    let a = [xi, xi * e1 * (1.0 - e2 + e2 * e3)];
    let b = [xi * (1.0 - e1 * e2), xi * e1 * (1.0 - e2)];
    out.push((a, b, w));
    out.push((b, a, w));
    let a = [xi * (1.0 - e1 * e2 * e3), xi * e1 * (1.0 - e2 * e3)];
    let b = [xi, xi * e1 * (1.0 - e2)];
    out.push((a, b, w));
    out.push((b, a, w));
}

fn common_edge(xi: f64, e1: f64, e2: f64, e3: f64, w: f64, out: &mut Vec<PairSample>) {
    let w1 = w * xi.powi(3) * e1 * e1;
    out.push(([xi, xi * e1 * e3], [xi * (1.0 - e1 * e2), xi * e1 * (1.0 - e2)], w1));
    let w2 = w1 * e2;
    out.push(([xi, xi * e1], [xi * (1.0 - e1 * e2 * e3), xi * e1 * e2 * (1.0 - e3)], w2));
    out.push(([xi * (1.0 - e1 * e2), xi * e1 * (1.0 - e2)], [xi, xi * e1 * e2 * e3], w2));
    out.push(([xi * (1.0 - e1 * e2 * e3), xi * e1 * e2 * (1.0 - e3)], [xi, xi * e1], w2));
    out.push(([xi * (1.0 - e1 * e2 * e3), xi * e1 * (1.0 - e2 * e3)], [xi, xi * e1 * e2], w2));
}

fn common_vertex(xi: f64, e1: f64, e2: f64, e3: f64, w: f64, out: &mut Vec<PairSample>) {
    let w = w * xi.powi(3) * e2;
    out.push(([xi, xi * e1], [xi * e2, xi * e2 * e3], w));
    out.push(([xi * e2, xi * e2 * e3], [xi, xi * e1], w));
}
