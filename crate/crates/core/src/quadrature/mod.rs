//! Helmholtz kernel and Galerkin double integrals over coplanar triangle pairs.

pub mod gauss;
pub mod sauter_schwab;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Triangle;
use gauss::triangle_rule;
use sauter_schwab::{singular_rule, SingularCase};

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureConfig {
    /// Gauss points per direction for well-separated pairs.
    pub regular_order: usize,
    /// Gauss points per dimension of the singular transforms.
    pub singular_order: usize,
    /// Pairs with `distance / diameter` at or above this are "regular";
    /// closer non-touching pairs use `singular_order` points per direction.
    pub separation_ratio: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig { regular_order: 5, singular_order: 10, separation_ratio: 2.0 }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=32).contains(&self.regular_order) || !(1..=32).contains(&self.singular_order) {
            return Err(Error::invalid("quadrature orders must lie in 1..=32"));
        }
        if !(self.separation_ratio > 0.0) || !self.separation_ratio.is_finite() {
            return Err(Error::invalid("separation_ratio must be positive"));
        }
        Ok(())
    }

    fn near_order(&self) -> usize {
        self.singular_order.max(self.regular_order)
    }
}

/// `e^{ikr} / (4 pi r)` for `r > 0`.
#[inline]
pub fn helmholtz_kernel(r: f64, k: f64) -> Complex64 {
    let inv = 1.0 / (FOUR_PI * r);
    if k == 0.0 {
        Complex64::new(inv, 0.0)
    } else {
        let (s, c) = (k * r).sin_cos();
        Complex64::new(c * inv, s * inv)
    }
}

/// Free-space Green's function of the 3D Helmholtz equation.
pub fn green3d(x: [f64; 3], y: [f64; 3], k: f64) -> Result<Complex64> {
    let r = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2) + (x[2] - y[2]).powi(2)).sqrt();
    if r == 0.0 {
        return Err(Error::SingularEvaluation);
    }
    Ok(helmholtz_kernel(r, k))
}

/// `M[a][b] = ∫_T ∫_T' Φ(x, y) b_a(x) b_b(y)`, with `b_a` the barycentric
/// (P1 nodal) functions of `T` and `b_b` those of `T'`, in vertex order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentTensor(pub [[Complex64; 3]; 3]);

impl MomentTensor {
    pub fn zero() -> Self {
        MomentTensor([[Complex64::new(0.0, 0.0); 3]; 3])
    }

    /// Integral of the kernel against constant densities.
    pub fn sum(&self) -> Complex64 {
        self.0.iter().flatten().sum()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zero();
        for a in 0..3 {
            for b in 0..3 {
                t.0[b][a] = self.0[a][b];
            }
        }
        t
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut m = 0.0f64;
        for a in 0..3 {
            for b in 0..3 {
                m = m.max((self.0[a][b] - other.0[a][b]).norm());
            }
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Adjacency class of a triangle pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairClass {
    Coincident,
    CommonEdge,
    CommonVertex,
    /// Disjoint pair; `near` when closer than the separation threshold.
    Separated {
        near: bool,
    },
}

fn sub(p: [f64; 2], q: [f64; 2]) -> [f64; 2] {
    [p[0] - q[0], p[1] - q[1]]
}

fn norm2(p: [f64; 2]) -> f64 {
    (p[0] * p[0] + p[1] * p[1]).sqrt()
}

fn twice_area(t: &Triangle) -> f64 {
    let u = sub(t[1], t[0]);
    let v = sub(t[2], t[0]);
    (u[0] * v[1] - u[1] * v[0]).abs()
}

fn diameter(t: &Triangle) -> f64 {
    norm2(sub(t[0], t[1])).max(norm2(sub(t[1], t[2]))).max(norm2(sub(t[2], t[0])))
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = sub(b, a);
    let ap = sub(p, a);
    let t = ((ap[0] * ab[0] + ap[1] * ab[1]) / (ab[0] * ab[0] + ab[1] * ab[1])).clamp(0.0, 1.0);
    norm2(sub(ap, [t * ab[0], t * ab[1]]))
}

/// Distance between two disjoint triangles in the plane.
fn triangle_distance(t: &Triangle, s: &Triangle) -> f64 {
    let mut d = f64::INFINITY;
    for i in 0..3 {
        for j in 0..3 {
            d = d.min(point_segment_distance(t[i], s[j], s[(j + 1) % 3]));
            d = d.min(point_segment_distance(s[i], t[j], t[(j + 1) % 3]));
        }
    }
    d
}

/// Shared vertex pairs `(i, j)` with `t[i] == s[j]` up to a relative tolerance.
fn shared_vertices(t: &Triangle, s: &Triangle, tol: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..3 {
        for j in 0..3 {
            if norm2(sub(t[i], s[j])) <= tol {
                out.push((i, j));
            }
        }
    }
    out
}

/// Classifies the pair as coincident / common-edge / common-vertex / separated.
pub fn classify(t: &Triangle, s: &Triangle, cfg: &QuadratureConfig) -> Result<PairClass> {
    let diam = diameter(t).max(diameter(s));
    let shared = shared_vertices(t, s, 1e-10 * diam);
    Ok(match shared.len() {
        3 => PairClass::Coincident,
        2 => PairClass::CommonEdge,
        1 => PairClass::CommonVertex,
        0 => {
            let ratio = triangle_distance(t, s) / diam;
            // Lattice pairs often sit exactly on the threshold; the slack keeps
            // the decision stable under translation roundoff.
            PairClass::Separated { near: ratio < cfg.separation_ratio * (1.0 - 1e-9) }
        }
        _ => return Err(Error::Geometry("triangles share vertices inconsistently".into())),
    })
}

/// Galerkin moments of the Helmholtz kernel over a coplanar triangle pair.
pub fn pair_moments(t: &Triangle, s: &Triangle, k: f64, cfg: &QuadratureConfig) -> Result<MomentTensor> {
    let (at, as_) = (twice_area(t), twice_area(s));
    let scale = diameter(t).max(diameter(s));
    if !(at > 1e-14 * scale * scale) || !(as_ > 1e-14 * scale * scale) {
        return Err(Error::DegenerateTriangle);
    }
    let diam = scale;
    let shared = shared_vertices(t, s, 1e-10 * diam);
    match shared.len() {
        0 => {
            let class = classify(t, s, cfg)?;
            let order = match class {
                PairClass::Separated { near: true } => cfg.near_order(),
                _ => cfg.regular_order,
            };
            Ok(regular_moments(t, s, k, order))
        }
        3 => {
            // Map T' vertices onto T's ordering.
            let mut perm_s = [0usize; 3];
            for &(i, j) in &shared {
                perm_s[i] = j;
            }
            Ok(singular_moments(t, [0, 1, 2], s, perm_s, k, SingularCase::Coincident, cfg.singular_order))
        }
        2 => {
            let (i0, j0) = shared[0];
            let (i1, j1) = shared[1];
            let perm_t = [i0, i1, 3 - i0 - i1];
            let perm_s = [j0, j1, 3 - j0 - j1];
            Ok(singular_moments(t, perm_t, s, perm_s, k, SingularCase::CommonEdge, cfg.singular_order))
        }
        1 => {
            let (i0, j0) = shared[0];
            let perm_t = [i0, (i0 + 1) % 3, (i0 + 2) % 3];
            let perm_s = [j0, (j0 + 1) % 3, (j0 + 2) % 3];
            Ok(singular_moments(t, perm_t, s, perm_s, k, SingularCase::CommonVertex, cfg.singular_order))
        }
        _ => Err(Error::Geometry("triangles share vertices inconsistently".into())),
    }
}

/// Maps a reference point to the triangle `(p0, p1, p2)` and returns it with
/// the barycentric weights of the three vertices.
#[inline]
fn chart(p: &[[f64; 2]; 3], u: [f64; 2]) -> ([f64; 2], [f64; 3]) {
    let x = [
        p[0][0] + u[0] * (p[1][0] - p[0][0]) + u[1] * (p[2][0] - p[1][0]),
        p[0][1] + u[0] * (p[1][1] - p[0][1]) + u[1] * (p[2][1] - p[1][1]),
    ];
    (x, [1.0 - u[0], u[0] - u[1], u[1]])
}

fn singular_moments(
    t: &Triangle,
    perm_t: [usize; 3],
    s: &Triangle,
    perm_s: [usize; 3],
    k: f64,
    case: SingularCase,
    order: usize,
) -> MomentTensor {
    let pt = [t[perm_t[0]], t[perm_t[1]], t[perm_t[2]]];
    let ps = [s[perm_s[0]], s[perm_s[1]], s[perm_s[2]]];
    let jac = twice_area(t) * twice_area(s);
    let mut m = [[Complex64::new(0.0, 0.0); 3]; 3];
    for &(xh, yh, w) in singular_rule(case, order).iter() {
        let (x, bx) = chart(&pt, xh);
        let (y, by) = chart(&ps, yh);
        let r = norm2(sub(x, y));
        let kv = helmholtz_kernel(r, k) * w;
        for a in 0..3 {
            let ka = kv * bx[a];
            for b in 0..3 {
                m[a][b] += ka * by[b];
            }
        }
    }
    let mut out = MomentTensor::zero();
    for a in 0..3 {
        for b in 0..3 {
            out.0[perm_t[a]][perm_s[b]] = m[a][b] * jac;
        }
    }
    out
}

fn regular_moments(t: &Triangle, s: &Triangle, k: f64, order: usize) -> MomentTensor {
    let rule = triangle_rule(order);
    let jt = twice_area(t);
    let js = twice_area(s);
    let pts_s: Vec<([f64; 2], [f64; 3], f64)> = rule
        .iter()
        .map(|&(u, w)| {
            let (y, by) = chart(s, u);
            (y, by, w * js)
        })
        .collect();
    let mut m = [[Complex64::new(0.0, 0.0); 3]; 3];
    for &(u, wx) in &rule {
        let (x, bx) = chart(t, u);
        // Inner sum against the trial basis, then the outer test weights.
        let mut inner = [Complex64::new(0.0, 0.0); 3];
        for &(y, by, wy) in &pts_s {
            let kv = helmholtz_kernel(norm2(sub(x, y)), k) * wy;
            for b in 0..3 {
                inner[b] += kv * by[b];
            }
        }
        let wx = wx * jt;
        for a in 0..3 {
            for b in 0..3 {
                m[a][b] += inner[b] * (bx[a] * wx);
            }
        }
    }
    MomentTensor(m)
}

/// Plain tensor rule of the given order regardless of adjacency; only
/// meaningful for separated pairs. Exposed for reference computations.
pub fn tensor_moments(t: &Triangle, s: &Triangle, k: f64, order: usize) -> MomentTensor {
    regular_moments(t, s, k, order)
}
