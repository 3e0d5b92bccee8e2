//! Galerkin system for the jump unknowns `(φ, ψ)`:
//!
//! ```text
//! [ -c0 M11 + W     c1 M10      ] [φ]   [ ∫ f1 φ_p ]
//! [  c2 M01         M00 - cS S  ] [ψ] = [ ∫ f2 χ_p ]
//! ```
//!
//! with `W = -T` in its integration-by-parts form, `S` the single layer, and
//! `M` the mixed P1/P0 mass matrices. Basis functions are real, so the dual
//! pairing needs no conjugation.

mod blocks;
mod cache;
mod dense;

pub use blocks::{assemble_generating_blocks, GeneratingArray, OperatorBlocks};
pub use cache::{content_key, load_or_assemble};
pub use dense::{assemble_dense, assemble_dense_with_cap, assemble_layer_matrices, LayerMatrices, DENSE_CAP};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mesh::{DofMap, LatticeMesh, Triangle};
use crate::quadrature::gauss::triangle_rule;
use crate::quadrature::QuadratureConfig;

type C64 = Complex64;

/// Coefficients of the impedance-dependent terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpedanceCoefficients {
    /// `λ+ λ- / (λ+ + λ-)`
    pub c0: C64,
    /// `(λ+ - λ-) / (2 (λ+ + λ-))`
    pub c1: C64,
    /// `(λ+ - λ-) / 2`
    pub c2: C64,
    /// `λ+ + λ-`
    pub cs: C64,
}

impl ImpedanceCoefficients {
    pub fn new(plus: C64, minus: C64) -> Self {
        let sum = plus + minus;
        ImpedanceCoefficients {
            c0: plus * minus / sum,
            c1: 0.5 * (plus - minus) / sum,
            c2: 0.5 * (plus - minus),
            cs: sum,
        }
    }
}

/// Impedances on the two faces of the screen (`+` faces the `+e3` side).
#[derive(Debug, Clone, PartialEq)]
pub enum ImpedanceParams {
    Constant {
        plus: C64,
        minus: C64,
    },
    /// One value per active triangle, in screen order (up, then down).
    PerElement {
        plus: Vec<C64>,
        minus: Vec<C64>,
    },
}

fn check_pair(plus: C64, minus: C64) -> Result<()> {
    if !(plus.re.is_finite() && plus.im.is_finite() && minus.re.is_finite() && minus.im.is_finite()) {
        return Err(Error::invalid("impedance must be finite"));
    }
    if plus.im < 0.0 || minus.im < 0.0 {
        return Err(Error::invalid(format!("impedance must have Im >= 0, got {plus} and {minus}")));
    }
    if (plus + minus).norm() == 0.0 {
        return Err(Error::invalid("impedances must satisfy |λ+ + λ-| > 0"));
    }
    Ok(())
}

/// Constant impedances, either fixed or proportional to the wavenumber
/// (`λ± = k · plus/minus`), so one rule serves a sweep over k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpedanceLaw {
    pub plus: C64,
    pub minus: C64,
    pub scale_with_k: bool,
}

impl ImpedanceLaw {
    /// `λ+ = 1.5 k (1 + i)`, `λ- = k (1 + i)`.
    pub fn absorbing() -> Self {
        ImpedanceLaw { plus: C64::new(1.5, 1.5), minus: C64::new(1.0, 1.0), scale_with_k: true }
    }

    pub fn params(&self, k: f64) -> Result<ImpedanceParams> {
        let s = if self.scale_with_k { k } else { 1.0 };
        ImpedanceParams::constant(self.plus * s, self.minus * s)
    }
}

impl Default for ImpedanceLaw {
    fn default() -> Self {
        Self::absorbing()
    }
}

impl ImpedanceParams {
    pub fn constant(plus: C64, minus: C64) -> Result<Self> {
        check_pair(plus, minus)?;
        Ok(ImpedanceParams::Constant { plus, minus })
    }

    pub fn per_element(plus: Vec<C64>, minus: Vec<C64>) -> Result<Self> {
        if plus.len() != minus.len() {
            return Err(Error::DimensionMismatch { expected: plus.len(), got: minus.len() });
        }
        for (&p, &m) in plus.iter().zip(&minus) {
            check_pair(p, m)?;
        }
        Ok(ImpedanceParams::PerElement { plus, minus })
    }

    /// `λ+ = 1.5 k (1 + i)`, `λ- = k (1 + i)`.
    pub fn absorbing(k: f64) -> Result<Self> {
        Self::constant(C64::new(1.5 * k, 1.5 * k), C64::new(k, k))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ImpedanceParams::Constant { plus, minus } => check_pair(*plus, *minus),
            ImpedanceParams::PerElement { plus, minus } => {
                if plus.len() != minus.len() {
                    return Err(Error::DimensionMismatch { expected: plus.len(), got: minus.len() });
                }
                plus.iter().zip(minus).try_for_each(|(&p, &m)| check_pair(p, m))
            }
        }
    }

    /// `(λ+, λ-)` on the screen triangle with index `element`.
    pub fn at(&self, element: usize) -> (C64, C64) {
        match self {
            ImpedanceParams::Constant { plus, minus } => (*plus, *minus),
            ImpedanceParams::PerElement { plus, minus } => (plus[element], minus[element]),
        }
    }

    pub fn coefficients_at(&self, element: usize) -> ImpedanceCoefficients {
        let (p, m) = self.at(element);
        ImpedanceCoefficients::new(p, m)
    }

    /// Coefficients for the translation-invariant fast path.
    pub fn constant_coefficients(&self) -> Result<ImpedanceCoefficients> {
        match self {
            ImpedanceParams::Constant { plus, minus } => Ok(ImpedanceCoefficients::new(*plus, *minus)),
            ImpedanceParams::PerElement { .. } => {
                Err(Error::invalid("the FFT path needs constant impedances; use assemble_dense for per-element values"))
            }
        }
    }

    fn check_len(&self, n_triangles: usize) -> Result<()> {
        match self {
            ImpedanceParams::PerElement { plus, .. } if plus.len() != n_triangles => {
                Err(Error::DimensionMismatch { expected: n_triangles, got: plus.len() })
            }
            _ => Ok(()),
        }
    }
}

/// Plane wave `e^{ik d·x}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncidentWave {
    k: f64,
    direction: [f64; 3],
}

impl IncidentWave {
    /// `direction` is normalised; it must be nonzero.
    pub fn new(k: f64, direction: [f64; 3]) -> Result<Self> {
        if !(k >= 0.0) || !k.is_finite() {
            return Err(Error::invalid(format!("wavenumber must be finite and >= 0, got {k}")));
        }
        let len = direction.iter().map(|d| d * d).sum::<f64>().sqrt();
        if !(len > 0.0) || !len.is_finite() {
            return Err(Error::invalid("incident direction must be a nonzero finite vector"));
        }
        Ok(IncidentWave { k, direction: direction.map(|d| d / len) })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn direction(&self) -> [f64; 3] {
        self.direction
    }

    pub fn value(&self, x: [f64; 3]) -> C64 {
        let phase = self.k * (self.direction[0] * x[0] + self.direction[1] * x[1] + self.direction[2] * x[2]);
        C64::from_polar(1.0, phase)
    }

    /// Trace on the screen plane.
    pub fn trace(&self, x: Point) -> C64 {
        self.value([x[0], x[1], 0.0])
    }

    /// `∂u/∂x3` on the screen plane.
    pub fn normal_derivative(&self, x: Point) -> C64 {
        C64::new(0.0, self.k * self.direction[2]) * self.trace(x)
    }
}

pub(crate) fn twice_signed_area(t: &Triangle) -> f64 {
    (t[1][0] - t[0][0]) * (t[2][1] - t[0][1]) - (t[1][1] - t[0][1]) * (t[2][0] - t[0][0])
}

/// Constant gradients of the three barycentric functions.
pub(crate) fn barycentric_gradients(t: &Triangle) -> [[f64; 2]; 3] {
    let a2 = twice_signed_area(t);
    let mut g = [[0.0; 2]; 3];
    for (i, gi) in g.iter_mut().enumerate() {
        let p = t[(i + 1) % 3];
        let q = t[(i + 2) % 3];
        *gi = [-(q[1] - p[1]) / a2, (q[0] - p[0]) / a2];
    }
    g
}

/// Screen index of the active node at each vertex of each active triangle.
pub(crate) fn triangle_vertex_nodes(mesh: &LatticeMesh, dofs: &DofMap) -> Vec<[Option<usize>; 3]> {
    let ny = dofs.ny();
    let mut node_of = vec![usize::MAX; (dofs.nx() + 1) * (ny + 1)];
    for (i, n) in dofs.nodes.iter().enumerate() {
        node_of[n[0] * (ny + 1) + n[1]] = i;
    }
    mesh.active_triangles()
        .map(|(kind, a, b)| {
            let offs = kind.vertex_offsets();
            offs.map(|o| {
                let (va, vb) = (a + o[0] as usize, b + o[1] as usize);
                let i = node_of[va * (ny + 1) + vb];
                (i != usize::MAX).then_some(i)
            })
        })
        .collect()
}

/// Right-hand side from arbitrary face data `g±` (functions on the plane).
pub fn assemble_rhs_with(
    mesh: &LatticeMesh,
    dofs: &DofMap,
    lambda: &ImpedanceParams,
    g_plus: &dyn Fn(Point) -> C64,
    g_minus: &dyn Fn(Point) -> C64,
    cfg: &QuadratureConfig,
) -> Result<Vec<C64>> {
    lambda.validate()?;
    lambda.check_len(dofs.n_triangles())?;
    assemble_rhs_densities(mesh, dofs, cfg, &|e, x| {
        let (lp, lm) = lambda.at(e);
        let (gp, gm) = (g_plus(x), g_minus(x));
        (-(lm * gp + lp * gm) / (lp + lm), gp - gm)
    })
}

/// Right-hand side for plane-wave incidence, using the closed forms
/// `f1 = ik d3 u^i` and `f2 = -(λ+ + λ-) u^i`.
pub fn assemble_rhs(
    mesh: &LatticeMesh,
    dofs: &DofMap,
    incident: &IncidentWave,
    lambda: &ImpedanceParams,
    cfg: &QuadratureConfig,
) -> Result<Vec<C64>> {
    lambda.validate()?;
    lambda.check_len(dofs.n_triangles())?;
    assemble_rhs_densities(mesh, dofs, cfg, &|e, x| {
        let (lp, lm) = lambda.at(e);
        let ui = incident.trace(x);
        (incident.normal_derivative(x), -(lp + lm) * ui)
    })
}

/// Tests `(f1, f2)` against active hats and indicator functions.
fn assemble_rhs_densities(
    mesh: &LatticeMesh,
    dofs: &DofMap,
    cfg: &QuadratureConfig,
    densities: &dyn Fn(usize, Point) -> (C64, C64),
) -> Result<Vec<C64>> {
    cfg.validate()?;
    let rule = triangle_rule(cfg.regular_order);
    let vertex_nodes = triangle_vertex_nodes(mesh, dofs);
    let mut rhs = vec![C64::new(0.0, 0.0); dofs.n_screen()];
    let n_nodes = dofs.n_nodes();
    for (e, (kind, a, b)) in mesh.active_triangles().enumerate() {
        let t = mesh.triangle(kind, a as i64, b as i64);
        let jac = twice_signed_area(&t).abs();
        let mut hat = [C64::new(0.0, 0.0); 3];
        let mut ind = C64::new(0.0, 0.0);
        for &(u, w) in &rule {
            let bary = [1.0 - u[0], u[0] - u[1], u[1]];
            let x = [
                t[0][0] + u[0] * (t[1][0] - t[0][0]) + u[1] * (t[2][0] - t[1][0]),
                t[0][1] + u[0] * (t[1][1] - t[0][1]) + u[1] * (t[2][1] - t[1][1]),
            ];
            let (f1, f2) = densities(e, x);
            let w = w * jac;
            for (h, bv) in hat.iter_mut().zip(bary) {
                *h += f1 * (bv * w);
            }
            ind += f2 * w;
        }
        for (node, h) in vertex_nodes[e].iter().zip(hat) {
            if let Some(p) = node {
                rhs[*p] += h;
            }
        }
        rhs[n_nodes + e] += ind;
    }
    Ok(rhs)
}
