//! Element-by-element assembly on the screen; the reference for the FFT path
//! and the only path supporting per-element impedances.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::{barycentric_gradients, triangle_vertex_nodes, twice_signed_area, ImpedanceParams};
use crate::error::{Error, Result};
use crate::mesh::{DofMap, LatticeMesh, Triangle};
use crate::quadrature::{pair_moments, QuadratureConfig};

type C64 = Complex64;

/// Largest system the dense path will build by default.
pub const DENSE_CAP: usize = 6000;

/// Screen Galerkin matrices of the two boundary integral operators.
#[derive(Debug, Clone)]
pub struct LayerMatrices {
    /// `S[i][j] = ∫∫ Φ χ_i χ_j` over active triangles (screen order).
    pub single_layer: DMatrix<C64>,
    /// `W[p][q] = ∫∫ Φ (∇φ_p · ∇φ_q - k² φ_p φ_q)` over active nodes; `W = -T`.
    pub hypersingular: DMatrix<C64>,
}

struct ElementData {
    triangles: Vec<Triangle>,
    grads: Vec<[[f64; 2]; 3]>,
    nodes: Vec<[Option<usize>; 3]>,
}

fn element_data(mesh: &LatticeMesh, dofs: &DofMap) -> ElementData {
    let triangles: Vec<Triangle> =
        mesh.active_triangles().map(|(kind, a, b)| mesh.triangle(kind, a as i64, b as i64)).collect();
    let grads = triangles.iter().map(barycentric_gradients).collect();
    ElementData { triangles, grads, nodes: triangle_vertex_nodes(mesh, dofs) }
}

/// Assembles `S` and `W` by looping over all ordered pairs of active triangles.
pub fn assemble_layer_matrices(
    mesh: &LatticeMesh,
    dofs: &DofMap,
    k: f64,
    cfg: &QuadratureConfig,
) -> Result<LayerMatrices> {
    cfg.validate()?;
    let n = dofs.n_screen();
    if n > DENSE_CAP {
        return Err(Error::TooLarge { n, cap: DENSE_CAP });
    }
    layer_matrices(&element_data(mesh, dofs), dofs, k, cfg)
}

/// `(row, col, value)` contribution to the node matrix.
type Triplet = (usize, usize, C64);

fn layer_matrices(el: &ElementData, dofs: &DofMap, k: f64, cfg: &QuadratureConfig) -> Result<LayerMatrices> {
    let nt = el.triangles.len();
    let k2 = k * k;
    // Each row holds the S row and the W contributions of that test triangle.
    let rows: Vec<(Vec<C64>, Vec<Triplet>)> = (0..nt)
        .into_par_iter()
        .map(|i| {
            let mut s_row = Vec::with_capacity(nt);
            let mut w = Vec::new();
            for j in 0..nt {
                let m = pair_moments(&el.triangles[i], &el.triangles[j], k, cfg)?;
                let total = m.sum();
                s_row.push(total);
                for (a, p) in el.nodes[i].iter().enumerate() {
                    let Some(p) = p else { continue };
                    let ga = el.grads[i][a];
                    for (b, q) in el.nodes[j].iter().enumerate() {
                        let Some(q) = q else { continue };
                        let gb = el.grads[j][b];
                        w.push((*p, *q, total * (ga[0] * gb[0] + ga[1] * gb[1]) - m.0[a][b] * k2));
                    }
                }
            }
            Ok((s_row, w))
        })
        .collect::<Result<_>>()?;
    let nn = dofs.n_nodes();
    let mut single_layer = DMatrix::zeros(nt, nt);
    let mut hypersingular = DMatrix::zeros(nn, nn);
    for (i, (s_row, w)) in rows.into_iter().enumerate() {
        for (j, v) in s_row.into_iter().enumerate() {
            single_layer[(i, j)] = v;
        }
        for (p, q, v) in w {
            hypersingular[(p, q)] += v;
        }
    }
    Ok(LayerMatrices { single_layer, hypersingular })
}

/// Full screen system matrix with the default size cap.
pub fn assemble_dense(
    mesh: &LatticeMesh,
    dofs: &DofMap,
    k: f64,
    lambda: &ImpedanceParams,
    cfg: &QuadratureConfig,
) -> Result<DMatrix<C64>> {
    assemble_dense_with_cap(mesh, dofs, k, lambda, cfg, DENSE_CAP)
}

pub fn assemble_dense_with_cap(
    mesh: &LatticeMesh,
    dofs: &DofMap,
    k: f64,
    lambda: &ImpedanceParams,
    cfg: &QuadratureConfig,
    cap: usize,
) -> Result<DMatrix<C64>> {
    if !(k >= 0.0) || !k.is_finite() {
        return Err(Error::invalid(format!("wavenumber must be finite and >= 0, got {k}")));
    }
    lambda.validate()?;
    lambda.check_len(dofs.n_triangles())?;
    cfg.validate()?;
    let n = dofs.n_screen();
    if n > cap {
        return Err(Error::TooLarge { n, cap });
    }
    let el = element_data(mesh, dofs);
    let layers = layer_matrices(&el, dofs, k, cfg)?;
    let nn = dofs.n_nodes();
    let nt = el.triangles.len();
    let mut a = DMatrix::<C64>::zeros(n, n);
    a.view_mut((0, 0), (nn, nn)).copy_from(&layers.hypersingular);
    for i in 0..nt {
        let cs = lambda.coefficients_at(i).cs;
        for j in 0..nt {
            a[(nn + i, nn + j)] = -cs * layers.single_layer[(i, j)];
        }
    }
    for (e, t) in el.triangles.iter().enumerate() {
        let area = 0.5 * twice_signed_area(t).abs();
        let c = lambda.coefficients_at(e);
        let row = nn + e;
        a[(row, row)] += area;
        for (la, p) in el.nodes[e].iter().enumerate() {
            let Some(p) = *p else { continue };
            a[(p, row)] += c.c1 * (area / 3.0);
            a[(row, p)] += c.c2 * (area / 3.0);
            for (lb, q) in el.nodes[e].iter().enumerate() {
                let Some(q) = *q else { continue };
                let mass = area / 12.0 * if la == lb { 2.0 } else { 1.0 };
                a[(p, q)] -= c.c0 * mass;
            }
        }
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::koch_prefractal;
    use crate::mesh::{build_dof_map, build_lattice};

    fn koch(level: u32, m: u64) -> (LatticeMesh, DofMap) {
        let mesh = build_lattice(&koch_prefractal(std::f64::consts::FRAC_PI_6, level).unwrap(), m).unwrap();
        let dofs = build_dof_map(&mesh);
        (mesh, dofs)
    }

    fn max_abs(m: &DMatrix<C64>) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn layer_blocks_are_complex_symmetric() {
        let (mesh, dofs) = koch(1, 2);
        let layers = assemble_layer_matrices(&mesh, &dofs, 5.0, &QuadratureConfig::default()).unwrap();
        for m in [&layers.single_layer, &layers.hypersingular] {
            let asym = max_abs(&(m - m.transpose()));
            assert!(asym <= 1e-8 * max_abs(m), "{asym:e}");
        }
    }

    #[test]
    fn equal_impedances_decouple_the_unknowns() {
        let (mesh, dofs) = koch(1, 2);
        let lam = ImpedanceParams::constant(C64::new(2.0, 1.0), C64::new(2.0, 1.0)).unwrap();
        let a = assemble_dense(&mesh, &dofs, 4.0, &lam, &QuadratureConfig::default()).unwrap();
        let nn = dofs.n_nodes();
        let nt = dofs.n_triangles();
        assert!(a.view((0, nn), (nn, nt)).iter().all(|z| *z == C64::new(0.0, 0.0)));
        assert!(a.view((nn, 0), (nt, nn)).iter().all(|z| *z == C64::new(0.0, 0.0)));
    }

    #[test]
    fn identity_block_has_positive_real_part() {
        // Re <M00 ψ, ψ> = Σ area |ψ|² for the P0 mass block alone.
        let (mesh, dofs) = koch(1, 2);
        let lam = ImpedanceParams::constant(C64::new(1.0, 0.0), C64::new(1.0, 0.0)).unwrap();
        let a0 = assemble_dense(&mesh, &dofs, 0.0, &lam, &QuadratureConfig::default()).unwrap();
        let layers = assemble_layer_matrices(&mesh, &dofs, 0.0, &QuadratureConfig::default()).unwrap();
        let nn = dofs.n_nodes();
        let nt = dofs.n_triangles();
        let mass = a0.view((nn, nn), (nt, nt)) + layers.single_layer.map(|z| z * 2.0);
        let area = mesh.triangle_area();
        for i in 0..nt {
            for j in 0..nt {
                let expect = if i == j { area } else { 0.0 };
                assert!((mass[(i, j)] - C64::new(expect, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn per_element_matches_constant() {
        let (mesh, dofs) = koch(1, 2);
        let (p, m) = (C64::new(7.5, 7.5), C64::new(5.0, 5.0));
        let nt = dofs.n_triangles();
        let cfg = QuadratureConfig::default();
        let a = assemble_dense(&mesh, &dofs, 5.0, &ImpedanceParams::constant(p, m).unwrap(), &cfg).unwrap();
        let pe = ImpedanceParams::per_element(vec![p; nt], vec![m; nt]).unwrap();
        let b = assemble_dense(&mesh, &dofs, 5.0, &pe, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cap_is_enforced() {
        let (mesh, dofs) = koch(1, 2);
        let lam = ImpedanceParams::absorbing(1.0).unwrap();
        let r = assemble_dense_with_cap(&mesh, &dofs, 1.0, &lam, &QuadratureConfig::default(), 10);
        assert!(matches!(r, Err(Error::TooLarge { .. })));
    }
}
