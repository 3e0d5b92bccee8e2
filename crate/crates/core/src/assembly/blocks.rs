//! Translation-invariant generating arrays of the parallelogram operator.
//!
//! All three basis families live on one `nx × ny` grid: triangles at their
//! cell `(a, b)`, nodes at their lattice position `(a, b)` with
//! `1 <= a < nx`, `1 <= b < ny`. The entry between a row function at grid
//! position `p` and a column function at `q` depends only on the two kinds and
//! on `p - q`, which is what each [`GeneratingArray`] stores.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::{barycentric_gradients, twice_signed_area, ImpedanceCoefficients, ImpedanceParams};
use crate::error::{Error, Result};
use crate::geometry::LatticeKind;
use crate::mesh::{BasisKind, DofMap, LatticeMesh, TriKind, Triangle, NODE_STAR};
use crate::quadrature::{pair_moments, MomentTensor, QuadratureConfig};

type C64 = Complex64;

/// Values `G(Δa, Δb)` for `|Δa| < nx`, `|Δb| < ny`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratingArray {
    nx: usize,
    ny: usize,
    values: Vec<C64>,
}

impl GeneratingArray {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        GeneratingArray { nx, ny, values: vec![C64::new(0.0, 0.0); (2 * nx - 1) * (2 * ny - 1)] }
    }

    /// Builds the array from a function of the offset.
    pub fn from_fn(nx: usize, ny: usize, f: impl Fn(i64, i64) -> C64 + Sync) -> Self {
        let span_b = 2 * ny - 1;
        let values = (0..(2 * nx - 1) * span_b)
            .into_par_iter()
            .map(|i| f((i / span_b) as i64 - (nx as i64 - 1), (i % span_b) as i64 - (ny as i64 - 1)))
            .collect();
        GeneratingArray { nx, ny, values }
    }

    pub fn from_values(nx: usize, ny: usize, values: Vec<C64>) -> Result<Self> {
        let n = (2 * nx - 1) * (2 * ny - 1);
        if values.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: values.len() });
        }
        Ok(GeneratingArray { nx, ny, values })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    /// Raw storage, offset `(Δa, Δb)` at `(Δa + nx - 1) * (2 ny - 1) + Δb + ny - 1`.
    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn get(&self, da: i64, db: i64) -> C64 {
        let ia = da + self.nx as i64 - 1;
        let ib = db + self.ny as i64 - 1;
        debug_assert!(ia >= 0 && ib >= 0 && (ia as usize) < 2 * self.nx - 1 && (ib as usize) < 2 * self.ny - 1);
        self.values[ia as usize * (2 * self.ny - 1) + ib as usize]
    }
}

/// The nine generating arrays of the parallelogram operator `Ã`, indexed
/// `[row kind][column kind]` in [`BasisKind`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorBlocks {
    pub kind: LatticeKind,
    pub pitch_denom: u64,
    pub k: f64,
    pub coefficients: ImpedanceCoefficients,
    pub blocks: [[GeneratingArray; 3]; 3],
}

/// Grid position of a parallelogram basis function.
fn grid_position(dofs: &DofMap, p: usize) -> (BasisKind, i64, i64) {
    let (kind, a, b) = dofs.para_position(p);
    (kind, a as i64, b as i64)
}

impl OperatorBlocks {
    pub fn nx(&self) -> usize {
        self.blocks[0][0].nx
    }

    pub fn ny(&self) -> usize {
        self.blocks[0][0].ny
    }

    /// Entry of `Ã` between parallelogram indices `row` and `col`.
    pub fn entry(&self, dofs: &DofMap, row: usize, col: usize) -> C64 {
        let (rk, ra, rb) = grid_position(dofs, row);
        let (ck, ca, cb) = grid_position(dofs, col);
        self.blocks[rk.index()][ck.index()].get(ra - ca, rb - cb)
    }

    /// Dense `Ã` on the whole parallelogram (test and oracle use only).
    pub fn to_dense_parallelogram(&self, dofs: &DofMap, cap: usize) -> Result<DMatrix<C64>> {
        let n = dofs.n_para();
        if n > cap {
            return Err(Error::TooLarge { n, cap });
        }
        Ok(DMatrix::from_fn(n, n, |i, j| self.entry(dofs, i, j)))
    }

    /// Number of complex values held.
    pub fn storage_len(&self) -> usize {
        self.blocks.iter().flatten().map(|g| g.values.len()).sum()
    }
}

fn cell_triangle(kind: LatticeKind, pitch: f64, tri: TriKind, a: i64, b: i64) -> Triangle {
    tri.vertex_offsets().map(|o| kind.to_physical((a + o[0]) as f64, (b + o[1]) as f64, pitch))
}

/// Moments `M(T_row at δ, T_col at 0)` for every ordered pair of triangle
/// kinds and every cell offset `|δa| <= nx`, `|δb| <= ny`.
struct MomentTable {
    nx: i64,
    ny: i64,
    data: Vec<MomentTensor>,
}

impl MomentTable {
    fn build(mesh: &LatticeMesh, k: f64, cfg: &QuadratureConfig) -> Result<Self> {
        let (nx, ny) = (mesh.nx as i64, mesh.ny as i64);
        let (sa, sb) = (2 * nx + 1, 2 * ny + 1);
        let pitch = mesh.pitch();
        let kinds = [TriKind::Up, TriKind::Down];
        let data = (0..4 * sa * sb)
            .into_par_iter()
            .map(|i| {
                let pair = i / (sa * sb);
                let rest = i % (sa * sb);
                let (da, db) = (rest / sb - nx, rest % sb - ny);
                let t = cell_triangle(mesh.kind, pitch, kinds[(pair / 2) as usize], da, db);
                let s = cell_triangle(mesh.kind, pitch, kinds[(pair % 2) as usize], 0, 0);
                pair_moments(&t, &s, k, cfg)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MomentTable { nx, ny, data })
    }

    fn get(&self, row: TriKind, col: TriKind, da: i64, db: i64) -> &MomentTensor {
        let (sa, sb) = (2 * self.nx + 1, 2 * self.ny + 1);
        let pair = (row as i64) * 2 + col as i64;
        &self.data[(pair * sa * sb + (da + self.nx) * sb + db + self.ny) as usize]
    }
}

/// Computes the nine generating arrays for constant impedances.
pub fn assemble_generating_blocks(
    mesh: &LatticeMesh,
    k: f64,
    lambda: &ImpedanceParams,
    cfg: &QuadratureConfig,
) -> Result<OperatorBlocks> {
    if !(k >= 0.0) || !k.is_finite() {
        return Err(Error::invalid(format!("wavenumber must be finite and >= 0, got {k}")));
    }
    lambda.validate()?;
    let coef = lambda.constant_coefficients()?;
    cfg.validate()?;
    let (nx, ny) = (mesh.nx, mesh.ny);
    let moments = MomentTable::build(mesh, k, cfg)?;
    let pitch = mesh.pitch();
    let area = mesh.triangle_area();
    let k2 = k * k;
    let grads = [TriKind::Up, TriKind::Down].map(|t| barycentric_gradients(&cell_triangle(mesh.kind, pitch, t, 0, 0)));
    debug_assert!((0.5 * twice_signed_area(&cell_triangle(mesh.kind, pitch, TriKind::Up, 0, 0)) - area).abs() < 1e-14);
    let zero = C64::new(0.0, 0.0);

    // Row node at Δ, column node at 0: sums over the two stars.
    let node_node = GeneratingArray::from_fn(nx, ny, |da, db| {
        let mut w = zero;
        let mut mass = 0.0;
        for &(t1, o1, l1) in &NODE_STAR {
            let g1 = grads[t1 as usize][l1];
            for &(t2, o2, l2) in &NODE_STAR {
                let g2 = grads[t2 as usize][l2];
                let (ca, cb) = (da + o1[0] - o2[0], db + o1[1] - o2[1]);
                let m = moments.get(t1, t2, ca, cb);
                w += m.sum() * (g1[0] * g2[0] + g1[1] * g2[1]) - m.0[l1][l2] * k2;
                if t1 == t2 && ca == 0 && cb == 0 {
                    mass += area / 12.0 * if l1 == l2 { 2.0 } else { 1.0 };
                }
            }
        }
        w - coef.c0 * mass
    });

    let tri_kinds = [TriKind::Up, TriKind::Down];
    let node_tri = tri_kinds.map(|col| {
        GeneratingArray::from_fn(nx, ny, |da, db| {
            let hit = NODE_STAR.iter().any(|&(kind, o, _)| kind == col && da + o[0] == 0 && db + o[1] == 0);
            if hit {
                coef.c1 * (area / 3.0)
            } else {
                zero
            }
        })
    });
    let tri_node = tri_kinds.map(|row| {
        GeneratingArray::from_fn(nx, ny, |da, db| {
            let hit = NODE_STAR.iter().any(|&(kind, o, _)| kind == row && da == o[0] && db == o[1]);
            if hit {
                coef.c2 * (area / 3.0)
            } else {
                zero
            }
        })
    });
    let tri_tri = |row: TriKind, col: TriKind| {
        GeneratingArray::from_fn(nx, ny, |da, db| {
            let s = moments.get(row, col, da, db).sum();
            let id = if row == col && da == 0 && db == 0 { area } else { 0.0 };
            C64::new(id, 0.0) - coef.cs * s
        })
    };
    let [nu, nd] = node_tri;
    let [un, dn] = tri_node;
    let blocks = [
        [node_node, nu, nd],
        [un, tri_tri(TriKind::Up, TriKind::Up), tri_tri(TriKind::Up, TriKind::Down)],
        [dn, tri_tri(TriKind::Down, TriKind::Up), tri_tri(TriKind::Down, TriKind::Down)],
    ];
    Ok(OperatorBlocks { kind: mesh.kind, pitch_denom: mesh.pitch_denom, k, coefficients: coef, blocks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::koch_prefractal;
    use crate::mesh::{build_dof_map, build_lattice};

    #[test]
    fn mass_offsets() {
        let mesh = LatticeMesh::full(LatticeKind::Triangular, 9, 4, 3).unwrap();
        let lam = ImpedanceParams::constant(C64::new(0.0, 0.0), C64::new(1.0, 0.0)).unwrap();
        // c0 = 0, cS = 1; with k = 0 the mixed blocks carry only c1 = -1/2, c2 = -1/2.
        let ops = assemble_generating_blocks(&mesh, 0.0, &lam, &QuadratureConfig::default()).unwrap();
        let area = mesh.triangle_area();
        // Same-kind diagonal offset is area - S(T, T), with S(T, T) > 0 at k = 0.
        for r in 1..3 {
            let s = C64::new(area, 0.0) - ops.blocks[r][r].get(0, 0);
            assert!(s.re > 0.0 && s.im.abs() < 1e-15);
        }
        // Mixed blocks: exactly the six star triangles are hit.
        for (r, c) in [(0, 1), (0, 2), (1, 0), (2, 0)] {
            let g = &ops.blocks[r][c];
            let hits = g.values().iter().filter(|v| v.norm() > 0.0).count();
            assert_eq!(hits, 3, "block ({r},{c})");
            for v in g.values().iter().filter(|v| v.norm() > 0.0) {
                assert!((v.re + 0.5 * area / 3.0).abs() < 1e-16);
            }
        }
    }

    #[test]
    fn per_element_impedance_rejected() {
        let mesh = LatticeMesh::full(LatticeKind::Triangular, 3, 2, 2).unwrap();
        let one = C64::new(1.0, 0.0);
        let lam = ImpedanceParams::per_element(vec![one; 8], vec![one; 8]).unwrap();
        assert!(assemble_generating_blocks(&mesh, 1.0, &lam, &QuadratureConfig::default()).is_err());
    }

    #[test]
    fn equal_offsets_give_equal_entries() {
        let poly = koch_prefractal(std::f64::consts::FRAC_PI_6, 1).unwrap();
        let mesh = build_lattice(&poly, 3).unwrap();
        let dofs = build_dof_map(&mesh);
        let lam = ImpedanceParams::absorbing(5.0).unwrap();
        let ops = assemble_generating_blocks(&mesh, 5.0, &lam, &QuadratureConfig::default()).unwrap();
        // Every node pair with offset (1, 0) sees the same entry.
        let mut seen = Vec::new();
        for (i, p) in dofs.nodes.iter().enumerate() {
            for (j, q) in dofs.nodes.iter().enumerate() {
                if p[0] == q[0] + 1 && p[1] == q[1] {
                    let r = dofs.restriction();
                    seen.push(ops.entry(&dofs, r[i], r[j]));
                }
            }
        }
        assert!(seen.len() > 3);
        assert!(seen.iter().all(|v| *v == seen[0]));
    }
}
