//! Restarted GMRES for complex systems given only through matrix-vector products.

use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::DofMap;

type C64 = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GmresConfig {
    pub rel_tol: f64,
    pub restart: usize,
    pub max_iterations: usize,
}

impl Default for GmresConfig {
    fn default() -> Self {
        GmresConfig { rel_tol: 1e-8, restart: 200, max_iterations: 2000 }
    }
}

impl GmresConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::invalid("gmres rel_tol must lie in (0, 1)"));
        }
        if self.restart == 0 {
            return Err(Error::invalid("gmres restart must be at least 1"));
        }
        Ok(())
    }
}

/// A square operator `x -> A x`. `matvec` takes `&mut self` so implementors
/// can keep their own work buffers.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn matvec(&mut self, x: &[C64], y: &mut [C64]) -> Result<()>;
}

impl LinearOperator for DMatrix<C64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn matvec(&mut self, x: &[C64], y: &mut [C64]) -> Result<()> {
        let n = self.nrows();
        if x.len() != self.ncols() || y.len() != n {
            return Err(Error::DimensionMismatch { expected: self.ncols(), got: x.len() });
        }
        y.fill(C64::new(0.0, 0.0));
        for (j, &xj) in x.iter().enumerate() {
            if xj == C64::new(0.0, 0.0) {
                continue;
            }
            for (yi, a) in y.iter_mut().zip(self.column(j).iter()) {
                *yi += a * xj;
            }
        }
        Ok(())
    }
}

/// Result of an iterative solve on a bare vector.
#[derive(Debug, Clone, PartialEq)]
pub struct GmresOutput {
    pub x: Vec<C64>,
    pub iterations: usize,
    /// `‖b - A x‖ / ‖b‖`, recomputed from the returned iterate.
    pub rel_residual: f64,
    /// `(iteration, estimated relative residual)` after every Arnoldi step.
    pub history: Vec<(usize, f64)>,
    pub converged: bool,
}

/// BEM coefficients split into the two unknown families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    /// P1 coefficients of the Dirichlet jump, one per active node.
    pub phi: Vec<C64>,
    /// P0 coefficients of the Neumann jump, active up then active down triangles.
    pub psi: Vec<C64>,
    pub iterations: usize,
    pub rel_residual: f64,
    pub seconds: f64,
    pub history: Vec<(usize, f64)>,
}

impl Solution {
    /// Coefficients in screen order (nodes, then triangles).
    pub fn coefficients(&self) -> Vec<C64> {
        let mut v = self.phi.clone();
        v.extend_from_slice(&self.psi);
        v
    }

    pub fn from_coefficients(dofs: &DofMap, x: &[C64]) -> Result<Self> {
        if x.len() != dofs.n_screen() {
            return Err(Error::DimensionMismatch { expected: dofs.n_screen(), got: x.len() });
        }
        let (phi, psi) = x.split_at(dofs.n_nodes());
        Ok(Solution {
            phi: phi.to_vec(),
            psi: psi.to_vec(),
            iterations: 0,
            rel_residual: 0.0,
            seconds: 0.0,
            history: Vec::new(),
        })
    }
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Complex Givens rotation zeroing `b` in `(a, b)`: returns `(c, s)` with
/// real `c` such that `[c, s; -conj(s), c] [a; b] = [r; 0]`.
fn givens(a: C64, b: C64) -> (f64, C64) {
    let an = a.norm();
    if an == 0.0 {
        return (0.0, C64::new(1.0, 0.0));
    }
    let t = (an * an + b.norm_sqr()).sqrt();
    (an / t, (a / an) * b.conj() / t)
}

/// Restarted GMRES with modified Gram-Schmidt and selective reorthogonalisation.
///
/// On non-convergence the best iterate is still returned with `converged = false`.
pub fn gmres<Op: LinearOperator + ?Sized>(op: &mut Op, b: &[C64], cfg: &GmresConfig) -> Result<GmresOutput> {
    cfg.validate()?;
    let n = op.dim();
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: b.len() });
    }
    let zero = C64::new(0.0, 0.0);
    let bnorm = norm(b);
    if bnorm.is_nan() {
        return Err(Error::Breakdown("right-hand side contains NaN".into()));
    }
    let mut x = vec![zero; n];
    if bnorm == 0.0 {
        return Ok(GmresOutput { x, iterations: 0, rel_residual: 0.0, history: Vec::new(), converged: true });
    }

    let m = cfg.restart.min(n).max(1);
    let mut basis: Vec<Vec<C64>> = (0..=m).map(|_| vec![zero; n]).collect();
    let mut hess = vec![vec![zero; m]; m + 1];
    let mut cs = vec![0.0f64; m];
    let mut sn = vec![zero; m];
    let mut g = vec![zero; m + 1];
    let mut w = vec![zero; n];
    let mut history = Vec::new();
    let mut iterations = 0usize;

    let mut r = vec![zero; n];
    let residual = |op: &mut Op, x: &[C64], r: &mut [C64]| -> Result<f64> {
        op.matvec(x, r)?;
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        Ok(norm(r))
    };

    let mut rnorm = residual(op, &x, &mut r)?;
    let mut best = (rnorm / bnorm, x.clone());
    loop {
        let rel = rnorm / bnorm;
        if rel.is_nan() {
            return Err(Error::Breakdown(format!("NaN residual after {iterations} iterations")));
        }
        if rel < best.0 {
            best = (rel, x.clone());
        }
        if rel <= cfg.rel_tol || iterations >= cfg.max_iterations {
            break;
        }
        for (v0, ri) in basis[0].iter_mut().zip(&r) {
            *v0 = ri / rnorm;
        }
        g.fill(zero);
        g[0] = C64::new(rnorm, 0.0);
        let mut steps = 0;
        for j in 0..m {
            if iterations >= cfg.max_iterations {
                break;
            }
            op.matvec(&basis[j], &mut w)?;
            let before = norm(&w);
            for i in 0..=j {
                let h = dot(&basis[i], &w);
                hess[i][j] = h;
                for (wk, vk) in w.iter_mut().zip(&basis[i]) {
                    *wk -= h * vk;
                }
            }
            let mut after = norm(&w);
            if after < 0.7 * before {
                for i in 0..=j {
                    let h = dot(&basis[i], &w);
                    hess[i][j] += h;
                    for (wk, vk) in w.iter_mut().zip(&basis[i]) {
                        *wk -= h * vk;
                    }
                }
                after = norm(&w);
            }
            if after.is_nan() {
                return Err(Error::Breakdown(format!("NaN in Arnoldi step {}", iterations + 1)));
            }
            hess[j + 1][j] = C64::new(after, 0.0);
            for i in 0..j {
                let (c, s) = (cs[i], sn[i]);
                let (h0, h1) = (hess[i][j], hess[i + 1][j]);
                hess[i][j] = c * h0 + s * h1;
                hess[i + 1][j] = -s.conj() * h0 + c * h1;
            }
            let (c, s) = givens(hess[j][j], hess[j + 1][j]);
            cs[j] = c;
            sn[j] = s;
            hess[j][j] = c * hess[j][j] + s * hess[j + 1][j];
            hess[j + 1][j] = zero;
            g[j + 1] = -s.conj() * g[j];
            g[j] *= c;

            iterations += 1;
            steps = j + 1;
            let est = g[j + 1].norm() / bnorm;
            history.push((iterations, est));
            if after > 0.0 {
                let inv = 1.0 / after;
                for (vk, wk) in basis[j + 1].iter_mut().zip(&w) {
                    *vk = wk * inv;
                }
            }
            if est <= cfg.rel_tol || after == 0.0 {
                break;
            }
        }
        // Back substitution for the least-squares coefficients.
        let mut y = vec![zero; steps];
        for i in (0..steps).rev() {
            let mut acc = g[i];
            for l in i + 1..steps {
                acc -= hess[i][l] * y[l];
            }
            if hess[i][i] == zero {
                return Err(Error::Breakdown("singular Hessenberg factor".into()));
            }
            y[i] = acc / hess[i][i];
        }
        for (i, yi) in y.iter().enumerate() {
            for (xk, vk) in x.iter_mut().zip(&basis[i]) {
                *xk += yi * vk;
            }
        }
        rnorm = residual(op, &x, &mut r)?;
        if steps == 0 {
            break;
        }
    }
    let rel = rnorm / bnorm;
    let converged = rel <= cfg.rel_tol;
    if !converged && best.0 < rel {
        x = best.1;
    }
    let rel_residual = if !converged && best.0 < rel { best.0 } else { rel };
    Ok(GmresOutput { x, iterations, rel_residual, history, converged })
}

/// Solves the screen system and splits the coefficients into `(φ, ψ)`.
///
/// Non-convergence yields [`Error::NotConverged`] carrying the best iterate.
pub fn solve<Op: LinearOperator + ?Sized>(
    op: &mut Op,
    dofs: &DofMap,
    rhs: &[C64],
    cfg: &GmresConfig,
) -> Result<Solution> {
    if op.dim() != dofs.n_screen() {
        return Err(Error::DimensionMismatch { expected: dofs.n_screen(), got: op.dim() });
    }
    let start = Instant::now();
    let out = gmres(op, rhs, cfg)?;
    let mut sol = Solution::from_coefficients(dofs, &out.x)?;
    sol.iterations = out.iterations;
    sol.rel_residual = out.rel_residual;
    sol.seconds = start.elapsed().as_secs_f64();
    sol.history = out.history;
    if out.converged {
        Ok(sol)
    } else {
        Err(Error::NotConverged(Box::new(sol)))
    }
}

/// Dense LU solve; the direct reference for small systems.
pub fn solve_dense_lu(matrix: &DMatrix<C64>, rhs: &[C64]) -> Result<Vec<C64>> {
    if matrix.nrows() != rhs.len() || !matrix.is_square() {
        return Err(Error::DimensionMismatch { expected: matrix.nrows(), got: rhs.len() });
    }
    let b = nalgebra::DVector::from_column_slice(rhs);
    matrix
        .clone()
        .lu()
        .solve(&b)
        .map(|x| x.as_slice().to_vec())
        .ok_or_else(|| Error::Breakdown("singular matrix in LU".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_system(n: usize, shift: f64, seed: u64) -> (DMatrix<C64>, Vec<C64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = DMatrix::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        for i in 0..n {
            a[(i, i)] += C64::new(shift, 0.5 * shift);
        }
        let b = (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        (a, b)
    }

    fn rel_diff(a: &[C64], b: &[C64]) -> f64 {
        let d: Vec<C64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        norm(&d) / norm(b)
    }

    #[test]
    fn zero_rhs_gives_zero_without_iterating() {
        let (mut a, _) = random_system(10, 5.0, 1);
        let out = gmres(&mut a, &[C64::new(0.0, 0.0); 10], &GmresConfig::default()).unwrap();
        assert_eq!(out.iterations, 0);
        assert!(out.x.iter().all(|z| *z == C64::new(0.0, 0.0)));
    }

    #[test]
    fn matches_lu_with_and_without_restarts() {
        let (mut a, b) = random_system(60, 8.0, 2);
        let exact = solve_dense_lu(&a, &b).unwrap();
        for restart in [60, 7] {
            let cfg = GmresConfig { rel_tol: 1e-12, restart, max_iterations: 5000 };
            let out = gmres(&mut a, &b, &cfg).unwrap();
            assert!(out.converged);
            assert!(out.rel_residual <= 1e-12);
            assert!(rel_diff(&out.x, &exact) < 1e-10, "restart {restart}");
        }
    }

    #[test]
    fn residual_monotone_within_cycles() {
        let (mut a, b) = random_system(80, 3.0, 3);
        let cfg = GmresConfig { rel_tol: 1e-10, restart: 15, max_iterations: 3000 };
        let out = gmres(&mut a, &b, &cfg).unwrap();
        for cycle in out.history.chunks(cfg.restart) {
            for pair in cycle.windows(2) {
                assert!(pair[1].1 <= pair[0].1 * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn non_convergence_reports_best_iterate() {
        let (mut a, b) = random_system(50, 0.0, 4);
        let cfg = GmresConfig { rel_tol: 1e-14, restart: 3, max_iterations: 12 };
        let out = gmres(&mut a, &b, &cfg).unwrap();
        assert!(!out.converged);
        assert_eq!(out.iterations, 12);
        assert!(out.rel_residual < 1.0);
        let mut r = vec![C64::new(0.0, 0.0); 50];
        a.matvec(&out.x, &mut r).unwrap();
        let d: Vec<C64> = r.iter().zip(&b).map(|(x, y)| y - x).collect();
        assert!((norm(&d) / norm(&b) - out.rel_residual).abs() < 1e-12);
    }

    #[test]
    fn nan_is_a_breakdown() {
        let (mut a, mut b) = random_system(5, 3.0, 5);
        b[2] = C64::new(f64::NAN, 0.0);
        assert!(matches!(gmres(&mut a, &b, &GmresConfig::default()), Err(Error::Breakdown(_))));
        let (mut a, b) = random_system(5, 3.0, 5);
        a[(1, 1)] = C64::new(f64::NAN, 0.0);
        assert!(matches!(gmres(&mut a, &b, &GmresConfig::default()), Err(Error::Breakdown(_))));
    }

    #[test]
    fn invalid_configs_rejected() {
        for cfg in [
            GmresConfig { rel_tol: 0.0, ..Default::default() },
            GmresConfig { rel_tol: 1.0, ..Default::default() },
            GmresConfig { restart: 0, ..Default::default() },
        ] {
            assert!(cfg.validate().is_err());
        }
    }

    #[test]
    fn scaling_rhs_scales_solution() {
        let (mut a, b) = random_system(40, 6.0, 6);
        let cfg = GmresConfig { rel_tol: 1e-13, ..Default::default() };
        let x = gmres(&mut a, &b, &cfg).unwrap().x;
        let alpha = C64::new(-2.5, 0.75);
        let bs: Vec<C64> = b.iter().map(|z| z * alpha).collect();
        let xs = gmres(&mut a, &bs, &cfg).unwrap().x;
        let expect: Vec<C64> = x.iter().map(|z| z * alpha).collect();
        assert!(rel_diff(&xs, &expect) <= 1e-12);
    }
}
