//! End-to-end setup: polygon → mesh → operator → right-hand side → solve.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::assembly::{assemble_dense, assemble_rhs, load_or_assemble, ImpedanceParams, IncidentWave};
use crate::error::{Error, Result};
use crate::fastmv::{FastOperator, ScreenOperator};
use crate::geometry::{koch_prefractal, square_prefractal, Family, PrefractalPolygon};
use crate::mesh::{build_dof_map, build_lattice, DofMap, LatticeMesh};
use crate::quadrature::QuadratureConfig;
use crate::solver::{solve, GmresConfig, Solution};

type C64 = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMode {
    /// FFT operator with GMRES.
    Fast,
    /// Dense element assembly with GMRES; small meshes only.
    Dense,
}

pub fn prefractal(family: Family, level: u32) -> Result<PrefractalPolygon> {
    match family {
        Family::Koch { beta } => koch_prefractal(beta, level),
        Family::Square => square_prefractal(level),
    }
}

/// A meshed screen with its scattering data.
#[derive(Debug, Clone)]
pub struct Problem {
    pub polygon: PrefractalPolygon,
    pub mesh: LatticeMesh,
    pub dofs: DofMap,
    pub incident: IncidentWave,
    pub lambda: ImpedanceParams,
    pub quadrature: QuadratureConfig,
}

impl Problem {
    pub fn new(
        family: Family,
        level: u32,
        refinement: u64,
        incident: IncidentWave,
        lambda: ImpedanceParams,
        quadrature: QuadratureConfig,
    ) -> Result<Self> {
        lambda.validate()?;
        quadrature.validate()?;
        let polygon = prefractal(family, level)?;
        let mesh = build_lattice(&polygon, refinement)?;
        let dofs = build_dof_map(&mesh);
        if dofs.n_screen() == 0 {
            return Err(Error::Mesh("mesh has no active triangles".into()));
        }
        Ok(Problem { polygon, mesh, dofs, incident, lambda, quadrature })
    }

    pub fn k(&self) -> f64 {
        self.incident.k()
    }

    pub fn rhs(&self) -> Result<Vec<C64>> {
        assemble_rhs(&self.mesh, &self.dofs, &self.incident, &self.lambda, &self.quadrature)
    }

    pub fn fast_operator(&self, cache_dir: Option<&Path>) -> Result<FastOperator> {
        let ops = load_or_assemble(cache_dir, &self.mesh, self.k(), &self.lambda, &self.quadrature)?;
        FastOperator::new(&ops)
    }

    /// Solves with the given right-hand side. Non-convergence is reported as
    /// [`Error::NotConverged`] carrying the best iterate.
    pub fn solve_with(
        &self,
        rhs: &[C64],
        mode: SolveMode,
        gmres: &GmresConfig,
        cache_dir: Option<&Path>,
    ) -> Result<Solution> {
        let start = std::time::Instant::now();
        let finish = |r: Result<Solution>| -> Result<Solution> {
            let seconds = start.elapsed().as_secs_f64();
            match r {
                Ok(mut s) => {
                    s.seconds = seconds;
                    Ok(s)
                }
                Err(Error::NotConverged(mut s)) => {
                    s.seconds = seconds;
                    Err(Error::NotConverged(s))
                }
                Err(e) => Err(e),
            }
        };
        match mode {
            SolveMode::Fast => {
                let op = self.fast_operator(cache_dir)?;
                let mut screen = ScreenOperator::new(&op, &self.dofs);
                finish(solve(&mut screen, &self.dofs, rhs, gmres))
            }
            SolveMode::Dense => {
                let mut a = assemble_dense(&self.mesh, &self.dofs, self.k(), &self.lambda, &self.quadrature)?;
                finish(solve(&mut a, &self.dofs, rhs, gmres))
            }
        }
    }

    pub fn solve(&self, mode: SolveMode, gmres: &GmresConfig, cache_dir: Option<&Path>) -> Result<Solution> {
        let rhs = self.rhs()?;
        self.solve_with(&rhs, mode, gmres, cache_dir)
    }
}
