//! Command implementations behind the `fracscreen` binary.
//!
//! Every command reads a [`RunConfig`] and writes into its `output_dir`:
//!
//! * `mesh`: `mesh_summary.json`, `polygon.csv` (`x,y` per vertex),
//!   `polygon.meta` (`key=value` lines) and
//!   `mesh_wireframe.csv` (`x0,y0,x1,y1` per triangle edge).
//! * `solve`: `solution.bin`, `solution.json` and, on request, `iterations.csv`
//!   (`iteration,residual`).
//! * `field`: `field.csv` (`face,ix,iy,x,y,z,re_u,im_u,re_total,im_total`).
//! * `converge`: `study.csv`.
//!
//! `solution.bin` is little endian: magic `FSCSOL01`, `u64` node count,
//! `u64` triangle count, `u64` iterations, `f64` relative residual, then the
//! φ and ψ coefficients as `(re, im)` pairs of `f64`.

pub mod config;

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use fracscreen::assembly::IncidentWave;
use fracscreen::mesh::{build_dof_map, build_lattice};
use fracscreen::pipeline::{prefractal, Problem};
use fracscreen::postprocess::{
    convergence_study, write_study_file, Face, FieldEvaluator, FieldGrid, StudyRow, StudySpec, DEFAULT_STANDOFF,
};
use fracscreen::solver::Solution;
use fracscreen::{Error, Result};
use num_complex::Complex64;
use serde::Serialize;

pub use config::RunConfig;

type C64 = Complex64;

const SOLUTION_MAGIC: &[u8; 8] = b"FSCSOL01";

/// Process exit code for an error: 2 for invalid input, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidParameter(_) => 2,
        _ => 1,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeshSummary {
    pub family: String,
    pub level: u32,
    pub edges: usize,
    pub area: f64,
    pub lattice: Option<String>,
    pub h: Option<f64>,
    pub nx: Option<usize>,
    pub ny: Option<usize>,
    pub nodes: Option<usize>,
    pub up_triangles: Option<usize>,
    pub down_triangles: Option<usize>,
    pub unknowns: Option<usize>,
    pub parallelogram_unknowns: Option<usize>,
}

fn output_dir(cfg: &RunConfig) -> Result<&Path> {
    fs::create_dir_all(&cfg.output_dir)?;
    Ok(&cfg.output_dir)
}

fn create(path: PathBuf) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path)?))
}

/// Polygon and (for lattice polygons) mesh summary plus CSV dumps.
pub fn cmd_mesh(cfg: &RunConfig) -> Result<MeshSummary> {
    let polygon = prefractal(cfg.family(), cfg.level)?;
    let dir = output_dir(cfg)?;
    let mut w = create(dir.join("polygon.csv"))?;
    polygon.write_csv(&mut w)?;
    w.flush()?;
    fs::write(dir.join("polygon.meta"), polygon.metadata())?;
    let mut summary = MeshSummary {
        family: cfg.family().name().to_string(),
        level: cfg.level,
        edges: polygon.n_edges(),
        area: polygon.area(),
        lattice: None,
        h: None,
        nx: None,
        ny: None,
        nodes: None,
        up_triangles: None,
        down_triangles: None,
        unknowns: None,
        parallelogram_unknowns: None,
    };
    if polygon.lattice().is_some() {
        let mesh = build_lattice(&polygon, cfg.refinement)?;
        let dofs = build_dof_map(&mesh);
        let mut w = create(dir.join("mesh_wireframe.csv"))?;
        mesh.write_wireframe_csv(&mut w)?;
        w.flush()?;
        summary.lattice = Some(mesh.kind.name().to_string());
        summary.h = Some(mesh.h());
        summary.nx = Some(mesh.nx);
        summary.ny = Some(mesh.ny);
        summary.nodes = Some(dofs.n_nodes());
        summary.up_triangles = Some(dofs.n_up());
        summary.down_triangles = Some(dofs.n_down());
        summary.unknowns = Some(dofs.n_screen());
        summary.parallelogram_unknowns = Some(dofs.n_para());
    }
    fs::write(dir.join("mesh_summary.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(summary)
}

pub fn problem(cfg: &RunConfig) -> Result<Problem> {
    let incident = IncidentWave::new(cfg.k, cfg.direction)?;
    Problem::new(cfg.family(), cfg.level, cfg.refinement, incident, cfg.impedance.params(cfg.k)?, cfg.quadrature)
}

pub fn save_solution(sol: &Solution, path: &Path) -> Result<()> {
    let mut w = create(path.to_path_buf())?;
    w.write_all(SOLUTION_MAGIC)?;
    for v in [sol.phi.len() as u64, sol.psi.len() as u64, sol.iterations as u64] {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&sol.rel_residual.to_le_bytes())?;
    for z in sol.phi.iter().chain(&sol.psi) {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_solution(path: &Path) -> Result<Solution> {
    let mut r = BufReader::new(fs::File::open(path)?);
    let mut word = [0u8; 8];
    r.read_exact(&mut word)?;
    if &word != SOLUTION_MAGIC {
        return Err(Error::Format(format!("{} is not a solution file", path.display())));
    }
    let next = |r: &mut BufReader<fs::File>| -> Result<[u8; 8]> {
        let mut b = [0u8; 8];
        r.read_exact(&mut b)?;
        Ok(b)
    };
    let n_nodes = u64::from_le_bytes(next(&mut r)?) as usize;
    let n_tris = u64::from_le_bytes(next(&mut r)?) as usize;
    let iterations = u64::from_le_bytes(next(&mut r)?) as usize;
    let rel_residual = f64::from_le_bytes(next(&mut r)?);
    let expected = 8 * 5 + 16 * (n_nodes as u64 + n_tris as u64);
    if fs::metadata(path)?.len() != expected {
        return Err(Error::Format(format!("{} has the wrong length", path.display())));
    }
    let mut values = Vec::with_capacity(n_nodes + n_tris);
    for _ in 0..n_nodes + n_tris {
        let re = f64::from_le_bytes(next(&mut r)?);
        let im = f64::from_le_bytes(next(&mut r)?);
        values.push(C64::new(re, im));
    }
    let psi = values.split_off(n_nodes);
    Ok(Solution { phi: values, psi, iterations, rel_residual, seconds: 0.0, history: Vec::new() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct SolutionSummary<'a> {
    converged: bool,
    iterations: usize,
    rel_residual: f64,
    seconds: f64,
    nodes: usize,
    triangles: usize,
    config: &'a RunConfig,
}

/// Outcome of `solve`; `converged = false` still carries the best iterate.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub solution: Solution,
    pub converged: bool,
}

pub fn cmd_solve(cfg: &RunConfig, log_iterations: bool) -> Result<SolveOutcome> {
    let problem = problem(cfg)?;
    let rhs = if cfg.zero_rhs { vec![C64::new(0.0, 0.0); problem.dofs.n_screen()] } else { problem.rhs()? };
    let (solution, converged) = match problem.solve_with(&rhs, cfg.mode, &cfg.gmres, cfg.cache_dir.as_deref()) {
        Ok(s) => (s, true),
        Err(Error::NotConverged(s)) => (*s, false),
        Err(e) => return Err(e),
    };
    let dir = output_dir(cfg)?;
    save_solution(&solution, &dir.join("solution.bin"))?;
    let summary = SolutionSummary {
        converged,
        iterations: solution.iterations,
        rel_residual: solution.rel_residual,
        seconds: solution.seconds,
        nodes: solution.phi.len(),
        triangles: solution.psi.len(),
        config: cfg,
    };
    fs::write(dir.join("solution.json"), serde_json::to_string_pretty(&summary)?)?;
    if log_iterations {
        let mut w = create(dir.join("iterations.csv"))?;
        writeln!(w, "iteration,residual")?;
        for (it, res) in &solution.history {
            writeln!(w, "{it},{res:e}")?;
        }
        w.flush()?;
    }
    Ok(SolveOutcome { solution, converged })
}

/// Samples the field of a stored solution (default `output_dir/solution.bin`)
/// on all six cube faces.
pub fn cmd_field(cfg: &RunConfig, solution: Option<&Path>) -> Result<FieldGrid> {
    let problem = problem(cfg)?;
    let default_path = cfg.output_dir.join("solution.bin");
    let sol = load_solution(solution.unwrap_or(&default_path))?;
    let ev = FieldEvaluator::new(&sol, &problem.mesh, &problem.dofs, problem.k())?;
    let c = problem.polygon.centroid();
    let mut grid = FieldGrid::new(cfg.cube_side, [c[0], c[1], 0.0], cfg.face_resolution, &Face::ALL)?;
    grid.fill(&ev, &problem.incident, DEFAULT_STANDOFF);
    let mut w = create(output_dir(cfg)?.join("field.csv"))?;
    grid.write_csv(&mut w)?;
    w.flush()?;
    Ok(grid)
}

pub fn cmd_converge(cfg: &RunConfig) -> Result<Vec<StudyRow>> {
    let spec = StudySpec {
        family: cfg.family(),
        levels: cfg.study.j_min..=cfg.study.j_max,
        reference_level: cfg.study.j_ref,
        k_list: cfg.study.k_list.clone(),
        direction: cfg.direction,
        impedance: cfg.impedance,
        quadrature: cfg.quadrature,
        gmres: cfg.gmres,
        cube_side: cfg.cube_side,
        resolution: cfg.face_resolution,
        mode: cfg.mode,
    };
    let rows = convergence_study(&spec)?;
    write_study_file(&rows, &output_dir(cfg)?.join("study.csv"))?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solution_file_round_trip() {
        let sol = Solution {
            phi: vec![C64::new(1.0, -2.0), C64::new(0.5, 1e-300)],
            psi: vec![C64::new(f64::MIN_POSITIVE, 3.0)],
            iterations: 7,
            rel_residual: 1e-9,
            seconds: 0.0,
            history: Vec::new(),
        };
        let path = std::env::temp_dir().join(format!("fracscreen-sol-{}.bin", std::process::id()));
        save_solution(&sol, &path).unwrap();
        assert_eq!(load_solution(&path).unwrap(), sol);
        fs::write(&path, b"FSCSOL01garbage").unwrap();
        assert!(load_solution(&path).is_err());
        fs::remove_file(&path).unwrap();
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::InvalidParameter("x".into())), 2);
        assert_eq!(exit_code(&Error::Breakdown("x".into())), 1);
    }
}
