//! Scattered and total fields from the representation `u = Dφ - Sψ`, sampled
//! on cube faces, and prefractal convergence studies.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::{barycentric_gradients, triangle_vertex_nodes, ImpedanceLaw, IncidentWave};
use crate::error::{Error, Result};
use crate::geometry::Family;
use crate::mesh::{DofMap, LatticeMesh, TriKind, Triangle};
use crate::pipeline::{Problem, SolveMode};
use crate::quadrature::gauss::triangle_rule;
use crate::quadrature::QuadratureConfig;
use crate::solver::{GmresConfig, Solution};

type C64 = Complex64;

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;
/// Points on the screen plane closer than this to the screen are not evaluated.
pub const DEFAULT_STANDOFF: f64 = 1e-6;
/// Gauss points per direction of the per-triangle field rule.
const FIELD_ORDER: usize = 4;
/// Sub-triangles closer than this many diameters are split.
const NEAR_RATIO: f64 = 1.5;
const MAX_DEPTH: u32 = 18;

/// Field values at a set of points; `None` where a point lies within the standoff.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldValues {
    pub values: Vec<Option<C64>>,
    pub excluded: usize,
}

struct Element {
    tri: Triangle,
    grads: [[f64; 2]; 3],
    centroid: [f64; 2],
    phi: [C64; 3],
    psi: C64,
}

fn sub(p: [f64; 2], q: [f64; 2]) -> [f64; 2] {
    [p[0] - q[0], p[1] - q[1]]
}

fn dot(p: [f64; 2], q: [f64; 2]) -> f64 {
    p[0] * q[0] + p[1] * q[1]
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = sub(b, a);
    let t = (dot(sub(p, a), ab) / dot(ab, ab)).clamp(0.0, 1.0);
    let d = sub(p, [a[0] + t * ab[0], a[1] + t * ab[1]]);
    dot(d, d).sqrt()
}

fn inside_triangle(p: [f64; 2], t: &Triangle, tol: f64) -> bool {
    let mut sign = 0.0f64;
    for i in 0..3 {
        let e = sub(t[(i + 1) % 3], t[i]);
        let c = e[0] * (p[1] - t[i][1]) - e[1] * (p[0] - t[i][0]);
        if c.abs() <= tol {
            continue;
        }
        if sign != 0.0 && c.signum() != sign {
            return false;
        }
        sign = c.signum();
    }
    true
}

/// In-plane distance from `p` to the closed triangle.
fn plane_distance(p: [f64; 2], t: &Triangle) -> f64 {
    if inside_triangle(p, t, 0.0) {
        return 0.0;
    }
    (0..3).map(|i| point_segment_distance(p, t[i], t[(i + 1) % 3])).fold(f64::INFINITY, f64::min)
}

fn diameter(t: &Triangle) -> f64 {
    (0..3).map(|i| dot(sub(t[i], t[(i + 1) % 3]), sub(t[i], t[(i + 1) % 3])).sqrt()).fold(0.0, f64::max)
}

/// Evaluates `u = Dφ_h - Sψ_h` for a fixed solution at many points.
pub struct FieldEvaluator {
    k: f64,
    elements: Vec<Element>,
    rule: Vec<([f64; 2], f64)>,
    mesh: LatticeMesh,
}

impl FieldEvaluator {
    pub fn new(sol: &Solution, mesh: &LatticeMesh, dofs: &DofMap, k: f64) -> Result<Self> {
        if sol.phi.len() != dofs.n_nodes() {
            return Err(Error::DimensionMismatch { expected: dofs.n_nodes(), got: sol.phi.len() });
        }
        if sol.psi.len() != dofs.n_triangles() {
            return Err(Error::DimensionMismatch { expected: dofs.n_triangles(), got: sol.psi.len() });
        }
        let nodes = triangle_vertex_nodes(mesh, dofs);
        let elements = mesh
            .active_triangles()
            .enumerate()
            .map(|(e, (kind, a, b))| {
                let tri = mesh.triangle(kind, a as i64, b as i64);
                let centroid = [(tri[0][0] + tri[1][0] + tri[2][0]) / 3.0, (tri[0][1] + tri[1][1] + tri[2][1]) / 3.0];
                let phi = nodes[e].map(|n| n.map_or(C64::new(0.0, 0.0), |i| sol.phi[i]));
                Element { grads: barycentric_gradients(&tri), tri, centroid, phi, psi: sol.psi[e] }
            })
            .collect();
        Ok(FieldEvaluator { k, elements, rule: triangle_rule(FIELD_ORDER), mesh: mesh.clone() })
    }

    /// Whether the in-plane point lies on the closed screen.
    pub fn on_screen(&self, p: [f64; 2]) -> bool {
        let m = &self.mesh;
        let theta = m.theta();
        let pitch = m.pitch();
        let b = p[1] / (theta.sin() * pitch) - m.origin[1] as f64;
        let a = p[0] / pitch - (b + m.origin[1] as f64) * theta.cos() - m.origin[0] as f64;
        let (ca, cb) = (a.floor() as i64, b.floor() as i64);
        let tol = 1e-12 * pitch * pitch;
        for da in -1..=1 {
            for db in -1..=1 {
                for kind in [TriKind::Up, TriKind::Down] {
                    let (x, y) = (ca + da, cb + db);
                    if m.is_active(kind, x, y) && inside_triangle(p, &m.triangle(kind, x, y), tol) {
                        return true;
                    }
                }
            }
        }
        false
    }

    /// Scattered field at one point (no standoff check).
    pub fn scattered(&self, x: [f64; 3]) -> C64 {
        let mut total = C64::new(0.0, 0.0);
        for el in &self.elements {
            total += self.integrate(el, &el.tri, x, 0);
        }
        total
    }

    fn integrate(&self, el: &Element, t: &Triangle, x: [f64; 3], depth: u32) -> C64 {
        let p = [x[0], x[1]];
        let d = (plane_distance(p, t).powi(2) + x[2] * x[2]).sqrt();
        if depth < MAX_DEPTH && d < NEAR_RATIO * diameter(t) {
            let m = |i: usize, j: usize| [0.5 * (t[i][0] + t[j][0]), 0.5 * (t[i][1] + t[j][1])];
            let (m01, m12, m20) = (m(0, 1), m(1, 2), m(2, 0));
            return [[t[0], m01, m20], [m01, t[1], m12], [m20, m12, t[2]], [m12, m20, m01]]
                .iter()
                .map(|c| self.integrate(el, c, x, depth + 1))
                .sum();
        }
        let jac = ((t[1][0] - t[0][0]) * (t[2][1] - t[0][1]) - (t[1][1] - t[0][1]) * (t[2][0] - t[0][0])).abs();
        let mut acc = C64::new(0.0, 0.0);
        for &(u, w) in &self.rule {
            let y = [
                t[0][0] + u[0] * (t[1][0] - t[0][0]) + u[1] * (t[2][0] - t[1][0]),
                t[0][1] + u[0] * (t[1][1] - t[0][1]) + u[1] * (t[2][1] - t[1][1]),
            ];
            let r = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2) + x[2] * x[2]).sqrt();
            let kernel = C64::from_polar(1.0 / (FOUR_PI * r), self.k * r);
            let dn = kernel * C64::new(1.0 / r, -self.k) * (x[2] / r);
            let rel = sub(y, el.centroid);
            let phi: C64 = (0..3).map(|i| el.phi[i] * (1.0 / 3.0 + dot(el.grads[i], rel))).sum();
            acc += (dn * phi - kernel * el.psi) * w;
        }
        acc * jac
    }

    /// Scattered field at all points, skipping points within `standoff` of the screen.
    pub fn evaluate(&self, points: &[[f64; 3]], standoff: f64) -> FieldValues {
        let values: Vec<Option<C64>> = points
            .par_iter()
            .map(
                |&x| {
                    if x[2].abs() < standoff && self.on_screen([x[0], x[1]]) {
                        None
                    } else {
                        Some(self.scattered(x))
                    }
                },
            )
            .collect();
        let excluded = values.iter().filter(|v| v.is_none()).count();
        FieldValues { values, excluded }
    }
}

/// Scattered field `Dφ_h - Sψ_h` at `points`.
pub fn evaluate_field(
    sol: &Solution,
    mesh: &LatticeMesh,
    dofs: &DofMap,
    k: f64,
    points: &[[f64; 3]],
) -> Result<FieldValues> {
    Ok(FieldEvaluator::new(sol, mesh, dofs, k)?.evaluate(points, DEFAULT_STANDOFF))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Face {
    XMinus,
    XPlus,
    YMinus,
    YPlus,
    ZMinus,
    ZPlus,
}

impl Face {
    pub const ALL: [Face; 6] = [Face::XMinus, Face::XPlus, Face::YMinus, Face::YPlus, Face::ZMinus, Face::ZPlus];
    /// The three faces shown in the reference plots (the sides facing `-x`, `-y` and the shadow side `-z`).
    pub const THREE: [Face; 3] = [Face::XMinus, Face::YMinus, Face::ZMinus];

    pub fn name(self) -> &'static str {
        match self {
            Face::XMinus => "x-",
            Face::XPlus => "x+",
            Face::YMinus => "y-",
            Face::YPlus => "y+",
            Face::ZMinus => "z-",
            Face::ZPlus => "z+",
        }
    }

    /// Point at in-face cell `(ix, iy)` of an `n × n` grid.
    fn point(self, center: [f64; 3], side: f64, n: usize, ix: usize, iy: usize) -> [f64; 3] {
        let h = 0.5 * side;
        let s = -h + (ix as f64 + 0.5) * side / n as f64;
        let t = -h + (iy as f64 + 0.5) * side / n as f64;
        let [cx, cy, cz] = center;
        match self {
            Face::XMinus => [cx - h, cy + s, cz + t],
            Face::XPlus => [cx + h, cy + s, cz + t],
            Face::YMinus => [cx + s, cy - h, cz + t],
            Face::YPlus => [cx + s, cy + h, cz + t],
            Face::ZMinus => [cx + s, cy + t, cz - h],
            Face::ZPlus => [cx + s, cy + t, cz + h],
        }
    }
}

/// Cell-centred samples on faces of a cube, with field values once evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub side: f64,
    pub center: [f64; 3],
    pub resolution: usize,
    pub faces: Vec<Face>,
    /// `(face, ix, iy)` for each sample.
    pub labels: Vec<(Face, usize, usize)>,
    pub points: Vec<[f64; 3]>,
    pub scattered: Vec<Option<C64>>,
    pub total: Vec<Option<C64>>,
    pub excluded: usize,
}

impl FieldGrid {
    pub fn new(side: f64, center: [f64; 3], resolution: usize, faces: &[Face]) -> Result<Self> {
        if !(side > 0.0) || !side.is_finite() {
            return Err(Error::invalid(format!("cube side must be positive, got {side}")));
        }
        if resolution == 0 {
            return Err(Error::invalid("face resolution must be at least 1"));
        }
        let mut labels = Vec::new();
        let mut points = Vec::new();
        for &f in faces {
            for ix in 0..resolution {
                for iy in 0..resolution {
                    labels.push((f, ix, iy));
                    points.push(f.point(center, side, resolution, ix, iy));
                }
            }
        }
        let n = points.len();
        Ok(FieldGrid {
            side,
            center,
            resolution,
            faces: faces.to_vec(),
            labels,
            points,
            scattered: vec![None; n],
            total: vec![None; n],
            excluded: 0,
        })
    }

    /// Evaluates the scattered and total fields at every sample.
    pub fn fill(&mut self, evaluator: &FieldEvaluator, incident: &IncidentWave, standoff: f64) {
        let v = evaluator.evaluate(&self.points, standoff);
        self.total = v.values.iter().zip(&self.points).map(|(u, &x)| u.map(|u| u + incident.value(x))).collect();
        self.scattered = v.values;
        self.excluded = v.excluded;
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "face,ix,iy,x,y,z,re_u,im_u,re_total,im_total")?;
        for (i, &(f, ix, iy)) in self.labels.iter().enumerate() {
            let [x, y, z] = self.points[i];
            let fmt = |v: Option<C64>| {
                v.map_or(("nan".to_string(), "nan".to_string()), |c| (format!("{:e}", c.re), format!("{:e}", c.im)))
            };
            let (ur, ui) = fmt(self.scattered[i]);
            let (tr, ti) = fmt(self.total[i]);
            writeln!(w, "{},{ix},{iy},{x:e},{y:e},{z:e},{ur},{ui},{tr},{ti}", f.name())?;
        }
        Ok(())
    }
}

/// `max |u_test - u_ref| / max |u_ref|` of the scattered field over samples
/// on `faces` evaluated in both grids.
pub fn relative_linf_error_on(test: &FieldGrid, reference: &FieldGrid, faces: &[Face]) -> Result<f64> {
    if test.points != reference.points || test.labels != reference.labels {
        return Err(Error::invalid("field grids differ"));
    }
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for (i, (f, _, _)) in test.labels.iter().enumerate() {
        if !faces.contains(f) {
            continue;
        }
        match (test.scattered[i], reference.scattered[i]) {
            (Some(a), Some(b)) => {
                num = num.max((a - b).norm());
                den = den.max(b.norm());
            }
            (None, None) => {}
            _ => return Err(Error::invalid("field grids have different excluded samples")),
        }
    }
    if !(den > 0.0) {
        return Err(Error::invalid("reference field vanishes on the grid"));
    }
    Ok(num / den)
}

/// Relative L∞ error over all faces of the grids.
pub fn relative_linf_error(test: &FieldGrid, reference: &FieldGrid) -> Result<f64> {
    relative_linf_error_on(test, reference, &Face::ALL)
}

/// Inputs of a prefractal convergence study.
#[derive(Debug, Clone)]
pub struct StudySpec {
    pub family: Family,
    pub levels: std::ops::RangeInclusive<u32>,
    pub reference_level: u32,
    pub k_list: Vec<f64>,
    pub direction: [f64; 3],
    pub impedance: ImpedanceLaw,
    pub quadrature: QuadratureConfig,
    pub gmres: GmresConfig,
    pub cube_side: f64,
    pub resolution: usize,
    pub mode: SolveMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub k: f64,
    pub j: u32,
    pub h: f64,
    /// Over all six faces.
    pub error: f64,
    pub error_three_faces: f64,
    pub iterations: usize,
    pub seconds: f64,
    pub converged: bool,
}

fn solve_and_sample(problem: &Problem, spec: &StudySpec, template: &FieldGrid) -> Result<(FieldGrid, Solution, bool)> {
    let (sol, converged) = match problem.solve(spec.mode, &spec.gmres, None) {
        Ok(s) => (s, true),
        Err(Error::NotConverged(s)) => (*s, false),
        Err(e) => return Err(e),
    };
    let mut grid = template.clone();
    let ev = FieldEvaluator::new(&sol, &problem.mesh, &problem.dofs, problem.k())?;
    grid.fill(&ev, &problem.incident, DEFAULT_STANDOFF);
    Ok((grid, sol, converged))
}

/// Runs each level and the reference level per wavenumber and compares the
/// scattered fields on the cube. Rows that fail to converge keep their best
/// iterate and are flagged rather than aborting the study.
pub fn convergence_study(spec: &StudySpec) -> Result<Vec<StudyRow>> {
    if spec.levels.is_empty() || *spec.levels.end() >= spec.reference_level {
        return Err(Error::invalid("study levels must be nonempty and below the reference level"));
    }
    let mut rows = Vec::new();
    for &k in &spec.k_list {
        let incident = IncidentWave::new(k, spec.direction)?;
        let lambda = spec.impedance.params(k)?;
        let build = |j: u32| Problem::new(spec.family, j, 1, incident, lambda.clone(), spec.quadrature);
        let reference_problem = build(spec.reference_level)?;
        // One cube for all levels, centred on the reference screen.
        let c = reference_problem.polygon.centroid();
        let template = FieldGrid::new(spec.cube_side, [c[0], c[1], 0.0], spec.resolution, &Face::ALL)?;
        let (reference, _, _) = solve_and_sample(&reference_problem, spec, &template)?;
        drop(reference_problem);
        for j in spec.levels.clone() {
            let problem = build(j)?;
            let (grid, sol, converged) = solve_and_sample(&problem, spec, &template)?;
            rows.push(StudyRow {
                k,
                j,
                h: problem.mesh.h(),
                error: relative_linf_error(&grid, &reference)?,
                error_three_faces: relative_linf_error_on(&grid, &reference, &Face::THREE)?,
                iterations: sol.iterations,
                seconds: sol.seconds,
                converged,
            });
        }
    }
    Ok(rows)
}

/// Study table: `k,j,h,error,iterations,seconds` followed by the three-face
/// error and the convergence flag.
pub fn write_study_csv<W: Write>(rows: &[StudyRow], mut w: W) -> Result<()> {
    writeln!(w, "k,j,h,error,iterations,seconds,error_three_faces,converged")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{:e},{:e},{},{:.3},{:e},{}",
            r.k, r.j, r.h, r.error, r.iterations, r.seconds, r.error_three_faces, r.converged
        )?;
    }
    Ok(())
}

pub fn write_study_file(rows: &[StudyRow], path: &Path) -> Result<()> {
    write_study_csv(rows, std::io::BufWriter::new(std::fs::File::create(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{ImpedanceLaw, ImpedanceParams};
    use crate::geometry::Family;
    use std::f64::consts::FRAC_PI_6;

    fn koch_problem(level: u32, m: u64, k: f64) -> Problem {
        let inc = IncidentWave::new(k, [1.0, 1.0, -1.0]).unwrap();
        Problem::new(
            Family::Koch { beta: FRAC_PI_6 },
            level,
            m,
            inc,
            ImpedanceParams::absorbing(k).unwrap(),
            QuadratureConfig::default(),
        )
        .unwrap()
    }

    fn solved(level: u32, m: u64, k: f64) -> (Problem, Solution) {
        let p = koch_problem(level, m, k);
        let cfg = GmresConfig { rel_tol: 1e-10, ..Default::default() };
        let s = p.solve(SolveMode::Fast, &cfg, None).unwrap();
        (p, s)
    }

    #[test]
    fn zero_density_gives_zero_field() {
        let p = koch_problem(1, 1, 3.0);
        let sol = Solution::from_coefficients(&p.dofs, &vec![C64::new(0.0, 0.0); p.dofs.n_screen()]).unwrap();
        let v = evaluate_field(&sol, &p.mesh, &p.dofs, 3.0, &[[0.1, 0.2, 0.3], [2.0, -1.0, -0.5]]).unwrap();
        assert!(v.values.iter().all(|u| *u == Some(C64::new(0.0, 0.0))));
    }

    #[test]
    fn standoff_excludes_screen_points_only() {
        let (p, s) = solved(1, 1, 2.0);
        let c = p.polygon.centroid();
        let pts = [[c[0], c[1], 0.0], [c[0], c[1], 1e-7], [5.0, 5.0, 0.0], [c[0], c[1], 1e-3]];
        let v = evaluate_field(&s, &p.mesh, &p.dofs, 2.0, &pts).unwrap();
        assert_eq!(v.excluded, 2);
        assert!(v.values[0].is_none() && v.values[1].is_none());
        assert!(v.values[2].is_some() && v.values[3].is_some());
    }

    #[test]
    fn jump_across_screen_recovers_phi() {
        let (p, s) = solved(1, 3, 4.0);
        let ev = FieldEvaluator::new(&s, &p.mesh, &p.dofs, 4.0).unwrap();
        let nodes = triangle_vertex_nodes(&p.mesh, &p.dofs);
        let eps = 1e-4 * p.mesh.h();
        let scale = s.phi.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mut checked = 0;
        for (e, (kind, a, b)) in p.mesh.active_triangles().enumerate() {
            if nodes[e].iter().any(|n| n.is_none()) {
                continue;
            }
            let t = p.mesh.triangle(kind, a as i64, b as i64);
            let c = [(t[0][0] + t[1][0] + t[2][0]) / 3.0, (t[0][1] + t[1][1] + t[2][1]) / 3.0];
            let jump = ev.scattered([c[0], c[1], eps]) - ev.scattered([c[0], c[1], -eps]);
            let phi_c: C64 = nodes[e].iter().map(|n| s.phi[n.unwrap()]).sum::<C64>() / 3.0;
            assert!((jump - phi_c).norm() <= 1e-3 * scale, "{jump} vs {phi_c}");
            checked += 1;
        }
        assert!(checked > 0);
    }

    #[test]
    fn grid_geometry_and_exclusions() {
        let g = FieldGrid::new(1.4, [0.5, 0.3, 0.0], 3, &Face::ALL).unwrap();
        assert_eq!(g.points.len(), 54);
        for (x, (f, _, _)) in g.points.iter().zip(&g.labels) {
            let d = [x[0] - 0.5, x[1] - 0.3, x[2]];
            let on_face = match f {
                Face::XMinus => d[0] == -0.7,
                Face::XPlus => d[0] == 0.7,
                Face::YMinus => (d[1] + 0.7).abs() < 1e-15,
                Face::YPlus => (d[1] - 0.7).abs() < 1e-15,
                Face::ZMinus => d[2] == -0.7,
                Face::ZPlus => d[2] == 0.7,
            };
            assert!(on_face);
            assert!(d.iter().all(|v| v.abs() <= 0.7 + 1e-15));
        }
        assert!(FieldGrid::new(0.0, [0.0; 3], 3, &Face::ALL).is_err());
        assert!(FieldGrid::new(1.0, [0.0; 3], 0, &Face::ALL).is_err());
    }

    fn grid_with(values: &[C64]) -> FieldGrid {
        let mut g = FieldGrid::new(1.0, [0.0; 3], 1, &Face::ALL).unwrap();
        g.scattered = values.iter().map(|v| Some(*v)).collect();
        g
    }

    #[test]
    fn error_metric_properties() {
        let a: Vec<C64> = (0..6).map(|i| C64::new(i as f64 + 1.0, 0.5 * i as f64)).collect();
        let b: Vec<C64> = (0..6).map(|i| C64::new(i as f64 + 1.1, 0.4 * i as f64)).collect();
        let (ga, gb) = (grid_with(&a), grid_with(&b));
        assert_eq!(relative_linf_error(&ga, &ga).unwrap(), 0.0);
        let e = relative_linf_error(&ga, &gb).unwrap();
        assert!(e > 0.0);
        let alpha = C64::new(-3.0, 2.0);
        let sa = grid_with(&a.iter().map(|z| z * alpha).collect::<Vec<_>>());
        let sb = grid_with(&b.iter().map(|z| z * alpha).collect::<Vec<_>>());
        let es = relative_linf_error(&sa, &sb).unwrap();
        assert!((es - e).abs() <= 1e-15 * e);
        assert!(relative_linf_error(&ga, &grid_with(&[C64::new(0.0, 0.0); 6])).is_err());
        let other = FieldGrid::new(2.0, [0.0; 3], 1, &Face::ALL).unwrap();
        assert!(relative_linf_error(&ga, &other).is_err());
        let three = relative_linf_error_on(&ga, &gb, &Face::THREE).unwrap();
        assert!(three <= e * (a.iter().map(|z| z.norm()).fold(0.0, f64::max) / 1.0));
    }

    #[test]
    fn degenerate_study_has_one_row() {
        let spec = StudySpec {
            family: Family::Koch { beta: FRAC_PI_6 },
            levels: 0..=0,
            reference_level: 1,
            k_list: vec![2.0],
            direction: [1.0, 1.0, -1.0],
            impedance: ImpedanceLaw::absorbing(),
            quadrature: QuadratureConfig::default(),
            gmres: GmresConfig::default(),
            cube_side: 1.4,
            resolution: 2,
            mode: SolveMode::Fast,
        };
        let rows = convergence_study(&spec).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].error.is_finite() && rows[0].error > 0.0);
        let mut out = Vec::new();
        write_study_csv(&rows, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("k,j,h,error,iterations,seconds"));
        assert_eq!(text.lines().count(), 2);
        let bad = StudySpec { levels: 0..=1, ..spec };
        assert!(convergence_study(&bad).is_err());
    }
}
