//! Prefractal polygons for the classical snowflakes and the square snowflake.
//!
//! Lattice-conforming prefractals (the Koch snowflake, `beta = pi/6`, and the
//! square snowflake) are generated with exact integer vertex coordinates in
//! lattice units. A point with lattice coordinates `(a, b)` sits at
//! `pitch * (a * e1 + b * e2)`, where `e1 = (1, 0)` and `e2 = (cos t, sin t)`
//! with `t = pi/3` (triangular lattice) or `t = pi/2` (square lattice).
//! Snowflakes with any other `beta` are produced in floating point and are
//! flagged as non-lattice.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_6};
use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

const MAX_KOCH_LEVEL: u32 = 10;
const MAX_SQUARE_LEVEL: u32 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatticeKind {
    Triangular,
    Square,
}

impl LatticeKind {
    /// Interior angle between the two lattice basis vectors.
    pub fn theta(self) -> f64 {
        match self {
            LatticeKind::Triangular => FRAC_PI_3,
            LatticeKind::Square => FRAC_PI_2,
        }
    }

    /// Maps (possibly fractional) lattice coordinates to the plane.
    pub fn to_physical(self, a: f64, b: f64, pitch: f64) -> Point {
        match self {
            LatticeKind::Triangular => [(a + 0.5 * b) * pitch, b * (0.75f64).sqrt() * pitch],
            LatticeKind::Square => [a * pitch, b * pitch],
        }
    }

    /// Area of one lattice parallelogram with unit pitch.
    pub fn cell_area(self) -> f64 {
        match self {
            LatticeKind::Triangular => (0.75f64).sqrt(),
            LatticeKind::Square => 1.0,
        }
    }

    fn base(self) -> i64 {
        match self {
            LatticeKind::Triangular => 3,
            LatticeKind::Square => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LatticeKind::Triangular => "triangular",
            LatticeKind::Square => "square",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// Classical snowflake with bump half-angle `beta`; `pi/6` is the Koch snowflake.
    Koch {
        beta: f64,
    },
    Square,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Koch { .. } => "koch",
            Family::Square => "square",
        }
    }

    pub fn lattice_kind(&self) -> Option<LatticeKind> {
        match *self {
            Family::Koch { beta } if is_koch_angle(beta) => Some(LatticeKind::Triangular),
            Family::Koch { .. } => None,
            Family::Square => Some(LatticeKind::Square),
        }
    }
}

fn is_koch_angle(beta: f64) -> bool {
    (beta - FRAC_PI_6).abs() <= 1e-12
}

/// Result of an exact point-location query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Inside,
    Boundary,
    Outside,
}

/// A simple polygon with integer vertices in lattice units of pitch `1/denom`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticePolygon {
    pub kind: LatticeKind,
    pub units: Vec<[i64; 2]>,
    pub denom: u64,
}

impl LatticePolygon {
    pub fn pitch(&self) -> f64 {
        1.0 / self.denom as f64
    }

    /// Twice the signed area in squared lattice units (shoelace, exact).
    pub fn twice_area_units(&self) -> i128 {
        let n = self.units.len();
        (0..n)
            .map(|i| {
                let p = self.units[i];
                let q = self.units[(i + 1) % n];
                p[0] as i128 * q[1] as i128 - q[0] as i128 * p[1] as i128
            })
            .sum()
    }

    /// Physical area, computed from the exact integer shoelace sum.
    pub fn area(&self) -> f64 {
        let pitch = self.pitch();
        self.twice_area_units() as f64 * 0.5 * pitch * pitch * self.kind.cell_area()
    }

    /// Same polygon on a lattice refined by an integer factor `m`.
    pub fn refined(&self, m: u64) -> LatticePolygon {
        let s = m as i64;
        LatticePolygon {
            kind: self.kind,
            units: self.units.iter().map(|p| [p[0] * s, p[1] * s]).collect(),
            denom: self.denom * m,
        }
    }

    pub fn bounding_box(&self) -> ([i64; 2], [i64; 2]) {
        let mut lo = [i64::MAX; 2];
        let mut hi = [i64::MIN; 2];
        for p in &self.units {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        (lo, hi)
    }

    /// Locates `q` (given in units of `pitch / scale`) relative to the polygon.
    ///
    /// Uses the winding number with exact 128-bit orientation tests, so points
    /// on edges are reported as `Boundary` without any tolerance.
    pub fn locate(&self, q: [i64; 2], scale: i64) -> Location {
        let n = self.units.len();
        let q = [q[0] as i128, q[1] as i128];
        let s = scale as i128;
        let mut winding = 0i64;
        for i in 0..n {
            let p0 = self.units[i];
            let p1 = self.units[(i + 1) % n];
            let p0 = [p0[0] as i128 * s, p0[1] as i128 * s];
            let p1 = [p1[0] as i128 * s, p1[1] as i128 * s];
            let o = orient(p0, p1, q);
            if o == 0 && within_box(p0, p1, q) {
                return Location::Boundary;
            }
            if p0[1] <= q[1] {
                if p1[1] > q[1] && o > 0 {
                    winding += 1;
                }
            } else if p1[1] <= q[1] && o < 0 {
                winding -= 1;
            }
        }
        if winding != 0 {
            Location::Inside
        } else {
            Location::Outside
        }
    }

    /// True when no two edges intersect except consecutive edges at their
    /// shared vertex. Exact integer predicates; edges are bucketed on a grid
    /// so only nearby pairs are tested.
    pub fn is_simple(&self) -> bool {
        let n = self.units.len();
        if n < 3 {
            return false;
        }
        let seg = |i: usize| -> ([i128; 2], [i128; 2]) {
            let p = self.units[i];
            let q = self.units[(i + 1) % n];
            ([p[0] as i128, p[1] as i128], [q[0] as i128, q[1] as i128])
        };
        let cell = (0..n)
            .map(|i| {
                let (p, q) = seg(i);
                (p[0] - q[0]).abs().max((p[1] - q[1]).abs())
            })
            .max()
            .unwrap_or(1)
            .max(1);
        let mut buckets: std::collections::HashMap<(i128, i128), Vec<usize>> = std::collections::HashMap::new();
        for i in 0..n {
            let (p, q) = seg(i);
            let (x0, x1) = (p[0].min(q[0]).div_euclid(cell), p[0].max(q[0]).div_euclid(cell));
            let (y0, y1) = (p[1].min(q[1]).div_euclid(cell), p[1].max(q[1]).div_euclid(cell));
            for cx in x0..=x1 {
                for cy in y0..=y1 {
                    buckets.entry((cx, cy)).or_default().push(i);
                }
            }
        }
        for members in buckets.values() {
            for (ii, &i) in members.iter().enumerate() {
                for &j in &members[ii + 1..] {
                    let (a0, a1) = seg(i);
                    let (b0, b1) = seg(j);
                    let consecutive = (i + 1) % n == j || (j + 1) % n == i;
                    if consecutive {
                        // Shared endpoint is fine unless the edges fold back on each other.
                        let (shared, a_far, b_far) = if (i + 1) % n == j { (a1, a0, b1) } else { (a0, a1, b0) };
                        let u = [a_far[0] - shared[0], a_far[1] - shared[1]];
                        let v = [b_far[0] - shared[0], b_far[1] - shared[1]];
                        let cross = u[0] * v[1] - u[1] * v[0];
                        let dot = u[0] * v[0] + u[1] * v[1];
                        if cross == 0 && dot > 0 {
                            return false;
                        }
                        if n == 3 {
                            continue;
                        }
                    } else if segments_intersect(a0, a1, b0, b1) {
                        return false;
                    }
                }
            }
        }
        true
    }
}

fn orient(a: [i128; 2], b: [i128; 2], c: [i128; 2]) -> i128 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn within_box(a: [i128; 2], b: [i128; 2], c: [i128; 2]) -> bool {
    c[0] >= a[0].min(b[0]) && c[0] <= a[0].max(b[0]) && c[1] >= a[1].min(b[1]) && c[1] <= a[1].max(b[1])
}

fn segments_intersect(a0: [i128; 2], a1: [i128; 2], b0: [i128; 2], b1: [i128; 2]) -> bool {
    let d1 = orient(b0, b1, a0).signum();
    let d2 = orient(b0, b1, a1).signum();
    let d3 = orient(a0, a1, b0).signum();
    let d4 = orient(a0, a1, b1).signum();
    if d1 * d2 < 0 && d3 * d4 < 0 {
        return true;
    }
    (d1 == 0 && within_box(b0, b1, a0))
        || (d2 == 0 && within_box(b0, b1, a1))
        || (d3 == 0 && within_box(a0, a1, b0))
        || (d4 == 0 && within_box(a0, a1, b1))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Vertices {
    Lattice(LatticePolygon),
    /// Non-lattice polygon; cannot be meshed by the uniform lattice mesher.
    Float(Vec<Point>),
}

/// Boundary polygon of a prefractal, counter-clockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefractalPolygon {
    family: Family,
    level: u32,
    vertices: Vertices,
}

impl PrefractalPolygon {
    pub fn family(&self) -> Family {
        self.family
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn vertices(&self) -> &Vertices {
        &self.vertices
    }

    pub fn lattice(&self) -> Option<&LatticePolygon> {
        match &self.vertices {
            Vertices::Lattice(l) => Some(l),
            Vertices::Float(_) => None,
        }
    }

    pub fn n_edges(&self) -> usize {
        match &self.vertices {
            Vertices::Lattice(l) => l.units.len(),
            Vertices::Float(v) => v.len(),
        }
    }

    pub fn physical_vertices(&self) -> Vec<Point> {
        match &self.vertices {
            Vertices::Lattice(l) => {
                let pitch = l.pitch();
                l.units.iter().map(|p| l.kind.to_physical(p[0] as f64, p[1] as f64, pitch)).collect()
            }
            Vertices::Float(v) => v.clone(),
        }
    }

    pub fn area(&self) -> f64 {
        match &self.vertices {
            Vertices::Lattice(l) => l.area(),
            Vertices::Float(v) => shoelace(v),
        }
    }

    pub fn perimeter(&self) -> f64 {
        let v = self.physical_vertices();
        let n = v.len();
        (0..n).map(|i| dist(v[i], v[(i + 1) % n])).sum()
    }

    pub fn centroid(&self) -> Point {
        let v = self.physical_vertices();
        let n = v.len();
        let (mut cx, mut cy, mut a2) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let p = v[i];
            let q = v[(i + 1) % n];
            let c = p[0] * q[1] - q[0] * p[1];
            a2 += c;
            cx += (p[0] + q[0]) * c;
            cy += (p[1] + q[1]) * c;
        }
        [cx / (3.0 * a2), cy / (3.0 * a2)]
    }

    /// Floating-point point-in-polygon test (closed polygon).
    pub fn contains_point(&self, x: Point) -> bool {
        let v = self.physical_vertices();
        let n = v.len();
        let mut winding = 0i32;
        for i in 0..n {
            let p0 = v[i];
            let p1 = v[(i + 1) % n];
            let o = (p1[0] - p0[0]) * (x[1] - p0[1]) - (p1[1] - p0[1]) * (x[0] - p0[0]);
            if o == 0.0
                && x[0] >= p0[0].min(p1[0])
                && x[0] <= p0[0].max(p1[0])
                && x[1] >= p0[1].min(p1[1])
                && x[1] <= p0[1].max(p1[1])
            {
                return true;
            }
            if p0[1] <= x[1] {
                if p1[1] > x[1] && o > 0.0 {
                    winding += 1;
                }
            } else if p1[1] <= x[1] && o < 0.0 {
                winding -= 1;
            }
        }
        winding != 0
    }

    /// Writes the vertex list as CSV (`x,y`, physical units, CCW order).
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,y")?;
        for p in self.physical_vertices() {
            writeln!(w, "{},{}", p[0], p[1])?;
        }
        Ok(())
    }

    /// `key=value` metadata describing the polygon.
    pub fn metadata(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "family={}", self.family.name());
        if let Family::Koch { beta } = self.family {
            let _ = writeln!(s, "beta={beta}");
        }
        let _ = writeln!(s, "level={}", self.level);
        match &self.vertices {
            Vertices::Lattice(l) => {
                let _ = writeln!(s, "lattice={}", l.kind.name());
                let _ = writeln!(s, "pitch=1/{}", l.denom);
            }
            Vertices::Float(_) => {
                let _ = writeln!(s, "lattice=none");
            }
        }
        let _ = writeln!(s, "vertices={}", self.n_edges());
        s
    }
}

fn shoelace(v: &[Point]) -> f64 {
    let n = v.len();
    0.5 * (0..n)
        .map(|i| {
            let p = v[i];
            let q = v[(i + 1) % n];
            p[0] * q[1] - q[0] * p[1]
        })
        .sum::<f64>()
}

fn dist(p: Point, q: Point) -> f64 {
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}

/// Level-`level` prefractal of the classical snowflake with bump half-angle `beta`.
///
/// Level 0 is the unit equilateral triangle; each level adds an isosceles
/// triangle with apex angle `2 beta` on the middle of every edge. For
/// `beta = pi/6` the result is exact on the triangular lattice of pitch
/// `3^-level`.
pub fn koch_prefractal(beta: f64, level: u32) -> Result<PrefractalPolygon> {
    if !(beta > 0.0 && beta < FRAC_PI_2) {
        return Err(Error::invalid(format!("beta must lie in (0, pi/2), got {beta}")));
    }
    if level > MAX_KOCH_LEVEL {
        return Err(Error::invalid(format!("snowflake level {level} exceeds the supported maximum {MAX_KOCH_LEVEL}")));
    }
    let vertices = if is_koch_angle(beta) {
        Vertices::Lattice(koch_lattice(level))
    } else {
        Vertices::Float(koch_float(beta, level))
    };
    Ok(PrefractalPolygon { family: Family::Koch { beta }, level, vertices })
}

fn koch_lattice(level: u32) -> LatticePolygon {
    // Clockwise 60 degree rotation in triangular lattice coordinates.
    let rot_cw = |t: [i64; 2]| [t[0] + t[1], -t[0]];
    let mut v: Vec<[i64; 2]> = vec![[0, 0], [1, 0], [0, 1]];
    for _ in 0..level {
        let n = v.len();
        let mut next = Vec::with_capacity(4 * n);
        for i in 0..n {
            let p = [3 * v[i][0], 3 * v[i][1]];
            let q = [3 * v[(i + 1) % n][0], 3 * v[(i + 1) % n][1]];
            let t = [(q[0] - p[0]) / 3, (q[1] - p[1]) / 3];
            let r = rot_cw(t);
            next.push(p);
            next.push([p[0] + t[0], p[1] + t[1]]);
            next.push([p[0] + t[0] + r[0], p[1] + t[1] + r[1]]);
            next.push([p[0] + 2 * t[0], p[1] + 2 * t[1]]);
        }
        v = next;
    }
    LatticePolygon {
        kind: LatticeKind::Triangular,
        units: v,
        denom: (LatticeKind::Triangular.base() as u64).pow(level),
    }
}

fn koch_float(beta: f64, level: u32) -> Vec<Point> {
    let mut v: Vec<Point> = vec![[0.0, 0.0], [1.0, 0.0], [0.5, (0.75f64).sqrt()]];
    let shrink = 1.0 / (2.0 * (1.0 + beta.sin()));
    let mut side = 1.0;
    for _ in 0..level {
        side *= shrink;
        let n = v.len();
        let mut next = Vec::with_capacity(4 * n);
        for i in 0..n {
            let p = v[i];
            let q = v[(i + 1) % n];
            let len = dist(p, q);
            let u = [(q[0] - p[0]) / len, (q[1] - p[1]) / len];
            // Outward normal of a CCW polygon points to the right of travel.
            let out = [u[1], -u[0]];
            let mid = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
            let height = side * beta.cos();
            next.push(p);
            next.push([p[0] + side * u[0], p[1] + side * u[1]]);
            next.push([mid[0] + height * out[0], mid[1] + height * out[1]]);
            next.push([q[0] - side * u[0], q[1] - side * u[1]]);
        }
        v = next;
    }
    v
}

/// Level-`level` prefractal of the square snowflake on the square lattice of
/// pitch `4^-level`.
///
/// Every directed edge is rewritten into the 8-segment motif: along the first
/// half a square of side `edge/4` is added outside the polygon (right of the
/// direction of travel), along the second half a square of the same size is
/// removed from the inside. The area therefore stays 1 at every level.
pub fn square_prefractal(level: u32) -> Result<PrefractalPolygon> {
    if level > MAX_SQUARE_LEVEL {
        return Err(Error::invalid(format!(
            "square snowflake level {level} exceeds the supported maximum {MAX_SQUARE_LEVEL}"
        )));
    }
    let mut v: Vec<[i64; 2]> = vec![[0, 0], [1, 0], [1, 1], [0, 1]];
    for _ in 0..level {
        let n = v.len();
        let mut next = Vec::with_capacity(8 * n);
        for i in 0..n {
            let p = [4 * v[i][0], 4 * v[i][1]];
            let q = [4 * v[(i + 1) % n][0], 4 * v[(i + 1) % n][1]];
            let t = [(q[0] - p[0]) / 4, (q[1] - p[1]) / 4];
            // Left normal; the interior of a CCW polygon is on the left.
            let l = [-t[1], t[0]];
            let at = |s: i64, o: i64| [p[0] + s * t[0] + o * l[0], p[1] + s * t[1] + o * l[1]];
            next.extend_from_slice(&[at(0, 0), at(1, 0), at(1, -1), at(2, -1), at(2, 0), at(2, 1), at(3, 1), at(3, 0)]);
        }
        v = next;
    }
    Ok(PrefractalPolygon {
        family: Family::Square,
        level,
        vertices: Vertices::Lattice(LatticePolygon {
            kind: LatticeKind::Square,
            units: v,
            denom: (LatticeKind::Square.base() as u64).pow(level),
        }),
    })
}
