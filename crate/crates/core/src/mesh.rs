//! Uniform parallelogram triangulation, active-cell selection and DOF indexing.
//!
//! The parallelogram is spanned by `N_x` steps of `e1` and `N_y` steps of
//! `e2`. Cell `(a, b)` holds an up triangle `Hull(O, O+e1, O+e2)` and a down
//! triangle `Hull(O+e1, O+e1+e2, O+e2)` with `O = origin + a e1 + b e2`.
//! Interior nodes are the lattice points `(a, b)` with `1 <= a < N_x`,
//! `1 <= b < N_y`.

use std::io::Write;

use crate::error::{Error, Result};
use crate::geometry::{LatticeKind, Location, Point, PrefractalPolygon};

pub type Triangle = [Point; 3];

/// Basis-function families in parallelogram order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisKind {
    Node,
    Up,
    Down,
}

impl BasisKind {
    pub const ALL: [BasisKind; 3] = [BasisKind::Node, BasisKind::Up, BasisKind::Down];

    pub fn index(self) -> usize {
        match self {
            BasisKind::Node => 0,
            BasisKind::Up => 1,
            BasisKind::Down => 2,
        }
    }
}

/// Triangle orientation within a lattice cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TriKind {
    Up,
    Down,
}

impl TriKind {
    pub fn basis(self) -> BasisKind {
        match self {
            TriKind::Up => BasisKind::Up,
            TriKind::Down => BasisKind::Down,
        }
    }

    /// Lattice offsets of the three vertices relative to the cell corner,
    /// in counter-clockwise order.
    pub fn vertex_offsets(self) -> [[i64; 2]; 3] {
        match self {
            TriKind::Up => [[0, 0], [1, 0], [0, 1]],
            TriKind::Down => [[1, 0], [1, 1], [0, 1]],
        }
    }
}

/// The six triangles incident to the node at lattice position `(a, b)`:
/// `(kind, cell offset relative to the node, local vertex index of the node)`.
pub const NODE_STAR: [(TriKind, [i64; 2], usize); 6] = [
    (TriKind::Up, [0, 0], 0),
    (TriKind::Up, [-1, 0], 1),
    (TriKind::Up, [0, -1], 2),
    (TriKind::Down, [-1, 0], 0),
    (TriKind::Down, [-1, -1], 1),
    (TriKind::Down, [0, -1], 2),
];

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeMesh {
    pub kind: LatticeKind,
    /// Lattice pitch is `1 / pitch_denom`.
    pub pitch_denom: u64,
    pub nx: usize,
    pub ny: usize,
    /// Lattice coordinates (in pitch units) of the parallelogram corner.
    pub origin: [i64; 2],
    /// Active up triangles, indexed `a * ny + b`.
    pub up: Vec<bool>,
    /// Active down triangles, indexed `a * ny + b`.
    pub down: Vec<bool>,
}

impl LatticeMesh {
    /// Mesh with explicit masks; used for synthetic parallelograms.
    pub fn from_masks(
        kind: LatticeKind,
        pitch_denom: u64,
        nx: usize,
        ny: usize,
        origin: [i64; 2],
        up: Vec<bool>,
        down: Vec<bool>,
    ) -> Result<Self> {
        if nx == 0 || ny == 0 || pitch_denom == 0 {
            return Err(Error::Mesh("empty parallelogram".into()));
        }
        if up.len() != nx * ny || down.len() != nx * ny {
            return Err(Error::DimensionMismatch { expected: nx * ny, got: up.len().min(down.len()) });
        }
        Ok(LatticeMesh { kind, pitch_denom, nx, ny, origin, up, down })
    }

    /// Fully active `nx` by `ny` parallelogram.
    pub fn full(kind: LatticeKind, pitch_denom: u64, nx: usize, ny: usize) -> Result<Self> {
        Self::from_masks(kind, pitch_denom, nx, ny, [0, 0], vec![true; nx * ny], vec![true; nx * ny])
    }

    pub fn theta(&self) -> f64 {
        self.kind.theta()
    }

    pub fn pitch(&self) -> f64 {
        1.0 / self.pitch_denom as f64
    }

    pub fn e1(&self) -> Point {
        [self.pitch(), 0.0]
    }

    pub fn e2(&self) -> Point {
        let t = self.theta();
        [self.pitch() * t.cos(), self.pitch() * t.sin()]
    }

    pub fn rx(&self) -> f64 {
        self.nx as f64 * self.pitch()
    }

    pub fn ry(&self) -> f64 {
        self.ny as f64 * self.pitch()
    }

    /// Mesh width: the diameter of the reference triangles.
    pub fn h(&self) -> f64 {
        match self.kind {
            LatticeKind::Triangular => self.pitch(),
            LatticeKind::Square => std::f64::consts::SQRT_2 * self.pitch(),
        }
    }

    pub fn triangle_area(&self) -> f64 {
        0.5 * self.kind.cell_area() * self.pitch() * self.pitch()
    }

    /// Physical position of the lattice node at grid coordinates `(a, b)`
    /// (relative to the parallelogram corner; may lie outside the grid).
    pub fn node_point(&self, a: i64, b: i64) -> Point {
        self.kind.to_physical((self.origin[0] + a) as f64, (self.origin[1] + b) as f64, self.pitch())
    }

    pub fn triangle(&self, kind: TriKind, a: i64, b: i64) -> Triangle {
        let o = kind.vertex_offsets();
        [
            self.node_point(a + o[0][0], b + o[0][1]),
            self.node_point(a + o[1][0], b + o[1][1]),
            self.node_point(a + o[2][0], b + o[2][1]),
        ]
    }

    /// Whether the triangle in cell `(a, b)` is active; false outside the grid.
    pub fn is_active(&self, kind: TriKind, a: i64, b: i64) -> bool {
        if a < 0 || b < 0 || a >= self.nx as i64 || b >= self.ny as i64 {
            return false;
        }
        let i = a as usize * self.ny + b as usize;
        match kind {
            TriKind::Up => self.up[i],
            TriKind::Down => self.down[i],
        }
    }

    pub fn n_active_up(&self) -> usize {
        self.up.iter().filter(|&&x| x).count()
    }

    pub fn n_active_down(&self) -> usize {
        self.down.iter().filter(|&&x| x).count()
    }

    pub fn active_area(&self) -> f64 {
        (self.n_active_up() + self.n_active_down()) as f64 * self.triangle_area()
    }

    /// Active triangles in parallelogram order (all up, then all down).
    pub fn active_triangles(&self) -> impl Iterator<Item = (TriKind, usize, usize)> + '_ {
        let ny = self.ny;
        let ups = self.up.iter().enumerate().filter(|(_, &on)| on).map(move |(i, _)| (TriKind::Up, i / ny, i % ny));
        let downs =
            self.down.iter().enumerate().filter(|(_, &on)| on).map(move |(i, _)| (TriKind::Down, i / ny, i % ny));
        ups.chain(downs)
    }

    /// Writes one line `x0,y0,x1,y1` per edge of every active triangle.
    pub fn write_wireframe_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x0,y0,x1,y1")?;
        for (kind, a, b) in self.active_triangles() {
            let t = self.triangle(kind, a as i64, b as i64);
            for i in 0..3 {
                let p = t[i];
                let q = t[(i + 1) % 3];
                writeln!(w, "{},{},{},{}", p[0], p[1], q[0], q[1])?;
            }
        }
        Ok(())
    }

    /// Dumps the mask as CSV: a parameter header followed by `kind,a,b` rows
    /// for every active triangle.
    pub fn write_cells_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "# lattice={} pitch=1/{} nx={} ny={} origin_a={} origin_b={}",
            self.kind.name(),
            self.pitch_denom,
            self.nx,
            self.ny,
            self.origin[0],
            self.origin[1]
        )?;
        writeln!(w, "kind,a,b")?;
        for (kind, a, b) in self.active_triangles() {
            let k = match kind {
                TriKind::Up => "up",
                TriKind::Down => "down",
            };
            writeln!(w, "{k},{a},{b}")?;
        }
        Ok(())
    }
}

/// Embeds a lattice prefractal, refined by `refinement`, in the tight
/// bounding parallelogram plus a one-cell margin and marks the covered cells.
pub fn build_lattice(polygon: &PrefractalPolygon, refinement: u64) -> Result<LatticeMesh> {
    let lattice = polygon.lattice().ok_or_else(|| {
        Error::Mesh(
            "polygon is not lattice-conforming; the uniform mesher needs beta = pi/6 or the square snowflake".into(),
        )
    })?;
    if refinement == 0 {
        return Err(Error::invalid("refinement must be at least 1"));
    }
    build_lattice_with_pitch(polygon, lattice.denom * refinement)
}

/// Same as [`build_lattice`] with the pitch given as `1 / pitch_denom`; the
/// pitch must be an integer refinement of the polygon's own lattice.
pub fn build_lattice_with_pitch(polygon: &PrefractalPolygon, pitch_denom: u64) -> Result<LatticeMesh> {
    let lattice = polygon.lattice().ok_or_else(|| Error::Mesh("polygon is not lattice-conforming".into()))?;
    if polygon.family().lattice_kind() != Some(lattice.kind) {
        return Err(Error::Mesh("polygon family does not match its lattice".into()));
    }
    if pitch_denom == 0 || !pitch_denom.is_multiple_of(lattice.denom) {
        return Err(Error::Mesh(format!(
            "pitch 1/{pitch_denom} is not a refinement of the polygon lattice pitch 1/{}",
            lattice.denom
        )));
    }
    let refined = lattice.refined(pitch_denom / lattice.denom);
    let (lo, hi) = refined.bounding_box();
    let origin = [lo[0] - 1, lo[1] - 1];
    let nx = (hi[0] - lo[0] + 2) as usize;
    let ny = (hi[1] - lo[1] + 2) as usize;

    // Centroids in units of pitch/3: up (3a+1, 3b+1), down (3a+2, 3b+2).
    let mut up = vec![false; nx * ny];
    let mut down = vec![false; nx * ny];
    for a in 0..nx {
        for b in 0..ny {
            let ga = origin[0] + a as i64;
            let gb = origin[1] + b as i64;
            for (mask, off) in [(&mut up, 1), (&mut down, 2)] {
                match refined.locate([3 * ga + off, 3 * gb + off], 3) {
                    Location::Inside => mask[a * ny + b] = true,
                    Location::Outside => {}
                    Location::Boundary => {
                        return Err(Error::Mesh(
                            "cell centroid on the polygon boundary; polygon misses the lattice".into(),
                        ))
                    }
                }
            }
        }
    }
    LatticeMesh::from_masks(lattice.kind, pitch_denom, nx, ny, origin, up, down)
}

/// Global indexing of the basis functions on the parallelogram and on the screen.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    nx: usize,
    ny: usize,
    /// Grid coordinates of active interior nodes, screen order.
    pub nodes: Vec<[usize; 2]>,
    /// Grid coordinates of active up triangles, screen order.
    pub ups: Vec<[usize; 2]>,
    /// Grid coordinates of active down triangles, screen order.
    pub downs: Vec<[usize; 2]>,
    /// Column `q` of the restriction map: parallelogram index of screen DOF `q`.
    screen_to_para: Vec<usize>,
}

impl DofMap {
    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_up(&self) -> usize {
        self.ups.len()
    }

    pub fn n_down(&self) -> usize {
        self.downs.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.ups.len() + self.downs.len()
    }

    /// `N_j`, the number of screen unknowns.
    pub fn n_screen(&self) -> usize {
        self.screen_to_para.len()
    }

    /// `Ñ_j = (N_x - 1)(N_y - 1) + 2 N_x N_y`.
    pub fn n_para(&self) -> usize {
        (self.nx - 1) * (self.ny - 1) + 2 * self.nx * self.ny
    }

    /// Size of each family on the parallelogram.
    pub fn family_len(&self, kind: BasisKind) -> usize {
        match kind {
            BasisKind::Node => (self.nx - 1) * (self.ny - 1),
            BasisKind::Up | BasisKind::Down => self.nx * self.ny,
        }
    }

    /// First parallelogram index of each family.
    pub fn family_offset(&self, kind: BasisKind) -> usize {
        let n_nodes = (self.nx - 1) * (self.ny - 1);
        match kind {
            BasisKind::Node => 0,
            BasisKind::Up => n_nodes,
            BasisKind::Down => n_nodes + self.nx * self.ny,
        }
    }

    /// Parallelogram index of the basis function of `kind` at grid position
    /// `(a, b)`; column-major within each family (a outer, b inner).
    pub fn para_index(&self, kind: BasisKind, a: usize, b: usize) -> usize {
        match kind {
            BasisKind::Node => (a - 1) * (self.ny - 1) + (b - 1),
            BasisKind::Up | BasisKind::Down => self.family_offset(kind) + a * self.ny + b,
        }
    }

    /// Inverse of [`DofMap::para_index`].
    pub fn para_position(&self, p: usize) -> (BasisKind, usize, usize) {
        let n_nodes = (self.nx - 1) * (self.ny - 1);
        let n_cells = self.nx * self.ny;
        if p < n_nodes {
            (BasisKind::Node, p / (self.ny - 1) + 1, p % (self.ny - 1) + 1)
        } else if p < n_nodes + n_cells {
            let q = p - n_nodes;
            (BasisKind::Up, q / self.ny, q % self.ny)
        } else {
            let q = p - n_nodes - n_cells;
            (BasisKind::Down, q / self.ny, q % self.ny)
        }
    }

    /// The restriction map `B` as its column list: entry `q` is the row of
    /// the single unit entry in column `q`.
    pub fn restriction(&self) -> &[usize] {
        &self.screen_to_para
    }

    /// `B v`: scatter screen coefficients into a zeroed parallelogram vector.
    pub fn scatter<T: Copy + Default>(&self, v: &[T], out: &mut [T]) {
        out.fill(T::default());
        for (q, &p) in self.screen_to_para.iter().enumerate() {
            out[p] = v[q];
        }
    }

    /// `Bᵀ w`: gather screen entries from a parallelogram vector.
    pub fn gather<T: Copy>(&self, w: &[T], out: &mut [T]) {
        for (q, &p) in self.screen_to_para.iter().enumerate() {
            out[q] = w[p];
        }
    }

    /// Screen index of each active triangle in [`LatticeMesh::active_triangles`] order.
    pub fn triangle_screen_index(&self, kind: TriKind, i: usize) -> usize {
        match kind {
            TriKind::Up => self.n_nodes() + i,
            TriKind::Down => self.n_nodes() + self.n_up() + i,
        }
    }
}

/// Builds the DOF map: a P1 node is active iff all six incident triangles are.
pub fn build_dof_map(mesh: &LatticeMesh) -> DofMap {
    let (nx, ny) = (mesh.nx, mesh.ny);
    let mut nodes = Vec::new();
    for a in 1..nx {
        for b in 1..ny {
            let all =
                NODE_STAR.iter().all(|&(kind, off, _)| mesh.is_active(kind, a as i64 + off[0], b as i64 + off[1]));
            if all {
                nodes.push([a, b]);
            }
        }
    }
    let mut ups = Vec::new();
    let mut downs = Vec::new();
    for a in 0..nx {
        for b in 0..ny {
            if mesh.up[a * ny + b] {
                ups.push([a, b]);
            }
            if mesh.down[a * ny + b] {
                downs.push([a, b]);
            }
        }
    }
    let mut map = DofMap { nx, ny, nodes, ups, downs, screen_to_para: Vec::new() };
    let mut cols = Vec::with_capacity(map.nodes.len() + map.ups.len() + map.downs.len());
    cols.extend(map.nodes.iter().map(|p| map.para_index(BasisKind::Node, p[0], p[1])));
    cols.extend(map.ups.iter().map(|p| map.para_index(BasisKind::Up, p[0], p[1])));
    cols.extend(map.downs.iter().map(|p| map.para_index(BasisKind::Down, p[0], p[1])));
    map.screen_to_para = cols;
    map
}
