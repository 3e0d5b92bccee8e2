//! FFT matrix-vector products with the nine-block Toeplitz operator.
//!
//! Each family of basis functions is laid out on a common `nx × ny` grid
//! (see [`FamilyShape`]). A block maps column grid values to row grid values by
//! a 2D discrete convolution with its generating array; embedding that array
//! in a `pa × pb` periodic grid with `pa >= 2 nx - 1`, `pb >= 2 ny - 1` turns
//! the convolution into a circulant one, diagonal in Fourier space.
//!
//! Transforms are linear, so the three column families are transformed once,
//! the nine spectra are multiplied and accumulated per row family, and only
//! three inverse transforms are needed per product.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::assembly::{GeneratingArray, OperatorBlocks};
use crate::error::{Error, Result};
use crate::mesh::{BasisKind, DofMap};
use crate::solver::LinearOperator;

type C64 = Complex64;

/// Smallest integer `>= n` whose prime factors are all at most 7.
pub fn fft_size(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5, 7] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// Placement of one basis family on the grid: a `len_a × len_b` block
/// starting at `(start_a, start_b)`, stored `a`-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FamilyShape {
    pub len_a: usize,
    pub len_b: usize,
    pub start_a: usize,
    pub start_b: usize,
}

impl FamilyShape {
    pub fn for_kind(kind: BasisKind, nx: usize, ny: usize) -> Self {
        match kind {
            BasisKind::Node => FamilyShape { len_a: nx - 1, len_b: ny - 1, start_a: 1, start_b: 1 },
            BasisKind::Up | BasisKind::Down => FamilyShape { len_a: nx, len_b: ny, start_a: 0, start_b: 0 },
        }
    }

    pub fn len(&self) -> usize {
        self.len_a * self.len_b
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn embed(&self, v: &[C64], grid: &mut [C64], pb: usize) {
        grid.fill(C64::new(0.0, 0.0));
        for i in 0..self.len_a {
            let dst = (self.start_a + i) * pb + self.start_b;
            grid[dst..dst + self.len_b].copy_from_slice(&v[i * self.len_b..(i + 1) * self.len_b]);
        }
    }

    fn extract(&self, grid: &[C64], out: &mut [C64], pb: usize) {
        for i in 0..self.len_a {
            let src = (self.start_a + i) * pb + self.start_b;
            out[i * self.len_b..(i + 1) * self.len_b].copy_from_slice(&grid[src..src + self.len_b]);
        }
    }
}

/// Forward and inverse plans for a `pa × pb` grid.
#[derive(Clone)]
struct Fft2 {
    pa: usize,
    pb: usize,
    fwd_a: Arc<dyn Fft<f64>>,
    fwd_b: Arc<dyn Fft<f64>>,
    inv_a: Arc<dyn Fft<f64>>,
    inv_b: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Fft2({} x {})", self.pa, self.pb)
    }
}

impl Fft2 {
    fn new(pa: usize, pb: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            pa,
            pb,
            fwd_a: planner.plan_fft_forward(pa),
            fwd_b: planner.plan_fft_forward(pb),
            inv_a: planner.plan_fft_inverse(pa),
            inv_b: planner.plan_fft_inverse(pb),
        }
    }

    fn scratch_len(&self) -> usize {
        [&self.fwd_a, &self.fwd_b, &self.inv_a, &self.inv_b]
            .iter()
            .map(|p| p.get_inplace_scratch_len())
            .max()
            .unwrap_or(0)
    }

    /// Unnormalised 2D transform in place; `tmp` holds `pa * pb` values.
    fn run(&self, data: &mut [C64], tmp: &mut [C64], scratch: &mut [C64], forward: bool) {
        let (pa, pb) = (self.pa, self.pb);
        let (plan_a, plan_b) = if forward { (&self.fwd_a, &self.fwd_b) } else { (&self.inv_a, &self.inv_b) };
        plan_b.process_with_scratch(data, scratch);
        transpose(data, tmp, pa, pb);
        plan_a.process_with_scratch(tmp, scratch);
        transpose(tmp, data, pb, pa);
    }
}

/// `dst[j * rows + i] = src[i * cols + j]`, blocked for cache reuse.
fn transpose(src: &[C64], dst: &mut [C64], rows: usize, cols: usize) {
    const BLOCK: usize = 32;
    for i0 in (0..rows).step_by(BLOCK) {
        for j0 in (0..cols).step_by(BLOCK) {
            for i in i0..(i0 + BLOCK).min(rows) {
                for j in j0..(j0 + BLOCK).min(cols) {
                    dst[j * rows + i] = src[i * cols + j];
                }
            }
        }
    }
}

/// Periodic embedding of a generating array: offset `(Δa, Δb)` sits at
/// `(Δa mod pa, Δb mod pb)`.
pub fn circulant_embedding(gen: &GeneratingArray, pa: usize, pb: usize) -> Result<Vec<C64>> {
    let (nx, ny) = (gen.nx(), gen.ny());
    if pa < 2 * nx - 1 || pb < 2 * ny - 1 {
        return Err(Error::invalid(format!("embedding {pa} x {pb} too small for a {nx} x {ny} grid")));
    }
    let mut e = vec![C64::new(0.0, 0.0); pa * pb];
    for da in -(nx as i64 - 1)..nx as i64 {
        let ia = da.rem_euclid(pa as i64) as usize;
        for db in -(ny as i64 - 1)..ny as i64 {
            let ib = db.rem_euclid(pb as i64) as usize;
            e[ia * pb + ib] = gen.get(da, db);
        }
    }
    Ok(e)
}

/// Spectrum of one block's circulant embedding, with the inverse transform's
/// `1 / (pa pb)` folded in.
#[derive(Debug, Clone, PartialEq)]
pub struct BccbSymbol {
    pub nx: usize,
    pub ny: usize,
    pub pa: usize,
    pub pb: usize,
    pub spectrum: Vec<C64>,
}

impl BccbSymbol {
    /// Uses the default size policy `fft_size(2 n - 1)` per direction.
    pub fn new(gen: &GeneratingArray) -> Result<Self> {
        let (pa, pb) = (fft_size(2 * gen.nx() - 1), fft_size(2 * gen.ny() - 1));
        Self::with_size(gen, pa, pb)
    }

    pub fn with_size(gen: &GeneratingArray, pa: usize, pb: usize) -> Result<Self> {
        let fft = Fft2::new(pa, pb);
        Self::build(gen, &fft, &mut vec![C64::new(0.0, 0.0); pa * pb], &mut vec![C64::new(0.0, 0.0); fft.scratch_len()])
    }

    fn build(gen: &GeneratingArray, fft: &Fft2, tmp: &mut [C64], scratch: &mut [C64]) -> Result<Self> {
        let (pa, pb) = (fft.pa, fft.pb);
        let mut spectrum = circulant_embedding(gen, pa, pb)?;
        fft.run(&mut spectrum, tmp, scratch, true);
        let scale = 1.0 / (pa * pb) as f64;
        spectrum.iter_mut().for_each(|z| *z *= scale);
        Ok(BccbSymbol { nx: gen.nx(), ny: gen.ny(), pa, pb, spectrum })
    }

    /// Inverse transform of the spectrum; reproduces the embedding.
    pub fn embedding(&self) -> Vec<C64> {
        let fft = Fft2::new(self.pa, self.pb);
        let mut data = self.spectrum.clone();
        let mut tmp = vec![C64::new(0.0, 0.0); data.len()];
        let mut scratch = vec![C64::new(0.0, 0.0); fft.scratch_len()];
        fft.run(&mut data, &mut tmp, &mut scratch, false);
        data
    }
}

/// Product of a single block with `v`: pad, transform, multiply, invert, extract.
pub fn bttb_matvec(symbol: &BccbSymbol, rows: FamilyShape, cols: FamilyShape, v: &[C64]) -> Result<Vec<C64>> {
    if v.len() != cols.len() {
        return Err(Error::DimensionMismatch { expected: cols.len(), got: v.len() });
    }
    for s in [rows, cols] {
        if s.start_a + s.len_a > symbol.nx || s.start_b + s.len_b > symbol.ny {
            return Err(Error::invalid("family shape exceeds the symbol's grid"));
        }
    }
    let (pa, pb) = (symbol.pa, symbol.pb);
    let fft = Fft2::new(pa, pb);
    let mut grid = vec![C64::new(0.0, 0.0); pa * pb];
    let mut tmp = grid.clone();
    let mut scratch = vec![C64::new(0.0, 0.0); fft.scratch_len()];
    cols.embed(v, &mut grid, pb);
    fft.run(&mut grid, &mut tmp, &mut scratch, true);
    for (g, s) in grid.iter_mut().zip(&symbol.spectrum) {
        *g *= s;
    }
    fft.run(&mut grid, &mut tmp, &mut scratch, false);
    let mut out = vec![C64::new(0.0, 0.0); rows.len()];
    rows.extract(&grid, &mut out, pb);
    Ok(out)
}

/// Caller-owned work buffers for [`FastOperator`]; one per concurrent product.
#[derive(Debug, Clone)]
pub struct Scratch {
    grids: [Vec<C64>; 3],
    acc: Vec<C64>,
    tmp: Vec<C64>,
    fft: Vec<C64>,
    para_in: Vec<C64>,
    para_out: Vec<C64>,
}

/// The parallelogram operator `Ã` in Fourier form, plus the restriction to the screen.
#[derive(Debug, Clone)]
pub struct FastOperator {
    nx: usize,
    ny: usize,
    pa: usize,
    pb: usize,
    fft: Fft2,
    spectra: [[Vec<C64>; 3]; 3],
    shapes: [FamilyShape; 3],
}

impl FastOperator {
    pub fn new(ops: &OperatorBlocks) -> Result<Self> {
        let (nx, ny) = (ops.nx(), ops.ny());
        let (pa, pb) = (fft_size(2 * nx - 1), fft_size(2 * ny - 1));
        let fft = Fft2::new(pa, pb);
        let mut tmp = vec![C64::new(0.0, 0.0); pa * pb];
        let mut scratch = vec![C64::new(0.0, 0.0); fft.scratch_len()];
        let mut symbol = |r: usize, c: usize| -> Result<Vec<C64>> {
            Ok(BccbSymbol::build(&ops.blocks[r][c], &fft, &mut tmp, &mut scratch)?.spectrum)
        };
        let spectra = [
            [symbol(0, 0)?, symbol(0, 1)?, symbol(0, 2)?],
            [symbol(1, 0)?, symbol(1, 1)?, symbol(1, 2)?],
            [symbol(2, 0)?, symbol(2, 1)?, symbol(2, 2)?],
        ];
        let shapes = BasisKind::ALL.map(|k| FamilyShape::for_kind(k, nx, ny));
        Ok(FastOperator { nx, ny, pa, pb, fft, spectra, shapes })
    }

    pub fn grid(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn fft_grid(&self) -> (usize, usize) {
        (self.pa, self.pb)
    }

    /// `Ñ`, the parallelogram dimension.
    pub fn n_para(&self) -> usize {
        self.shapes.iter().map(|s| s.len()).sum()
    }

    /// Complex values held by the operator (the nine spectra).
    pub fn storage_len(&self) -> usize {
        self.spectra.iter().flatten().map(|s| s.len()).sum()
    }

    pub fn scratch(&self) -> Scratch {
        let n = self.pa * self.pb;
        let z = C64::new(0.0, 0.0);
        Scratch {
            grids: [vec![z; n], vec![z; n], vec![z; n]],
            acc: vec![z; n],
            tmp: vec![z; n],
            fft: vec![z; self.fft.scratch_len()],
            para_in: vec![z; self.n_para()],
            para_out: vec![z; self.n_para()],
        }
    }

    fn check_scratch(&self, s: &Scratch) -> Result<()> {
        if s.acc.len() != self.pa * self.pb || s.fft.len() != self.fft.scratch_len() {
            return Err(Error::invalid("scratch was created for a different operator"));
        }
        Ok(())
    }

    /// `y = Ã x` on the parallelogram.
    pub fn apply_parallelogram(&self, x: &[C64], y: &mut [C64], s: &mut Scratch) -> Result<()> {
        let n = self.n_para();
        if x.len() != n || y.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: if x.len() != n { x.len() } else { y.len() } });
        }
        self.check_scratch(s)?;
        let pb = self.pb;
        let mut offset = 0;
        for (c, shape) in self.shapes.iter().enumerate() {
            shape.embed(&x[offset..offset + shape.len()], &mut s.grids[c], pb);
            self.fft.run(&mut s.grids[c], &mut s.tmp, &mut s.fft, true);
            offset += shape.len();
        }
        let mut offset = 0;
        for (r, shape) in self.shapes.iter().enumerate() {
            s.acc.fill(C64::new(0.0, 0.0));
            for c in 0..3 {
                for ((acc, g), sp) in s.acc.iter_mut().zip(&s.grids[c]).zip(&self.spectra[r][c]) {
                    *acc += g * sp;
                }
            }
            self.fft.run(&mut s.acc, &mut s.tmp, &mut s.fft, false);
            shape.extract(&s.acc, &mut y[offset..offset + shape.len()], pb);
            offset += shape.len();
        }
        Ok(())
    }

    /// `w = Bᵀ Ã B v` on the screen.
    pub fn apply(&self, dofs: &DofMap, v: &[C64], w: &mut [C64], s: &mut Scratch) -> Result<()> {
        if dofs.nx() != self.nx || dofs.ny() != self.ny {
            return Err(Error::invalid("degree-of-freedom map and operator grids differ"));
        }
        let n = dofs.n_screen();
        if v.len() != n || w.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: if v.len() != n { v.len() } else { w.len() } });
        }
        self.check_scratch(s)?;
        if s.para_in.len() != self.n_para() {
            return Err(Error::invalid("scratch was created for a different operator"));
        }
        let mut para_in = std::mem::take(&mut s.para_in);
        let mut para_out = std::mem::take(&mut s.para_out);
        dofs.scatter(v, &mut para_in);
        let r = self.apply_parallelogram(&para_in, &mut para_out, s);
        dofs.gather(&para_out, w);
        s.para_in = para_in;
        s.para_out = para_out;
        r
    }
}

/// Screen operator bundled with its scratch, for iterative solvers.
pub struct ScreenOperator<'a> {
    op: &'a FastOperator,
    dofs: &'a DofMap,
    scratch: Scratch,
}

impl<'a> ScreenOperator<'a> {
    pub fn new(op: &'a FastOperator, dofs: &'a DofMap) -> Self {
        ScreenOperator { op, dofs, scratch: op.scratch() }
    }
}

impl LinearOperator for ScreenOperator<'_> {
    fn dim(&self) -> usize {
        self.dofs.n_screen()
    }

    fn matvec(&mut self, x: &[C64], y: &mut [C64]) -> Result<()> {
        self.op.apply(self.dofs, x, y, &mut self.scratch)
    }
}
