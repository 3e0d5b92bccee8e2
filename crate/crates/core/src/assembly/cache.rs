//! On-disk reuse of generating arrays.
//!
//! File layout (little endian): magic `FSCOPS01`, the 64-byte hex key,
//! `u64` lattice code, pitch denominator, `nx`, `ny`, `f64` k, the four
//! impedance coefficients as `(re, im)` pairs, then the nine arrays in
//! row-major block order as `(re, im)` pairs.

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use sha2::{Digest, Sha256};

use super::blocks::{assemble_generating_blocks, GeneratingArray, OperatorBlocks};
use super::{ImpedanceCoefficients, ImpedanceParams};
use crate::error::{Error, Result};
use crate::geometry::LatticeKind;
use crate::mesh::LatticeMesh;
use crate::quadrature::QuadratureConfig;

type C64 = Complex64;

const MAGIC: &[u8; 8] = b"FSCOPS01";

/// Hex SHA-256 of everything the generating arrays depend on. Activity masks
/// are excluded: the arrays only see the lattice and the parallelogram size.
pub fn content_key(mesh: &LatticeMesh, k: f64, lambda: &ImpedanceParams, cfg: &QuadratureConfig) -> Result<String> {
    lambda.constant_coefficients()?;
    let (plus, minus) = lambda.at(0);
    let mut h = Sha256::new();
    h.update(MAGIC);
    h.update(mesh.kind.name().as_bytes());
    for v in [mesh.pitch_denom, mesh.nx as u64, mesh.ny as u64, cfg.regular_order as u64, cfg.singular_order as u64] {
        h.update(v.to_le_bytes());
    }
    for v in [k, cfg.separation_ratio, plus.re, plus.im, minus.re, minus.im] {
        h.update(v.to_bits().to_le_bytes());
    }
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

fn lattice_code(kind: LatticeKind) -> u64 {
    match kind {
        LatticeKind::Triangular => 3,
        LatticeKind::Square => 4,
    }
}

fn write_c64<W: Write>(w: &mut W, z: C64) -> Result<()> {
    w.write_all(&z.re.to_le_bytes())?;
    w.write_all(&z.im.to_le_bytes())?;
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    Ok(f64::from_bits(read_u64(r)?))
}

fn read_c64<R: Read>(r: &mut R) -> Result<C64> {
    Ok(C64::new(read_f64(r)?, read_f64(r)?))
}

pub(crate) fn save(ops: &OperatorBlocks, key: &str, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(key.as_bytes())?;
    for v in [lattice_code(ops.kind), ops.pitch_denom, ops.nx() as u64, ops.ny() as u64] {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&ops.k.to_le_bytes())?;
    let c = ops.coefficients;
    for z in [c.c0, c.c1, c.c2, c.cs] {
        write_c64(&mut w, z)?;
    }
    for g in ops.blocks.iter().flatten() {
        for &z in g.values() {
            write_c64(&mut w, z)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn load(key: &str, path: &Path) -> Result<OperatorBlocks> {
    let mut r = BufReader::new(fs::File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not an operator cache file".into()));
    }
    let mut stored = vec![0u8; key.len()];
    r.read_exact(&mut stored)?;
    if stored != key.as_bytes() {
        return Err(Error::Format("operator cache key mismatch".into()));
    }
    let kind = match read_u64(&mut r)? {
        3 => LatticeKind::Triangular,
        4 => LatticeKind::Square,
        other => return Err(Error::Format(format!("unknown lattice code {other}"))),
    };
    let pitch_denom = read_u64(&mut r)?;
    let nx = read_u64(&mut r)? as usize;
    let ny = read_u64(&mut r)? as usize;
    if nx == 0 || ny == 0 || nx > 1 << 20 || ny > 1 << 20 {
        return Err(Error::Format("implausible grid size in cache".into()));
    }
    let k = read_f64(&mut r)?;
    let coefficients = ImpedanceCoefficients {
        c0: read_c64(&mut r)?,
        c1: read_c64(&mut r)?,
        c2: read_c64(&mut r)?,
        cs: read_c64(&mut r)?,
    };
    let len = (2 * nx - 1) * (2 * ny - 1);
    let mut read_block = || -> Result<GeneratingArray> {
        let values = (0..len).map(|_| read_c64(&mut r)).collect::<Result<Vec<_>>>()?;
        GeneratingArray::from_values(nx, ny, values)
    };
    let blocks = [
        [read_block()?, read_block()?, read_block()?],
        [read_block()?, read_block()?, read_block()?],
        [read_block()?, read_block()?, read_block()?],
    ];
    Ok(OperatorBlocks { kind, pitch_denom, k, coefficients, blocks })
}

/// Loads the generating arrays from `dir` when a matching file exists,
/// otherwise assembles and stores them. With `dir = None` this is plain assembly.
pub fn load_or_assemble(
    dir: Option<&Path>,
    mesh: &LatticeMesh,
    k: f64,
    lambda: &ImpedanceParams,
    cfg: &QuadratureConfig,
) -> Result<OperatorBlocks> {
    let Some(dir) = dir else {
        return assemble_generating_blocks(mesh, k, lambda, cfg);
    };
    let key = content_key(mesh, k, lambda, cfg)?;
    let path = dir.join(format!("{key}.ops"));
    if path.exists() {
        if let Ok(ops) = load(&key, &path) {
            return Ok(ops);
        }
    }
    let ops = assemble_generating_blocks(mesh, k, lambda, cfg)?;
    fs::create_dir_all(dir)?;
    save(&ops, &key, &path)?;
    Ok(ops)
}
