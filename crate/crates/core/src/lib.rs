//! Galerkin boundary element solver for time-harmonic acoustic scattering by
//! planar impedance screens whose boundary is a Koch or square snowflake
//! prefractal.
//!
//! The pipeline runs [`geometry`] (prefractal polygons on a lattice) →
//! [`mesh`] (uniform triangulation and degree-of-freedom maps) →
//! [`assembly`] (translation-invariant generating arrays, plus a dense
//! reference matrix) → [`fastmv`] (FFT matrix-vector products) → [`solver`]
//! (GMRES) → [`postprocess`] (representation formula on cube faces and
//! convergence studies).

pub mod assembly;
pub mod error;
pub mod fastmv;
pub mod geometry;
pub mod mesh;
pub mod pipeline;
pub mod postprocess;
pub mod quadrature;
pub mod solver;

pub use error::{Error, Result};
