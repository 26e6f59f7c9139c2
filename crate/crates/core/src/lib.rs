//! Spectral toolkit for Robin Laplacians on planar curvilinear polygons.
//!
//! The Robin form `∫|∇u|² − γ∫_{∂Ω}|u|²` is discretized by conforming finite
//! elements into a pencil `(K − γB, M)`. On top of that the crate provides
//! lowest eigenpairs, exact discrete eigenvalue counts from matrix inertia,
//! sector model spectra, transplanted corner quasi-modes with Gramian
//! certificates, and the two boundary Weyl counting laws.
//!
//! Linear algebra, assembly, eigensolvers and the one-dimensional models are
//! generic over [`Real`] (`f32` or `f64`); geometry, meshing and the
//! experiment drivers work in `f64`.

pub mod eig;
pub mod error;
pub mod fem;
pub mod fit;
pub mod geometry;
pub mod linalg;
pub mod mesh;
pub mod model1d;
pub mod quad;
pub mod quasimode;
pub mod scalar;
pub mod sector;
pub mod weyl;

pub use error::{Error, Result};
pub use scalar::Real;

/// Double precision instances of the generic types.
pub type Pencil = fem::SpectralPencil<f64>;
pub type Eigenpairs = eig::EigenResult<f64>;
pub type Matrix = linalg::CsrMatrix<f64>;
