//! Pseudo-spectral solvers for the Mach-number-scaled full compressible MHD
//! system, its zero-Mach limit, and the acoustic wave equation that carries
//! the fast pressure oscillations between them.

pub mod acoustic;
pub mod diagnostics;
pub mod error;
pub mod experiments;
mod fft;
pub mod field;
pub mod grid;
pub mod spectral;
pub mod elliptic;
pub mod identities;
pub mod io;
pub mod mhd_eps;
pub mod mhd_limit;
pub mod norms;

pub use error::{ConfigErrors, ConfigIssue, Error, Result};
pub use field::{Field, ScalarField, VectorField};
pub use grid::Grid;
pub use spectral::{
    curl, dealias, dealias_scalar, dealias_vector, diff_op, div, grad, inverse_laplacian,
    laplacian, leray_project, vector_laplacian, DiffOp, Spectrum,
};
