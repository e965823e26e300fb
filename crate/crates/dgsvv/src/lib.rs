//! Entropy-stable discontinuous Galerkin spectral element solver for the
//! compressible Euler/Navier–Stokes equations with filtered spectral
//! vanishing viscosity.

pub mod basis;
pub mod cases;
pub mod entropy;
pub mod error;
pub mod fluxes;
pub mod mesh;
pub mod operator;
pub mod state;
pub mod svv;
pub mod timeint;
pub mod vonneumann;

pub use error::{Error, Result};
pub use state::{Block3x5, BlockMat, GasModel, Primitive, State5};
