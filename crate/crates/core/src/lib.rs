//! Spectral laboratory for the incompressible Navier-Stokes equations in
//! pseudomeasure spaces `PM^a`: lattice fields, Fourier multipliers, the
//! Duhamel bilinear operator, Landau jets, Picard iteration and the analysis
//! drivers built on top of them.

pub mod analysis;
pub mod config;
pub mod duhamel;
pub mod error;
pub mod fft;
pub mod fields;
pub mod grid;
pub mod io;
pub mod landau;
pub mod pm;
pub mod quadrature;
pub mod report;
pub mod solver;
pub mod symbols;
pub mod trajectory;

pub use error::{PmnsError, Result};
pub use grid::{
    dyadic_rescale, to_physical, to_spectral, FrequencyGrid, PhysicalVectorField, SpectralTensorField,
    SpectralVectorField,
};
pub use trajectory::Trajectory;
