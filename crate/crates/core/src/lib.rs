//! Split-form discontinuous Galerkin spectral element method on curvilinear
//! hexahedral meshes for the compressible Euler and Navier-Stokes equations.

pub mod cases;
pub mod config;
pub mod convergence;
pub mod fluxes;
pub mod geometry;
pub mod mesh;
pub mod physics;
pub mod run;
pub mod solver;
pub mod spectral;
pub mod verify;
