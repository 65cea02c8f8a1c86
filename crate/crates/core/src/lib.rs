//! Casimir interaction energies of cylindrical geometries.

pub mod baselines;
pub mod bessel;
pub mod cli;
pub mod energy;
pub mod geometry;
pub mod linalg;
pub mod quadrature;
pub mod rack_pinion;
pub mod spectral;
