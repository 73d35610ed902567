// SPDX-License-Identifier: Apache-2.0
//! Spectral laboratory for the renormalized Anderson Hamiltonian `H = Δ + ξ - ∞`
//! on the two- and three-dimensional torus.

pub mod anderson2d;
pub mod anderson3d;
pub mod config;
pub mod error;
pub mod fixed_point;
pub mod fourier;
pub mod galerkin;
pub mod nls;
pub mod noise;
pub mod paraproducts;
pub mod propagator;
pub mod runtime;
pub mod stats;
pub mod strichartz;
pub mod verify;

pub use error::{Error, Result};
