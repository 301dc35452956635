//! Spectral paracontrolled calculus on the two-dimensional torus and
//! renormalized solvers for `(d_t - Laplacian) u = F(u) eta` driven by
//! spatial white noise.

pub mod budget;
pub mod error;
pub mod experiments;
pub mod gpam;
pub mod heat;
pub mod inequality;
pub mod io;
pub mod littlewood_paley;
pub mod noise;
pub mod nonlinearity;
pub mod paraproducts;
pub mod rng;
pub mod spectral;

pub use error::{Error, Result};
pub use spectral::{compose, compose_pair, multiply, Grid, RealField, C64};
