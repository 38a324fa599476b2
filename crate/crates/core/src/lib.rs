//! Simulation and analysis of multivariate Lévy fields built from a
//! characteristic triple: drift, a spherical measure driving the Gaussian
//! part, and a hyperplane jump measure.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod error;
pub mod gaussian;
pub mod grid;
pub mod io;
pub mod jump;
pub mod measure;
pub mod rng;

pub use error::{Error, Result};
