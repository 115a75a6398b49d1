//! Littlewood–Paley calculus, Besov-scale norms and perturbed Navier–Stokes
//! experiments on the periodic box `[0, 2π)³`.

pub mod calderon_split;
pub mod datagen;
pub mod error;
pub mod fit;
pub mod harness;
pub mod littlewood_paley;
pub mod norms;
pub mod nse_solver;
pub mod reynolds;
pub mod spectral_core;
pub mod stability_lab;

pub use error::{Error, Result};
