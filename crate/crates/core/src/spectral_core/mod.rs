//! Fourier representation of fields on the periodic box and the exact
//! multiplier operators built on it.

mod field;
mod grid;
mod ops;
pub mod snapshot;

pub use field::{PhysicalField, SpectralField};
pub use grid::{product_size, Grid};
pub use ops::{
    apply_heat, bilinear_integrand, derivative, duhamel_bilinear, duhamel_series, exact_product_grid,
    gradient, heat_in_place, heat_weights, leray_in_place, leray_project, nonlinear_term,
    outer_exact, outer_physical, pressure_from_velocity, product_exact, projected_self_advection,
    tensor_divergence, tensor_index, tensor_transpose, DuhamelOutput,
};

pub use rustfft::num_complex::Complex64;
