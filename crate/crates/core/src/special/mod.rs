//! Special functions: K-Bessel of imaginary order, log-Gamma, zeta, xi and
//! the scattering determinant.

mod bessel;
mod gamma;
mod scattering;
mod zeta;

pub use bessel::{
    bessel_k_ir, bessel_k_ir_amplitude, bessel_k_ir_ln_envelope, bessel_k_ir_scaled, KirSweep,
};
pub use gamma::{gamma, log_gamma};
pub use num_complex::Complex64 as ComplexValue;
pub use scattering::{dirichlet_factor, scattering_det};
pub use zeta::{completed_xi, eta, ln_completed_xi, zeta, zeta_euler_maclaurin, zeta_pole_free};
