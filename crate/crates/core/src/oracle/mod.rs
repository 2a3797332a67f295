//! Reference values that do not go through the dynamic program.

mod mc;
mod quadrature;

pub use mc::{mc_estimate, McResult};
pub use quadrature::{gauss_kronrod, quadrature_estimate, MAX_QUADRATURE_HORIZON};
