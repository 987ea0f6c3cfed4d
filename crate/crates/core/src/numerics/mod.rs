//! Quadrature, ODE integration and least-squares kernels.

mod dop853_tableau;
pub mod fit;
pub mod ode;
pub mod quadrature;

pub use fit::{fit_line, LineFit};
pub use ode::{solve_ode, OdeSpec};
pub use quadrature::{integrate, Estimate, QuadratureSpec};
