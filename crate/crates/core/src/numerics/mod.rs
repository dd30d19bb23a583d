//! Small dense linear algebra and fixed-step integration kernel.

mod expm;
mod linsolve;
mod matrix;
mod ode;
mod sat;
mod stability;

pub use expm::{balance, expm};
pub use linsolve::{inverse, least_squares, solve_linear, Lu, SINGULAR_PIVOT_TOL};
pub use matrix::Matrix;
pub use ode::rk4_step;
pub use sat::{smooth_sat, SmoothSat};
pub use stability::{char_poly, hurwitz_test};
