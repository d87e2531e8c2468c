//! Numerical building blocks: quadrature, bracketed roots, ODE integration
//! and shape-preserving interpolation.

pub mod interp;
pub mod ode;
pub mod quadrature;
pub mod roots;

pub use interp::{InterpError, MonotoneCubic};
pub use ode::{DenseSolution, OdeError, OdeOptions};
pub use quadrature::{integrate, QuadError, QuadOptions, Quadrature};
pub use roots::{bisect, brent, RootError};
