//! Numerical building blocks shared by the geometry modules.

pub mod interp;
pub mod ode;
pub mod quad;
pub mod roots;
