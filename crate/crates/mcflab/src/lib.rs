//! Numerical laboratory for the extrinsic geometry of graphical submanifolds
//! F(x) = (x, f(x)) in arbitrary codimension, the mean-curvature-flow soliton
//! equation Hbar + F_perp = 0, and the blow-down family
//! f_lambda(x) = f(lambda x) / lambda with its homogeneous cone limit.

pub mod error;
pub mod grid;
pub mod sphere;
pub mod geometry;
pub mod soliton;
pub mod flow;
pub mod analysis;
pub mod fixtures;
pub mod report;

pub use error::{Error, Result};
