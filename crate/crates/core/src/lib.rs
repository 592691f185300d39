//! Numerical toolkit for timelike surfaces with zero mean curvature in
//! Minkowski 4-space `R⁴₁`.

pub mod bonnet;
pub mod config;
pub mod error;
pub mod frame;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod minkowski;
pub mod moore;
pub mod pde;
pub mod report;

pub use error::{Error, Result};
pub use grid::{Grid2, GridField};
pub use minkowski::{MinkowskiVec4, PseudoOrthonormalFrame};
