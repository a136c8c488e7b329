//! Field solvers and closed-form models for high-aspect-ratio planar linear
//! RF ion traps.

pub mod analytic;
pub mod csvfmt;
pub mod engineering;
pub mod fit;
pub mod grid;
pub mod lambert;
pub mod laplace2d;
pub mod laplace3d;
pub mod model;
pub mod multipole;
pub mod pipeline;
pub mod solver;
pub mod trapchar;
