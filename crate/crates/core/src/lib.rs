//! Phase-field fracture of monolithic and laminated glass plates under
//! quasi-static four-point bending: material models (including
//! viscoelastic interlayers), regularized fracture formulations, 2D
//! plane-stress and 1D multilayer-beam discretizations, a staggered
//! solver, and the experiment scenarios with their CLI plumbing.

pub mod beam1d;
pub mod bounds;
pub mod config;
pub mod error;
pub mod fem2d;
pub mod linalg;
pub mod materials;
pub mod mesh;
pub mod output;
pub mod phasefield;
pub mod scenarios;
pub mod solver;
pub mod vtk;

pub use error::{Error, Result};
