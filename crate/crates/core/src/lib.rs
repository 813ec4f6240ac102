//! Finite element toolkit for Reissner-Mindlin plates on polygonal domains with holes.

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod femlib;
pub mod linalg;
pub mod mesh;
pub mod meshes;
pub mod reduction;
pub mod study;
pub mod system;

pub use error::{PlateError, Result};
