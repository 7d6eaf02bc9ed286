//! Finite-element simulation and property verification for the visco-plastic
//! sea-ice momentum balance with a local strain-rate cut-off.

pub mod assembly;
pub mod cli;
pub mod error;
pub mod forcing;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod problem;
pub mod rheology;
pub mod scenario;
pub mod solver;
pub mod sparse;
pub mod vector;
pub mod verify;

pub use error::{Error, Result};
pub use problem::Problem;
pub use vector::Vec2;
