//! Free-fermion solution of the 2D Ising model on finite cylinders, and a
//! multiscale kernel calculus built on it.

pub mod error;
pub mod freecorr;
pub mod kernelcalc;
pub mod lattice;
pub mod multiscale;
pub mod propagators;
pub mod skewlinalg;

pub use error::{Error, Result};
pub use lattice::{CylinderGeometry, Direction, Edge, Site};
pub use propagators::{ModelParams, PropagatorTable, Variant};
pub use skewlinalg::SkewMatrix;
