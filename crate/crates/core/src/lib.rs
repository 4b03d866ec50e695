//! Landau-De Gennes Q-tensor gradient flow at critical temperature, with
//! diagnostics measured against an exactly shrinking mean-curvature-flow interface.

pub mod config;
pub mod contour;
pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod initial_data;
pub mod interface;
pub mod io;
pub mod potential;
pub mod qtensor;
pub mod quasi_distance;
pub mod reduce;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{Boundary, TensorField, UniformGrid};
pub use interface::{Interface, ShrinkingSphere};
pub use potential::PotentialCoefficients;
pub use qtensor::{Biaxiality, Eigensystem, Mat3, QTensor};
pub use quasi_distance::{GeodesicTable, TableSpec};
pub use solver::{Scheme, SolverConfig};
