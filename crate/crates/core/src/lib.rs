//! Core data model for learning-based TSP solvers: instances in the unit
//! square, tours, optimality gaps, synthetic instance generators, TSPLib
//! parsing, exact and surrogate oracles, and the binary dataset format.

pub mod dataset;
pub mod distributions;
mod error;
pub mod geometry;
pub mod oracle;
pub mod seed;
pub mod stats;
pub mod tsplib;

pub use error::{Error, Result};
pub use geometry::{
    distance_matrix, normalize_to_unit_square, optimality_gap, tour_length, GapValue, Point,
    Tour, TspInstance,
};
