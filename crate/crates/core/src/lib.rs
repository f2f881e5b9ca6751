//! Multifractal analysis of graph-directed self-similar sets.
//!
//! The crate computes spectral exponents, lattice classifications, separation
//! verdicts and packing-moment estimates for graph-directed iterated function
//! systems on the line and in the plane. The `examples/` directory walks through
//! each capability; the `gifs` binary exposes the same operations on JSON system
//! files.

pub mod cli;
pub mod error;
pub mod exact_arith;
pub mod fixtures;
pub mod geometry;
pub mod graph_ifs;
pub mod measure;
pub mod packing;
pub mod renewal;
pub mod separation;
pub mod spectral;

pub use error::{GifsError, Result};
pub use exact_arith::{Interval, LogVector, Rational};
pub use geometry::Attractor;
pub use graph_ifs::{GraphIfs, Path};
