//! Percolation laboratory: site percolation on d-dimensional hypercubic
//! lattices, exact Bethe-lattice results, cluster-geometry estimators and a
//! generator of synthetic labeled datasets built on percolation clusters.

// `!(x > 0.0)` is kept on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod bethe;
pub mod datagen;
pub mod error;
pub mod ensemble;
pub mod lattice;
pub mod percolation;
pub mod render;
pub mod rng;

pub use error::{Error, Result};
pub use ensemble::Ensemble;
pub use lattice::{Boundary, LatticeGeometry};
