//! Ranking of items and their features over citation multigraphs.
//!
//! Items cite each other and carry typed attributes (features). Every model
//! combines the citation matrix and the item-attribute incidence matrices
//! into one irreducible stochastic block matrix whose Perron vector ranks
//! items and attributes together. The Perron vector is obtained from an
//! implicit sparse linear system, so the block matrix is never formed.

pub mod error;
pub mod eval;
pub mod io;
pub mod model;
pub mod ranking;
pub mod run;
pub mod solver;
pub mod sparse;
pub mod synth;

pub use error::{Error, Result};
