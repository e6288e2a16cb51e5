//! Deterministic walks in random environments.
//!
//! Two out-degree-one graphs on marked Poisson samples are provided: the
//! `k`-nearest-neighbour walk and the anisotropic lilypond segment model.
//! Around them sit the events, sprinkling constructions and Monte Carlo
//! experiments used to study absence of percolation.

pub mod error;
pub mod exec;
pub mod geom;
pub mod harness;
pub mod io;
pub mod knn;
pub mod lilypond;
pub mod model;
pub mod plot;
pub mod ppgen;
pub mod rng;
pub mod spatial;
pub mod sprinkling;
pub mod stats;
pub mod walks;

pub use error::{Error, Result};
