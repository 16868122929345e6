//! Finite truncated models of basic, twisted-basic and compactly supported
//! basic de Rham complexes for a catalogue of Riemannian foliations.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, descriptors and the
//! command-line front end live in the `foliate` crate.
//!
//! Layout:
//! - [`chaincore`]: graded cochain complexes, validation, cohomology.
//! - [`forms`]: the symbolic form algebra that assembles model complexes.
//! - [`models`]: the model catalogue and the Carrière primitive.
//! - [`twisted`]: twisted differentials, gauge checks, tautness decision.
//! - [`geometry`]: chart-level mean curvature, characteristic form, Rummler.
//! - [`duality`]: the integration pairing between compact and twisted classes.
//! - [`gluing`]: Mayer–Vietoris exactness checks.
//! - [`tables`]: sphere-example fixtures and their consistency checks.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod chaincore;
pub mod duality;
mod error;
pub mod forms;
pub mod geometry;
pub mod gluing;
pub mod linalg;
pub mod matrix;
pub mod models;
pub mod quadrature;
pub mod scalar;
pub mod tables;
pub mod twisted;

pub use chaincore::{CohomologyReport, GradedComplex, ValidationReport};
pub use error::{Error, Result};
pub use models::FoliationModel;
pub use scalar::{Scalar, ScalarMode};
