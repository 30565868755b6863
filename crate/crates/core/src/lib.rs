//! Exact and floating-point linear algebra for Hodge-theoretic computations
//! near boundary points of period domains.

pub mod error;
pub mod filtration;
pub mod fixtures;
pub mod hodge;
pub mod lattice;
pub mod locus;
pub mod matrix;
pub mod nilpotent;
pub mod orbits;
pub mod par;
pub mod scalar;
pub mod sl2;
pub mod subspace;
pub mod unipotent;

pub use error::{Error, Result};
pub use filtration::{Direction, Filtration, Grading};
pub use matrix::Matrix;
pub use scalar::{Cf64, ComplexField, Field, FieldTag, GaussRat, Rational};
pub use subspace::Subspace;
