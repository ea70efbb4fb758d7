//! Betti maps of hyperelliptic families.
//!
//! The numerical modules are generic over [`scalar::Real`]; the aliases below
//! fix the two supported precisions.  Exact computations (Pell certificates,
//! rational Kodaira–Spencer residues, web certificates) use [`Rational`].

pub mod betti;
pub mod census;
pub mod curve;
pub mod dd;
pub mod error;
pub mod family;
pub mod homology;
pub mod ks;
pub mod linalg;
pub mod pell;
pub mod periods;
pub mod poly;
pub mod quadrature;
pub mod roots;
pub mod scalar;
pub mod webs;

pub use error::{Error, Result};
pub use scalar::{Dd, Precision, Real, C};

pub type Rational = num_rational::BigRational;
pub type C64 = num_complex::Complex<f64>;
pub type CDd = num_complex::Complex<Dd>;
