//! Numerical toolkit for boundary homeomorphisms of planar Jordan
//! domains and their Sobolev extensions: trace energies of Douglas
//! type, harmonic and p-harmonic extension solvers on triangle meshes,
//! quasihyperbolic distance grids, and explicit boundary maps whose
//! extensions provably run out of energy.

pub type Point = num_complex::Complex64;

pub mod boundary;
pub mod conformal;
pub mod counterexamples;
pub mod energy;
pub mod error;
pub mod extension;
pub mod geometry;
pub mod hyperbolic;
pub mod mesh;
pub mod numeric;

pub use error::{Error, Result};
