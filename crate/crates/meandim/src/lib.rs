//! Desk-scale symbolic and topological dynamics: language oracles for
//! subshifts, exact region algebras, marker/tower constructions, Rokhlin
//! functions, and randomized embedding maps into cubical shifts with exact
//! independence certificates.
//!
//! Everything that ends up in a certificate is exact rational arithmetic;
//! floating point never enters a verified fact.

pub mod combinat;
pub mod covers;
pub mod dynsys;
pub mod embed;
pub mod error;
pub mod independence;
pub mod linalg;
pub mod manifest;
pub mod rat;
pub mod regions;
pub mod towers;

pub use error::{Error, Result};
pub use rat::Rat;
