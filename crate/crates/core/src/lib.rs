//! Deterministic and randomized testing for q-monomials in arithmetic
//! formulas, together with the combinatorial problems that reduce to it.

pub mod bench;
pub mod error;
pub mod fdtm;
pub mod formula;
pub mod gf2m;
pub mod group_algebra;
pub mod hashing;
pub mod pit;
pub mod problems;
pub mod ring;
pub mod transform;

pub use error::{Error, Result};
