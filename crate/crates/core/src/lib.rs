//! Exact computations on the Bruhat-Tits tree of `GL2(Q_p)` and the
//! Drinfeld upper half plane: integral lattices in automorphic line
//! bundles, harmonic cochains, residues, the theta operator, and the
//! modular representation theory of `GL2(F_q)` on the projective line.

pub mod cli;
pub mod error;
pub mod finite;
pub mod fqpoly;
pub mod scalars;
pub mod symrep;
pub mod harmonic;
pub mod lattices;
pub mod linalg;
pub mod modp_geometry;
pub mod rational;
pub mod sampling;
pub mod theta;
pub mod tree;

pub use error::{Error, Result};
