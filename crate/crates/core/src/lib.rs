//! Decision procedures for the universal theory of bounded residuated
//! distributive lattice-ordered groupoids and related classes.
//!
//! The main entry points are [`solver::decide_sat`], [`solver::decide_valid`]
//! and [`structure::certify`]. [`oracle`] enumerates small finite algebras
//! by brute force and serves as an independent reference, [`duality`]
//! relates algebras and frames, and [`tiling`] generates formulas from
//! corridor tiling games.

mod bits;
mod par;

pub mod algebra;
pub mod corpus;
pub mod duality;
pub mod formula;
pub mod io;
pub mod oracle;
pub mod solver;
pub mod structure;
pub mod tiling;

pub use bits::Mask;
