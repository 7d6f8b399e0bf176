//! Computational tools for Cartan's realization problem: flat Lie
//! algebroids built from coframe structure functions, prolongations of
//! linear Lie algebras, generalized Maurer-Cartan equations, and numeric
//! construction and verification of realizations.

pub mod algebroid;
pub mod catalog;
pub mod coframe;
pub mod error;
pub mod gstruct;
pub mod job;
pub mod linalg;
pub mod liealg;
pub mod mcform;
pub mod realize;
pub mod symexpr;
pub mod verdict;

pub use error::{Error, Result};
