//! Traffic distributions of graph monomials.
//!
//! The crate is organised bottom-up: [`partitions`] and [`graph`] provide the
//! combinatorics, [`operad`] the substitution calculus, [`cumulants`] free
//! cumulants of moment functionals, [`traffic`] the traffic and injective
//! states, [`structure`] the reductions modulo the kernel of the trace, and
//! [`matrix_lab`] finite-dimensional Monte Carlo checks.

pub mod cli;
pub mod cumulants;
pub mod error;
pub mod graph;
pub mod io;
pub mod matrix_lab;
pub mod operad;
pub mod partitions;
pub mod structure;
pub mod traffic;

pub use error::{Error, Result};
