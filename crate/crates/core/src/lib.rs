//! Asymptotic variance of Beurling transforms of annular Beltrami
//! coefficients.
//!
//! The crate keeps Beltrami coefficients in a closed class of
//! annulus-supported monomials ([`annular`]), moves to sparse exterior
//! Laurent series for everything that happens outside the unit disk
//! ([`laurent`]) and measures growth of integral means there
//! ([`variance`]).

pub mod annular;
pub mod bounds;
pub mod constructions;
pub mod dynamics;
pub mod error;
pub mod laurent;
pub mod order2;
pub mod radius;
pub mod summation;
pub mod variance;

pub use error::{Error, Result};
