//! Algebraic and numerical toolkit for integration driven by irregular
//! signals on grids.
//!
//! The pieces fit together like this: labeled rooted trees and their
//! Connes-Kreimer coproduct ([`trees`], [`hopf`]) index iterated integrals;
//! the increment complex and the discrete sewing map ([`increments`],
//! [`sewing`]) turn local expansions into integrals; rough paths and
//! B-series ([`roughpath`], [`bseries`]) use both to integrate and to solve
//! driven ODEs; [`kdv`] applies the same tree expansions to the KdV equation
//! in Fourier space; [`reports`] holds the exploratory fits the CLI emits.

pub mod bseries;
pub mod drivers;
pub mod error;
pub mod fields;
pub mod hopf;
pub mod increments;
pub mod kdv;
pub mod quadrature;
pub mod reports;
pub mod roughpath;
pub mod scalar;
pub mod sewing;
pub mod trees;

pub use error::{Error, Result};
pub use scalar::Real;

/// Exact rational coefficient type used by the Hopf-algebra layer.
pub type Rat = num_rational::BigRational;

/// Complex scalar used by the spectral KdV layer, re-exported so
/// callers can build mode coefficients without a separate dependency.
pub use num_complex::Complex;

/// Double-precision grid.
pub type Grid64 = increments::Grid<f64>;
/// Double-precision one-parameter function.
pub type Inc1F = increments::Inc1<f64>;
/// Double-precision two-parameter increment.
pub type Inc2F = increments::Inc2<f64>;
/// Double-precision three-parameter increment.
pub type Inc3F = increments::Inc3<f64>;
pub type RoughPath64 = roughpath::RoughPath<f64>;
