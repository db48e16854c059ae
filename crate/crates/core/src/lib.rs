//! Numerical laboratory for low-regularity function classes on the torus.
//!
//! Functions are sampled on dyadic grids ([`grid`]). On top of that sit the
//! Littlewood-Paley multipliers ([`multipliers`]), the dyadic martingale
//! decomposition ([`dyadic`]), the Besov, Lorentz-Besov, `LG` and exponential
//! Orlicz norms ([`norms`]), inequality harnesses ([`inequality`]) and the
//! approximation and entropy estimates ([`entropy`]). [`experiments`] wires
//! them into the named runs used by the command-line tool.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod corpus;
pub mod dyadic;
pub mod entropy;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod inequality;
pub mod multipliers;
pub mod norms;
pub mod par;
pub mod regression;
pub mod report;

pub use error::{LabError, Result};
pub use grid::{GridFunction, SpectralFunction};
