//! Orthogonal polynomials with varying weights e^{-N V(x)} dx.
//!
//! Equilibrium measures for convex fields, Plancherel-Rotach type asymptotics
//! (bulk and Airy edge), a Stieltjes oracle, kernel universality with Fredholm
//! determinants, and numerical certification of dbar extensions.

// `!(a > b)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod airy;
pub mod asymptotics;
pub mod cli;
pub mod dbar_ext;
pub mod equilibrium;
pub mod error;
pub mod field;
pub mod oracle;
pub mod quad;
pub mod statphase;
pub mod universality;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
