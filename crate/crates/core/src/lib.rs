//! Fixed-time convergent robust exact differentiators.
//!
//! The differentiator
//!
//! ```text
//! ẏ1 = k1 ν1(f − y1) + y2
//! ẏ2 = k2 ν2(f − y1)
//! ```
//!
//! is generated by an odd function `Φ` (see [`dgf`]). This crate computes
//! admissibility constants of `Φ`, exact and bounded convergence times
//! ([`convtime`]), tunes `(k1, k2, k3)` for a prescribed convergence-time
//! bound ([`tuning`]) and simulates the differentiator ([`sim`]).

// NaN must fail range checks, so `!(x > 0.0)` is used deliberately.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod convtime;
pub mod dgf;
pub mod error;
pub mod expr;
pub mod quad;
pub mod search;
pub mod sim;
pub mod tuning;

pub use dgf::{AdmissibilityConstants, GeneratingFunction, ParamTriple};
pub use error::{Error, Result};
