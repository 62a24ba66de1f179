//! Curl-conforming edge finite elements for time-harmonic Maxwell problems
//! with configurable quadrature per form term.

// `!(x <= tol)` is used on purpose so that NaN counts as a failure.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod analysis;
pub mod assembly;
pub mod catalog;
pub mod error;
pub mod experiments;
pub mod mesh;
pub mod quadrature;
pub mod reference_element;
pub mod solver;
pub mod sparse;
