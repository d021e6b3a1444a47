//! Numerics for the extended Harper model.
//!
//! The crate is organised along the pipeline:
//!
//! - [`arithmetic`]: continued fractions, the Liouville exponent and resonances of a frequency.
//! - [`operator`]: the coupling, region classification, the hopping symbol and finite truncations.
//! - [`cocycle`]: transfer-matrix cocycles, Lyapunov exponents, Fourier series and the
//!   conjugation that removes the non-constant determinant.
//! - [`spectrum`]: phase-averaged spectra, integrated density of states, gaps, Hölder
//!   moduli, homogeneity and the duality check.
//! - [`reducibility`]: dual Bloch waves and the almost-reducibility pipeline ending in a
//!   Hölder certificate.
//!
//! Data-parallel loops go through [`par`]; with the `parallel` feature disabled they run
//! sequentially and produce bit-identical results.

// Guards such as `!(x > 0.0)` are written negated on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arithmetic;
pub mod cocycle;
pub mod error;
pub mod linalg;
pub mod operator;
pub mod par;
pub mod reducibility;
pub mod spectrum;

pub use error::{HarperError, Result};
pub use num_complex::Complex64;
