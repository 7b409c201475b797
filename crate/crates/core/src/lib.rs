//! Radial numerical laboratory for sharp Sobolev-type inequalities.
//!
//! The crate evaluates, on a log-radius grid, the deficits of the Sobolev,
//! Hardy-Littlewood-Sobolev, Onofri and logarithmic HLS inequalities, the
//! completion-of-square chain linking them, the linearization around the
//! Aubin-Talenti functions, a fast-diffusion flow on the sphere with its
//! monotone diagnostics, and the weighted Caffarelli-Kohn-Nirenberg analogues.
//!
//! All functionals use the radial normalization in which the angular factor
//! |S^{d-1}| is absorbed into the constant s_d, so real dimensions are
//! first-class inputs.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod ckn;
pub mod error;
pub mod flow;
pub mod functionals;
pub mod onofri;
pub mod radial;
pub mod specfun;
pub mod spectral;
pub mod testkit;

pub use error::{Error, Result};

pub use radial::{LogGrid, RadialProfile};
pub use specfun::{ConstantBundle, Dimension};
