//! Finite-n laboratory for free information geometry.
//!
//! The crate works on tuples of complex `n×n` matrices with the normalized
//! trace `tr_n = Tr/n`. Modules:
//!
//! - [`matcore`]: matrix tuples, inner products, samplers.
//! - [`logic`]: continuous-logic formulas over matrix tuples.
//! - [`convex`]: inf-convolution, Legendre transforms, interpolation pairs.
//! - [`gibbs`]: MALA sampling of `exp(-n² φ)` ensembles and diagnostics.
//! - [`transport`]: empirical Wasserstein distances and couplings.
//! - [`entropy`]: normalized entropies and analytic references.
//! - [`lab`]: experiment configs, reports and the CLI drivers.

pub mod convex;
pub mod entropy;
pub mod error;
pub mod gibbs;
pub mod lab;
pub mod logic;
pub mod matcore;
pub mod transport;

pub use error::{Error, Result};
