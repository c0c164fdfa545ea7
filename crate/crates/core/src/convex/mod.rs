//! Convex analysis on real inner-product spaces: inf-convolution, Legendre
//! transforms, displacement interpolation pairs and midpoint checks of
//! curvature bounds.

mod function;
mod interp;
mod prox;
mod space;

pub use function::{
    check_gradient, check_semiconcavity, check_strong_convexity, duality_gap, random_real_samples,
    MidpointSample, ScalarFn, ViolationReport,
};
pub use interp::{check_admissible, interpolation_pair, InterpolationPair, ADMISSIBILITY_TOL};
pub use prox::{
    inf_convolution, inf_convolution_fn, legendre_fn, legendre_strongly_convex, prox, Prox, ProxOptions,
};
pub use space::{InnerSpace, RealVector};
