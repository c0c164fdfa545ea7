//! Gibbs ensembles `(1/Z) exp(-n² φ(X)) dX` on `M_n^m` for strongly convex
//! potentials: the MALA sampler, the FIGE container and the diagnostics.

mod diagnostics;
mod ensemble;
mod potential;
mod sampler;

pub use diagnostics::{
    default_tail_grid, estimate_lipschitz, expectation_bound_check, gradient_at_zero, herbst_check,
    norm_tail_check, potential_sup_on_unit_ball, AscentOptions, ExpectationReport, GradientAtZero,
    GradientBound, HerbstPoint, HerbstReport, NormTailReport, TailPoint, MAX_VERTEX_ARITY,
};
pub use ensemble::{Ensemble, EnsembleMeta, FIGE_MAGIC, FIGE_VERSION};
pub use potential::Potential;
pub use sampler::{
    integrated_autocorrelation, sample_gibbs, ChainDiagnostics, Diagnostics, SamplerOptions,
    COLLAPSE_ACCEPTANCE,
};
