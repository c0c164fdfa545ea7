//! Couplings and Wasserstein-2 computations: exact and entropic transport
//! between ensembles, one-dimensional spectral transport, optimal inner
//! products, displacement interpolation and 1-D Kantorovich potentials.

mod assignment;
mod empirical;
mod quantile;
mod sinkhorn;

pub use assignment::solve_assignment;
pub use empirical::{
    cost_matrix, displacement, empirical_w2, exact_w2, optimal_inner_product, PlanSummary, TransportPlan,
    W2Estimate, W2Method, MAX_ASSIGNMENT_SIZE,
};
pub use quantile::{kantorovich_potentials_1d, spectral_w2_1d, Quantile1D};
pub use sinkhorn::{sinkhorn, SinkhornOptions, SinkhornResult};
