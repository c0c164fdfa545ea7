//! Normalized entropies: thermodynamic integration for Gibbs ensembles,
//! analytic references and a nearest-neighbour estimator for small classical
//! clouds.

mod analytic;
mod knn;
mod thermo;

pub use analytic::{
    entropy_linear_change, gaussian_entropy, log_energy_integral, log_energy_quadrature, semicircular_entropy,
};
pub use knn::{knn_entropy, MAX_KNN_DIMENSION, MIN_KNN_POINTS};
pub use thermo::{
    gauss_legendre, gaussian_log_partition, gibbs_entropy, log_partition_difference, EntropyOptions, EntropyReport,
    LadderNode, LogPartitionDifference,
};
