//! Experiment harness: run configurations, reports and the experiments
//! behind the command-line tool.

mod config;
mod counterexample;
mod geodesic;
mod moment;
mod qfconv;
mod report;
mod talagrand;
mod tools;

use std::path::Path;

pub use config::{schema, Check, Kind, Param, RunConfig, Value, EXPERIMENTS};
pub use counterexample::{
    draw as counterexample_draw, exact_coupled_distance_sq, log_log_slope, run_counterexample, uncertainty_lhs, Draw,
    MAX_COUNTEREXAMPLE_SIZE,
};
pub use geodesic::{gaussian_optimal_map, interpolation_map, run_geodesic, sandwich_violation, MAX_GEODESIC_DIMENSION};
pub use moment::{gaussian_fixed_point_sigma, run_moment_fixed_point, GridDensity, MAX_MOMENT_ATOMS};
pub use qfconv::run_qf_convergence;
pub use report::{Comparison, Metric, Report, Series, Verdict, CODE_VERSION, REPORT_SCHEMA_VERSION};
pub use talagrand::run_talagrand;
pub use tools::{run_entropy, run_eval, run_sample, run_w2};

use crate::error::Result;

/// Runs the experiment named in `cfg`; files go under `out_dir`.
pub fn run(cfg: &RunConfig, out_dir: &Path) -> Result<Report> {
    match cfg.experiment.as_str() {
        "counterexample" => run_counterexample(cfg),
        "talagrand" => run_talagrand(cfg),
        "geodesic" => run_geodesic(cfg),
        "moment" => run_moment_fixed_point(cfg),
        "qfconv" => run_qf_convergence(cfg),
        "sample" => run_sample(cfg, out_dir),
        "entropy" => run_entropy(cfg),
        "eval" => run_eval(cfg),
        "w2" => run_w2(cfg),
        other => Err(crate::Error::Config(format!("unknown experiment `{other}`"))),
    }
}
