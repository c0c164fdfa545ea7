//! Single-step drivers behind the `sample`, `entropy`, `eval` and `w2`
//! subcommands.

use std::path::Path;

use super::config::RunConfig;
use super::report::{Metric, Report, Series};
use crate::entropy::{gibbs_entropy, EntropyOptions};
use crate::error::{Error, Result};
use crate::gibbs::{sample_gibbs, Ensemble, Potential, SamplerOptions};
use crate::logic::{evaluate, parse, EvalOptions};
use crate::transport::{empirical_w2, SinkhornOptions, W2Method};

fn potential(cfg: &RunConfig) -> Result<Potential> {
    Potential::parse(cfg.text("potential")?, cfg.float("c")?, cfg.int("m")?)
}

/// Samples an ensemble and saves it to `out_dir/output`.
pub fn run_sample(cfg: &RunConfig, out_dir: &Path) -> Result<Report> {
    let pot = potential(cfg)?;
    let opts = SamplerOptions {
        count: cfg.int("samples")?,
        chains: cfg.int("chains")?,
        seed: cfg.seed()?,
        ..Default::default()
    };
    let e = sample_gibbs(&pot, cfg.int("n")?, &opts)?;
    std::fs::create_dir_all(out_dir)?;
    let path = out_dir.join(cfg.text("output")?);
    e.save(&path)?;
    let mut report = Report::new(cfg);
    let diag = e.meta().diagnostics.clone().expect("sampler records diagnostics");
    report.push(Metric::info("acceptance", diag.acceptance, "MALA acceptance over collection"))?;
    report.push(Metric::info("ess", diag.ess, "effective sample size of ‖X‖²"))?;
    report.push(Metric::info("mean_norm_sq", e.mean_norm_sq(), "E‖X‖²"))?;
    report.note(format!("ensemble {} written to {}", e.fingerprint(), path.display()));
    let mut chains = Series::new("chains", &["chain", "step", "acceptance", "tau", "burn_in", "thin", "ess"]);
    for (i, c) in diag.chains.iter().enumerate() {
        chains.push(vec![i as f64, c.step, c.acceptance, c.tau, c.burn_in as f64, c.thin as f64, c.ess]);
    }
    report.add_series(chains);
    Ok(report)
}

pub fn run_entropy(cfg: &RunConfig) -> Result<Report> {
    let pot = potential(cfg)?;
    let opts = EntropyOptions {
        nodes: cfg.int("nodes")?,
        sampler: SamplerOptions {
            count: cfg.int("samples")?,
            seed: cfg.seed()?,
            ..Default::default()
        },
    };
    let r = gibbs_entropy(&pot, cfg.int("n")?, &opts)?;
    let mut report = Report::new(cfg);
    report.push(Metric::info("h_n", r.h_n, "normalized entropy by thermodynamic integration"))?;
    report.push(Metric::info("error_bar", r.error_bar, "one standard error"))?;
    report.push(Metric::info("log_z", r.log_z, "log partition function"))?;
    report.push(Metric::info("mean_potential", r.mean_potential, "E φ"))?;
    let mut ladder = Series::new("ladder", &["lambda", "weight", "mean", "std_error", "acceptance"]);
    for node in &r.ladder {
        ladder.push(vec![node.lambda, node.weight, node.mean, node.std_error, node.acceptance]);
    }
    report.add_series(ladder);
    Ok(report)
}

pub fn run_eval(cfg: &RunConfig) -> Result<Report> {
    let f = parse(cfg.text("formula")?)?;
    let e = Ensemble::load(Path::new(cfg.text("input")?))?;
    let opts = EvalOptions::default();
    let values: Vec<f64> = e.samples().iter().map(|x| evaluate(&f, x, &opts)).collect::<Result<_>>()?;
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0).max(1.0)).sqrt();
    let mut report = Report::new(cfg);
    report.push(Metric::info("mean", mean, "sample mean over the ensemble"))?;
    report.push(Metric::info("std", sd, "sample standard deviation"))?;
    let mut series = Series::new("values", &["sample", "value"]);
    for (i, v) in values.iter().enumerate() {
        series.push(vec![i as f64, *v]);
    }
    report.add_series(series);
    Ok(report)
}

pub fn run_w2(cfg: &RunConfig) -> Result<Report> {
    let a = Ensemble::load(Path::new(cfg.text("a")?))?;
    let b = Ensemble::load(Path::new(cfg.text("b")?))?;
    let method = match cfg.text("method")? {
        "exact" => W2Method::Exact,
        "sinkhorn" => {
            let eps = cfg.float("sinkhorn_epsilon")?;
            W2Method::Sinkhorn(SinkhornOptions {
                epsilon: (eps > 0.0).then_some(eps),
                ..Default::default()
            })
        }
        other => return Err(Error::Config(format!("`method` = {other}: expected exact or sinkhorn"))),
    };
    let est = empirical_w2(a.samples(), b.samples(), method)?;
    let mut report = Report::new(cfg);
    report.push(Metric::info("w2", est.w2, "empirical Wasserstein-2 distance"))?;
    if let Some(eps) = est.epsilon {
        report.push(Metric::info("sinkhorn_epsilon", eps, "regularization used"))?;
    }
    Ok(report)
}
