//! Concentration of quantifier-free formulas under Gibbs ensembles as `n`
//! grows: across-sample standard deviations along an `n` ladder.

use super::config::RunConfig;
use super::report::{Comparison, Metric, Report, Series};
use crate::error::{Error, Result};
use crate::gibbs::{sample_gibbs, Potential, SamplerOptions};
use crate::logic::{evaluate, parse, EvalOptions, Formula};

/// Sample standard deviation and its standard error `σ / (2 (N_eff - 1))^{1/2}`.
fn std_and_error(values: &[f64], ess: f64) -> (f64, f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0).max(1.0);
    let sd = var.sqrt();
    (mean, sd, sd / (2.0 * (ess.clamp(2.0, k) - 1.0)).sqrt())
}

pub fn run_qf_convergence(cfg: &RunConfig) -> Result<Report> {
    let (m, c) = (cfg.int("m")?, cfg.float("c")?);
    let pot = Potential::parse(cfg.text("potential")?, c, m)?;
    let texts = cfg.texts("formulas")?;
    let formulas: Vec<Formula> = texts.iter().map(|t| parse(t)).collect::<Result<_>>()?;
    for (t, f) in texts.iter().zip(&formulas) {
        if !f.is_quantifier_free() {
            return Err(Error::Config(format!("formula `{t}` contains a quantifier")));
        }
        if f.free_arity() > m {
            return Err(Error::Config(format!("formula `{t}` uses more than m = {m} variables")));
        }
    }
    let ns = cfg.ints("ns")?;
    if ns.len() < 2 || ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("`ns` must be strictly increasing with at least two sizes".into()));
    }
    let samples = cfg.int("samples")?;
    if samples < 2 {
        return Err(Error::Config("need at least two samples".into()));
    }
    let seed = cfg.seed()?;

    // stats[f][i] = (mean, std, std error) at ns[i].
    let mut stats = vec![Vec::with_capacity(ns.len()); formulas.len()];
    let mut series = Series::new("std", &["n", "formula", "mean", "std", "std_error"]);
    for (i, &n) in ns.iter().enumerate() {
        let e = sample_gibbs(
            &pot,
            n,
            &SamplerOptions {
                count: samples,
                seed: seed.derive(i as u64),
                ..Default::default()
            },
        )?;
        let ess = e.meta().diagnostics.as_ref().map_or(samples as f64, |d| d.ess);
        for (j, f) in formulas.iter().enumerate() {
            let values: Vec<f64> = e
                .samples()
                .iter()
                .map(|x| evaluate(f, x, &EvalOptions::default()))
                .collect::<Result<_>>()?;
            let s = std_and_error(&values, ess);
            series.push(vec![n as f64, (j + 1) as f64, s.0, s.1, s.2]);
            stats[j].push(s);
        }
    }

    let mut report = Report::new(cfg);
    for (j, st) in stats.iter().enumerate() {
        let label = format!("f{}", j + 1);
        report.note(format!("{label} = {}", texts[j]));
        let sds: Vec<f64> = st.iter().map(|s| s.1).collect();
        if sds.iter().all(|&s| s == 0.0) {
            report.push(Metric::new(&format!("{label}_std_max"), 0.0, Comparison::Within, 0.0, "constant formula"))?;
            continue;
        }
        let (first, last) = (sds[0], sds[sds.len() - 1]);
        report.push(Metric::new(
            &format!("{label}_std_ratio"),
            last / first,
            Comparison::AtMost,
            1.0,
            "concentration: std at the largest n does not exceed std at the smallest",
        ))?;
        let excess = st
            .windows(2)
            .map(|w| w[1].1 - w[0].1 - 3.0 * (w[0].2.powi(2) + w[1].2.powi(2)).sqrt())
            .fold(f64::NEG_INFINITY, f64::max);
        report.push(
            Metric::new(&format!("{label}_monotone_excess"), excess, Comparison::AtMost, 0.0, "monotone decay within three standard errors"),
        )?;
        let scaled: Vec<f64> = sds.iter().zip(&ns).map(|(s, &n)| s * n as f64).collect();
        let lo = scaled.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = scaled.iter().copied().fold(0.0, f64::max);
        let spread = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        report.push(Metric::new(
            &format!("{label}_rate_spread"),
            spread,
            Comparison::AtMost,
            cfg.float("rate_bound")?,
            "Herbst rate: std·n stays bounded along the ladder",
        ))?;
    }
    report.add_series(series);
    Ok(report)
}
