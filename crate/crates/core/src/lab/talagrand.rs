//! Transport–entropy inequality `d_W(μ, ν)² ≤ (2 / c n²) KL(ν ‖ μ)` for a
//! Gibbs measure `μ ∝ exp(-n² φ)` and its linear tilt
//! `ν ∝ exp(-n² (φ + re⟨a, X⟩))`.
//!
//! Both measures are sampled with the same fixed MALA step and noise stream
//! (synchronous coupling), so the paired cost `E‖X - Y‖²` estimates an upper
//! bound on `d_W²`. The shared step is a fraction of the tuned one so that
//! accept/reject decisions rarely differ between the two chains. The divergence is
//! `KL = -n² E_ν[re⟨a, X⟩] - (log Z_ν - log Z_μ)`, with the log-partition
//! difference from thermodynamic integration.

use rand::Rng;

use super::config::RunConfig;
use super::report::{Comparison, Metric, Report, Series};
use crate::entropy::{log_partition_difference, EntropyOptions};
use crate::error::{Error, Result};
use crate::gibbs::{sample_gibbs, Ensemble, Potential, SamplerOptions};
use crate::matcore::{standard_gaussian_tuple, Seed};
use crate::transport::exact_w2;

/// Whether `φ = (c/2)‖·‖²`, checked at random points.
fn is_plain_quadratic(pot: &Potential, n: usize, seed: Seed) -> Result<bool> {
    let mut rng = seed.rng();
    for _ in 0..8 {
        let x = standard_gaussian_tuple(n, pot.m(), &mut rng).scale(rng.random_range(0.1..2.0) / n as f64);
        let want = 0.5 * pot.c() * x.norm_sq();
        if (pot.value(&x)? - want).abs() > 1e-10 * (1.0 + want) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn diagnostics_step(e: &Ensemble) -> Result<(f64, usize, usize)> {
    let d = e
        .meta()
        .diagnostics
        .as_ref()
        .ok_or_else(|| Error::Sampler("pilot ensemble carries no diagnostics".into()))?;
    let step = d.chains.iter().map(|c| c.step).fold(f64::INFINITY, f64::min);
    let burn = d.chains.iter().map(|c| c.burn_in).max().unwrap_or(0);
    let thin = d.chains.iter().map(|c| c.thin).max().unwrap_or(1);
    Ok((step, burn, thin))
}

pub fn run_talagrand(cfg: &RunConfig) -> Result<Report> {
    let (m, n, c) = (cfg.int("m")?, cfg.int("n")?, cfg.float("c")?);
    let samples = cfg.int("samples")?;
    let seed = cfg.seed()?;
    let tilt = cfg.complexes("tilt")?;
    if tilt.len() != m {
        return Err(Error::Config(format!("tilt has {} entries for m = {m}", tilt.len())));
    }
    let mu = Potential::parse(cfg.text("potential")?, c, m)?;
    let nu = mu.with_linear_tilt(&tilt)?;
    let n2 = (n * n) as f64;
    let mut report = Report::new(cfg);

    // Pilot run fixes one step, burn-in and thinning for both measures.
    let pilot = sample_gibbs(
        &mu,
        n,
        &SamplerOptions {
            count: samples.min(100),
            seed: seed.derive(0),
            ..Default::default()
        },
    )?;
    let (tuned, burn_in, thin) = diagnostics_step(&pilot)?;
    let fraction = cfg.float("coupling_step_fraction")?;
    if fraction <= 0.0 {
        return Err(Error::Config("`coupling_step_fraction` must be positive".into()));
    }
    // A smaller shared step keeps the two Metropolis decisions in agreement;
    // burn-in and thinning stretch by the same factor.
    let step = tuned * fraction;
    let stretch = |k: usize| (k as f64 / fraction).ceil() as usize;
    let coupled = SamplerOptions {
        count: samples,
        seed: seed.derive(1),
        step: Some(step),
        burn_in: Some(stretch(burn_in)),
        thin: Some(stretch(thin)),
        ..Default::default()
    };
    let e_mu = sample_gibbs(&mu, n, &coupled)?;
    let e_nu = sample_gibbs(&nu, n, &coupled)?;

    let mut series = Series::new("pairs", &["sample", "distance_sq", "tilt_term"]);
    let mut cost = 0.0;
    let mut tilt_terms = Vec::with_capacity(samples);
    for (i, (x, y)) in e_mu.samples().iter().zip(e_nu.samples()).enumerate() {
        let d = x.sub(y).norm_sq();
        let t = nu.value(y)? - mu.value(y)?;
        cost += d;
        tilt_terms.push(t);
        series.push(vec![i as f64, d, t]);
    }
    let k = samples as f64;
    cost /= k;
    let mean_tilt = tilt_terms.iter().sum::<f64>() / k;
    let ess = e_nu.meta().diagnostics.as_ref().map_or(k, |d| d.ess).clamp(1.0, k);
    let tilt_se = (tilt_terms.iter().map(|t| (t - mean_tilt).powi(2)).sum::<f64>() / (k - 1.0).max(1.0) / ess).sqrt();

    let log_z = log_partition_difference(
        &mu,
        &nu,
        n,
        &EntropyOptions {
            nodes: cfg.int("nodes")?,
            sampler: SamplerOptions {
                count: cfg.int("ladder_samples")?,
                seed: seed.derive(2),
                ..Default::default()
            },
        },
    )?;
    let kl = -n2 * mean_tilt - log_z.value;
    let kl_err = ((n2 * tilt_se).powi(2) + log_z.error_bar.powi(2)).sqrt();
    let rhs = 2.0 / (c * n2) * kl;
    let (assign, _) = exact_w2(e_mu.samples(), e_nu.samples())?;

    report.push(Metric::info("coupled_cost", cost, "synchronous-coupling estimate of an upper bound on d_W²"))?;
    report.push(Metric::info("assignment_w2_sq", assign * assign, "exact assignment between the coupled ensembles"))?;
    report.push(Metric::info("kl", kl, "thermodynamic integration and tilted mean"))?;
    report.push(Metric::info("kl_error_bar", kl_err, "one standard error"))?;
    report.push(Metric::info("rhs", rhs, "(2 / c n²) KL"))?;
    report.push(Metric::info("step", step, "fixed MALA step of the coupled chains"))?;

    let norm_a_sq: f64 = tilt.iter().map(|a| a.norm_sqr()).sum();
    if norm_a_sq == 0.0 {
        report.push(Metric::new("lhs_zero_tilt", cost, Comparison::Within, 0.0, "trivial: ν = μ"))?;
        report.push(Metric::new("rhs_zero_tilt", rhs, Comparison::Within, 0.0, "trivial: ν = μ"))?;
    } else {
        let ratio = cost / rhs;
        report.push(Metric::info("ratio_error_bar", ratio * kl_err / kl.abs(), "propagated from the KL error bar"))?;
        if is_plain_quadratic(&mu, n, seed.derive(3))? {
            report.push(
                Metric::new("equality_ratio", ratio, Comparison::Within, 1.0, "Gaussian translate: equality case")
                    .tolerance(0.1),
            )?;
            report.push(
                Metric::new("coupled_cost_exact", cost, Comparison::Within, norm_a_sq / (c * c), "Gaussian translate ‖a/c‖²")
                    .tolerance(1e-6 * (1.0 + norm_a_sq / (c * c))),
            )?;
            report.push(Metric::info("kl_exact", n2 * norm_a_sq / (2.0 * c), "Gaussian translate n² ‖a‖² / 2c"))?;
        } else {
            report.push(Metric::new("talagrand_ratio", ratio, Comparison::AtMost, 1.0, "theorem inequality with constant c"))?;
        }
    }
    report.add_series(series);
    let mut ladder = Series::new("ladder", &["lambda", "weight", "mean", "std_error", "acceptance"]);
    for node in &log_z.ladder {
        ladder.push(vec![node.lambda, node.weight, node.mean, node.std_error, node.acceptance]);
    }
    report.add_series(ladder);
    Ok(report)
}
