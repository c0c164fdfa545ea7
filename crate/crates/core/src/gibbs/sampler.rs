//! Metropolis-adjusted Langevin sampling of `exp(-n² φ(X)) dX` in the tr_n
//! metric.
//!
//! With `U = n² φ` and `∇U = n² G` (`G` the tr_n gradient of `φ`), a proposal
//! is `X' = X - h ∇U(X) + √(2h) ξ` with `ξ` standard Gaussian in tr_n-orthonormal
//! coordinates. The step is adapted by Robbins–Monro during the pilot and
//! burn-in phases only and frozen while samples are collected, so the
//! collection phase is an exact Metropolis–Hastings chain.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{standard_gaussian_tuple, MatrixTuple, Seed};

use super::ensemble::{Ensemble, EnsembleMeta};
use super::potential::Potential;

/// Acceptance below this rate during collection counts as a collapse.
pub const COLLAPSE_ACCEPTANCE: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerOptions {
    pub count: usize,
    pub chains: usize,
    pub seed: Seed,
    /// Starting step; defaults to `0.5 / (c n²)`.
    pub initial_step: Option<f64>,
    pub target_acceptance: f64,
    pub pilot_steps: usize,
    /// Step halvings allowed after an acceptance collapse.
    pub max_retries: usize,
    /// Fixed step: disables adaptation.
    pub step: Option<f64>,
    /// Overrides the `10 τ` burn-in.
    pub burn_in: Option<usize>,
    /// Overrides the `⌈2 τ⌉` thinning.
    pub thin: Option<usize>,
    /// Starting point of every chain (default: the origin).
    #[serde(skip)]
    pub start: Option<MatrixTuple>,
    /// Refuse potentials failing the strong-convexity spot check.
    pub convexity_guard: bool,
}

impl Default for SamplerOptions {
    fn default() -> Self {
        Self {
            count: 500,
            chains: 4,
            seed: Seed::new(0, 0),
            initial_step: None,
            target_acceptance: 0.574,
            pilot_steps: 400,
            max_retries: 3,
            step: None,
            burn_in: None,
            thin: None,
            start: None,
            convexity_guard: true,
        }
    }
}

/// Per-chain record of the run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainDiagnostics {
    pub step: f64,
    pub acceptance: f64,
    /// Integrated autocorrelation time of `‖X‖²` from the pilot, in steps.
    pub tau: f64,
    pub burn_in: usize,
    pub thin: usize,
    pub retries: usize,
    /// Effective sample size of `‖X‖²` over the collected samples.
    pub ess: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub acceptance: f64,
    pub ess: f64,
    pub chains: Vec<ChainDiagnostics>,
}

/// Integrated autocorrelation time `1 + 2 Σ ρ_k` with Sokal's adaptive window
/// (stop at the first `M ≥ 5 τ(M)`).
pub fn integrated_autocorrelation(series: &[f64]) -> f64 {
    let len = series.len();
    if len < 4 {
        return 1.0;
    }
    let mean = series.iter().sum::<f64>() / len as f64;
    let centered: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let var = centered.iter().map(|v| v * v).sum::<f64>() / len as f64;
    if var <= 0.0 {
        return 1.0;
    }
    let mut tau = 1.0;
    for k in 1..len / 2 {
        let rho = centered[..len - k]
            .iter()
            .zip(&centered[k..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / (len as f64 * var);
        tau += 2.0 * rho;
        if k as f64 >= 5.0 * tau {
            break;
        }
    }
    tau.max(1.0)
}

struct State {
    x: MatrixTuple,
    phi: f64,
    grad: MatrixTuple,
}

struct Chain<'a> {
    pot: &'a Potential,
    n2: f64,
    state: State,
}

impl<'a> Chain<'a> {
    fn new(pot: &'a Potential, n: usize, start: MatrixTuple) -> Result<Self> {
        let (phi, grad) = pot.value_and_gradient(&start)?;
        if !phi.is_finite() || !grad.is_finite() {
            return Err(Error::NonFinite("potential at the starting point".into()));
        }
        Ok(Self {
            pot,
            n2: (n * n) as f64,
            state: State { x: start, phi, grad },
        })
    }

    /// One MALA step; returns the acceptance probability.
    fn step<R: Rng>(&mut self, h: f64, rng: &mut R) -> Result<f64> {
        let n = self.state.x.n();
        let m = self.state.x.m();
        let xi = standard_gaussian_tuple(n, m, rng);
        let mut prop = self.state.x.clone();
        prop.axpy(-h * self.n2, &self.state.grad);
        prop.axpy((2.0 * h).sqrt(), &xi);
        let (phi_p, grad_p) = self.pot.value_and_gradient(&prop)?;
        let log_u: f64 = rng.random::<f64>().ln();
        if !phi_p.is_finite() || !grad_p.is_finite() {
            return Ok(0.0);
        }
        // log q(x' | x) = -‖x' - x + h∇U(x)‖² / 4h; the forward noise is ξ.
        let forward = 0.5 * xi.norm_sq();
        let mut back = self.state.x.sub(&prop);
        back.axpy(h * self.n2, &grad_p);
        let backward = back.norm_sq() / (4.0 * h);
        let log_alpha = -self.n2 * (phi_p - self.state.phi) - backward + forward;
        let alpha = if log_alpha >= 0.0 { 1.0 } else { log_alpha.exp() };
        if log_u < log_alpha {
            self.state = State {
                x: prop,
                phi: phi_p,
                grad: grad_p,
            };
        }
        Ok(alpha)
    }
}

/// Robbins–Monro update of `log h` towards the target acceptance.
fn adapt(h: f64, alpha: f64, target: f64, k: usize) -> f64 {
    let gain = 1.0 / ((k + 1) as f64).powf(0.6);
    (h.ln() + gain * (alpha - target)).exp()
}

fn run_chain(pot: &Potential, n: usize, count: usize, seed: Seed, opts: &SamplerOptions) -> Result<(Vec<MatrixTuple>, ChainDiagnostics)> {
    let mut rng = seed.rng();
    let start = opts.start.clone().unwrap_or_else(|| MatrixTuple::zeros(n, pot.m()));
    let mut chain = Chain::new(pot, n, start)?;
    let n2 = (n * n) as f64;
    let mut h = opts.step.or(opts.initial_step).unwrap_or(0.5 / (pot.c() * n2));
    let adaptive = opts.step.is_none();

    // Pilot: adapt the step and measure the autocorrelation of ‖X‖².
    let mut series = Vec::with_capacity(opts.pilot_steps);
    let mut k = 0;
    for _ in 0..opts.pilot_steps {
        let alpha = chain.step(h, &mut rng)?;
        if adaptive {
            h = adapt(h, alpha, opts.target_acceptance, k);
        }
        k += 1;
        series.push(chain.state.x.norm_sq());
    }
    // The first half of the pilot is still transient; measure on the rest.
    let tau = integrated_autocorrelation(&series[series.len() / 2..]);
    let burn_in = opts.burn_in.unwrap_or((10.0 * tau).ceil() as usize);
    for _ in 0..burn_in {
        let alpha = chain.step(h, &mut rng)?;
        if adaptive {
            h = adapt(h, alpha, opts.target_acceptance, k);
        }
        k += 1;
    }
    let thin = opts.thin.unwrap_or((2.0 * tau).ceil() as usize).max(1);

    let checkpoint = (chain.state.x.clone(), chain.state.phi, chain.state.grad.clone());
    let mut retries = 0;
    loop {
        let mut samples = Vec::with_capacity(count);
        let mut accepted = 0.0;
        let mut steps = 0usize;
        for _ in 0..count {
            for _ in 0..thin {
                accepted += chain.step(h, &mut rng)?;
                steps += 1;
            }
            samples.push(chain.state.x.clone());
        }
        let acceptance = if steps == 0 { 1.0 } else { accepted / steps as f64 };
        if acceptance >= COLLAPSE_ACCEPTANCE || count == 0 {
            let norms: Vec<f64> = samples.iter().map(MatrixTuple::norm_sq).collect();
            let ess = count as f64 / integrated_autocorrelation(&norms);
            let diag = ChainDiagnostics {
                step: h,
                acceptance,
                tau,
                burn_in,
                thin,
                retries,
                ess,
            };
            return Ok((samples, diag));
        }
        if retries == opts.max_retries {
            return Err(Error::Sampler(format!(
                "acceptance {acceptance:.4} below {COLLAPSE_ACCEPTANCE} after {retries} step halvings (step {h:.3e}, n {n}, c {})",
                pot.c()
            )));
        }
        retries += 1;
        h *= 0.5;
        chain.state = State {
            x: checkpoint.0.clone(),
            phi: checkpoint.1,
            grad: checkpoint.2.clone(),
        };
    }
}

/// Draw `opts.count` samples of `exp(-n² φ)` on `M_n^m`, `m = pot.m()`.
///
/// Chains run in parallel on streams derived from `opts.seed`; the samples are
/// concatenated in chain order, so the output depends only on the inputs.
pub fn sample_gibbs(pot: &Potential, n: usize, opts: &SamplerOptions) -> Result<Ensemble> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    if opts.count == 0 || opts.chains == 0 {
        return Err(Error::InvalidArgument("count and chains must be positive".into()));
    }
    if !(0.0..1.0).contains(&opts.target_acceptance) || opts.target_acceptance == 0.0 {
        return Err(Error::InvalidArgument(format!(
            "target acceptance {} outside (0, 1)",
            opts.target_acceptance
        )));
    }
    for s in [opts.step, opts.initial_step].into_iter().flatten() {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidArgument(format!("step {s} must be positive")));
        }
    }
    if let Some(x) = &opts.start {
        if x.n() != n || x.m() != pot.m() {
            return Err(Error::DimensionMismatch("starting point shape".into()));
        }
    }
    if opts.convexity_guard {
        let report = pot.convexity_spot_check(n, 16, opts.seed.derive(u64::MAX));
        if !report.holds(1e-8) {
            return Err(Error::Domain(format!(
                "potential fails the c = {} convexity spot check (violation {:.3e})",
                pot.c(),
                report.max_violation
            )));
        }
    }
    let chains = opts.chains.min(opts.count);
    let per = opts.count / chains;
    let extra = opts.count % chains;
    let runs: Vec<Result<(Vec<MatrixTuple>, ChainDiagnostics)>> = (0..chains)
        .into_par_iter()
        .map(|i| {
            let count = per + usize::from(i < extra);
            run_chain(pot, n, count, opts.seed.derive(i as u64), opts)
        })
        .collect();
    let mut samples = Vec::with_capacity(opts.count);
    let mut chain_diags = Vec::with_capacity(chains);
    for r in runs {
        let (s, d) = r?;
        samples.extend(s);
        chain_diags.push(d);
    }
    let total = samples.len() as f64;
    let acceptance = chain_diags
        .iter()
        .zip(0..)
        .map(|(d, i)| d.acceptance * (per + usize::from(i < extra)) as f64)
        .sum::<f64>()
        / total;
    let ess = chain_diags.iter().map(|d| d.ess).sum();
    let meta = EnsembleMeta {
        source: "gibbs".into(),
        potential: Some(pot.text()),
        potential_hash: Some(pot.hash()),
        c: Some(pot.c()),
        seed: Some(opts.seed),
        sampler: Some(SamplerOptions { start: None, ..opts.clone() }),
        diagnostics: Some(Diagnostics {
            acceptance,
            ess,
            chains: chain_diags,
        }),
    };
    Ensemble::new(samples, meta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn autocorrelation_of_white_noise_is_near_one() {
        let mut rng = Seed::new(1, 0).rng();
        let s: Vec<f64> = (0..4000).map(|_| rng.random::<f64>()).collect();
        let tau = integrated_autocorrelation(&s);
        assert!((tau - 1.0).abs() < 0.2, "{tau}");
    }

    #[test]
    fn autocorrelation_of_ar1() {
        let rho: f64 = 0.8;
        let mut rng = Seed::new(2, 0).rng();
        let mut v = 0.0;
        let s: Vec<f64> = (0..50_000)
            .map(|_| {
                v = rho * v + rng.random::<f64>() - 0.5;
                v
            })
            .collect();
        let want = (1.0 + rho) / (1.0 - rho);
        let tau = integrated_autocorrelation(&s);
        assert!((tau - want).abs() < 0.15 * want, "{tau} vs {want}");
    }

    #[test]
    fn rejects_bad_options() {
        let pot = Potential::quadratic(1, 1.0).unwrap();
        let opts = SamplerOptions { count: 0, ..Default::default() };
        assert!(sample_gibbs(&pot, 2, &opts).is_err());
        let opts = SamplerOptions { step: Some(-1.0), ..Default::default() };
        assert!(sample_gibbs(&pot, 2, &opts).is_err());
    }

    #[test]
    fn huge_fixed_step_collapses() {
        let pot = Potential::quadratic(1, 1.0).unwrap();
        let opts = SamplerOptions {
            count: 20,
            chains: 1,
            step: Some(1e3),
            max_retries: 1,
            ..Default::default()
        };
        assert!(matches!(sample_gibbs(&pot, 4, &opts), Err(Error::Sampler(_))));
    }

    #[test]
    fn chains_split_count() {
        let pot = Potential::quadratic(1, 1.0).unwrap();
        let opts = SamplerOptions { count: 7, chains: 3, pilot_steps: 50, ..Default::default() };
        let e = sample_gibbs(&pot, 2, &opts).unwrap();
        assert_eq!(e.len(), 7);
        assert_eq!(e.meta().diagnostics.as_ref().unwrap().chains.len(), 3);
    }
}
