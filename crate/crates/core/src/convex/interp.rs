//! Convex pairs `(φ_{s,t}, ψ_{s,t})` witnessing duality between the points
//! `x_s` and `x_t` of a displacement interpolation `x_r = (1-r)x_0 + r x_1`.
//!
//! For `0 < s < t < 1`, writing `φ_τ` for the inf-convolution,
//!
//! ```text
//! φ_{s,t}(x) = (1-t)/(2(1-s)) ‖x‖² + (t-s) φ_{s/(1-s)}(x/(1-s))
//! ψ_{s,t}(y) = s/(2t) ‖y‖²         + (t-s) ψ_{(1-t)/t}(y/t)
//! ```
//!
//! and the endpoints `s = 0`, `t = 1` use the closed forms
//! `φ_{0,t} = (1-t) q + t φ` and `ψ_{s,1} = s q + (1-s) ψ`.

use rayon::prelude::*;

use crate::error::{Error, Result};

use super::function::{duality_gap, ScalarFn};
use super::prox::{prox, ProxOptions};
use super::space::InnerSpace;

/// Admissibility `φ(x) + ψ(y) ≥ ⟨x, y⟩` is enforced to within
/// `ADMISSIBILITY_TOL (1 + |⟨x, y⟩|)`.
pub const ADMISSIBILITY_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct InterpolationPair<P> {
    pub s: f64,
    pub t: f64,
    pub phi: ScalarFn<P>,
    pub psi: ScalarFn<P>,
    pub phi_st: ScalarFn<P>,
    pub psi_st: ScalarFn<P>,
}

impl<P: InnerSpace> InterpolationPair<P> {
    /// `∇φ_{s,t}`, which carries `x_s` to `x_t` along an optimal coupling.
    pub fn forward(&self, x: &P) -> Option<P> {
        self.phi_st.gradient(x)
    }

    /// `∇ψ_{s,t}`, which carries `x_t` back to `x_s`.
    pub fn backward(&self, y: &P) -> Option<P> {
        self.psi_st.gradient(y)
    }
}

/// `x ↦ a‖x‖²/2 + b f_τ(x/r)`, using the proximal solver for `f_τ`.
fn quadratic_plus_smoothed<P: InnerSpace>(
    f: &ScalarFn<P>,
    a: f64,
    b: f64,
    tau: f64,
    r: f64,
    opts: &ProxOptions,
    (convexity, semiconcavity): (f64, f64),
) -> ScalarFn<P> {
    let (fv, fg, o) = (f.clone(), f.clone(), *opts);
    ScalarFn::new(move |x: &P| match prox(&fv, tau, &x.scale(1.0 / r), &o) {
        Ok(p) => 0.5 * a * x.norm_sq() + b * p.value,
        Err(_) => f64::NAN,
    })
    .with_gradient(move |x: &P| {
        let z = x.scale(1.0 / r);
        match prox(&fg, tau, &z, &o) {
            // ∇[f_τ(x/r)] = (z - prox(z)) / (τ r)
            Ok(p) => {
                let mut g = x.scale(a);
                g.axpy(b / (tau * r), &z.sub(&p.argmin));
                g
            }
            Err(_) => x.scale(f64::NAN),
        }
    })
    .with_bounds(convexity, semiconcavity)
}

/// Checks `φ(x) + ψ(y) ≥ ⟨x, y⟩` on every sample pair.
pub fn check_admissible<P: InnerSpace>(phi: &ScalarFn<P>, psi: &ScalarFn<P>, pairs: &[(P, P)]) -> Result<()> {
    let worst = pairs
        .par_iter()
        .enumerate()
        .map(|(i, (x, y))| {
            let gap = duality_gap(phi, psi, x, y);
            let slack = gap + ADMISSIBILITY_TOL * (1.0 + x.inner(y).abs());
            (if slack.is_nan() { f64::NEG_INFINITY } else { slack }, i, gap)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    match worst {
        Some((slack, i, gap)) if slack < 0.0 => Err(Error::InvalidArgument(format!(
            "pair is not admissible: φ(x)+ψ(y)-⟨x,y⟩ = {gap:.3e} at sample {i} of {}",
            pairs.len()
        ))),
        _ => Ok(()),
    }
}

/// Builds `(φ_{s,t}, ψ_{s,t})` for `0 ≤ s ≤ t ≤ 1` after checking the base
/// pair on `admissibility_samples`.
///
/// The interior formulas need gradients of `φ` (when `s > 0`) and `ψ` (when
/// `t < 1`). Declared bounds: `φ_{s,t}` is `(1-t)/(1-s)`-convex and
/// `t/s`-semiconcave, `ψ_{s,t}` is `s/t`-convex and `(1-s)/(1-t)`-semiconcave;
/// the closed-form endpoints combine the bounds of `φ` or `ψ` instead.
pub fn interpolation_pair<P: InnerSpace>(
    phi: &ScalarFn<P>,
    psi: &ScalarFn<P>,
    s: f64,
    t: f64,
    admissibility_samples: &[(P, P)],
    opts: &ProxOptions,
) -> Result<InterpolationPair<P>> {
    if !(0.0..=1.0).contains(&s) || !(0.0..=1.0).contains(&t) || s > t {
        return Err(Error::InvalidArgument(format!("need 0 ≤ s ≤ t ≤ 1, got s = {s}, t = {t}")));
    }
    check_admissible(phi, psi, admissibility_samples)?;
    let need = |f: &ScalarFn<P>, name: &str| {
        if f.has_gradient() {
            Ok(())
        } else {
            Err(Error::Unsupported(format!("{name} needs a gradient for s = {s}, t = {t}")))
        }
    };
    let (phi_st, psi_st) = if s == t {
        (ScalarFn::quadratic(), ScalarFn::quadratic())
    } else if s == 0.0 && t == 1.0 {
        (phi.clone(), psi.clone())
    } else {
        let phi_st = if s == 0.0 {
            phi.add_quadratic(t, 1.0 - t)
        } else {
            need(phi, "φ")?;
            quadratic_plus_smoothed(
                phi,
                (1.0 - t) / (1.0 - s),
                t - s,
                s / (1.0 - s),
                1.0 - s,
                opts,
                ((1.0 - t) / (1.0 - s), t / s),
            )
        };
        let psi_st = if t == 1.0 {
            psi.add_quadratic(1.0 - s, s)
        } else {
            need(psi, "ψ")?;
            quadratic_plus_smoothed(
                psi,
                s / t,
                t - s,
                (1.0 - t) / t,
                t,
                opts,
                (s / t, (1.0 - s) / (1.0 - t)),
            )
        };
        (phi_st, psi_st)
    };
    Ok(InterpolationPair {
        s,
        t,
        phi: phi.clone(),
        psi: psi.clone(),
        phi_st,
        psi_st,
    })
}
