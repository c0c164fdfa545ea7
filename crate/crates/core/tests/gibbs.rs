use freegeo::convex::check_gradient;
use freegeo::gibbs::{
    default_tail_grid, expectation_bound_check, gradient_at_zero, herbst_check, norm_tail_check, sample_gibbs,
    AscentOptions, Ensemble, EnsembleMeta, Potential, SamplerOptions,
};
use freegeo::logic::{evaluate, parse, EvalOptions};
use freegeo::matcore::{sample_ginibre, sample_unitary, MatrixTuple, Seed, C64};
use freegeo::Error;
use proptest::prelude::*;

fn opts(count: usize, seed: u64) -> SamplerOptions {
    SamplerOptions {
        count,
        seed: Seed::new(seed, 0),
        ..Default::default()
    }
}

fn gaussian(n: usize, m: usize, c: f64, count: usize, seed: u64) -> Ensemble {
    sample_gibbs(&Potential::quadratic(m, c).unwrap(), n, &opts(count, seed)).unwrap()
}

#[test]
fn gaussian_second_moment() {
    // Density ∝ exp(-n² c ‖X‖²/2) over 2mn² real tr_n-orthonormal
    // coordinates, each of variance 1/(n² c).
    for (n, m, c) in [(8, 1, 1.0), (6, 2, 1.0), (8, 1, 2.5)] {
        let e = gaussian(n, m, c, 1000, 11);
        let want = 2.0 * m as f64 / c;
        let got = e.mean_norm_sq();
        assert!((got - want).abs() < 0.05 * want, "n={n} m={m} c={c}: {got} vs {want}");
        let acc = e.meta().diagnostics.as_ref().unwrap().acceptance;
        assert!((0.45..=0.75).contains(&acc), "acceptance {acc}");
    }
}

#[test]
fn linear_tilt_shifts_the_mean() {
    let a = [C64::new(0.7, -0.4), C64::new(-0.3, 0.2)];
    let c = 2.0;
    let pot = Potential::quadratic_with_tilt(2, c, &a).unwrap();
    let n = 4;
    let e = sample_gibbs(&pot, n, &opts(2000, 12)).unwrap();
    let mean = e.mean();
    let ess = e.meta().diagnostics.as_ref().unwrap().ess;
    // tr_n of a coordinate average has standard deviation 1/(n √(c ESS)).
    let se = 1.0 / (n as f64 * (c * ess).sqrt());
    for (j, aj) in a.iter().enumerate() {
        let got = mean.get(j).tr_n();
        let want = -aj / c;
        assert!((got - want).norm() < 5.0 * se, "slot {j}: {got} vs {want}");
    }
}

#[test]
fn stationary_covariance_is_isotropic() {
    let (n, c) = (3, 2.0);
    let e = gaussian(n, 1, c, 4000, 13);
    // tr_n-orthonormal coordinates: X_ab = √n (u_ab + i u'_ab).
    let coords: Vec<Vec<f64>> = e
        .samples()
        .iter()
        .map(|x| {
            x.get(0)
                .data()
                .iter()
                .flat_map(|z| [z.re / (n as f64).sqrt(), z.im / (n as f64).sqrt()])
                .collect()
        })
        .collect();
    let d = coords[0].len();
    let k = coords.len() as f64;
    let mean: Vec<f64> = (0..d).map(|i| coords.iter().map(|u| u[i]).sum::<f64>() / k).collect();
    let target = 1.0 / ((n * n) as f64 * c);
    for i in 0..d {
        for j in 0..=i {
            let cov = coords.iter().map(|u| (u[i] - mean[i]) * (u[j] - mean[j])).sum::<f64>() / (k - 1.0);
            if i == j {
                assert!((cov - target).abs() < 0.1 * target, "var[{i}] = {cov} vs {target}");
            } else {
                assert!(cov.abs() < 0.1 * target, "cov[{i},{j}] = {cov}");
            }
        }
    }
}

#[test]
fn ensembles_are_deterministic_per_seed() {
    let pot = Potential::parse("0.5*tr(x1'*x1) + 0.1*tr(x1'*x1*x1'*x1)", 1.0, 1).unwrap();
    let a = sample_gibbs(&pot, 4, &opts(60, 14)).unwrap();
    let b = sample_gibbs(&pot, 4, &opts(60, 14)).unwrap();
    let c = sample_gibbs(&pot, 4, &opts(60, 15)).unwrap();
    let bytes = |e: &Ensemble| {
        let mut v = Vec::new();
        e.write(&mut v).unwrap();
        v
    };
    assert_eq!(bytes(&a), bytes(&b));
    assert_ne!(a.fingerprint(), c.fingerprint());
}

#[test]
fn fige_file_round_trip() {
    let e = gaussian(3, 2, 1.0, 20, 16);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.fige");
    e.save(&path).unwrap();
    let back = Ensemble::load(&path).unwrap();
    assert_eq!(back, e);
    assert_eq!(back.meta().potential_hash, Some(Potential::quadratic(2, 1.0).unwrap().hash()));
}

#[test]
fn unitary_conjugation_preserves_formula_statistics() {
    let e = gaussian(4, 2, 1.0, 40, 17);
    let u = sample_unitary(4, Seed::new(17, 1)).unwrap();
    let ue = e.conjugate_by(&u).unwrap();
    let eval = EvalOptions::default();
    let mean = |text: &str, ens: &Ensemble| {
        let f = parse(text).unwrap();
        ens.samples().iter().map(|x| evaluate(&f, x, &eval).unwrap()).sum::<f64>() / ens.len() as f64
    };
    for text in ["re tr(x1*x2*x1'*x2')", "tr(x1'*x1*x1'*x1)", "abs(re tr(x1*x2))"] {
        assert!((mean(text, &e) - mean(text, &ue)).abs() < 1e-10, "{text}");
    }
    let sup = "sup{y:1} re tr(y*x1)";
    assert!((mean(sup, &e) - mean(sup, &ue)).abs() < 1e-4);
}

#[test]
fn potential_gradients_match_finite_differences() {
    for (text, m) in [
        ("0.5*tr(x1'*x1) + 0.2*tr(x1'*x1*x1'*x1)", 1),
        ("0.5*(tr(x1'*x1) + tr(x2'*x2)) + 0.1*tr(x1'*x2*x2'*x1) + re tr((0.3+1i)*x1*x2)", 2),
        ("exp(0.1*tr(x1'*x1)) + 0.5*tr(x1'*x1)", 1),
    ] {
        let f = Potential::parse(text, 1.0, m).unwrap().scalar_fn();
        let pairs: Vec<(MatrixTuple, MatrixTuple)> = (0..10)
            .map(|k| {
                (
                    sample_ginibre(3, m, Seed::new(18, 2 * k)).unwrap(),
                    sample_ginibre(3, m, Seed::new(18, 2 * k + 1)).unwrap(),
                )
            })
            .collect();
        let err = check_gradient(&f, &pairs, 1e-5).unwrap();
        assert!(err < 1e-5, "{text}: {err}");
    }
}

#[test]
fn convexity_guard_refuses_bad_potentials() {
    let concave_quartic = Potential::parse("0.5*tr(x1'*x1) - 0.5*tr(x1'*x1*x1'*x1)", 0.5, 1).unwrap();
    assert!(matches!(sample_gibbs(&concave_quartic, 4, &opts(10, 19)), Err(Error::Domain(_))));
    let overclaimed = Potential::parse("0.5*tr(x1'*x1)", 3.0, 1).unwrap();
    assert!(matches!(sample_gibbs(&overclaimed, 4, &opts(10, 19)), Err(Error::Domain(_))));
}

#[test]
fn gradient_at_zero_examples() {
    let radii = [0.5, 1.0, 2.0, 5.0];
    let q = gradient_at_zero(&Potential::quadratic(2, 1.0).unwrap(), &radii).unwrap();
    assert!(q.gradient.iter().all(|z| z.norm() == 0.0));
    assert!(q.bounds.iter().all(|b| b.bound >= 0.0 && b.holds));

    let a = [C64::new(0.6, -0.8), C64::new(-1.5, 0.0)];
    let tilted = gradient_at_zero(&Potential::quadratic_with_tilt(2, 1.0, &a).unwrap(), &radii).unwrap();
    for (g, want) in tilted.gradient.iter().zip(&a) {
        assert!((g - want).norm() < 1e-12);
    }
    for b in &tilted.bounds {
        assert!(b.holds);
        assert!(a.iter().all(|z| z.norm() <= b.bound));
    }

    let trace = gradient_at_zero(&Potential::parse("0.5*tr(x1'*x1) + re tr(x1)", 1.0, 1).unwrap(), &radii).unwrap();
    assert!((trace.gradient[0] - C64::new(1.0, 0.0)).norm() < 1e-12);
    assert!(trace.bounds.iter().all(|b| b.holds));
}

#[test]
fn norm_tail_constant_is_moderate_and_stable() {
    let grid = default_tail_grid();
    let a = norm_tail_check(&gaussian(16, 1, 1.0, 500, 20), 1.0, &grid).unwrap();
    let b = norm_tail_check(&gaussian(16, 1, 1.0, 500, 21), 1.0, &grid).unwrap();
    assert!(a.theta <= 4.0 && b.theta <= 4.0, "{} {}", a.theta, b.theta);
    assert!((a.theta - b.theta).abs() <= 0.2 * a.theta.max(b.theta), "{} vs {}", a.theta, b.theta);
    for p in &a.points {
        assert!(p.frequency <= p.bound + 1e-12);
    }
    let far = norm_tail_check(&gaussian(16, 1, 1.0, 500, 20), 1.0, &[50.0]).unwrap();
    assert_eq!(far.points[0].frequency, 0.0);
}

#[test]
fn expectation_bound_examples() {
    let opts = AscentOptions::default();
    for (m, c) in [(1, 1.0), (2, 1.0), (1, 2.0)] {
        let pot = Potential::quadratic(m, c).unwrap();
        let e = sample_gibbs(&pot, 6, &self::opts(400, 22)).unwrap();
        let r = expectation_bound_check(&e, &pot, &opts).unwrap();
        // sup of (c/2)‖X‖² over unit operator-norm balls is c m / 2.
        assert!((r.c_sup - 0.5 * c * m as f64).abs() < 1e-8, "{}", r.c_sup);
        assert!((r.lhs - (2.0 * m as f64 / c).sqrt()).abs() < 0.05 * r.lhs);
        assert!(r.holds && r.sufficient);
    }
    let pot = Potential::quadratic(1, 1.0).unwrap();
    let single = Ensemble::new(vec![MatrixTuple::zeros(2, 1)], EnsembleMeta::default()).unwrap();
    let r = expectation_bound_check(&single, &pot, &opts).unwrap();
    assert!(!r.sufficient && !r.holds);
}

#[test]
fn herbst_concentration() {
    let e = gaussian(16, 1, 1.0, 500, 23);
    let eval = EvalOptions::default();
    let lin = herbst_check(&e, &parse("re tr(x1)").unwrap(), 1.0, Some(1.0), &eval).unwrap();
    assert!(lin.pass, "{:?}", lin.points);

    let konst = herbst_check(&e, &parse("re tr(2)").unwrap(), 1.0, Some(1.0), &eval).unwrap();
    assert!(konst.pass && konst.points.iter().all(|p| p.frequency == 0.0));

    // ‖X‖² has gradient 2X: no uniform Lipschitz bound, and at the Gibbs
    // scale its slope is about 2√2, so declaring L = 1 must be caught.
    let quad = herbst_check(&e, &parse("tr(x1'*x1)").unwrap(), 1.0, Some(1.0), &eval).unwrap();
    assert!(!quad.pass);

    let estimated = herbst_check(&e, &parse("re tr(x1)").unwrap(), 1.0, None, &eval).unwrap();
    assert!(estimated.lipschitz_estimated && estimated.lipschitz <= 1.0 + 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn samples_share_shape(n in 1usize..5, m in 1usize..3, seed in 0u64..1000) {
        let e = sample_gibbs(
            &Potential::quadratic(m, 1.0).unwrap(),
            n,
            &SamplerOptions { count: 6, chains: 2, pilot_steps: 40, seed: Seed::new(seed, 0), ..Default::default() },
        ).unwrap();
        prop_assert_eq!(e.len(), 6);
        prop_assert!(e.samples().iter().all(|x| x.n() == n && x.m() == m && x.is_finite()));
    }

    #[test]
    fn gradient_bound_holds_for_random_tilts(re in -3.0f64..3.0, im in -3.0f64..3.0, r in 0.1f64..10.0) {
        let pot = Potential::quadratic_with_tilt(1, 1.0, &[C64::new(re, im)]).unwrap();
        let g = gradient_at_zero(&pot, &[r]).unwrap();
        prop_assert!(g.bounds[0].holds);
    }
}
