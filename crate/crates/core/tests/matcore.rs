use freegeo::matcore::*;
use proptest::prelude::*;
use rand::Rng;

fn arb_tuple(n: usize, m: usize) -> impl Strategy<Value = MatrixTuple> {
    prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), n * n * m).prop_map(move |v| {
        let mats = v
            .chunks(n * n)
            .map(|c| {
                CMatrix::from_row_major(n, c.iter().map(|&(a, b)| C64::new(a, b)).collect())
                    .unwrap()
            })
            .collect();
        MatrixTuple::new(mats).unwrap()
    })
}

fn power_iteration_norm(a: &CMatrix) -> f64 {
    // largest eigenvalue of a^* a by power iteration from a fixed vector
    let n = a.n();
    let aa = a.adjoint().matmul(a);
    let mut v: Vec<C64> = (0..n).map(|i| C64::new(1.0 + i as f64 * 0.1, 0.3)).collect();
    let mut lambda = 0.0;
    for _ in 0..5000 {
        let w: Vec<C64> = (0..n)
            .map(|i| (0..n).map(|j| aa.get(i, j) * v[j]).sum())
            .collect();
        let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        lambda = norm;
        v = w.iter().map(|z| z / norm).collect();
    }
    lambda.sqrt()
}

#[test]
fn inner_product_matches_entrywise_sum() {
    let x = sample_ginibre(2, 1, Seed::new(3, 0)).unwrap();
    let y = sample_ginibre(2, 1, Seed::new(3, 1)).unwrap();
    let mut direct = C64::new(0.0, 0.0);
    for (a, b) in x.get(0).data().iter().zip(y.get(0).data()) {
        direct += a.conj() * b;
    }
    direct *= 0.5;
    let v = trace_inner_product(&x, &y).unwrap();
    assert!((v - direct).norm() < 1e-14);
}

#[test]
fn operator_norm_matches_power_iteration() {
    for s in 0..5 {
        let x = sample_ginibre(3, 1, Seed::new(11, s)).unwrap();
        let oracle = power_iteration_norm(x.get(0));
        assert!((operator_norm(&x) - oracle).abs() < 1e-10, "seed {s}");
    }
}

#[test]
fn sa_embedding_preserves_norm() {
    let x = sample_ginibre(6, 3, Seed::new(5, 0)).unwrap();
    let e = sa_embedding(&x);
    assert_eq!(e.m(), 6);
    assert!(e.mats().iter().all(|a| a.is_hermitian(1e-15)));
    assert!((e.norm() - x.norm()).abs() < 1e-12);
}

#[test]
fn ginibre_second_moment() {
    let n = 50;
    let mean: f64 = (0..200)
        .map(|s| sample_ginibre(n, 1, Seed::new(17, s)).unwrap().norm_sq())
        .sum::<f64>()
        / 200.0;
    assert!((mean - 1.0).abs() < 0.05, "mean {mean}");
}

#[test]
fn ginibre_sample_mean_is_small() {
    let n = 8;
    let draws = 500;
    let mut acc = CMatrix::zeros(n);
    for s in 0..draws {
        acc.axpy(C64::new(1.0, 0.0), sample_ginibre(n, 1, Seed::new(23, s)).unwrap().get(0));
    }
    let bound = 4.0 / ((draws * n as u64) as f64).sqrt();
    let worst = acc.scale_re(1.0 / draws as f64).max_abs_entry();
    assert!(worst <= bound, "max |mean| {worst} vs {bound}");
}

#[test]
fn gue_second_spectral_moment() {
    let n = 100;
    let mean: f64 = (0..100)
        .map(|s| {
            let ev = sample_gue(n, Seed::new(29, s)).unwrap().hermitian_eigenvalues();
            ev.iter().map(|l| l * l).sum::<f64>() / n as f64
        })
        .sum::<f64>()
        / 100.0;
    assert!((mean - 1.0).abs() < 0.03, "mean {mean}");
}

fn semicircle_cdf_by_quadrature(x: f64) -> f64 {
    if x <= -2.0 {
        return 0.0;
    }
    if x >= 2.0 {
        return 1.0;
    }
    // composite Simpson on the density sqrt(4 - s^2) / (2π)
    let steps = 4000;
    let h = (x + 2.0) / steps as f64;
    let f = |s: f64| (4.0 - s * s).max(0.0).sqrt() / (2.0 * std::f64::consts::PI);
    let mut acc = f(-2.0) + f(x);
    for k in 1..steps {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(-2.0 + k as f64 * h);
    }
    acc * h / 3.0
}

#[test]
fn gue_spectrum_close_to_semicircle() {
    let n = 400;
    let ev = sample_gue(n, Seed::new(31, 0)).unwrap().hermitian_eigenvalues();
    let mut ks: f64 = 0.0;
    for (i, &l) in ev.iter().enumerate() {
        let f = semicircle_cdf_by_quadrature(l);
        ks = ks.max((f - i as f64 / n as f64).abs()).max((f - (i + 1) as f64 / n as f64).abs());
    }
    assert!(ks <= 0.05, "Kolmogorov distance {ks}");
}

#[test]
fn tensor_embedding_preserves_norm() {
    let a = sample_ginibre(4, 1, Seed::new(2, 0)).unwrap().get(0).clone();
    let (x, _) = tensor_embed(&a, &CMatrix::identity(3)).unwrap();
    assert!((x.operator_norm() - power_iteration_norm(&a)).abs() < 1e-10);
}

#[test]
fn cauchy_schwarz_on_random_pairs() {
    let mut rng = Seed::new(37, 0).rng();
    for _ in 0..1000 {
        let n = rng.random_range(1..5);
        let m = rng.random_range(1..4);
        let x = standard_gaussian_tuple(n, m, &mut rng);
        let y = standard_gaussian_tuple(n, m, &mut rng);
        let ip = trace_inner_product(&x, &y).unwrap().norm();
        assert!(ip <= x.norm() * y.norm() * (1.0 + 1e-12));
    }
}

proptest! {
    #[test]
    fn inner_product_is_linear_in_second_argument(
        x in arb_tuple(3, 2), y in arb_tuple(3, 2), z in arb_tuple(3, 2),
        ar in -3.0f64..3.0, ai in -3.0f64..3.0,
    ) {
        let a = C64::new(ar, ai);
        let ay_plus_z = MatrixTuple::new(
            y.mats().iter().zip(z.mats()).map(|(p, q)| {
                let mut r = q.clone();
                r.axpy(a, p);
                r
            }).collect()
        ).unwrap();
        let lhs = trace_inner_product(&x, &ay_plus_z).unwrap();
        let rhs = a * trace_inner_product(&x, &y).unwrap() + trace_inner_product(&x, &z).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-12 * (1.0 + lhs.norm()));
    }

    #[test]
    fn inner_product_is_conjugate_symmetric(x in arb_tuple(2, 3), y in arb_tuple(2, 3)) {
        let a = trace_inner_product(&x, &y).unwrap();
        let b = trace_inner_product(&y, &x).unwrap();
        prop_assert!((a - b.conj()).norm() < 1e-12);
        let xx = trace_inner_product(&x, &x).unwrap();
        prop_assert!(xx.im.abs() < 1e-12 && xx.re >= 0.0);
    }

    #[test]
    fn frobenius_norm_dominated_by_operator_norm(x in arb_tuple(3, 3)) {
        let m = x.m() as f64;
        prop_assert!(x.norm() <= m.sqrt() * operator_norm(&x) * (1.0 + 1e-12) + 1e-14);
    }

    #[test]
    fn sa_embedding_round_trips(x in arb_tuple(4, 2)) {
        let back = MatrixTuple::from_sa_embedding(&sa_embedding(&x)).unwrap();
        prop_assert!(back.sub(&x).mats().iter().all(|a| a.max_abs_entry() <= 1e-12));
        prop_assert!((sa_embedding(&x).norm() - x.norm()).abs() < 1e-12);
    }
}
