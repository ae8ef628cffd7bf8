use bolax_core::field::{algebra_constant, analytic_norm, inner_l2, make_field, random_analytic_field, Field, LatticeSpec, PositiveField};
use bolax_core::lax::{beta, gauge_m, lax_matrix, resolvent_apply, Resolvent, ResolventMethod};
use bolax_core::spectral::{beta_via_measure, spectral_data};
use bolax_core::Error;
use num_complex::Complex64;
use proptest::prelude::*;

const RHO: f64 = 0.5;

fn field(seed: u64, n: usize, amp: f64) -> Field {
    random_analytic_field(seed, &LatticeSpec::new(n, RHO, 1.0).unwrap(), amp, 0.1).unwrap()
}

fn two_cos(n: usize) -> Field {
    make_field(&[(1, Complex64::new(1.0, 0.0))], &LatticeSpec::new(n, RHO, 1.0).unwrap(), true).unwrap()
}

/// Number of eigenvalues below `x` of the symmetric tridiagonal matrix with diagonal
/// `d` and constant off-diagonal `e`, by the Sturm sequence of leading minors.
fn sturm_count(d: &[f64], e: f64, x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0f64;
    for (i, di) in d.iter().enumerate() {
        let prev = if i == 0 { 0.0 } else { e * e / q };
        q = di - x - prev;
        if q == 0.0 {
            q = -f64::EPSILON;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn sturm_eigenvalue(d: &[f64], e: f64, k: usize) -> f64 {
    let (mut lo, mut hi) = (-10.0 - 2.0 * e.abs(), 2.0 * d.len() as f64 + 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sturm_count(d, e, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn eigenvalues_of_two_cos_match_sturm_bisection() {
    let n = 16;
    let data = spectral_data(&two_cos(n), n).unwrap();
    let d: Vec<f64> = (1..=n).map(|j| 2.0 * j as f64).collect();
    for k in 0..n {
        let oracle = sturm_eigenvalue(&d, 1.0, k);
        assert!((data.eigenvalues[k] - oracle).abs() < 1e-10, "k = {k}: {} vs {oracle}", data.eigenvalues[k]);
    }
}

#[test]
fn lax_matrix_is_hermitian_toeplitz_plus_diagonal() {
    let u = field(3, 12, 1.0);
    let l = lax_matrix(&u, 12).unwrap();
    assert_eq!(l.hermitian_defect(), 0.0);
    let t = l.toeplitz();
    for j in 0..12 {
        for k in 0..12 {
            assert_eq!(t[(j, k)], u.coeff(j as i64 - k as i64));
        }
    }
}

#[test]
fn resolvent_is_hermitian() {
    let u = field(5, 10, 1.0);
    let lax = lax_matrix(&u, 10).unwrap();
    let r = Resolvent::new(&lax, 7.5).unwrap();
    let cols: Vec<PositiveField> = (0..10)
        .map(|k| {
            let mut e = vec![Complex64::new(0.0, 0.0); 10];
            e[k] = Complex64::new(1.0, 0.0);
            r.solve(&PositiveField::from_vec(e)).unwrap()
        })
        .collect();
    for j in 0..10 {
        for k in 0..10 {
            let rjk = cols[k].coeff(j as i64 + 1);
            let rkj = cols[j].coeff(k as i64 + 1);
            assert!((rjk - rkj.conj()).norm() < 1e-15);
        }
    }
}

#[test]
fn free_resolvent_is_diagonal_and_bounded() {
    let zero = Field::zeros(8);
    let f = field(1, 8, 1.0).positive_part();
    for kappa in [0.5, 3.0, 40.0] {
        let r = resolvent_apply(&zero, kappa, &f, ResolventMethod::Direct).unwrap();
        for n in 1..=8i64 {
            let expect = f.coeff(n) / (2.0 * n as f64 + kappa);
            assert!((r.coeff(n) - expect).norm() < 1e-16);
        }
        // every weight 1 / (2n + kappa) is at most 1 / (2 + kappa)
        let ratio = analytic_norm(&r, RHO, 1.0).unwrap() / analytic_norm(&f, RHO, 1.0).unwrap();
        assert!(ratio <= 1.0 / (2.0 + kappa));
    }
}

#[test]
fn neumann_refuses_non_contractive_kappa() {
    let u = field(2, 8, 3.0);
    let small = 0.5 * algebra_constant(1.0).unwrap() * analytic_norm(&u, RHO, 1.0).unwrap();
    let err = resolvent_apply(&u, small, &u.positive_part(), ResolventMethod::neumann(1e-12, RHO, 1.0)).unwrap_err();
    assert!(matches!(err, Error::NotContractive { .. }), "{err:?}");
}

#[test]
fn beta_below_zero_and_at_the_pole() {
    let u = field(8, 16, 0.8);
    let data = spectral_data(&u, 16).unwrap();
    let nu0 = data.eigenvalues[0];
    assert!(nu0 > 0.0);
    for lambda in [-0.9 * nu0, -0.5 * nu0, 0.0, 0.3] {
        let a = beta(&u, lambda, ResolventMethod::Direct).unwrap();
        let b = beta_via_measure(&data, lambda).unwrap();
        assert!((a - b).abs() < 1e-12 * a.abs().max(1.0), "lambda {lambda}: {a} vs {b}");
    }
    let hit = beta(&u, -nu0 - 0.1, ResolventMethod::Direct).unwrap_err();
    match hit {
        Error::PoleHit { nu_min, .. } => assert!((nu_min - nu0).abs() < 1e-9),
        other => panic!("expected PoleHit, got {other:?}"),
    }
    assert!(matches!(beta_via_measure(&data, -nu0 - 0.1), Err(Error::PoleHit { .. })));
    assert!(beta(&u, -0.1, ResolventMethod::neumann(1e-12, RHO, 1.0)).is_err());
}

#[test]
fn beta_is_decreasing_and_vanishes_at_infinity() {
    let u = field(12, 16, 0.8);
    let mut prev = f64::INFINITY;
    for lambda in [0.5, 1.0, 5.0, 50.0, 500.0] {
        let b = beta(&u, lambda, ResolventMethod::Direct).unwrap();
        assert!(b > 0.0 && b < prev);
        prev = b;
    }
    // lambda beta(lambda) -> |u_+|^2
    let big = 1e8;
    let mass = inner_l2(&u.positive_part(), &u.positive_part()).unwrap().re;
    let b = beta(&u, big, ResolventMethod::Direct).unwrap();
    assert!((big * b - mass).abs() < 1e-6 * mass);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn neumann_agrees_with_direct(seed in any::<u64>(), amp in 0.05f64..1.5, factor in 2.05f64..6.0) {
        let u = field(seed, 24, amp);
        let kappa = factor * algebra_constant(1.0).unwrap() * analytic_norm(&u, RHO, 1.0).unwrap();
        let f = field(seed.wrapping_add(1), 24, 1.0).positive_part();
        let d = resolvent_apply(&u, kappa, &f, ResolventMethod::Direct).unwrap();
        let m = resolvent_apply(&u, kappa, &f, ResolventMethod::neumann(1e-14, RHO, 1.0)).unwrap();
        prop_assert!(d.add_scaled((-1.0).into(), &m).max_modulus() < 1e-10);
    }

    #[test]
    fn gauge_solves_its_defining_equation(seed in any::<u64>(), kappa in 5.0f64..500.0) {
        let u = field(seed, 16, 0.5);
        let m = gauge_m(&u, kappa, ResolventMethod::Direct).unwrap();
        let lax = lax_matrix(&u, 16).unwrap();
        let lm = lax.apply(&m);
        let residual = lm.add_scaled(kappa.into(), &m).add_scaled((-1.0).into(), &u.positive_part());
        prop_assert!(residual.max_modulus() < 1e-13);
    }

    #[test]
    fn beta_is_real_and_matches_the_measure(seed in any::<u64>(), shift in 0.1f64..100.0) {
        let u = field(seed, 16, 0.8);
        let data = spectral_data(&u, 16).unwrap();
        let lambda = -data.eigenvalues[0] + shift;
        let a = beta(&u, lambda, ResolventMethod::Direct).unwrap();
        let b = beta_via_measure(&data, lambda).unwrap();
        prop_assert!((a - b).abs() < 1e-10);
    }
}
