use bolax_core::field::{analytic_norm, make_field, random_analytic_field, LatticeSpec};
use bolax_core::flows::standard_state;
use bolax_core::spectral::{
    bounding_f, bounding_f_prime, energy_density, exp_energy, exp_energy_checked, geometric_constants,
    measure_mass, spectral_data, stable_root, transcendental_bounds_report,
};
use bolax_core::Error;
use num_complex::Complex64;
use proptest::prelude::*;

#[test]
fn bounding_function_rises_then_falls_once() {
    let g = geometric_constants(1e-12).unwrap();
    let zero = g.zero_crossing();
    let points = 10_000;
    let xs: Vec<f64> = (0..=points).map(|i| zero * i as f64 / points as f64).collect();
    let fs: Vec<f64> = xs.iter().map(|&x| bounding_f(x, &g)).collect();
    let peak = fs.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
    assert!(fs[..=peak].windows(2).all(|w| w[1] >= w[0]));
    assert!(fs[peak..].windows(2).all(|w| w[1] <= w[0]));
    assert!((xs[peak] - g.x_max).abs() <= zero / points as f64);
    let sign_changes = xs
        .windows(2)
        .filter(|w| bounding_f_prime(w[0], &g).signum() != bounding_f_prime(w[1], &g).signum())
        .count();
    assert_eq!(sign_changes, 1);
    assert!((bounding_f(g.x_max, &g) - g.a_max).abs() < 1e-14);
    assert!(bounding_f(zero, &g).abs() < 1e-12);
    assert!(bounding_f_prime(g.x_max, &g).abs() < 1e-9);
}

#[test]
fn stable_root_inverts_f_on_the_rising_branch() {
    let g = geometric_constants(1e-12).unwrap();
    for a in [0.0, 0.01, 0.07, 0.14] {
        let x = stable_root(a, &g).unwrap();
        assert!(x >= 0.0 && x <= g.x_max);
        assert!((bounding_f(x, &g) - a).abs() < 1e-10);
    }
    assert!(matches!(stable_root(g.a_max * 1.01, &g), Err(Error::NoTrapping { .. })));
}

#[test]
fn transcendental_bounds_hold_on_small_random_fields() {
    let g = geometric_constants(1e-12).unwrap();
    let spec = LatticeSpec::new(24, 0.5, 1.0).unwrap();
    let mut checked = 0;
    for seed in 0..100 {
        let u = random_analytic_field(seed, &spec, 0.05 + 0.003 * seed as f64, 0.1).unwrap();
        let b = transcendental_bounds_report(&u, 0.5, &g).unwrap();
        assert!(b.lower_ok && b.upper_ok, "seed {seed}: {b:?}");
        checked += 1;
    }
    assert_eq!(checked, 100);
}

#[test]
fn small_cosine_sits_at_the_limiting_slack_ratios() {
    // u = 2a cos x has E^{1/2} = |u_+|_{rho,1} to leading order, while the bounds
    // tend to x / sqrt 2 and sqrt 2 x
    let g = geometric_constants(1e-12).unwrap();
    let mut prev = (0.0, 0.0);
    for (i, a) in [1e-5, 1e-3, 1e-2, 3e-2].into_iter().enumerate() {
        let u = make_field(&[(1, Complex64::new(a, 0.0))], &LatticeSpec::new(16, 0.5, 1.0).unwrap(), true).unwrap();
        let b = transcendental_bounds_report(&u, 0.5, &g).unwrap();
        assert!(b.lower_ok && b.upper_ok);
        let rel = (b.slack.0 / b.energy_sqrt, b.slack.1 / b.energy_sqrt);
        if i == 0 {
            assert!((rel.0 - (1.0 - std::f64::consts::FRAC_1_SQRT_2)).abs() < 1e-3, "{rel:?}");
            assert!((rel.1 - (std::f64::consts::SQRT_2 - 1.0)).abs() < 1e-3, "{rel:?}");
        } else {
            // both relative slacks widen with the amplitude
            assert!(rel.0 > prev.0 && rel.1 > prev.1, "{rel:?} after {prev:?}");
        }
        prev = rel;
    }
}

#[test]
fn exp_energy_of_a_single_mode_is_explicit_at_leading_order() {
    // u = 2a cos x with a small: mu ~ a^2 delta_2, so E ~ a^2 e^{2 rho} (1 + 1)
    let a = 1e-4;
    let rho = 0.5;
    let u = make_field(&[(1, Complex64::new(a, 0.0))], &LatticeSpec::new(16, rho, 1.0).unwrap(), true).unwrap();
    let e = exp_energy(&u, rho, 16).unwrap();
    let lead = a * a * energy_density(rho, 2.0);
    assert!((e - lead).abs() < 1e-3 * lead);
    assert!((energy_density(rho, 2.0) - 2.0 * (2.0 * rho).exp()).abs() < 1e-14);
}

#[test]
fn exp_energy_self_converges() {
    let u = standard_state(32, 0.5).unwrap();
    let e = exp_energy_checked(&u, 0.5, 32).unwrap();
    assert!(e.self_convergence < 1e-8);
    assert!(e.value > 0.0);
}

#[test]
fn exponent_cap_is_enforced() {
    let u = standard_state(8, 0.5).unwrap();
    assert!(matches!(exp_energy(&u, 200.0, 8), Err(Error::ExponentCap { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn measure_is_a_positive_splitting_of_the_mass(seed in any::<u64>(), amp in 0.05f64..2.0) {
        let u = random_analytic_field(seed, &LatticeSpec::new(16, 0.5, 1.0).unwrap(), amp, 0.1).unwrap();
        let data = spectral_data(&u, 16).unwrap();
        prop_assert!(data.weights.iter().all(|w| *w >= 0.0));
        let total: f64 = data.weights.iter().sum();
        prop_assert!((total - measure_mass(&u)).abs() < 1e-12 * total.max(1e-300));
        prop_assert!(data.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn energy_controls_the_positive_norm_for_small_data(seed in any::<u64>(), amp in 0.01f64..0.2) {
        let g = geometric_constants(1e-12).unwrap();
        let u = random_analytic_field(seed, &LatticeSpec::new(20, 0.5, 1.0).unwrap(), amp, 0.1).unwrap();
        let b = transcendental_bounds_report(&u, 0.5, &g).unwrap();
        prop_assert!(b.lower_ok && b.upper_ok);
        let norm = analytic_norm(&u.positive_part(), 0.5, 1.0).unwrap();
        prop_assert!((b.norm_plus - norm).abs() < 1e-15);
    }
}
