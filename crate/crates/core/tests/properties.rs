use std::f64::consts::{LN_2, PI};

use approx::assert_relative_eq;
use num_complex::Complex64;
use proptest::prelude::*;

use paircat::dynamics::{evolve_analytic, evolve_by_area, pulse_area, CouplingProfile, JointState};
use paircat::fockspace::{
    apply_pair_annihilation, cat_normalization_closed_form, choose_truncation, pair_cat, pair_coherent,
    PairCatSpec,
};
use paircat::observables::{field_entropy, linear_entropy, reduced_atom, von_neumann_entropy, LogBase};
use paircat::specfun::bessel_i;

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 48,
        ..ProptestConfig::default()
    }
}

fn polar(r: f64, theta: f64) -> Complex64 {
    Complex64::from_polar(r, theta)
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn bessel_recurrence_holds(q in 1u32..15, x in 0.05f64..40.0) {
        let lhs = bessel_i(q - 1, x).unwrap() - bessel_i(q + 1, x).unwrap();
        let rhs = 2.0 * q as f64 / x * bessel_i(q, x).unwrap();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-11);
    }

    #[test]
    fn cat_is_normalized(r in 0.1f64..8.0, theta in 0.0f64..(2.0 * PI), q in 0u32..8, phi in 0.0f64..(2.0 * PI)) {
        let spec = PairCatSpec::new(polar(r, theta), q, phi, 1e-14).unwrap();
        let state = pair_cat(&spec).unwrap();
        prop_assert!((state.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_normalization_matches_sum(r in 0.2f64..6.0, q in 0u32..6, phi in 0.0f64..(2.0 * PI)) {
        let xi = Complex64::new(r, 0.0);
        // Skip the near-cancelling odd cats at small |xi|.
        let closed = cat_normalization_closed_form(xi, q, phi);
        prop_assume!(closed.as_ref().map(|n| *n < 1e3).unwrap_or(false));
        let n_max = choose_truncation(xi, q, 1e-16).unwrap().n_max;
        let plus = pair_coherent(xi, q, n_max);
        let minus = pair_coherent(-xi, q, n_max);
        let phase = Complex64::from_polar(1.0, phi);
        let raw: f64 = plus.coeffs.iter().zip(&minus.coeffs).map(|(a, b)| (a + phase * b).norm_sqr()).sum();
        assert_relative_eq!(closed.unwrap(), 1.0 / raw.sqrt(), max_relative = 1e-9);
    }

    #[test]
    fn cat_parity_is_set_by_phase(r in 0.3f64..5.0, q in 0u32..6) {
        // phi = 0 keeps even n, phi = pi keeps odd n.
        let even = pair_cat(&PairCatSpec::new(Complex64::new(r, 0.0), q, 0.0, 1e-14).unwrap()).unwrap();
        let odd = pair_cat(&PairCatSpec::new(Complex64::new(r, 0.0), q, PI, 1e-14).unwrap()).unwrap();
        for n in (1..even.coeffs.len()).step_by(2) {
            prop_assert!(even.coeffs[n].norm() < 1e-12);
        }
        for n in (0..odd.coeffs.len()).step_by(2) {
            prop_assert!(odd.coeffs[n].norm() < 1e-12);
        }
    }

    #[test]
    fn pair_coherent_is_eigenstate(r in 0.1f64..5.0, theta in 0.0f64..(2.0 * PI), q in 0u32..8) {
        let xi = polar(r, theta);
        let n_max = choose_truncation(xi, q, 1e-20).unwrap().n_max;
        let state = pair_coherent(xi, q, n_max);
        let residual = apply_pair_annihilation(&state).distance(&state.scaled(xi));
        prop_assert!(residual < 1e-8 * (1.0 + r));
    }

    #[test]
    fn propagation_is_unitary_and_composes(
        r in 0.5f64..6.0,
        q in 0u32..5,
        phi in 0.0f64..(2.0 * PI),
        a in -10.0f64..10.0,
        b in -10.0f64..10.0,
        ground in any::<bool>(),
    ) {
        let ladder = pair_cat(&PairCatSpec::new(Complex64::new(r, 0.0), q, phi, 1e-14).unwrap()).unwrap();
        let initial = if ground { JointState::ground(&ladder) } else { JointState::excited(&ladder) };
        let once = evolve_by_area(&initial, a + b);
        let twice = evolve_by_area(&evolve_by_area(&initial, a), b);
        prop_assert!((once.norm_sqr() - initial.norm_sqr()).abs() < 1e-12);
        prop_assert!(once.distance(&twice) < 1e-10);
        prop_assert!(evolve_by_area(&once, -(a + b)).distance(&initial) < 1e-10);
    }

    #[test]
    fn dynamics_depend_on_pulse_area_only(r in 0.5f64..4.0, varpi in 0.1f64..1.5, t in 0.0f64..8.0) {
        let ladder = pair_cat(&PairCatSpec::new(Complex64::new(r, 0.0), 1, PI / 2.0, 1e-14).unwrap()).unwrap();
        let initial = JointState::excited(&ladder);
        let shaped = CouplingProfile::Sinh { lambda: 1.0, varpi };
        let alpha = pulse_area(&shaped, t).unwrap();
        let constant = CouplingProfile::Constant { lambda: 1.0 };
        let via_shape = evolve_analytic(&initial, &shaped, t).unwrap();
        let via_constant = evolve_analytic(&initial, &constant, alpha).unwrap();
        prop_assert!(via_shape.distance(&via_constant) < 1e-12);
    }

    #[test]
    fn entropies_are_bounded_and_shared(r in 0.5f64..8.0, q in 0u32..5, alpha in 0.0f64..30.0) {
        let ladder = pair_cat(&PairCatSpec::new(Complex64::new(r, 0.0), q, PI / 2.0, 1e-14).unwrap()).unwrap();
        let state = evolve_by_area(&JointState::excited(&ladder), alpha);
        let rho = reduced_atom(&state);
        let s = von_neumann_entropy(&rho, LogBase::Natural);
        let s2 = linear_entropy(&rho, 2).unwrap();
        let s3 = linear_entropy(&rho, 3).unwrap();
        prop_assert!((-1e-12..=LN_2 + 1e-12).contains(&s));
        prop_assert!((-1e-12..=0.5 + 1e-12).contains(&s2));
        prop_assert!((-1e-12..=0.75 + 1e-12).contains(&s3));
        prop_assert!((s - field_entropy(&state)).abs() < 1e-10);
        assert_relative_eq!(von_neumann_entropy(&rho, LogBase::Two), s / LN_2, epsilon = 1e-14);
    }

    #[test]
    fn negative_charge_swaps_modes(r in 0.3f64..4.0, q in 1i64..6, phi in 0.0f64..(2.0 * PI)) {
        let xi = Complex64::new(r, 0.0);
        let reduced = PairCatSpec::with_signed_charge(xi, -q, phi, 1e-14).unwrap();
        prop_assert!(reduced.modes_swapped);
        let ladder = pair_cat(&reduced.spec).unwrap();
        // Brute force: coefficients of |n + |q|, n> from the definition with
        // (xi^m + e^{i phi} (-xi)^m) / sqrt(m! (m - |q|)!) on m = n + |q|.
        let shift = q as u64;
        let mut raw: Vec<f64> = Vec::new();
        for n in 0..ladder.coeffs.len() as u64 {
            let m = n + shift;
            let log_norm = (1..=m).map(|k| (k as f64).ln()).sum::<f64>() + (1..=n).map(|k| (k as f64).ln()).sum::<f64>();
            let plus = r.powi(m as i32);
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            let amp = (Complex64::new(plus, 0.0) + Complex64::from_polar(1.0, phi) * (sign * plus)) * (-0.5 * log_norm).exp();
            raw.push(amp.norm_sqr());
        }
        let total: f64 = raw.iter().sum();
        prop_assume!(total > 1e-20);
        for (w, c) in raw.iter().zip(&ladder.coeffs) {
            prop_assert!((w / total - c.norm_sqr()).abs() < 1e-10);
        }
    }
}

#[test]
fn trapezoid_converges_on_narrow_profile() {
    let profile = CouplingProfile::Sinh { lambda: 1.0, varpi: 0.5 };
    let exact = pulse_area(&profile, 6.0).unwrap();
    let mut previous = f64::INFINITY;
    for knots in [8usize, 16, 32, 64] {
        let piecewise = profile.restarted_piecewise(0.0, 6.0, knots).unwrap();
        let err = (pulse_area(&piecewise, 6.0).unwrap() - exact).abs();
        assert!(err < previous, "error {err} did not shrink at {knots} knots");
        previous = err;
    }
    assert!(previous < 1e-2);
}
