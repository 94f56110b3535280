use std::f64::consts::PI;

use proptest::prelude::*;

use fraclap::halflap::{apply_dx_i, apply_i, dx, eigenvalue, inverse_i, seminorm, Order};
use fraclap::mobility::{f_delta, f_delta_prime, EntropySpec};
use fraclap::spectral::cosine_basis;
use fraclap::stationary::{StationaryProblem, StepSolver};
use fraclap::{ModelParams, SpectralField, SpectralSpace};

/// (N, M, coefficients) with N ≤ M/2 and coefficients decaying like 1/(1+k).
fn band_limited() -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
    (1usize..=48, 0usize..=2).prop_flat_map(|(n, extra)| {
        let m = 2 * n + extra * n.max(1);
        (
            Just(n),
            Just(m),
            prop::collection::vec(-1.0f64..1.0, n).prop_map(|v| {
                v.into_iter()
                    .enumerate()
                    .map(|(k, c)| c / (1.0 + k as f64))
                    .collect()
            }),
        )
    })
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn transform_round_trip((n, m, c) in band_limited()) {
        let space = SpectralSpace::new(m, n).unwrap();
        let u = SpectralField::new(c).unwrap();
        let back = space.to_spectral(&space.to_nodal(&u).unwrap()).unwrap();
        for (a, b) in back.coeffs().iter().zip(u.coeffs()) {
            prop_assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn parseval((n, m, c) in band_limited()) {
        let space = SpectralSpace::new(m, n).unwrap();
        let u = SpectralField::new(c).unwrap();
        let nodal = space.to_nodal(&u).unwrap();
        let quad: f64 = nodal.values().iter().map(|v| v * v).sum::<f64>() / m as f64;
        let sum: f64 = u.coeffs().iter().map(|v| v * v).sum();
        prop_assert!(rel_close(quad, sum, 1e-12));
    }

    #[test]
    fn i_squared_is_minus_laplacian((_n, _m, c) in band_limited()) {
        let u = SpectralField::new(c).unwrap();
        let ii = apply_i(&apply_i(&u));
        for (k, (a, ck)) in ii.coeffs().iter().zip(u.coeffs()).enumerate() {
            let expect = eigenvalue(k) * ck;
            prop_assert!((a - expect).abs() <= 1e-12 * expect.abs().max(1.0));
        }
        prop_assert_eq!(apply_i(&u).coeffs()[0], 0.0);
    }

    #[test]
    fn inverse_undoes_apply((_n, _m, c) in band_limited()) {
        let u = SpectralField::new(c).unwrap();
        let v = inverse_i(&apply_i(&u)).unwrap();
        prop_assert_eq!(v.coeffs()[0], 0.0);
        for (a, b) in v.coeffs().iter().zip(u.coeffs()).skip(1) {
            prop_assert!((a + b).abs() <= 1e-12);
        }
    }

    #[test]
    fn inverse_rejects_any_visible_mean(mean in prop::sample::select(vec![-1.0, -1e-6, 1e-6, 0.5, 3.0])) {
        let g = SpectralField::new(vec![mean, 0.2, 0.1]).unwrap();
        prop_assert!(inverse_i(&g).is_err());
    }

    #[test]
    fn nodal_seminorm_contractions((n, m, c) in band_limited()) {
        let space = SpectralSpace::new(m, n).unwrap();
        let u = SpectralField::new(c).unwrap();
        let w = 1.0 / m as f64;
        let un = space.to_nodal(&u).unwrap();
        let iu = space.to_nodal(&apply_i(&u)).unwrap();
        let dxi = space.sine_to_nodal(&apply_dx_i(&u)).unwrap();
        let ux = space.sine_to_nodal(&dx(&u)).unwrap();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * w;

        prop_assert!(rel_close(-dot(iu.values(), un.values()), seminorm(&u, Order::Half), 1e-12));
        prop_assert!(rel_close(dot(iu.values(), iu.values()), seminorm(&u, Order::One), 1e-12));
        prop_assert!(rel_close(-dot(dxi.values(), ux.values()), seminorm(&u, Order::ThreeHalves), 1e-12));
        prop_assert!(rel_close(dot(dxi.values(), dxi.values()), seminorm(&u, Order::Two), 1e-12));
    }

    #[test]
    fn f_delta_is_dominated(s in 0.0f64..20.0, n in 1.0f64..1.999, delta in 1e-6f64..1.0) {
        let f = f_delta(s, n, delta).unwrap();
        let fp = f_delta_prime(s, n, delta).unwrap();
        prop_assert!(f >= 0.0);
        prop_assert!(f <= s.powf(n) * (1.0 + 1e-14));
        prop_assert!(fp <= (n + 2.0) * s.powf(n - 1.0) * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn entropy_is_nonnegative_and_normalized(s in 0.05f64..5.0, n in 1.0f64..4.0, eps in 1e-4f64..0.5) {
        for spec in [EntropySpec::power(n, eps), EntropySpec::power(n, 0.0)] {
            let g = spec.g(s).unwrap();
            prop_assert!(g >= -1e-14, "G({s}) = {g} for {spec:?}");
            prop_assert!(spec.g(1.0).unwrap().abs() < 1e-14);
            prop_assert!(spec.g_prime(1.0).unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn entropy_decreases_in_eps(s in 0.05f64..5.0, n in 1.0f64..4.0, e1 in 1e-4f64..0.1, factor in 1.5f64..10.0) {
        let lo = EntropySpec::power(n, e1).g(s).unwrap();
        let hi = EntropySpec::power(n, e1 * factor).g(s).unwrap();
        prop_assert!(lo >= hi - 1e-12);
    }

    #[test]
    fn midpoint_rule_is_exact_on_cosines(m in 2usize..40, k in 0usize..40, l in 0usize..40) {
        prop_assume!(k < m && l < m);
        let s: f64 = (0..m)
            .map(|j| {
                let x = (2 * j + 1) as f64 / (2 * m) as f64;
                cosine_basis(k, x) * cosine_basis(l, x)
            })
            .sum::<f64>() / m as f64;
        let expect = if k == l { 1.0 } else { 0.0 };
        prop_assert!((s - expect).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// One implicit step conserves mass and satisfies the discrete energy inequality.
    #[test]
    fn step_conserves_mass_and_dissipates(
        theta in 1.05f64..2.0,
        a1 in -0.5f64..0.5,
        a2 in -0.3f64..0.3,
        n in 1.0f64..4.0,
        tau in 1e-6f64..1e-4,
    ) {
        let params = ModelParams { n, tau, modes: 16, nodes: 32, ..Default::default() };
        let g = SpectralField::new(vec![theta, a1 / 2f64.sqrt(), a2 / 2f64.sqrt()]).unwrap().resized(16);
        let solver = StepSolver::for_params(&params).unwrap();
        let prob = StationaryProblem::new(g.clone(), &params).unwrap();
        let sol = solver.solve(&prob, &g).unwrap();
        prop_assert!((sol.u.mean() - g.mean()).abs() <= 1e-12 * (1.0 + g.mean().abs()));
        let lhs = seminorm(&sol.u, Order::Half) + 2.0 * tau * sol.dissipation;
        let tol = 10.0 * params.newton_tol * (1.0 + g.l2_norm().powi(2));
        prop_assert!(lhs <= seminorm(&g, Order::Half) + tol);
    }
}

#[test]
fn seminorm_of_single_mode() {
    let u = SpectralField::basis(3, 4);
    assert!((seminorm(&u, Order::ThreeHalves) - (3.0 * PI).powi(3)).abs() < 1e-9);
}
