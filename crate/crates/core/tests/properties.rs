use bvlab::map::{CircleMap, FourierDiffeo};
use bvlab::mobius::MobiusMap;
use bvlab::pa::{pa_compose, pa_var_sequence, rat, two_interval_map, PaMap};
use proptest::prelude::*;

fn fourier() -> impl Strategy<Value = FourierDiffeo> {
    (0.0..1.0f64, -0.02..0.02f64, -0.02..0.02f64, -0.01..0.01f64, -0.01..0.01f64)
        .prop_map(|(c, a1, b1, a2, b2)| FourierDiffeo::new(c, vec![(a1, b1), (a2, b2)]).unwrap())
}

fn mobius() -> impl Strategy<Value = MobiusMap> {
    (0.0..std::f64::consts::TAU, 0.5..2.0f64).prop_map(|(phi, k)| {
        MobiusMap::rotation_matrix(phi).compose(&MobiusMap::new([[k, 0.0], [0.0, 1.0 / k]]).unwrap())
    })
}

fn smooth_leaf() -> impl Strategy<Value = CircleMap> {
    prop_oneof![
        (0.0..1.0f64).prop_map(CircleMap::Rotation),
        fourier().prop_map(CircleMap::from),
        mobius().prop_map(CircleMap::from),
    ]
}

fn composite() -> impl Strategy<Value = CircleMap> {
    smooth_leaf().prop_recursive(3, 8, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(f, g)| CircleMap::compose(f, g)),
            inner.prop_map(CircleMap::inverse),
        ]
    })
}

/// Two-interval PA maps with small denominators.
fn pa_map() -> impl Strategy<Value = PaMap> {
    (1i64..8, 2i64..9, 1i64..4, 0i64..12).prop_filter_map("slope must stay below 1/b", |(bn, bd, s, v)| {
        if bn >= bd {
            return None;
        }
        let b = rat(bn, bd);
        let s0 = rat(s + 1, 2);
        if &s0 * &b >= rat(1, 1) {
            return None;
        }
        two_interval_map(s0, b, rat(v, 12)).ok()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chain_rule_matches_finite_differences(f in composite(), x in 0.0..1.0f64) {
        let h = 1e-6;
        let num = (f.lift(x + h).unwrap() - f.lift(x - h).unwrap()) / (2.0 * h);
        let d = f.deriv(x).unwrap();
        prop_assert!((num - d).abs() <= 1e-5 * d, "fd {num} vs {d}");
    }

    #[test]
    fn inverse_round_trip(f in composite(), x in 0.0..1.0f64) {
        let y = f.lift(x).unwrap();
        let back = CircleMap::inverse(f.clone()).lift(y).unwrap();
        prop_assert!((back - x).abs() <= 1e-10);
    }

    #[test]
    fn orbit_accumulates_log_derivatives(f in composite(), x in 0.0..1.0f64, n in 1usize..1000) {
        let orbit = f.orbit(x, n).unwrap();
        // compared in log space: hyperbolic leaves drive Dfⁿ below f64 range
        let mut log_product = 0.0;
        let mut scale = 1.0;
        for k in 0..n {
            let l = f.deriv(orbit.points[k]).unwrap().ln();
            log_product += l;
            scale += l.abs();
        }
        let acc = orbit.log_deriv[n];
        prop_assert!((acc - log_product).abs() <= 1e-12 * scale, "{acc} vs {log_product}");
    }

    #[test]
    fn rotation_number_survives_conjugation(h in fourier(), rho in 0.0..1.0f64, n in 10usize..400) {
        let h = CircleMap::from(h);
        let g = CircleMap::conjugate(&h, &CircleMap::Rotation(rho));
        let (est, bound) = g.rotation_number(n).unwrap();
        prop_assert!((est - rho).abs() <= bound, "{est} vs {rho}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pa_composition_is_associative(f in pa_map(), g in pa_map(), h in pa_map()) {
        let left = pa_compose(&pa_compose(&f, &g), &h);
        let right = pa_compose(&f, &pa_compose(&g, &h));
        prop_assert_eq!(left, right);
    }

    #[test]
    fn pa_records_round_trip(f in pa_map(), g in pa_map()) {
        let fg = pa_compose(&f, &g);
        prop_assert_eq!(PaMap::from_records(&fg.to_records()).unwrap(), fg);
    }

    #[test]
    fn exact_variation_is_subadditive(f in pa_map()) {
        let s = pa_var_sequence(&f, 60, 1 << 16).unwrap();
        let v = &s.var_values;
        for m in 1..60 {
            for n in 1..=60 - m {
                prop_assert!(v[m + n - 1] <= v[m - 1] + v[n - 1] + 1e-9);
            }
        }
    }
}
