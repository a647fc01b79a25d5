use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use ssp_mdrk::tableau::{
    builtin_methods, check_order_conditions, lookup_builtin, obstruction_k, parse_tableau_toml, tableau_to_toml,
    ButcherTableau, MethodKind, ShuOsherTableau,
};

/// Random strictly lower-triangular nonnegative `P`, `W` whose row sums stay
/// at most one, with the matching `Re`.
fn imex_tableau(s: usize, seed: Vec<f64>, d: Vec<f64>, ddot: Vec<f64>, r: f64) -> ShuOsherTableau {
    let mut p = DMatrix::zeros(s, s);
    let mut w = DMatrix::zeros(s, s);
    let mut it = seed.into_iter();
    for i in 1..s {
        for j in 0..i {
            p[(i, j)] = it.next().unwrap() / (2 * i) as f64;
            w[(i, j)] = it.next().unwrap() / (2 * i) as f64;
        }
    }
    let re = DVector::from_fn(s, |i, _| 1.0 - p.row(i).sum() - w.row(i).sum());
    ShuOsherTableau::new(
        "random",
        MethodKind::ImexMultiDerivative,
        p,
        w,
        DVector::from_vec(d),
        DVector::from_vec(ddot),
        r,
        re,
    )
    .unwrap()
}

fn tableau_strategy() -> impl Strategy<Value = ShuOsherTableau> {
    (1usize..=6).prop_flat_map(|s| {
        (
            prop::collection::vec(0.0..1.0f64, s * (s - 1)),
            prop::collection::vec(0.0..2.0f64, s),
            prop::collection::vec(-1.0..0.0f64, s),
            0.2..3.0f64,
        )
            .prop_map(move |(seed, d, ddot, r)| imex_tableau(s, seed, d, ddot, r))
    })
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

proptest! {
    #[test]
    fn butcher_conversion_satisfies_defining_identities(t in tableau_strategy()) {
        let bt = t.to_butcher();
        let rm = t.r_matrix();
        let s = t.stages();
        prop_assert!(max_abs(&(&rm * bt.a() - DMatrix::from_diagonal(t.d()))) < 1e-13);
        prop_assert!(max_abs(&(&rm * bt.adot() - DMatrix::from_diagonal(t.ddot()))) < 1e-13);
        prop_assert!(max_abs(&(&rm * bt.ahat() * t.r() - t.w())) < 1e-13);
        prop_assert_eq!(bt.b().clone(), bt.a().row(s - 1).transpose());
        for i in 0..s {
            prop_assert!((bt.c()[i] - bt.a().row(i).sum()).abs() < 1e-15);
            for j in i + 1..s {
                prop_assert_eq!(bt.a()[(i, j)], 0.0);
            }
            for j in i..s {
                prop_assert_eq!(bt.ahat()[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn stored_re_matches_row_sums(t in tableau_strategy()) {
        for i in 0..t.stages() {
            let sum = t.p().row(i).sum() + t.w().row(i).sum();
            prop_assert!((t.re()[i] - (1.0 - sum)).abs() <= 1e-12);
        }
    }

    #[test]
    fn nonnegative_tableaus_pass_sign_check(t in tableau_strategy()) {
        let rep = t.validate_ssp_signs();
        prop_assert!(rep.passes, "{:?}", rep.violations);
    }

    #[test]
    fn flipping_one_ddot_is_detected(t in tableau_strategy(), pick in 0usize..6, mag in 1e-6..1.0f64) {
        let i = pick % t.stages();
        let mut ddot = t.ddot().clone();
        ddot[i] = mag;
        let flipped = ShuOsherTableau::new(
            "flip", t.kind(), t.p().clone(), t.w().clone(), t.d().clone(), ddot, t.r(), t.re().clone(),
        ).unwrap();
        let rep = flipped.validate_ssp_signs();
        prop_assert!(!rep.passes);
        prop_assert!(rep.violations.iter().any(|v| v.matrix == "Ddot" && v.row == i + 1 && v.col == i + 1));
    }

    #[test]
    fn toml_round_trip_is_exact(t in tableau_strategy()) {
        let back = parse_tableau_toml(&tableau_to_toml(&t)).unwrap();
        prop_assert_eq!(back.p(), t.p());
        prop_assert_eq!(back.w(), t.w());
        prop_assert_eq!(back.d(), t.d());
        prop_assert_eq!(back.ddot(), t.ddot());
        prop_assert_eq!(back.re(), t.re());
        prop_assert_eq!(back.r(), t.r());
    }

    #[test]
    fn nonnegative_implicit_methods_respect_obstruction(
        s in 1usize..=6,
        seed in prop::collection::vec(0.0..1.0f64, 36),
        d in prop::collection::vec(0.0..2.0f64, 6),
        ddot in prop::collection::vec(-1.0..1.0f64, 6),
    ) {
        let mut p = DMatrix::zeros(s, s);
        for i in 1..s {
            for j in 0..i {
                p[(i, j)] = seed[i * 6 + j] / i as f64;
            }
        }
        let t = ShuOsherTableau::implicit(
            "obs",
            p,
            DVector::from_column_slice(&d[..s]),
            DVector::from_column_slice(&ddot[..s]),
        ).unwrap();
        let bound = t.obstruction_bound().unwrap();
        prop_assert!(bound.bte_minus_btc <= bound.ks + 1e-12, "{bound:?}");
        prop_assert!(bound.ks < 0.5);
    }
}

#[test]
fn positive_ddot_entry_is_named() {
    let t = ShuOsherTableau::implicit(
        "bad",
        DMatrix::zeros(1, 1),
        DVector::from_vec(vec![1.0]),
        DVector::from_vec(vec![0.1]),
    )
    .unwrap();
    let rep = t.validate_ssp_signs();
    assert!(!rep.passes);
    assert_eq!(rep.violations.len(), 1);
    let v = &rep.violations[0];
    assert_eq!((v.matrix, v.row, v.col, v.value), ("Ddot", 1, 1, 0.1));
}

#[test]
fn implicit_taylor_meets_second_order_exactly() {
    let bt = lookup_builtin("implicit-taylor-2").unwrap().method.butcher();
    let rep = check_order_conditions(&bt, 2).unwrap();
    assert_eq!(rep.max_abs_residual, 0.0);
}

#[test]
fn backward_euler_misses_second_order_by_half() {
    let bt = ButcherTableau::new(
        "be",
        MethodKind::ImplicitTwoDerivative,
        DMatrix::zeros(1, 1),
        DMatrix::from_element(1, 1, 1.0),
        DMatrix::zeros(1, 1),
    )
    .unwrap();
    let rep = check_order_conditions(&bt, 2).unwrap();
    assert_eq!(rep.residual("b'c + ḃ'e = 1/2"), Some(0.5));
    assert_eq!(rep.residual("b'e = 1"), Some(0.0));
}

#[test]
fn builtin_lookup_returns_transcribed_coefficients() {
    // Vector indices are zero-based here; entry k is stage k + 1.
    let imex3 = lookup_builtin("ssp-imex-mdrk-3").unwrap().method;
    let t = imex3.shu_osher().unwrap();
    assert_eq!(t.r(), 0.904402174130635);
    assert_eq!(t.d()[1], 2.0);
    assert_eq!(t.ddot()[0], -0.871358934880525);
    let imdrk4 = lookup_builtin("ssp-imdrk-4").unwrap().method;
    assert_eq!(imdrk4.shu_osher().unwrap().d()[0], 0.660949255604937);
    assert!(lookup_builtin("no-such-method").is_none());
}

#[test]
fn every_imex_stage_has_an_implicit_term() {
    for m in builtin_methods() {
        if m.method.kind() == MethodKind::ImexMultiDerivative {
            let t = m.method.shu_osher().unwrap();
            assert!(t.every_stage_implicit(), "{}", m.name);
            for i in 0..t.stages() {
                assert!(t.d()[i] + t.ddot()[i].abs() > 0.0);
            }
        }
    }
}

#[test]
fn obstruction_recursion_examples() {
    assert_eq!(obstruction_k(1), 0.25);
    assert!((obstruction_k(2) - 1.0 / 3.0).abs() < 1e-15);
    assert!((obstruction_k(3) - 0.375).abs() < 1e-15);
    // One-stage method with d = 1 has b'e - b'c = 0.
    let t = ShuOsherTableau::implicit(
        "one",
        DMatrix::zeros(1, 1),
        DVector::from_vec(vec![1.0]),
        DVector::from_vec(vec![-0.5]),
    )
    .unwrap();
    let b = t.obstruction_bound().unwrap();
    assert_eq!(b.bte_minus_btc, 0.0);
    assert!(b.holds());
}

#[test]
fn builtins_round_trip_through_toml() {
    for m in builtin_methods() {
        if let Some(t) = m.method.shu_osher() {
            let back = parse_tableau_toml(&tableau_to_toml(t)).unwrap();
            assert_eq!(&back, t, "{}", m.name);
        }
    }
}
