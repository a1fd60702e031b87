mod common;

use common::*;
use posmacro::poly::{unique_positive_root, PolynomialCoeffs, DEFAULT_MAX_ITER, DEFAULT_TOL};
use posmacro::rng::SimRng;
use proptest::prelude::*;

fn crossings(poly: &PolynomialCoeffs, lo: f64, hi: f64, n: usize) -> usize {
    let mut count = 0;
    let mut prev: Option<bool> = None;
    for k in 0..=n {
        let x = lo + (hi - lo) * k as f64 / n as f64;
        let v = poly.eval(x);
        if v == 0.0 {
            continue;
        }
        let pos = v > 0.0;
        if prev.is_some_and(|p| p != pos) {
            count += 1;
        }
        prev = Some(pos);
    }
    count
}

#[test]
fn agrees_with_scan_oracle_on_random_polynomials() {
    let mut rng = SimRng::from_seed(0xC0FFEE);
    for _ in 0..300 {
        let coeffs = random_one_change_poly(&mut rng);
        let poly = PolynomialCoeffs::new(&coeffs).unwrap();
        let r = unique_positive_root(&poly, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let oracle = poly_root_oracle(&coeffs);
        assert!(rel(r.root, oracle) < 1e-8, "{coeffs:?}: {} vs {oracle}", r.root);
        assert!(r.root > 0.0);
        assert!(r.bracket.0 <= r.root && r.root <= r.bracket.1);
    }
}

#[test]
fn bracket_or_residual_certifies_root() {
    let mut rng = SimRng::from_seed(17);
    for _ in 0..300 {
        let coeffs = random_one_change_poly(&mut rng);
        let poly = PolynomialCoeffs::new(&coeffs).unwrap();
        let r = unique_positive_root(&poly, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let d = 10.0 * DEFAULT_TOL * r.root.max(1.0);
        let straddles = poly.eval(r.root - d).signum() != poly.eval(r.root + d).signum();
        let scale = poly.abs_sum(r.bracket.0).max(poly.abs_sum(r.bracket.1));
        assert!(straddles || r.residual.abs() <= DEFAULT_TOL * scale, "{coeffs:?}");
    }
}

#[test]
fn exactly_one_crossing() {
    let mut rng = SimRng::from_seed(99);
    for _ in 0..100 {
        let coeffs = random_one_change_poly(&mut rng);
        let poly = PolynomialCoeffs::new(&coeffs).unwrap();
        let r = unique_positive_root(&poly, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let hi = r.bracket.1.max(2.0 * r.root);
        assert_eq!(crossings(&poly, 1e-300, hi, 10_000), 1, "{coeffs:?}");
    }
}

proptest! {
    #[test]
    fn root_is_invariant_under_positive_scaling(
        seed in any::<u64>(),
        exp in -30.0f64..30.0,
    ) {
        let mut rng = SimRng::from_seed(seed);
        let coeffs = random_one_change_poly(&mut rng);
        let k = 10f64.powf(exp);
        let scaled: Vec<f64> = coeffs.iter().map(|c| c * k).collect();
        let a = unique_positive_root(&PolynomialCoeffs::new(&coeffs).unwrap(), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let b = unique_positive_root(&PolynomialCoeffs::new(&scaled).unwrap(), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        prop_assert!(rel(a.root, b.root) <= 1e-12, "{} vs {}", a.root, b.root);
    }

    #[test]
    fn sign_change_count_matches_reference(coeffs in prop::collection::vec(-5i32..5, 1..6)) {
        let coeffs: Vec<f64> = coeffs.into_iter().map(f64::from).collect();
        if let Ok(poly) = PolynomialCoeffs::new(&coeffs) {
            prop_assert_eq!(poly.count_sign_changes(), sign_changes(&coeffs));
        }
    }

    #[test]
    fn horner_matches_naive_evaluation(
        coeffs in prop::collection::vec(-100.0f64..100.0, 1..6),
        x in -10.0f64..10.0,
    ) {
        if let Ok(poly) = PolynomialCoeffs::new(&coeffs) {
            let naive = naive_eval(&coeffs, x);
            let scale = poly.abs_sum(x).max(1.0);
            prop_assert!((poly.eval(x) - naive).abs() <= 1e-12 * scale);
        }
    }
}
