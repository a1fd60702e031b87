//! Low-degree real polynomials and extraction of their unique positive root.
//!
//! Both equilibrium equations of the model (the pure-investor quartic and the
//! two-class master cubic) are polynomials in `x = sqrt(S)` whose coefficient
//! signs change exactly once, so by Descartes' rule they have exactly one
//! positive root. [`unique_positive_root`] certifies a bracket around that
//! root and then polishes it with a safeguarded Newton iteration.

use serde::Serialize;

use crate::error::{Error, Result};

/// Highest supported degree.
pub const MAX_DEGREE: usize = 4;

/// Default relative residual tolerance for [`unique_positive_root`].
pub const DEFAULT_TOL: f64 = 1e-12;

/// Default iteration cap (bisection plus Newton steps) for [`unique_positive_root`].
pub const DEFAULT_MAX_ITER: usize = 200;

/// Extra Newton steps taken after the stopping criterion is met.
const POLISH_STEPS: usize = 3;

/// A real polynomial of degree at most four, coefficients in ascending order.
///
/// Trailing zeros are trimmed on construction, so the stored leading
/// coefficient is always nonzero. Only exact zeros are trimmed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolynomialCoeffs {
    coeffs: [f64; MAX_DEGREE + 1],
    degree: usize,
}

impl PolynomialCoeffs {
    pub fn new(coeffs: &[f64]) -> Result<Self> {
        if let Some((index, &value)) = coeffs.iter().enumerate().find(|(_, c)| !c.is_finite()) {
            return Err(Error::NonFiniteCoefficient { index, value });
        }
        let degree = coeffs
            .iter()
            .rposition(|&c| c != 0.0)
            .ok_or(Error::DegeneratePolynomial)?;
        if degree > MAX_DEGREE {
            return Err(Error::DegreeTooHigh(degree));
        }
        let mut stored = [0.0; MAX_DEGREE + 1];
        stored[..=degree].copy_from_slice(&coeffs[..=degree]);
        Ok(Self { coeffs: stored, degree })
    }

    /// Coefficients in ascending order, `coeffs()[k]` multiplying `x^k`.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs[..=self.degree]
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn leading(&self) -> f64 {
        self.coeffs[self.degree]
    }

    /// Horner evaluation. Overflow propagates as infinity.
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs().iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// Value and first derivative in one Horner pass.
    pub fn eval_with_derivative(&self, x: f64) -> (f64, f64) {
        let mut p = 0.0;
        let mut dp = 0.0;
        for &c in self.coeffs().iter().rev() {
            dp = dp * x + p;
            p = p * x + c;
        }
        (p, dp)
    }

    /// `sum |c_k x^k|`, the magnitude against which residuals are judged.
    pub fn abs_sum(&self, x: f64) -> f64 {
        let ax = x.abs();
        self.coeffs().iter().rev().fold(0.0, |acc, &c| acc * ax + c.abs())
    }

    fn abs_sum_derivative(&self, x: f64) -> f64 {
        let ax = x.abs();
        self.coeffs()
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, &c)| acc * ax + k as f64 * c.abs())
    }

    /// Number of sign alternations among the nonzero coefficients.
    pub fn count_sign_changes(&self) -> usize {
        let mut changes = 0;
        let mut last: Option<bool> = None;
        for &c in self.coeffs().iter().rev().filter(|&&c| c != 0.0) {
            let positive = c > 0.0;
            if last.is_some_and(|l| l != positive) {
                changes += 1;
            }
            last = Some(positive);
        }
        changes
    }

    /// Divides out the largest power of `x` that divides the polynomial.
    ///
    /// Returns the deflated polynomial and the removed multiplicity of the
    /// root at zero. Positive roots and the sign-change count are unchanged.
    pub fn deflate_zero_roots(&self) -> (Self, usize) {
        let zeros = self.coeffs().iter().position(|&c| c != 0.0).unwrap_or(0);
        let deflated = Self::new(&self.coeffs()[zeros..]).unwrap_or(*self);
        (deflated, zeros)
    }

    /// Cauchy bound: every root satisfies `|x| < 1 + max_k |c_k / c_n|`.
    pub fn cauchy_bound(&self) -> f64 {
        let lead = self.leading().abs();
        1.0 + self.coeffs()[..self.degree]
            .iter()
            .fold(0.0_f64, |m, &c| m.max(c.abs() / lead))
    }

    /// Positive lower bound on the modulus of every root, valid when the
    /// constant term is nonzero.
    fn root_lower_bound(&self) -> f64 {
        let a0 = self.coeffs[0].abs();
        let rest = self.coeffs()[1..].iter().fold(0.0_f64, |m, &c| m.max(c.abs()));
        a0 / (a0 + rest)
    }
}

/// A certified positive root.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RootResult {
    pub root: f64,
    /// Polynomial value at `root`.
    pub residual: f64,
    pub iterations: usize,
    /// Final enclosing interval, `bracket.0 <= root <= bracket.1`.
    pub bracket: (f64, f64),
}

/// Unique positive root of a polynomial whose coefficients change sign exactly once.
///
/// The root is bracketed by doubling the upper end of `[tiny, 1]` until the
/// sign flips (bounded by the Cauchy bound), narrowed by bisection, and then
/// polished by Newton steps that fall back to bisection whenever a step
/// leaves the bracket or the derivative is negligible. Iteration stops once
/// `|p(x)| <= tol * scale` with `scale` the largest `sum |c_k x^k|` over the
/// bracket ends, or once the bracket is narrower than `tol * max(1, x)`.
pub fn unique_positive_root(poly: &PolynomialCoeffs, tol: f64, max_iter: usize) -> Result<RootResult> {
    let changes = poly.count_sign_changes();
    if changes != 1 {
        return Err(Error::SignChanges(changes));
    }
    let (q, _) = poly.deflate_zero_roots();
    // Sign of q on (0, root); the opposite sign holds beyond the root.
    let low_positive = q.coeffs[0] > 0.0;
    let below = |v: f64| (v > 0.0) == low_positive;

    let finish = |root: f64, iterations: usize, lo: f64, hi: f64| RootResult {
        root,
        residual: poly.eval(root),
        iterations,
        bracket: (lo.min(root), hi.max(root)),
    };

    let upper = q.cauchy_bound();
    let mut lo = (0.5 * q.root_lower_bound()).max(f64::MIN_POSITIVE);
    let mut hi = 1.0_f64;
    loop {
        let v = q.eval(hi);
        if v == 0.0 {
            return Ok(finish(hi, 0, lo, hi));
        }
        if !below(v) {
            break;
        }
        if hi >= upper {
            return Err(Error::NoRoot { bound: upper });
        }
        lo = hi;
        hi = (2.0 * hi).min(upper);
    }

    let mut iterations = 0;
    let step = |iterations: &mut usize, lo: f64, hi: f64| {
        *iterations += 1;
        if *iterations > max_iter {
            Err(Error::NoConvergence {
                iterations: max_iter,
                lo,
                hi,
            })
        } else {
            Ok(())
        }
    };

    // Coarse bisection; geometric midpoints while the bracket spans decades.
    while hi - lo > 0.25 * hi {
        step(&mut iterations, lo, hi)?;
        let mid = if hi > 4.0 * lo {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        let v = q.eval(mid);
        if v == 0.0 {
            return Ok(finish(mid, iterations, lo, hi));
        }
        if below(v) {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let mut x = 0.5 * (lo + hi);
    loop {
        step(&mut iterations, lo, hi)?;
        let (p, dp) = q.eval_with_derivative(x);
        if p == 0.0 {
            return Ok(finish(x, iterations, lo, hi));
        }
        if below(p) {
            lo = x;
        } else {
            hi = x;
        }
        let scale = q.abs_sum(lo).max(q.abs_sum(hi));
        if p.abs() <= tol * scale || hi - lo <= tol * x.max(1.0) {
            break;
        }
        let newton = x - p / dp;
        let flat = dp.abs() <= f64::EPSILON * q.abs_sum_derivative(x);
        x = if flat || !(newton > lo && newton < hi) {
            0.5 * (lo + hi)
        } else {
            newton
        };
    }

    let mut best = x;
    let mut best_abs = q.eval(x).abs();
    for _ in 0..POLISH_STEPS {
        let (p, dp) = q.eval_with_derivative(best);
        if p == 0.0 || dp == 0.0 {
            break;
        }
        let next = best - p / dp;
        if !(next >= lo && next <= hi) {
            break;
        }
        let next_abs = q.eval(next).abs();
        if next_abs >= best_abs {
            break;
        }
        best = next;
        best_abs = next_abs;
    }
    Ok(finish(best, iterations, lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(c: &[f64]) -> PolynomialCoeffs {
        PolynomialCoeffs::new(c).unwrap()
    }

    // Two-class equilibrium cubic at the baseline calibration.
    fn baseline_cubic() -> PolynomialCoeffs {
        let (wi, wc, gamma, c, s2, delta) = (1.2e7, 1.08e8, 2e6, 150.0, 0.09, 0.05 - 0.09);
        poly(&[-wi * c / s2, -(wc - wi * delta / s2), gamma / c, 1.0])
    }

    #[test]
    fn eval_examples() {
        assert_eq!(poly(&[-2.0, 1.0]).eval(2.0), 0.0);
        assert_eq!(poly(&[0.0, 0.0, 0.0, 0.0, 1.0]).eval(3.0), 81.0);
        let cubic = baseline_cubic();
        assert!(cubic.eval(6000.0) < 0.0);
        assert!(cubic.eval(9000.0) > 0.0);
        assert!((cubic.eval(6000.0) + 4.0e9).abs() < 1e-3 * 4.0e9);
    }

    #[test]
    fn eval_propagates_overflow() {
        assert_eq!(poly(&[0.0, 0.0, 0.0, 0.0, 1.0]).eval(1e100), f64::INFINITY);
    }

    #[test]
    fn derivative_matches_hand_computation() {
        let p = poly(&[1.0, -3.0, 0.0, 2.0]);
        let (v, d) = p.eval_with_derivative(2.0);
        assert_eq!(v, 1.0 - 6.0 + 16.0);
        assert_eq!(d, -3.0 + 24.0);
    }

    #[test]
    fn construction_trims_and_validates() {
        assert_eq!(poly(&[1.0, 2.0, 0.0, 0.0]).degree(), 1);
        assert_eq!(PolynomialCoeffs::new(&[0.0, 0.0]), Err(Error::DegeneratePolynomial));
        assert_eq!(PolynomialCoeffs::new(&[]), Err(Error::DegeneratePolynomial));
        assert_eq!(
            PolynomialCoeffs::new(&[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]),
            Err(Error::DegreeTooHigh(5))
        );
        assert!(matches!(
            PolynomialCoeffs::new(&[1.0, f64::NAN]),
            Err(Error::NonFiniteCoefficient { index: 1, .. })
        ));
        // Tiny but nonzero coefficients are kept.
        assert_eq!(poly(&[1.0, 1e-300]).degree(), 1);
    }

    #[test]
    fn sign_changes() {
        assert_eq!(poly(&[-2.0, 1.0]).count_sign_changes(), 1);
        assert_eq!(poly(&[1.0, 0.0, 1.0]).count_sign_changes(), 0);
        assert_eq!(baseline_cubic().count_sign_changes(), 1);
        // Quartic with W mu_F > sigma_F^2 and mu_r > sigma_r^2: (+, +, -, -).
        let (s2, mu, c, muf, sf2, w) = (0.09, 0.10, 150.0, 10.0, 1.0, 1e6);
        let q = poly(&[sf2 - w * muf, -w * c, w * (mu - s2), 0.0, s2]);
        assert_eq!(q.count_sign_changes(), 1);
        assert_eq!(poly(&[1.0, -3.0, 3.0, -1.0]).count_sign_changes(), 3);
    }

    #[test]
    fn deflation() {
        let (q, m) = poly(&[0.0, 0.0, -1.0, 1.0]).deflate_zero_roots();
        assert_eq!(m, 2);
        assert_eq!(q.coeffs(), &[-1.0, 1.0]);
    }

    #[test]
    fn simple_roots() {
        let r = unique_positive_root(&poly(&[-2.0, 1.0]), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!((r.root - 2.0).abs() < 1e-14);
        let r = unique_positive_root(&poly(&[-1.0, 0.0, 1.0]), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!((r.root - 1.0).abs() < 1e-14);
        assert!(r.bracket.0 <= r.root && r.root <= r.bracket.1);
    }

    #[test]
    fn baseline_cubic_root_matches_bisection_oracle() {
        // Frozen from a 300-step bisection on [1, 1e6] in 40-digit arithmetic.
        let expected = 6_025.727_862_408_255_5;
        let r = unique_positive_root(&baseline_cubic(), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!((r.root - expected).abs() <= 1e-12 * expected, "{}", r.root);
    }

    #[test]
    fn zero_constant_term() {
        // x^3 - x = x (x - 1)(x + 1)
        let r = unique_positive_root(&poly(&[0.0, -1.0, 0.0, 1.0]), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!((r.root - 1.0).abs() < 1e-14);
        // x^4 - x^3 would underflow near zero without deflation.
        let r = unique_positive_root(&poly(&[0.0, 0.0, 0.0, -1.0, 1.0]), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!((r.root - 1.0).abs() < 1e-14);
    }

    #[test]
    fn extreme_magnitudes() {
        // Root near 1e-9 and near 1e40.
        let r = unique_positive_root(&poly(&[-1e-9, 1.0]), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!((r.root - 1e-9).abs() < 1e-21);
        let r = unique_positive_root(&poly(&[-1e80, 0.0, 1.0]), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!((r.root - 1e40).abs() < 1e28);
    }

    #[test]
    fn precondition_errors() {
        assert_eq!(
            unique_positive_root(&poly(&[1.0, 0.0, 1.0]), DEFAULT_TOL, DEFAULT_MAX_ITER),
            Err(Error::SignChanges(0))
        );
        assert_eq!(
            unique_positive_root(&poly(&[-1.0, 3.0, -3.0, 1.0]), DEFAULT_TOL, DEFAULT_MAX_ITER),
            Err(Error::SignChanges(3))
        );
    }

    #[test]
    fn iteration_cap_reports_bracket() {
        match unique_positive_root(&baseline_cubic(), 0.0, 3) {
            Err(Error::NoConvergence { iterations, lo, hi }) => {
                assert_eq!(iterations, 3);
                assert!(lo < 6025.73 && 6025.72 < hi);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn cauchy_bound_encloses_root() {
        let p = baseline_cubic();
        let r = unique_positive_root(&p, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!(r.root < p.cauchy_bound());
    }
}
