//! Independent reference solvers shared by the integration tests.
//!
//! Nothing here calls the library's root finder or equilibrium code; the
//! oracles use naive power sums and plain bisection.
#![allow(dead_code)]

use posmacro::heterogeneous::HeterogeneousParams;
use posmacro::homogeneous::MarketParams;
use posmacro::rng::SimRng;

pub fn naive_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().enumerate().map(|(k, c)| c * x.powi(k as i32)).sum()
}

pub fn sign_changes(coeffs: &[f64]) -> usize {
    let signs: Vec<bool> = coeffs.iter().rev().filter(|&&c| c != 0.0).map(|&c| c > 0.0).collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Bisection of `f` on `[lo, hi]` until the bracket is narrower than `rel * hi`.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, rel: f64) -> f64 {
    let f_lo = f(lo);
    for _ in 0..2000 {
        if hi - lo <= rel * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let v = f(mid);
        if v == 0.0 {
            return mid;
        }
        if (v > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Scans `n` log-spaced points on `[lo, hi]` for the first sign change of `f`
/// and refines it by bisection.
pub fn scan_and_bisect(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize, rel: f64) -> Option<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    let mut prev_x = lo;
    let mut prev_v = f(lo);
    for k in 1..=n {
        let x = (a + (b - a) * k as f64 / n as f64).exp();
        let v = f(x);
        if v == 0.0 {
            return Some(x);
        }
        if prev_v != 0.0 && (v > 0.0) != (prev_v > 0.0) {
            return Some(bisect(&f, prev_x, x, rel));
        }
        prev_x = x;
        prev_v = v;
    }
    None
}

/// Positive root of a one-sign-change polynomial by grid scan plus bisection.
pub fn poly_root_oracle(coeffs: &[f64]) -> f64 {
    let lead = coeffs.iter().rev().find(|&&c| c != 0.0).unwrap().abs();
    let bound = 1.0 + coeffs.iter().map(|c| c.abs() / lead).fold(0.0, f64::max);
    let low = coeffs.iter().find(|&&c| c != 0.0).unwrap().abs();
    let tiny = low / (low + coeffs.iter().map(|c| c.abs()).fold(0.0, f64::max)) * 0.25;
    scan_and_bisect(|x| naive_eval(coeffs, x), tiny.max(1e-300), bound, 4000, 1e-15)
        .expect("oracle found no sign change")
}

/// Random polynomial of degree 1..=4 whose coefficients change sign exactly once.
pub fn random_one_change_poly(rng: &mut SimRng) -> Vec<f64> {
    loop {
        let degree = 1 + (rng.next_u64() % 4) as usize;
        let coeffs: Vec<f64> = (0..=degree)
            .map(|k| {
                if k > 0 && k < degree && rng.uniform() < 0.2 {
                    0.0
                } else {
                    let mag = 10f64.powf(6.0 * rng.uniform() - 3.0);
                    if rng.uniform() < 0.5 {
                        -mag
                    } else {
                        mag
                    }
                }
            })
            .collect();
        if sign_changes(&coeffs) == 1 {
            return coeffs;
        }
    }
}

/// Equilibrium stake of the pure-investor economy, found by scanning the
/// clearance gap `S - W w(S)` directly in `S` (interior solutions only).
pub fn homogeneous_oracle(p: &MarketParams, wealth: f64) -> Option<f64> {
    let gap = |s: f64| {
        let mu_s = p.c / s.sqrt() + p.mu_f / s;
        let var_s = p.sigma_f_sq / (s * s);
        let w = (mu_s - p.mu_r + p.sigma_r_sq) / (var_s + p.sigma_r_sq);
        s - wealth * w
    };
    scan_and_bisect(gap, wealth * 1e-30, wealth, 6000, 1e-14)
}

/// Two-class equilibrium `(S_c, S_i)` by nested bisection: for each trial
/// consumer stake the investor clearance is solved by bisection in `S_i`, and
/// the consumer MRS condition is then bisected in `S_c`. Returns `None` when
/// the MRS gap does not change sign, i.e. the equilibrium is not interior.
pub fn heterogeneous_oracle(p: &HeterogeneousParams) -> Option<(f64, f64)> {
    let delta = p.mu_r - p.sigma_r_sq;
    let demand = |s: f64| (p.w_i / p.sigma_r_sq * (p.c / s.sqrt() - delta)).max(0.0);
    let investor_stake = |s_c: f64| {
        // s_i - demand(s_i + s_c) is increasing in s_i.
        let g = |s_i: f64| s_i - demand(s_i + s_c);
        let mut hi = 1.0;
        while g(hi) < 0.0 {
            hi *= 2.0;
        }
        if g(0.0) >= 0.0 {
            0.0
        } else {
            bisect(g, 0.0, hi, 1e-15)
        }
    };
    // gamma / (W_c - S_c) - c / sqrt(S) is increasing in S_c.
    let mrs_gap = |s_c: f64| {
        let s = investor_stake(s_c) + s_c;
        p.gamma / (p.w_c - s_c) - p.c / s.sqrt()
    };
    let (lo, hi) = (1e-9 * p.w_c, p.w_c * (1.0 - 1e-12));
    if !(mrs_gap(lo) < 0.0 && mrs_gap(hi) > 0.0) {
        return None;
    }
    let s_c = bisect(mrs_gap, lo, hi, 1e-14);
    Some((s_c, investor_stake(s_c)))
}

pub fn table1_market() -> MarketParams {
    MarketParams::without_fees(0.05, 0.09, 150.0).unwrap()
}

pub fn table1_economy() -> HeterogeneousParams {
    HeterogeneousParams::from_supply(1.2e8, 0.1, 2e6, 150.0, 0.05, 0.09).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
