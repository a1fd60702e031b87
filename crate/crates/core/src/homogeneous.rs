//! The pure-investor economy.
//!
//! Every investor holds the same log-optimal (Kelly) split between staking
//! and an uncorrelated outside asset. Staking pays `c / sqrt(S) + mu_F / S`
//! with fee variance `sigma_F^2 / S^2`, so the optimal fraction depends on the
//! aggregate stake `S`, and the equilibrium is the fixed point `S = W w(S)`.
//! With `x = sqrt(S)` this is a quartic with a single positive root.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::poly::{self, PolynomialCoeffs};

/// Default half-width of the band around `delta = 0` classified as critical.
pub const DEFAULT_EPS_CRITICAL: f64 = 1e-12;

/// Default tolerance on the relative clearance residual.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Exogenous environment of the staking economy. Returns are uncorrelated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarketParams {
    /// Expected external return per period.
    pub mu_r: f64,
    /// External return variance per period.
    pub sigma_r_sq: f64,
    /// Issuance constant; staking pays `c / sqrt(S)` per period.
    pub c: f64,
    /// Expected fee revenue per period, in tokens.
    pub mu_f: f64,
    /// Fee revenue variance, in tokens squared.
    pub sigma_f_sq: f64,
}

impl MarketParams {
    pub fn new(mu_r: f64, sigma_r_sq: f64, c: f64, mu_f: f64, sigma_f_sq: f64) -> Result<Self> {
        if !mu_r.is_finite() {
            return Err(Error::param("mu_r", mu_r, "must be finite"));
        }
        if !(sigma_r_sq > 0.0 && sigma_r_sq.is_finite()) {
            return Err(Error::param("sigma_r_sq", sigma_r_sq, "must be positive"));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::param("c", c, "must be positive"));
        }
        if !(mu_f >= 0.0 && mu_f.is_finite()) {
            return Err(Error::param("mu_f", mu_f, "must be non-negative"));
        }
        if !(sigma_f_sq >= 0.0 && sigma_f_sq.is_finite()) {
            return Err(Error::param("sigma_f_sq", sigma_f_sq, "must be non-negative"));
        }
        Ok(Self {
            mu_r,
            sigma_r_sq,
            c,
            mu_f,
            sigma_f_sq,
        })
    }

    /// Fee-free environment.
    pub fn without_fees(mu_r: f64, sigma_r_sq: f64, c: f64) -> Result<Self> {
        Self::new(mu_r, sigma_r_sq, c, 0.0, 0.0)
    }

    /// Risk-adjusted opportunity cost `mu_r - sigma_r^2`.
    pub fn delta(&self) -> f64 {
        self.mu_r - self.sigma_r_sq
    }

    /// Same environment with `mu_r` shifted so that `delta` becomes `delta`.
    pub fn with_delta(&self, delta: f64) -> Self {
        Self {
            mu_r: self.sigma_r_sq + delta,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RegimeKind {
    VarianceDominated,
    Critical,
    YieldDominated,
}

impl RegimeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegimeKind::VarianceDominated => "variance-dominated",
            RegimeKind::Critical => "critical",
            RegimeKind::YieldDominated => "yield-dominated",
        }
    }
}

/// Asymptotic scaling regime selected by the sign of `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Regime {
    pub kind: RegimeKind,
    pub delta: f64,
}

/// Solved pure-investor economy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HomogeneousEquilibrium {
    pub s_star: f64,
    pub x_star: f64,
    pub w_star: f64,
    pub y_star: f64,
    /// `|S* - W w(S*)|`, with `w` capped at 1 on the boundary.
    pub residual: f64,
    /// Investors stake everything (`S* = W`, `w* = 1`).
    pub boundary: bool,
}

/// Log-optimal fraction of wealth held in staking, unclamped.
pub fn kelly_fraction(mu_s: f64, mu_r: f64, sigma_s_sq: f64, sigma_r_sq: f64) -> Result<f64> {
    let total = sigma_s_sq + sigma_r_sq;
    if !(total > 0.0) {
        return Err(Error::ZeroVariance);
    }
    Ok((mu_s - mu_r + sigma_r_sq) / total)
}

/// Mean and variance of the staking return at aggregate stake `s`.
pub fn staking_moments(s: f64, params: &MarketParams) -> Result<(f64, f64)> {
    if !(s > 0.0) {
        return Err(Error::param("S", s, "stake must be positive"));
    }
    let mu_s = params.c / s.sqrt() + params.mu_f / s;
    let sigma_s_sq = params.sigma_f_sq / (s * s);
    Ok((mu_s, sigma_s_sq))
}

/// Kelly fraction evaluated at aggregate stake `s`.
pub fn staking_fraction(s: f64, params: &MarketParams) -> Result<f64> {
    let (mu_s, sigma_s_sq) = staking_moments(s, params)?;
    kelly_fraction(mu_s, params.mu_r, sigma_s_sq, params.sigma_r_sq)
}

/// `1 + W |w'(S)|`: amplification of a relative error in `S` into the
/// clearance residual `S - W w(S)`.
pub fn clearance_condition(params: &MarketParams, wealth: f64, s: f64) -> f64 {
    let sqrt_s = s.sqrt();
    let num = params.c / sqrt_s + params.mu_f / s - params.delta();
    let den = params.sigma_f_sq / (s * s) + params.sigma_r_sq;
    let dnum = -params.c / (2.0 * s * sqrt_s) - params.mu_f / (s * s);
    let dden = -2.0 * params.sigma_f_sq / (s * s * s);
    let dw = (dnum * den - num * dden) / (den * den);
    1.0 + wealth * dw.abs()
}

/// Clearance quartic in `x = sqrt(S)`:
/// `sigma_r^2 x^4 + W delta x^2 - W c x + (sigma_F^2 - W mu_F) = 0`.
pub fn build_quartic(params: &MarketParams, wealth: f64) -> Result<PolynomialCoeffs> {
    check_wealth(wealth)?;
    PolynomialCoeffs::new(&[
        params.sigma_f_sq - wealth * params.mu_f,
        -wealth * params.c,
        wealth * params.delta(),
        0.0,
        params.sigma_r_sq,
    ])
}

fn check_wealth(wealth: f64) -> Result<()> {
    if wealth > 0.0 && wealth.is_finite() {
        Ok(())
    } else {
        Err(Error::param("W", wealth, "wealth must be positive"))
    }
}

/// Equilibrium of the pure-investor economy with total wealth `wealth`.
///
/// The clearance residual is checked against `tol * max(1, S*)` scaled by
/// [`clearance_condition`], since that is the resolution double precision
/// allows when `W` is large and `w(S*)` small.
///
/// Solves the interior problem first; if the implied fraction exceeds one the
/// economy sits on the boundary `S* = W`. Without fees the quartic has a
/// spurious root at zero, which is divided out before solving.
pub fn solve_equilibrium(params: &MarketParams, wealth: f64, tol: f64) -> Result<HomogeneousEquilibrium> {
    let quartic = build_quartic(params, wealth)?;
    let (reduced, _) = quartic.deflate_zero_roots();
    let root = poly::unique_positive_root(&reduced, tol.min(poly::DEFAULT_TOL), poly::DEFAULT_MAX_ITER)?;
    let x = root.root;
    let s = x * x;

    if s > wealth {
        let w_at_wealth = staking_fraction(wealth, params)?;
        return Ok(HomogeneousEquilibrium {
            s_star: wealth,
            x_star: wealth.sqrt(),
            w_star: 1.0,
            y_star: staking_moments(wealth, params)?.0,
            residual: (wealth - wealth * w_at_wealth.min(1.0)).abs(),
            boundary: true,
        });
    }

    let w = staking_fraction(s, params)?;
    if w < 0.0 {
        return Err(Error::Inconsistent(format!("negative staking fraction {w} at S = {s}")));
    }
    let residual = (s - wealth * w).abs();
    if residual > tol * s.max(1.0) * clearance_condition(params, wealth, s) {
        return Err(Error::Inconsistent(format!(
            "clearance residual {residual} exceeds {tol} relative at S = {s}"
        )));
    }
    Ok(HomogeneousEquilibrium {
        s_star: s,
        x_star: x,
        w_star: s / wealth,
        y_star: staking_moments(s, params)?.0,
        residual,
        boundary: false,
    })
}

pub fn classify_regime(params: &MarketParams, eps: f64) -> Regime {
    let delta = params.delta();
    let kind = if delta.abs() <= eps {
        RegimeKind::Critical
    } else if delta < 0.0 {
        RegimeKind::VarianceDominated
    } else {
        RegimeKind::YieldDominated
    };
    Regime { kind, delta }
}

/// Large-wealth closed form for the equilibrium stake in the regime of `params`.
pub fn asymptotic_stake(params: &MarketParams, wealth: f64, eps: f64) -> (f64, Regime) {
    let regime = classify_regime(params, eps);
    let s2 = params.sigma_r_sq;
    let stake = match regime.kind {
        RegimeKind::VarianceDominated => (1.0 - params.mu_r / s2) * wealth,
        RegimeKind::Critical => (params.c * wealth / s2).powf(2.0 / 3.0),
        RegimeKind::YieldDominated => {
            let delta = regime.delta;
            let c = params.c;
            let x_inf = (c + (c * c + 4.0 * delta * params.mu_f).sqrt()) / (2.0 * delta);
            x_inf * x_inf
        }
    };
    (stake, regime)
}

/// `dS*/d(delta)` at an interior equilibrium, from the implicit function theorem.
pub fn sensitivity_closed_form(params: &MarketParams, wealth: f64, s_star: f64) -> Result<f64> {
    check_wealth(wealth)?;
    if !(s_star > 0.0) {
        return Err(Error::param("S*", s_star, "stake must be positive"));
    }
    if s_star >= wealth {
        return Err(Error::BoundaryEquilibrium);
    }
    let denom =
        params.sigma_r_sq + wealth * params.c / (2.0 * s_star.powf(1.5)) + wealth * params.mu_f / (s_star * s_star);
    Ok(-wealth / denom)
}

/// Central difference of `S*` in `delta`, shifting `mu_r` by `+-h`.
pub fn sensitivity_fd(params: &MarketParams, wealth: f64, h: f64, tol: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::param("h", h, "step must be positive"));
    }
    let up = MarketParams {
        mu_r: params.mu_r + h,
        ..*params
    };
    let down = MarketParams {
        mu_r: params.mu_r - h,
        ..*params
    };
    let e_up = solve_equilibrium(&up, wealth, tol)?;
    let e_down = solve_equilibrium(&down, wealth, tol)?;
    match (e_up.boundary, e_down.boundary) {
        (false, false) => Ok((e_up.s_star - e_down.s_star) / (up.mu_r - down.mu_r)),
        (true, true) => Err(Error::BoundaryEquilibrium),
        _ => Err(Error::BoundaryFlip),
    }
}
