//! The two-class economy: Kelly investors plus consumers with quasi-linear
//! utility `W_c + gamma ln(L_c)`, without fees.
//!
//! Consumers stake until the marginal value of liquidity `gamma / L_c`
//! equals the yield `c / sqrt(S)`. Combined with investor clearance this
//! reduces to a master cubic in `x = sqrt(S)`:
//!
//! ```text
//! x^3 + (gamma/c) x^2 - (W_c - W_i delta / sigma_r^2) x - W_i c / sigma_r^2 = 0
//! ```

use serde::Serialize;

use crate::error::{Error, Result};
use crate::poly::{self, PolynomialCoeffs};

/// Default relative tolerance on both equilibrium residuals.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeterogeneousParams {
    /// Investor wealth.
    pub w_i: f64,
    /// Consumer wealth.
    pub w_c: f64,
    /// Aggregate transactional preference of all consumers, in tokens.
    pub gamma: f64,
    pub c: f64,
    pub mu_r: f64,
    pub sigma_r_sq: f64,
}

impl HeterogeneousParams {
    pub fn new(w_i: f64, w_c: f64, gamma: f64, c: f64, mu_r: f64, sigma_r_sq: f64) -> Result<Self> {
        let p = Self {
            w_i,
            w_c,
            gamma,
            c,
            mu_r,
            sigma_r_sq,
        };
        p.validate()?;
        Ok(p)
    }

    /// Splits a total supply `m` so that investors hold the fraction `alpha`.
    pub fn from_supply(m: f64, alpha: f64, gamma: f64, c: f64, mu_r: f64, sigma_r_sq: f64) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::param("M", m, "supply must be positive"));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::param("alpha", alpha, "share must lie in [0, 1]"));
        }
        Self::new(alpha * m, (1.0 - alpha) * m, gamma, c, mu_r, sigma_r_sq)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.w_i >= 0.0 && self.w_i.is_finite()) {
            return Err(Error::param("W_i", self.w_i, "must be non-negative"));
        }
        if !(self.w_c >= 0.0 && self.w_c.is_finite()) {
            return Err(Error::param("W_c", self.w_c, "must be non-negative"));
        }
        if !(self.w_i + self.w_c > 0.0) {
            return Err(Error::param(
                "W_i + W_c",
                self.w_i + self.w_c,
                "total wealth must be positive",
            ));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::param("gamma", self.gamma, "must be positive"));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::param("c", self.c, "must be positive"));
        }
        if !self.mu_r.is_finite() {
            return Err(Error::param("mu_r", self.mu_r, "must be finite"));
        }
        if !(self.sigma_r_sq > 0.0 && self.sigma_r_sq.is_finite()) {
            return Err(Error::param("sigma_r_sq", self.sigma_r_sq, "must be positive"));
        }
        Ok(())
    }

    pub fn delta(&self) -> f64 {
        self.mu_r - self.sigma_r_sq
    }

    /// Same environment with different wealths.
    pub fn with_wealth(&self, w_i: f64, w_c: f64) -> Self {
        Self { w_i, w_c, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeterogeneousEquilibrium {
    /// Total stake, `S = S_i + S_c`.
    pub s: f64,
    pub s_i: f64,
    pub s_c: f64,
    /// Consumer liquid holdings, `L_c = W_c - S_c`.
    pub l_c: f64,
    /// Yield `c / sqrt(S)`.
    pub y: f64,
    /// Consumers hold everything liquid because the interior stake would be negative.
    pub corner: bool,
    /// `|gamma / L_c - y|`; `None` at the corner.
    pub residual_mrs: Option<f64>,
    /// `|S_i - investor_demand(S)|`.
    pub residual_clearance: f64,
}

/// Consumer stake implied by the MRS condition at aggregate stake `s`, unclamped.
pub fn consumer_stake_map(s: f64, p: &HeterogeneousParams) -> f64 {
    p.w_c - p.gamma / p.c * s.sqrt()
}

/// Investor staking demand at aggregate stake `s`, floored at zero.
pub fn investor_demand(s: f64, p: &HeterogeneousParams) -> f64 {
    (p.w_i / p.sigma_r_sq * (p.c / s.sqrt() - p.delta())).max(0.0)
}

/// Ascending coefficients of the master cubic in `x = sqrt(S)`.
pub fn build_master_cubic(p: &HeterogeneousParams) -> Result<PolynomialCoeffs> {
    if !(p.w_i > 0.0) {
        return Err(Error::param(
            "W_i",
            p.w_i,
            "master cubic needs positive investor wealth",
        ));
    }
    let s2 = p.sigma_r_sq;
    PolynomialCoeffs::new(&[-p.w_i * p.c / s2, -(p.w_c - p.w_i * p.delta() / s2), p.gamma / p.c, 1.0])
}

/// Investor-only clearance `sigma_r^2 x^3 + W_i delta x - W_i c = 0`.
fn investor_only_cubic(p: &HeterogeneousParams) -> Result<PolynomialCoeffs> {
    PolynomialCoeffs::new(&[-p.w_i * p.c, p.w_i * p.delta(), 0.0, p.sigma_r_sq])
}

/// Root of `x^2 + (gamma/c) x - W_c = 0`: consumers alone.
fn consumer_only_root(p: &HeterogeneousParams) -> f64 {
    let b = p.gamma / p.c;
    // Cancellation-free form of (-b + sqrt(b^2 + 4 W_c)) / 2.
    2.0 * p.w_c / (b + (b * b + 4.0 * p.w_c).sqrt())
}

fn root_of(cubic: &PolynomialCoeffs, tol: f64) -> Result<f64> {
    Ok(poly::unique_positive_root(cubic, tol.min(poly::DEFAULT_TOL), poly::DEFAULT_MAX_ITER)?.root)
}

/// Assembles an equilibrium with consumers on their MRS curve at stake `x^2`.
fn interior(p: &HeterogeneousParams, x: f64, s_i: f64) -> HeterogeneousEquilibrium {
    let s_c = p.w_c - p.gamma / p.c * x;
    let l_c = p.w_c - s_c;
    let s = s_i + s_c;
    let y = p.c / s.sqrt();
    HeterogeneousEquilibrium {
        s,
        s_i,
        s_c,
        l_c,
        y,
        corner: false,
        residual_mrs: Some((p.gamma / l_c - y).abs()),
        residual_clearance: (s_i - investor_demand(s, p)).abs(),
    }
}

/// Solves the two-class equilibrium.
///
/// The interior solution comes from the master cubic. When it would need a
/// negative consumer stake, consumers hold everything liquid and the stake
/// solves investor clearance alone. When investor demand would be negative
/// (only possible for `delta > 0`), investors stay out and consumers alone
/// set the stake.
pub fn solve_heterogeneous(p: &HeterogeneousParams, tol: f64) -> Result<HeterogeneousEquilibrium> {
    p.validate()?;
    if p.w_i == 0.0 {
        return Ok(interior(p, consumer_only_root(p), 0.0));
    }

    let x = root_of(&build_master_cubic(p)?, tol)?;
    let s = x * x;
    let s_c = consumer_stake_map(s, p);
    // S - S_c cancels when investors are a sliver of the stake; the demand
    // curve cancels when the yield sits on delta. Take the better-conditioned.
    let k = p.w_i / p.sigma_r_sq;
    let s_i = if k * (p.c / x + p.delta().abs()) < s + p.w_c {
        k * (p.c / x - p.delta())
    } else {
        s - s_c
    };

    if s_c < 0.0 {
        let xc = root_of(&investor_only_cubic(p)?, tol)?;
        let s = xc * xc;
        return Ok(HeterogeneousEquilibrium {
            s,
            s_i: s,
            s_c: 0.0,
            l_c: p.w_c,
            y: p.c / xc,
            corner: true,
            residual_mrs: None,
            residual_clearance: (s - investor_demand(s, p)).abs(),
        });
    }

    if s_i < 0.0 {
        return Ok(interior(p, consumer_only_root(p), 0.0));
    }

    Ok(interior(p, x, s_i))
}

/// Large-investor-wealth limits `(S, S_i, S_c)` in the variance-dominated regime.
///
/// `S_c` may come out negative, which predicts the corner.
pub fn asymptotic_heterogeneous(p: &HeterogeneousParams) -> Result<(f64, f64, f64)> {
    let delta = p.delta();
    if delta >= 0.0 {
        return Err(Error::NotVarianceDominated(delta));
    }
    let s = -delta / p.sigma_r_sq * p.w_i;
    let s_c = p.w_c - p.gamma / p.c * s.sqrt();
    Ok((s, s, s_c))
}
