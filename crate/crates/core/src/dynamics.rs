//! Discrete-time dynamics of the two-class economy.
//!
//! Each period consumers earn the staking yield on their stake, investors
//! earn the yield on their stake and the external return on the rest, and the
//! market then relaxes instantly to the new two-class equilibrium:
//!
//! ```text
//! W_c' = W_c + S_c y
//! W_i' = S_i (1 + y) + (W_i - S_i)(1 + R)
//! ```

use serde::Serialize;

use crate::error::{Error, Result};
use crate::heterogeneous::{self, HeterogeneousEquilibrium, HeterogeneousParams};
use crate::rng::SimRng;
use crate::stats;

/// Lower truncation point for normal external returns.
pub const RETURN_FLOOR: f64 = -0.999;

/// Default trailing fraction of the run used for the growth estimate.
pub const DEFAULT_GROWTH_WINDOW: f64 = 0.25;

/// Minimum number of points in a regression window.
pub const MIN_WINDOW_POINTS: usize = 10;

/// Per-factor cutoff for the consumer wealth bound product.
const BOUND_FACTOR_CUTOFF: f64 = 1e-15;
const BOUND_MAX_TERMS: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReturnModel {
    /// `R ~ N(mu_r, sigma_r^2)`, truncated below at [`RETURN_FLOOR`].
    Normal { mu_r: f64, sigma_r: f64 },
    /// `R = mu_r` every period.
    Deterministic { mu_r: f64 },
}

impl ReturnModel {
    pub fn normal(mu_r: f64, sigma_r: f64) -> Result<Self> {
        if !mu_r.is_finite() {
            return Err(Error::param("mu_r", mu_r, "must be finite"));
        }
        if !(sigma_r > 0.0 && sigma_r.is_finite()) {
            return Err(Error::param("sigma_r", sigma_r, "must be positive"));
        }
        Ok(ReturnModel::Normal { mu_r, sigma_r })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ReturnModel::Normal { .. } => "normal",
            ReturnModel::Deterministic { .. } => "deterministic",
        }
    }
}

/// Draws one external return. The flag is set when truncation applied.
///
/// Normal draws always consume two words of the stream, deterministic draws none.
pub fn draw_return(rng: &mut SimRng, model: &ReturnModel) -> (f64, bool) {
    match *model {
        ReturnModel::Deterministic { mu_r } => (mu_r, false),
        ReturnModel::Normal { mu_r, sigma_r } => {
            let r = mu_r + sigma_r * rng.standard_normal();
            if r < RETURN_FLOOR {
                (RETURN_FLOOR, true)
            } else {
                (r, false)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    /// Initial wealths plus the environment.
    pub params: HeterogeneousParams,
    pub horizon: u64,
    pub seed: u64,
    pub return_model: ReturnModel,
    pub record_every: u64,
    /// Trailing fraction of the run used for the growth estimate.
    pub growth_window: f64,
    /// Relative tolerance passed to the equilibrium solver each period.
    pub tol: f64,
}

impl SimConfig {
    pub fn new(params: HeterogeneousParams, horizon: u64, seed: u64, return_model: ReturnModel) -> Self {
        Self {
            params,
            horizon,
            seed,
            return_model,
            record_every: 1,
            growth_window: DEFAULT_GROWTH_WINDOW,
            tol: heterogeneous::DEFAULT_TOL,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.horizon < 1 {
            return Err(Error::param("horizon", self.horizon as f64, "must be at least 1"));
        }
        if self.record_every < 1 {
            return Err(Error::param(
                "record_every",
                self.record_every as f64,
                "must be at least 1",
            ));
        }
        if !(self.growth_window > 0.0 && self.growth_window <= 1.0) {
            return Err(Error::param("growth_window", self.growth_window, "must lie in (0, 1]"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::param("tol", self.tol, "must be positive"));
        }
        if let ReturnModel::Normal { mu_r, sigma_r } = self.return_model {
            ReturnModel::normal(mu_r, sigma_r)?;
        }
        Ok(())
    }
}

/// Economy at the start of period `t`, already in equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EconomyState {
    pub t: u64,
    pub w_i: f64,
    pub w_c: f64,
    pub s: f64,
    pub s_i: f64,
    pub s_c: f64,
    pub l_c: f64,
    pub y: f64,
    /// External return realised in the period that produced this state.
    pub r_t: Option<f64>,
    pub corner: bool,
}

impl EconomyState {
    pub fn from_equilibrium(t: u64, w_i: f64, w_c: f64, eq: &HeterogeneousEquilibrium, r_t: Option<f64>) -> Self {
        Self {
            t,
            w_i,
            w_c,
            s: eq.s,
            s_i: eq.s_i,
            s_c: eq.s_c,
            l_c: eq.l_c,
            y: eq.y,
            r_t,
            corner: eq.corner,
        }
    }

    /// Investor share of total wealth.
    pub fn alpha(&self) -> f64 {
        // Written so that it stays monotone in W_c / W_i after rounding near 1.
        1.0 / (1.0 + self.w_c / self.w_i)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub states: Vec<EconomyState>,
    /// First period with zero consumer stake.
    pub extinction_time: Option<u64>,
    pub alpha_path: Vec<f64>,
    pub log_growth_estimate: Option<f64>,
    pub consumer_bound: Option<f64>,
    /// Number of truncated return draws.
    pub truncations: u64,
    /// Number of times consumers resumed staking after a corner period.
    pub reentries: u64,
}

/// The t = 0 state: initial wealths in equilibrium, no return realised yet.
pub fn initial_state(params: &HeterogeneousParams, tol: f64) -> Result<EconomyState> {
    let eq = heterogeneous::solve_heterogeneous(params, tol).map_err(|e| at_period(0, e))?;
    Ok(EconomyState::from_equilibrium(0, params.w_i, params.w_c, &eq, None))
}

fn at_period(t: u64, source: Error) -> Error {
    Error::Step {
        t,
        source: Box::new(source),
    }
}

/// Advances one period with external return `r_t`.
///
/// Wealth fields of `env` are ignored; only the environment is used.
pub fn step(state: &EconomyState, env: &HeterogeneousParams, r_t: f64, tol: f64) -> Result<EconomyState> {
    let t = state.t + 1;
    if !(r_t > -1.0 && r_t.is_finite()) {
        return Err(at_period(t, Error::param("R_t", r_t, "return must exceed -1")));
    }
    let w_c = state.w_c + state.s_c * state.y;
    let w_i = state.s_i * (1.0 + state.y) + (state.w_i - state.s_i) * (1.0 + r_t);
    let eq = heterogeneous::solve_heterogeneous(&env.with_wealth(w_i, w_c), tol).map_err(|e| at_period(t, e))?;
    Ok(EconomyState::from_equilibrium(t, w_i, w_c, &eq, Some(r_t)))
}

/// Runs the recursion for `config.horizon` periods.
///
/// States are recorded every `record_every` periods; the first corner state
/// and the final state are always recorded as well.
pub fn simulate(config: &SimConfig) -> Result<Trajectory> {
    config.validate()?;
    let env = config.params;
    let mut rng = SimRng::from_seed(config.seed);
    let mut state = initial_state(&env, config.tol)?;

    let mut states = vec![state];
    let mut extinction_time = state.corner.then_some(0);
    let mut truncations = 0;
    let mut reentries = 0;

    for _ in 0..config.horizon {
        let (r_t, truncated) = draw_return(&mut rng, &config.return_model);
        truncations += u64::from(truncated);
        let next = step(&state, &env, r_t, config.tol)?;
        if state.s_c == 0.0 && next.s_c > 0.0 {
            reentries += 1;
        }
        let first_extinction = extinction_time.is_none() && next.s_c == 0.0;
        if first_extinction {
            extinction_time = Some(next.t);
        }
        if next.t % config.record_every == 0 || first_extinction || next.t == config.horizon {
            states.push(next);
        }
        state = next;
    }

    let alpha_path = states.iter().map(EconomyState::alpha).collect();
    let mut traj = Trajectory {
        states,
        extinction_time,
        alpha_path,
        log_growth_estimate: None,
        consumer_bound: consumer_wealth_bound(config).ok(),
        truncations,
        reentries,
    };
    traj.log_growth_estimate = estimate_log_growth(&traj, config.growth_window).ok();
    Ok(traj)
}

/// Smallest recorded period with exactly zero consumer stake.
pub fn detect_extinction(traj: &Trajectory) -> Option<u64> {
    traj.states.iter().find(|s| s.s_c == 0.0).map(|s| s.t)
}

/// Upper bound on consumer wealth,
/// `W_c^0 prod_{k>=1} (1 + C_0 exp(-mu_r^2 k / (4 sigma_r^2)))` with
/// `C_0 = c sqrt(sigma_r^2 / (-delta W_i^0))`.
pub fn consumer_wealth_bound(config: &SimConfig) -> Result<f64> {
    let p = &config.params;
    let delta = p.delta();
    if delta >= 0.0 {
        return Err(Error::NotVarianceDominated(delta));
    }
    if !(p.w_i > 0.0) {
        return Err(Error::param("W_i", p.w_i, "initial investor wealth must be positive"));
    }
    let c0 = bound_prefactor(p);
    let rate = bound_decay_rate(p);
    if !(rate > 0.0) || (c0 / BOUND_FACTOR_CUTOFF).ln() / rate > BOUND_MAX_TERMS {
        return Err(Error::param(
            "mu_r",
            p.mu_r,
            "too small for the bound product to converge",
        ));
    }
    let mut log_product = 0.0;
    let mut k = 1.0;
    loop {
        let term = c0 * (-rate * k).exp();
        if term < BOUND_FACTOR_CUTOFF {
            break;
        }
        log_product += term.ln_1p();
        k += 1.0;
    }
    Ok(p.w_c * log_product.exp())
}

/// `C_0 = c sqrt(sigma_r^2 / (-delta W_i^0))`.
pub fn bound_prefactor(p: &HeterogeneousParams) -> f64 {
    p.c * (p.sigma_r_sq / (-p.delta() * p.w_i)).sqrt()
}

/// Yield decay rate `mu_r^2 / (4 sigma_r^2)`.
pub fn bound_decay_rate(p: &HeterogeneousParams) -> f64 {
    p.mu_r * p.mu_r / (4.0 * p.sigma_r_sq)
}

fn tail(traj: &Trajectory, window: f64) -> Result<Vec<&EconomyState>> {
    if !(window > 0.0 && window <= 1.0) {
        return Err(Error::param("window", window, "must lie in (0, 1]"));
    }
    let last = traj.states.last().map_or(0, |s| s.t);
    let start = (1.0 - window) * last as f64;
    let pts: Vec<_> = traj.states.iter().filter(|s| s.t as f64 >= start).collect();
    if pts.len() < MIN_WINDOW_POINTS {
        return Err(Error::InsufficientData {
            needed: MIN_WINDOW_POINTS,
            got: pts.len(),
        });
    }
    Ok(pts)
}

fn log_slope(pts: &[&EconomyState], value: impl Fn(&EconomyState) -> f64) -> Result<f64> {
    let (ts, logs): (Vec<f64>, Vec<f64>) = pts
        .iter()
        .filter(|s| value(s) > 0.0)
        .map(|s| (s.t as f64, value(s).ln()))
        .unzip();
    if ts.len() < MIN_WINDOW_POINTS {
        return Err(Error::InsufficientData {
            needed: MIN_WINDOW_POINTS,
            got: ts.len(),
        });
    }
    stats::ols_slope(&ts, &logs).ok_or(Error::InsufficientData {
        needed: MIN_WINDOW_POINTS,
        got: ts.len(),
    })
}

/// Least-squares slope of `ln W_i` against `t` over the trailing `window` of the run.
pub fn estimate_log_growth(traj: &Trajectory, window: f64) -> Result<f64> {
    log_slope(&tail(traj, window)?, |s| s.w_i)
}

/// Least-squares slope of `ln y` against `t` over the trailing `window` of the run.
pub fn estimate_log_yield_slope(traj: &Trajectory, window: f64) -> Result<f64> {
    log_slope(&tail(traj, window)?, |s| s.y)
}
