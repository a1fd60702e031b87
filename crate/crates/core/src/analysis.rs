//! Batch experiments: wealth and delta sweeps, scaling-exponent fits and
//! Monte Carlo ensembles of the dynamics.
//!
//! Sweep points and ensemble members are independent. With the `parallel`
//! feature they are mapped with rayon; results are always assembled in input
//! order so the output does not depend on scheduling.

use serde::Serialize;

use crate::dynamics::{self, SimConfig};
use crate::error::{Error, Result};
use crate::homogeneous::{self, HomogeneousEquilibrium, MarketParams};
use crate::rng;
use crate::stats;

/// Trailing fraction of each path used for the yield-decay slope.
pub const YIELD_TAIL_WINDOW: f64 = 0.5;

/// Fraction of failed ensemble members above which the summary is flagged.
pub const FAILURE_FLAG_FRACTION: f64 = 0.01;

/// How independent work items are mapped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Rayon when the `parallel` feature is enabled, sequential otherwise.
    #[default]
    Parallel,
}

fn map_ordered<T, R, F>(items: &[T], exec: Execution, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        _ => items.iter().map(f).collect(),
    }
}

/// Results over a strictly increasing grid, one row per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult<R> {
    pub axis: &'static str,
    pub rows: Vec<R>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WealthPoint {
    pub wealth: f64,
    pub equilibrium: std::result::Result<HomogeneousEquilibrium, Error>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaSample {
    pub mu_r: f64,
    pub s_star: f64,
    /// `dS*/d(delta)` from the implicit-function formula.
    pub closed_form: f64,
    /// `dS*/d(delta)` by central differences.
    pub finite_difference: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaPoint {
    pub delta: f64,
    pub sample: std::result::Result<DeltaSample, Error>,
}

fn check_grid(name: &'static str, grid: &[f64], positive: bool) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    for (i, &v) in grid.iter().enumerate() {
        if !v.is_finite() || (positive && v <= 0.0) {
            return Err(Error::param(name, v, "grid values must be finite and positive"));
        }
        if i > 0 && v <= grid[i - 1] {
            return Err(Error::param(name, v, "grid must be strictly increasing"));
        }
    }
    Ok(())
}

/// `per_decade` log-spaced points per decade from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && per_decade >= 1) {
        return Err(Error::param(
            "grid",
            lo,
            "need 0 < lo <= hi and at least one point per decade",
        ));
    }
    let (a, b) = (lo.log10(), hi.log10());
    let n = ((b - a) * per_decade as f64).round() as usize;
    if n == 0 {
        return Ok(vec![lo]);
    }
    Ok((0..=n)
        .map(|k| match k {
            0 => lo,
            k if k == n => hi,
            k => 10f64.powf(a + (b - a) * k as f64 / n as f64),
        })
        .collect())
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(hi > lo && n >= 2) {
        return Err(Error::param("grid", lo, "need lo < hi and at least two points"));
    }
    Ok((0..n)
        .map(|k| {
            if k == n - 1 {
                hi
            } else {
                lo + (hi - lo) * k as f64 / (n - 1) as f64
            }
        })
        .collect())
}

pub fn wealth_sweep(params: &MarketParams, grid: &[f64], tol: f64) -> Result<SweepResult<WealthPoint>> {
    wealth_sweep_with(params, grid, tol, Execution::default())
}

pub fn wealth_sweep_with(
    params: &MarketParams,
    grid: &[f64],
    tol: f64,
    exec: Execution,
) -> Result<SweepResult<WealthPoint>> {
    check_grid("W", grid, true)?;
    let rows = map_ordered(grid, exec, |&wealth| WealthPoint {
        wealth,
        equilibrium: homogeneous::solve_equilibrium(params, wealth, tol),
    });
    Ok(SweepResult { axis: "W", rows })
}

/// Least-squares slope of `ln S*` against `ln W` over the last `tail_points` solved rows.
pub fn fit_scaling_exponent(sweep: &SweepResult<WealthPoint>, tail_points: usize) -> Result<f64> {
    let solved: Vec<(f64, f64)> = sweep
        .rows
        .iter()
        .filter_map(|r| r.equilibrium.as_ref().ok().map(|e| (r.wealth.ln(), e.s_star.ln())))
        .collect();
    let needed = tail_points.max(2);
    if solved.len() < needed {
        return Err(Error::InsufficientData {
            needed,
            got: solved.len(),
        });
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = solved[solved.len() - needed..].iter().copied().unzip();
    stats::ols_slope(&xs, &ys).ok_or(Error::InsufficientData { needed, got: 1 })
}

pub fn delta_sweep(
    params_base: &MarketParams,
    wealth: f64,
    grid: &[f64],
    h: f64,
    tol: f64,
) -> Result<SweepResult<DeltaPoint>> {
    delta_sweep_with(params_base, wealth, grid, h, tol, Execution::default())
}

/// Sweeps `delta` by shifting `mu_r` at fixed `sigma_r^2`.
pub fn delta_sweep_with(
    params_base: &MarketParams,
    wealth: f64,
    grid: &[f64],
    h: f64,
    tol: f64,
    exec: Execution,
) -> Result<SweepResult<DeltaPoint>> {
    check_grid("delta", grid, false)?;
    let rows = map_ordered(grid, exec, |&delta| {
        let params = params_base.with_delta(delta);
        let sample = (|| {
            let eq = homogeneous::solve_equilibrium(&params, wealth, tol)?;
            if eq.boundary {
                return Err(Error::BoundaryEquilibrium);
            }
            Ok(DeltaSample {
                mu_r: params.mu_r,
                s_star: eq.s_star,
                closed_form: homogeneous::sensitivity_closed_form(&params, wealth, eq.s_star)?,
                finite_difference: homogeneous::sensitivity_fd(&params, wealth, h, tol)?,
            })
        })();
        DeltaPoint { delta, sample }
    });
    Ok(SweepResult { axis: "delta", rows })
}

/// Per-path diagnostics kept by an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathSummary {
    pub index: u64,
    pub seed: u64,
    pub extinction_time: Option<u64>,
    pub log_growth: Option<f64>,
    pub log_yield_slope: Option<f64>,
    pub terminal_alpha: f64,
    pub truncations: u64,
    pub reentries: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSummary {
    pub n_seeds: usize,
    pub n_failed: usize,
    /// More than [`FAILURE_FLAG_FRACTION`] of the runs failed.
    pub failure_flagged: bool,
    pub extinction_min: Option<u64>,
    pub extinction_median: Option<f64>,
    pub extinction_max: Option<u64>,
    /// Fraction of successful runs whose consumers stopped staking within the horizon.
    pub extinction_fraction: f64,
    pub growth_mean: Option<f64>,
    pub growth_sd: Option<f64>,
    /// Normal-approximation 95% interval, `mean -+ 1.96 sd / sqrt(n)`.
    pub growth_ci95: Option<(f64, f64)>,
    pub terminal_alpha_min: f64,
    pub terminal_alpha_mean: f64,
    pub terminal_alpha_max: f64,
    pub truncations: u64,
    /// Fraction of successful runs in which consumers re-entered after a corner period.
    pub reentry_fraction: f64,
    /// Fraction of successful runs whose `ln y` slope over the trailing
    /// [`YIELD_TAIL_WINDOW`] is negative.
    pub yield_decay_fraction: f64,
    pub paths: Vec<PathSummary>,
    pub errors: Vec<(u64, String)>,
}

pub const CI_METHOD: &str = "normal approximation: mean +- 1.96 sd / sqrt(n)";

fn run_member(config: &SimConfig, index: u64) -> std::result::Result<PathSummary, Error> {
    let seed = rng::child_seed(config.seed, index);
    let traj = dynamics::simulate(&SimConfig { seed, ..*config })?;
    Ok(PathSummary {
        index,
        seed,
        extinction_time: traj.extinction_time,
        log_growth: traj.log_growth_estimate,
        log_yield_slope: dynamics::estimate_log_yield_slope(&traj, YIELD_TAIL_WINDOW).ok(),
        terminal_alpha: traj.alpha_path.last().copied().unwrap_or(f64::NAN),
        truncations: traj.truncations,
        reentries: traj.reentries,
    })
}

pub fn monte_carlo_ensemble(config: &SimConfig, n_seeds: usize) -> Result<EnsembleSummary> {
    monte_carlo_ensemble_with(config, n_seeds, Execution::default())
}

/// Runs `n_seeds` independent simulations with seeds split from `config.seed`.
pub fn monte_carlo_ensemble_with(config: &SimConfig, n_seeds: usize, exec: Execution) -> Result<EnsembleSummary> {
    if n_seeds < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: n_seeds,
        });
    }
    config.validate()?;
    let indices: Vec<u64> = (0..n_seeds as u64).collect();
    let results = map_ordered(&indices, exec, |&i| run_member(config, i));

    let mut paths = Vec::with_capacity(n_seeds);
    let mut errors = Vec::new();
    for (i, r) in indices.iter().zip(results) {
        match r {
            Ok(p) => paths.push(p),
            Err(e) => errors.push((*i, e.to_string())),
        }
    }
    if paths.is_empty() {
        return Err(Error::Inconsistent(format!("all {n_seeds} ensemble runs failed")));
    }

    let n_ok = paths.len() as f64;
    let extinctions: Vec<u64> = paths.iter().filter_map(|p| p.extinction_time).collect();
    let ext_f: Vec<f64> = extinctions.iter().map(|&t| t as f64).collect();
    let growth: Vec<f64> = paths.iter().filter_map(|p| p.log_growth).collect();
    let growth_mean = stats::mean(&growth);
    let growth_sd = stats::std_dev(&growth);
    let growth_ci95 = growth_mean.zip(growth_sd).map(|(m, sd)| {
        let half = 1.96 * sd / (growth.len() as f64).sqrt();
        (m - half, m + half)
    });
    let alphas: Vec<f64> = paths.iter().map(|p| p.terminal_alpha).collect();

    Ok(EnsembleSummary {
        n_seeds,
        n_failed: errors.len(),
        failure_flagged: errors.len() as f64 > FAILURE_FLAG_FRACTION * n_seeds as f64,
        extinction_min: extinctions.iter().min().copied(),
        extinction_median: stats::median(&ext_f),
        extinction_max: extinctions.iter().max().copied(),
        extinction_fraction: extinctions.len() as f64 / n_ok,
        growth_mean,
        growth_sd,
        growth_ci95,
        terminal_alpha_min: alphas.iter().copied().fold(f64::INFINITY, f64::min),
        terminal_alpha_mean: stats::mean(&alphas).unwrap_or(f64::NAN),
        terminal_alpha_max: alphas.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        truncations: paths.iter().map(|p| p.truncations).sum(),
        reentry_fraction: paths.iter().filter(|p| p.reentries > 0).count() as f64 / n_ok,
        yield_decay_fraction: paths
            .iter()
            .filter(|p| p.log_yield_slope.is_some_and(|s| s < 0.0))
            .count() as f64
            / n_ok,
        paths,
        errors,
    })
}
