//! Subcommand bodies: library call in, [`Report`] out.

use posmacro::analysis::{self, DeltaPoint, WealthPoint, CI_METHOD, YIELD_TAIL_WINDOW};
use posmacro::dynamics::{self, EconomyState};
use posmacro::{heterogeneous, homogeneous, rng, Error};

use crate::config::RunConfig;
use crate::output::{Cell, Report};

pub const SIMULATE_COLUMNS: [&str; 11] = [
    "t", "W_i", "W_c", "S", "S_i", "S_c", "L_c", "y", "alpha", "R_t", "corner",
];

fn header(report: &mut Report, command: &str, cfg: &RunConfig) {
    report.meta("artifact", format!("posmacro {}", posmacro::VERSION));
    report.meta("command", command);
    report.meta("rng", rng::RNG_NAME);
    for (k, v) in cfg.metadata() {
        report.meta(k, v);
    }
}

fn error_text<T>(r: &Result<T, Error>) -> Cell {
    match r {
        Ok(_) => Cell::Empty,
        Err(e) => e.to_string().into(),
    }
}

pub fn solve_homogeneous(cfg: &RunConfig) -> posmacro::Result<Report> {
    let params = cfg.market()?;
    let wealth = cfg.total_supply;
    let eq = homogeneous::solve_equilibrium(&params, wealth, cfg.homogeneous_tol())?;
    let (asymptote, regime) = homogeneous::asymptotic_stake(&params, wealth, cfg.eps_critical);

    let mut r = Report::new(vec![
        "W",
        "S_star",
        "x_star",
        "w_star",
        "y_star",
        "boundary",
        "residual",
        "regime",
        "delta",
        "S_asymptotic",
    ]);
    header(&mut r, "solve-homogeneous", cfg);
    r.single = true;
    r.push(vec![
        wealth.into(),
        eq.s_star.into(),
        eq.x_star.into(),
        eq.w_star.into(),
        eq.y_star.into(),
        eq.boundary.into(),
        eq.residual.into(),
        regime.kind.as_str().into(),
        regime.delta.into(),
        asymptote.into(),
    ]);
    Ok(r)
}

pub fn solve_heterogeneous(cfg: &RunConfig) -> posmacro::Result<Report> {
    let p = cfg.economy()?;
    let eq = heterogeneous::solve_heterogeneous(&p, cfg.heterogeneous_tol())?;
    let mut r = Report::new(vec![
        "W_i",
        "W_c",
        "S",
        "S_i",
        "S_c",
        "L_c",
        "y",
        "corner",
        "residual_mrs",
        "residual_clearance",
    ]);
    header(&mut r, "solve-heterogeneous", cfg);
    r.single = true;
    r.push(vec![
        p.w_i.into(),
        p.w_c.into(),
        eq.s.into(),
        eq.s_i.into(),
        eq.s_c.into(),
        eq.l_c.into(),
        eq.y.into(),
        eq.corner.into(),
        eq.residual_mrs.into(),
        eq.residual_clearance.into(),
    ]);
    Ok(r)
}

fn state_row(s: &EconomyState) -> Vec<Cell> {
    vec![
        s.t.into(),
        s.w_i.into(),
        s.w_c.into(),
        s.s.into(),
        s.s_i.into(),
        s.s_c.into(),
        s.l_c.into(),
        s.y.into(),
        s.alpha().into(),
        s.r_t.into(),
        s.corner.into(),
    ]
}

pub fn simulate(cfg: &RunConfig) -> posmacro::Result<Report> {
    let config = cfg.sim_config()?;
    let traj = dynamics::simulate(&config)?;
    let mut r = Report::new(SIMULATE_COLUMNS.to_vec());
    header(&mut r, "simulate", cfg);
    for s in &traj.states {
        r.push(state_row(s));
    }
    r.summary("extinction_time", traj.extinction_time);
    r.summary("log_growth", traj.log_growth_estimate);
    r.summary(
        "log_yield_slope",
        dynamics::estimate_log_yield_slope(&traj, YIELD_TAIL_WINDOW).ok(),
    );
    r.summary("consumer_bound", traj.consumer_bound);
    r.summary("truncations", traj.truncations);
    r.summary("reentries", traj.reentries);
    Ok(r)
}

/// Number of trailing grid rows within `decades` of the top of the grid.
fn tail_rows(rows: &[WealthPoint], decades: f64) -> usize {
    let top = rows.last().map_or(0.0, |p| p.wealth);
    let cut = top / 10f64.powf(decades) * (1.0 - 1e-9);
    rows.iter().filter(|p| p.wealth >= cut).count()
}

pub fn sweep_wealth(cfg: &RunConfig) -> posmacro::Result<Report> {
    let params = cfg.market()?;
    let grid = analysis::log_grid(cfg.wealth_min, cfg.wealth_max, cfg.per_decade)?;
    let sweep = analysis::wealth_sweep(&params, &grid, cfg.homogeneous_tol())?;

    let mut r = Report::new(vec!["W", "S_star", "S_over_W", "w_star", "y_star", "boundary", "error"]);
    header(&mut r, "sweep-wealth", cfg);
    for p in &sweep.rows {
        let eq = p.equilibrium.as_ref().ok();
        r.push(vec![
            p.wealth.into(),
            eq.map(|e| e.s_star).into(),
            eq.map(|e| e.s_star / p.wealth).into(),
            eq.map(|e| e.w_star).into(),
            eq.map(|e| e.y_star).into(),
            eq.map(|e| e.boundary).into(),
            error_text(&p.equilibrium),
        ]);
    }
    let tail = tail_rows(&sweep.rows, cfg.fit_decades);
    let regime = homogeneous::classify_regime(&params, cfg.eps_critical);
    r.summary("regime", regime.kind.as_str());
    r.summary("tail_points", tail as u64);
    r.summary("fitted_exponent", analysis::fit_scaling_exponent(&sweep, tail)?);
    Ok(r)
}

pub fn sweep_delta(cfg: &RunConfig) -> posmacro::Result<Report> {
    let params = cfg.market()?;
    let grid = analysis::linear_grid(cfg.delta_min, cfg.delta_max, cfg.delta_points)?;
    let sweep = analysis::delta_sweep(&params, cfg.total_supply, &grid, cfg.fd_step, cfg.homogeneous_tol())?;

    let mut r = Report::new(vec![
        "delta",
        "mu_r",
        "S_star",
        "dS_ddelta_closed",
        "dS_ddelta_fd",
        "rel_diff",
        "error",
    ]);
    header(&mut r, "sweep-delta", cfg);
    r.meta("W", cfg.total_supply);
    r.meta("fd_step", cfg.fd_step);
    let mut worst: Option<f64> = None;
    for DeltaPoint { delta, sample } in &sweep.rows {
        let s = sample.as_ref().ok();
        let rel = s.map(|s| ((s.closed_form - s.finite_difference) / s.closed_form).abs());
        if let Some(x) = rel {
            worst = Some(worst.map_or(x, |w| w.max(x)));
        }
        r.push(vec![
            (*delta).into(),
            s.map(|s| s.mu_r).into(),
            s.map(|s| s.s_star).into(),
            s.map(|s| s.closed_form).into(),
            s.map(|s| s.finite_difference).into(),
            rel.into(),
            error_text(sample),
        ]);
    }
    let stakes: Vec<f64> = sweep
        .rows
        .iter()
        .filter_map(|p| p.sample.as_ref().ok().map(|s| s.s_star))
        .collect();
    r.summary("points_solved", stakes.len() as u64);
    r.summary("strictly_decreasing", stakes.windows(2).all(|w| w[1] < w[0]));
    r.summary("max_rel_diff", worst);
    Ok(r)
}

pub fn ensemble(cfg: &RunConfig) -> posmacro::Result<Report> {
    let config = cfg.sim_config()?;
    let summary = analysis::monte_carlo_ensemble(&config, cfg.n_seeds)?;

    let mut r = Report::new(vec![
        "index",
        "seed",
        "extinction_time",
        "log_growth",
        "log_yield_slope",
        "terminal_alpha",
        "truncations",
        "reentries",
    ]);
    header(&mut r, "ensemble", cfg);
    r.meta("n_seeds", cfg.n_seeds as u64);
    r.meta("seed_rule", "child_i = splitmix64(seed + (i + 1) * 0x9E3779B97F4A7C15)");
    r.meta("ci_method", CI_METHOD);
    for p in &summary.paths {
        r.push(vec![
            p.index.into(),
            p.seed.into(),
            p.extinction_time.into(),
            p.log_growth.into(),
            p.log_yield_slope.into(),
            p.terminal_alpha.into(),
            p.truncations.into(),
            p.reentries.into(),
        ]);
    }
    r.summary("n_failed", summary.n_failed as u64);
    r.summary("failure_flagged", summary.failure_flagged);
    r.summary("extinction_fraction", summary.extinction_fraction);
    r.summary("extinction_min", summary.extinction_min);
    r.summary("extinction_median", summary.extinction_median);
    r.summary("extinction_max", summary.extinction_max);
    r.summary("growth_mean", summary.growth_mean);
    r.summary("growth_sd", summary.growth_sd);
    r.summary("growth_ci95_lo", summary.growth_ci95.map(|c| c.0));
    r.summary("growth_ci95_hi", summary.growth_ci95.map(|c| c.1));
    r.summary("terminal_alpha_min", summary.terminal_alpha_min);
    r.summary("terminal_alpha_mean", summary.terminal_alpha_mean);
    r.summary("terminal_alpha_max", summary.terminal_alpha_max);
    r.summary("truncations", summary.truncations);
    r.summary("reentry_fraction", summary.reentry_fraction);
    r.summary("yield_decay_fraction", summary.yield_decay_fraction);
    for (i, e) in &summary.errors {
        r.summary(&format!("error_{i}"), e.as_str());
    }
    Ok(r)
}
