//! Flat `key = value` run configuration.
//!
//! Economic parameters never default; solver, simulation and output keys do.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use posmacro::dynamics::{ReturnModel, SimConfig, DEFAULT_GROWTH_WINDOW};
use posmacro::heterogeneous::HeterogeneousParams;
use posmacro::homogeneous::MarketParams;
use posmacro::{heterogeneous, homogeneous};

use crate::output::Cell;

pub const ECONOMIC_KEYS: [&str; 6] = ["total_supply", "investor_share", "mu_r", "sigma_r", "c", "gamma"];

/// Every accepted key, in documentation order.
pub const KNOWN_KEYS: [&str; 27] = [
    "total_supply",
    "investor_share",
    "mu_r",
    "sigma_r",
    "c",
    "gamma",
    "mu_f",
    "sigma_f",
    "horizon",
    "seed",
    "return_model",
    "record_every",
    "growth_window",
    "n_seeds",
    "tol",
    "eps_critical",
    "format",
    "path",
    "precision",
    "wealth_min",
    "wealth_max",
    "per_decade",
    "fit_decades",
    "delta_min",
    "delta_max",
    "delta_points",
    "fd_step",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(n) => write!(f, "config line {n}: {}", self.message),
            None => write!(f, "config: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("expected csv or json, got {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReturnKind {
    Normal,
    Deterministic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub total_supply: f64,
    pub investor_share: f64,
    pub mu_r: f64,
    pub sigma_r: f64,
    pub c: f64,
    pub gamma: f64,
    pub mu_f: f64,
    pub sigma_f: f64,

    pub horizon: u64,
    pub seed: u64,
    pub return_model: ReturnKind,
    pub record_every: u64,
    pub growth_window: f64,
    pub n_seeds: usize,

    /// `None` means each solver's own default.
    pub tol: Option<f64>,
    pub eps_critical: f64,

    pub format: Format,
    pub path: Option<String>,
    /// Significant digits; `None` is shortest round-trip.
    pub precision: Option<usize>,

    pub wealth_min: f64,
    pub wealth_max: f64,
    pub per_decade: usize,
    pub fit_decades: f64,
    pub delta_min: f64,
    pub delta_max: f64,
    pub delta_points: usize,
    /// Half-width of the central difference in `mu_r`.
    pub fd_step: f64,
}

struct Entry {
    line: usize,
    value: String,
}

fn err(line: Option<usize>, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        message: message.into(),
    }
}

struct Entries(BTreeMap<&'static str, Entry>);

impl Entries {
    fn get<T: FromStr>(&self, key: &str) -> Result<Option<(T, usize)>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        let Some(e) = self.0.get(key) else {
            return Ok(None);
        };
        e.value
            .parse::<T>()
            .map(|v| Some((v, e.line)))
            .map_err(|x| err(Some(e.line), format!("{key}: cannot parse {:?}: {x}", e.value)))
    }

    fn or<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        Ok(self.get(key)?.map_or(default, |(v, _)| v))
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.0.get(key).map(|e| e.line)
    }

    /// Parses an f64 and checks it with `ok`, naming the key on failure.
    fn num(&self, key: &str, default: f64, ok: impl Fn(f64) -> bool, what: &str) -> Result<f64, ConfigError> {
        let v = self.or(key, default)?;
        if !ok(v) {
            return Err(err(self.line(key), format!("{key} = {v}: {what}")));
        }
        Ok(v)
    }
}

fn positive(v: f64) -> bool {
    v > 0.0 && v.is_finite()
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let n = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(Some(n), format!("expected `key = value`, got {content:?}")))?;
        let key = key.trim();
        let value = value.trim();
        let known = KNOWN_KEYS
            .iter()
            .find(|&&k| k == key)
            .ok_or_else(|| err(Some(n), format!("unknown key {key:?}")))?;
        if value.is_empty() {
            return Err(err(Some(n), format!("{key}: empty value")));
        }
        if let Some(prev) = map.insert(
            *known,
            Entry {
                line: n,
                value: value.to_string(),
            },
        ) {
            return Err(err(
                Some(n),
                format!("{key}: duplicate (first set on line {})", prev.line),
            ));
        }
    }
    let e = Entries(map);

    let missing: Vec<&str> = ECONOMIC_KEYS.iter().copied().filter(|k| !e.0.contains_key(k)).collect();
    if !missing.is_empty() {
        return Err(err(
            None,
            format!("missing economic parameters: {}", missing.join(", ")),
        ));
    }
    let finite = |v: f64| v.is_finite();

    let return_model = match e.or::<String>("return_model", "normal".into())?.as_str() {
        "normal" => ReturnKind::Normal,
        "deterministic" => ReturnKind::Deterministic,
        other => {
            return Err(err(
                e.line("return_model"),
                format!("return_model: expected normal or deterministic, got {other:?}"),
            ))
        }
    };
    let format = e
        .or::<String>("format", "csv".into())?
        .parse()
        .map_err(|m| err(e.line("format"), format!("format: {m}")))?;

    let cfg = RunConfig {
        total_supply: e.num("total_supply", f64::NAN, positive, "must be positive")?,
        investor_share: e.num(
            "investor_share",
            f64::NAN,
            |v| (0.0..=1.0).contains(&v),
            "must lie in [0, 1]",
        )?,
        mu_r: e.num("mu_r", f64::NAN, finite, "must be finite")?,
        sigma_r: e.num("sigma_r", f64::NAN, positive, "must be positive")?,
        c: e.num("c", f64::NAN, positive, "must be positive")?,
        gamma: e.num("gamma", f64::NAN, |v| v >= 0.0 && v.is_finite(), "must be non-negative")?,
        mu_f: e.num("mu_f", 0.0, |v| v >= 0.0 && v.is_finite(), "must be non-negative")?,
        sigma_f: e.num("sigma_f", 0.0, |v| v >= 0.0 && v.is_finite(), "must be non-negative")?,

        horizon: positive_int(&e, "horizon", 10_000)?,
        seed: e.or("seed", 0u64)?,
        return_model,
        record_every: positive_int(&e, "record_every", 1)?,
        growth_window: e.num(
            "growth_window",
            DEFAULT_GROWTH_WINDOW,
            |v| v > 0.0 && v <= 1.0,
            "must lie in (0, 1]",
        )?,
        n_seeds: positive_int(&e, "n_seeds", 200)? as usize,

        tol: match e.get::<f64>("tol")? {
            Some((v, _)) if positive(v) => Some(v),
            Some((v, line)) => return Err(err(Some(line), format!("tol = {v}: must be positive"))),
            None => None,
        },
        eps_critical: e.num(
            "eps_critical",
            homogeneous::DEFAULT_EPS_CRITICAL,
            |v| v >= 0.0,
            "must be non-negative",
        )?,

        format,
        path: e.get::<String>("path")?.map(|(v, _)| v),
        precision: match e.get::<usize>("precision")? {
            Some((p, line)) if !(1..=17).contains(&p) => {
                return Err(err(Some(line), format!("precision = {p}: must lie in 1..=17")))
            }
            p => p.map(|(v, _)| v),
        },

        wealth_min: e.num("wealth_min", 1e8, positive, "must be positive")?,
        wealth_max: e.num("wealth_max", 1e14, positive, "must be positive")?,
        per_decade: positive_int(&e, "per_decade", 1)? as usize,
        fit_decades: e.num("fit_decades", 3.0, positive, "must be positive")?,
        delta_min: e.num("delta_min", -0.01, finite, "must be finite")?,
        delta_max: e.num("delta_max", 0.01, finite, "must be finite")?,
        delta_points: positive_int(&e, "delta_points", 21)? as usize,
        fd_step: e.num("fd_step", 1e-6, positive, "must be positive")?,
    };

    if cfg.wealth_min >= cfg.wealth_max {
        return Err(err(e.line("wealth_max"), "wealth_max must exceed wealth_min"));
    }
    if cfg.delta_min >= cfg.delta_max {
        return Err(err(e.line("delta_max"), "delta_max must exceed delta_min"));
    }
    if cfg.delta_points < 2 {
        return Err(err(e.line("delta_points"), "delta_points must be at least 2"));
    }
    // Cross-checks owned by the library.
    cfg.market().map_err(|x| err(None, x.to_string()))?;
    cfg.economy().map_err(|x| err(None, x.to_string()))?;
    Ok(cfg)
}

fn positive_int(e: &Entries, key: &str, default: u64) -> Result<u64, ConfigError> {
    let v = e.or(key, default)?;
    if v == 0 {
        return Err(err(e.line(key), format!("{key} = 0: must be at least 1")));
    }
    Ok(v)
}

impl RunConfig {
    pub fn sigma_r_sq(&self) -> f64 {
        self.sigma_r * self.sigma_r
    }

    /// Homogeneous market; fee variance is `sigma_f^2`.
    pub fn market(&self) -> posmacro::Result<MarketParams> {
        MarketParams::new(
            self.mu_r,
            self.sigma_r_sq(),
            self.c,
            self.mu_f,
            self.sigma_f * self.sigma_f,
        )
    }

    pub fn economy(&self) -> posmacro::Result<HeterogeneousParams> {
        HeterogeneousParams::from_supply(
            self.total_supply,
            self.investor_share,
            self.gamma,
            self.c,
            self.mu_r,
            self.sigma_r_sq(),
        )
    }

    pub fn return_model(&self) -> ReturnModel {
        match self.return_model {
            ReturnKind::Normal => ReturnModel::Normal {
                mu_r: self.mu_r,
                sigma_r: self.sigma_r,
            },
            ReturnKind::Deterministic => ReturnModel::Deterministic { mu_r: self.mu_r },
        }
    }

    pub fn homogeneous_tol(&self) -> f64 {
        self.tol.unwrap_or(homogeneous::DEFAULT_TOL)
    }

    pub fn heterogeneous_tol(&self) -> f64 {
        self.tol.unwrap_or(heterogeneous::DEFAULT_TOL)
    }

    pub fn sim_config(&self) -> posmacro::Result<SimConfig> {
        let mut sim = SimConfig::new(self.economy()?, self.horizon, self.seed, self.return_model());
        sim.record_every = self.record_every;
        sim.growth_window = self.growth_window;
        sim.tol = self.heterogeneous_tol();
        Ok(sim)
    }

    /// `(key, value)` pairs for the run-metadata header, in key order.
    pub fn metadata(&self) -> Vec<(&'static str, Cell)> {
        let model = match self.return_model {
            ReturnKind::Normal => "normal",
            ReturnKind::Deterministic => "deterministic",
        };
        vec![
            ("total_supply", self.total_supply.into()),
            ("investor_share", self.investor_share.into()),
            ("mu_r", self.mu_r.into()),
            ("sigma_r", self.sigma_r.into()),
            ("c", self.c.into()),
            ("gamma", self.gamma.into()),
            ("mu_f", self.mu_f.into()),
            ("sigma_f", self.sigma_f.into()),
            ("horizon", self.horizon.into()),
            ("seed", self.seed.into()),
            ("return_model", model.into()),
            ("record_every", self.record_every.into()),
            ("growth_window", self.growth_window.into()),
            ("homogeneous_tol", self.homogeneous_tol().into()),
            ("heterogeneous_tol", self.heterogeneous_tol().into()),
            ("eps_critical", self.eps_critical.into()),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TABLE1: &str = "\
# baseline
total_supply = 1.2e8
investor_share = 0.1
mu_r = 0.05
sigma_r = 0.3   # annualised
c = 150
gamma = 2e6
";

    #[test]
    fn parses_baseline_with_defaults() {
        let cfg = parse_config(TABLE1).unwrap();
        assert_eq!(cfg.total_supply, 1.2e8);
        assert_eq!(cfg.investor_share, 0.1);
        assert_eq!(cfg.sigma_r, 0.3);
        assert_eq!(cfg.gamma, 2e6);
        assert_eq!(cfg.mu_f, 0.0);
        assert_eq!(cfg.horizon, 10_000);
        assert_eq!(cfg.format, Format::Csv);
        assert_eq!(cfg.tol, None);
        assert_eq!(cfg.return_model, ReturnKind::Normal);
    }

    #[test]
    fn empty_file_lists_every_economic_key() {
        let e = parse_config("").unwrap_err();
        for k in ECONOMIC_KEYS {
            assert!(e.message.contains(k), "{e}");
        }
    }

    #[test]
    fn range_and_unknown_key_errors_name_key_and_line() {
        let e = parse_config(&TABLE1.replace("sigma_r = 0.3", "sigma_r = -0.1")).unwrap_err();
        assert!(e.message.contains("sigma_r"));
        assert_eq!(e.line, Some(5));

        let e = parse_config(&format!("{TABLE1}sigma_rr = 1\n")).unwrap_err();
        assert!(e.message.contains("sigma_rr"));
        assert_eq!(e.line, Some(8));

        let e = parse_config(&format!("{TABLE1}horizon = ten\n")).unwrap_err();
        assert!(e.message.contains("horizon"));

        let e = parse_config(&format!("{TABLE1}c = 2\n")).unwrap_err();
        assert!(e.message.contains("duplicate"));

        assert!(parse_config(&format!("{TABLE1}just words\n")).is_err());
        assert!(parse_config(&format!("{TABLE1}precision = 0\n")).is_err());
        assert!(parse_config(&format!("{TABLE1}format = xml\n")).is_err());
    }

    #[test]
    fn economic_parameters_never_default() {
        let e = parse_config(&TABLE1.replace("gamma = 2e6\n", "")).unwrap_err();
        assert!(e.message.contains("gamma"));
        assert!(!e.message.contains("mu_r"));
    }
}
