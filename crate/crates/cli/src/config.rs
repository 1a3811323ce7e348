//! Run configuration: defaults, then a `key = value` file, then flags.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use qvi_core::{ForestParams, Scheme, SolveMethod};

/// Default resolutions for the convergence study.
pub const DEFAULT_DELTAS: [f64; 4] = [0.1, 0.05, 0.025, 0.0125];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ForestParams<f64>,
    pub delta_x: Vec<f64>,
    pub t_horizon: f64,
    pub n_t: usize,
    pub scheme: Scheme,
    pub tol: f64,
    pub solver: SolveMethod,
    pub seed: u64,
    pub out: PathBuf,
    pub cold_start: bool,
    pub terminal_q: bool,
    pub paths: usize,
    /// Start state for simulation; `None` means the replanting level.
    pub x0: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: ForestParams::reference(),
            delta_x: vec![0.1],
            t_horizon: 3.0,
            n_t: 3000,
            scheme: Scheme::Central,
            tol: 1e-8,
            solver: SolveMethod::Direct,
            seed: 1,
            out: PathBuf::from("out"),
            cold_start: false,
            terminal_q: false,
            paths: 10_000,
            x0: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value
        .trim()
        .parse()
        .map_err(|_| ConfigError(format!("cannot parse {key} = '{value}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.trim() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(ConfigError(format!("cannot parse {key} = '{value}' as a boolean"))),
    }
}

/// Comma-separated list of positive resolutions. Empty lists are rejected.
pub fn parse_deltas(value: &str) -> Result<Vec<f64>, ConfigError> {
    let list: Vec<f64> = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse("delta_x", s))
        .collect::<Result<_, _>>()?;
    if list.is_empty() {
        return Err(ConfigError("delta_x list is empty".into()));
    }
    Ok(list)
}

impl RunConfig {
    /// Applies one setting. Keys accept `-` or `_`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let p = &mut self.params;
        match key.trim().replace('-', "_").as_str() {
            "x_max" => p.x_max = parse(key, value)?,
            "replant" | "x_tilde" => p.replant = parse(key, value)?,
            "harvest_cost" | "beta" => p.harvest_cost = parse(key, value)?,
            "replant_cost" | "q" => p.replant_cost = parse(key, value)?,
            "growth" | "mu" => p.growth = parse(key, value)?,
            "volatility" | "sigma" => p.volatility = parse(key, value)?,
            "discount" | "lambda" => p.discount = parse(key, value)?,
            "delta_x" => self.delta_x = parse_deltas(value)?,
            "t_horizon" => self.t_horizon = parse(key, value)?,
            "n_t" => self.n_t = parse(key, value)?,
            "scheme" => self.scheme = value.trim().parse().map_err(ConfigError)?,
            "tol" => self.tol = parse(key, value)?,
            "solver" => self.solver = value.trim().parse().map_err(ConfigError)?,
            "seed" => self.seed = parse(key, value)?,
            "out" => self.out = PathBuf::from(value.trim()),
            "cold_start" => self.cold_start = parse_bool(key, value)?,
            "terminal_q" => self.terminal_q = parse_bool(key, value)?,
            "paths" => self.paths = parse(key, value)?,
            "x0" => self.x0 = Some(parse(key, value)?),
            other => return Err(ConfigError(format!("unknown setting '{other}'"))),
        }
        Ok(())
    }

    /// Applies a `key = value` file; `#` starts a comment.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                ConfigError(format!("{}:{}: expected key = value", path.display(), n + 1))
            })?;
            self.set(k, v)
                .map_err(|e| ConfigError(format!("{}:{}: {e}", path.display(), n + 1)))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.params
            .validate()
            .map_err(|e| ConfigError(e.to_string()))?;
        if self.delta_x.iter().any(|&d| !(d > 0.0)) {
            return Err(ConfigError("delta_x must be positive".into()));
        }
        if !(self.t_horizon > 0.0) {
            return Err(ConfigError("t_horizon must be positive".into()));
        }
        if self.n_t == 0 {
            return Err(ConfigError("n_t must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(ConfigError("tol must be positive".into()));
        }
        if self.paths == 0 {
            return Err(ConfigError("paths must be at least 1".into()));
        }
        Ok(())
    }

    /// Resolved settings as ordered `key=value` pairs.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let p = &self.params;
        let list = self
            .delta_x
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join(",");
        vec![
            ("x_max", p.x_max.to_string()),
            ("replant", p.replant.to_string()),
            ("harvest_cost", p.harvest_cost.to_string()),
            ("replant_cost", p.replant_cost.to_string()),
            ("growth", p.growth.to_string()),
            ("volatility", p.volatility.to_string()),
            ("discount", p.discount.to_string()),
            ("delta_x", list),
            ("t_horizon", self.t_horizon.to_string()),
            ("n_t", self.n_t.to_string()),
            ("scheme", self.scheme.name().to_string()),
            ("tol", self.tol.to_string()),
            ("solver", self.solver.name().to_string()),
            ("seed", self.seed.to_string()),
            ("cold_start", self.cold_start.to_string()),
            ("terminal_q", self.terminal_q.to_string()),
            ("paths", self.paths.to_string()),
            ("x0", self.x0.map_or_else(|| "replant".to_string(), |x| x.to_string())),
        ]
    }

    /// One-line provenance string for file headers.
    pub fn provenance(&self, command: &str) -> String {
        let body = self
            .entries()
            .into_iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(" ");
        format!("qvi {command} {body}")
    }
}
