//! Flat `key = value` run configuration.
//!
//! Lines are `key = value`; `#` starts a comment. Lists are comma-separated.
//! `--set key=value` overrides are applied after the file, later keys win.

use std::collections::BTreeMap;
use std::fmt::{self, Display};
use std::path::PathBuf;
use std::str::FromStr;

use crate::fading::{FadingModel, Method, QuadRule, TabulatedDensity};
use crate::rates::{DecodingOrder, SystemParams, DEFAULT_BANDWIDTH, DEFAULT_FRAME_DURATION};
use crate::region::Strategy;

use super::CliError;

/// Subcommand selected on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Region,
    Sumrate,
    Power,
    Validate,
    Effcap,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Region => "region",
            Command::Sumrate => "sumrate",
            Command::Power => "power",
            Command::Validate => "validate",
            Command::Effcap => "effcap",
        }
    }
}

/// Average SNR as written in the configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum SnrSpec {
    Db(Vec<f64>),
    Linear(Vec<f64>),
}

impl SnrSpec {
    /// Linear SNR, `10^(dB/10)` for dB input.
    pub fn linear(&self) -> Vec<f64> {
        match self {
            SnrSpec::Db(v) => v.iter().map(|db| 10f64.powf(db / 10.0)).collect(),
            SnrSpec::Linear(v) => v.clone(),
        }
    }

    fn len(&self) -> usize {
        match self {
            SnrSpec::Db(v) | SnrSpec::Linear(v) => v.len(),
        }
    }
}

/// Fading distribution shared by all users.
#[derive(Debug, Clone, PartialEq)]
pub enum FadingSpec {
    /// Exponential power gains with per-user means.
    Rayleigh { mean_gain: Vec<f64> },
    /// Piecewise-linear density read from a two-column CSV file `z,p`.
    Tabulated { table: PathBuf },
}

/// Evaluation method for expectations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodKind {
    Graded,
    Laguerre,
    MonteCarlo,
}

impl MethodKind {
    fn label(&self) -> &'static str {
        match self {
            MethodKind::Graded => "graded",
            MethodKind::Laguerre => "laguerre",
            MethodKind::MonteCarlo => "monte-carlo",
        }
    }
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub frame_duration: f64,
    pub bandwidth: f64,
    pub snr: SnrSpec,
    pub theta: Vec<f64>,
    pub fading: FadingSpec,
    pub method: MethodKind,
    pub laguerre_nodes: usize,
    pub samples: u64,
    pub seed: u64,
    pub strategies: Vec<Strategy>,
    pub points: usize,
    pub theta_min: f64,
    pub theta_max: f64,
    pub theta_points: usize,
    /// Decoding order, 1-based.
    pub order: Vec<usize>,
    pub tolerance: f64,
    pub policy_z_max: f64,
    pub policy_points: usize,
    /// Validated user, 1-based.
    pub user: usize,
    pub frames: u64,
    /// Arrival rates as multiples of the user's effective capacity.
    pub arrival_factors: Vec<f64>,
    pub window: (f64, f64),
    pub batches: usize,
}

const KEYS: &[&str] = &[
    "frame_duration",
    "bandwidth",
    "snr_db",
    "snr",
    "theta",
    "fading",
    "mean_gain",
    "fading_table",
    "method",
    "laguerre_nodes",
    "samples",
    "seed",
    "strategies",
    "points",
    "theta_min",
    "theta_max",
    "theta_points",
    "order",
    "tolerance",
    "policy_z_max",
    "policy_points",
    "user",
    "frames",
    "arrival_factors",
    "window",
    "batches",
];

fn config_error(key: &str, reason: impl Display) -> CliError {
    CliError::config(format!("config key `{key}`: {reason}"))
}

fn parse_one<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: Display,
{
    value.trim().parse::<T>().map_err(|e| config_error(key, format!("cannot parse {value:?}: {e}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, CliError>
where
    T::Err: Display,
{
    let items: Vec<&str> = value.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err(config_error(key, "empty list"));
    }
    items.into_iter().map(|v| parse_one(key, v)).collect()
}

/// Splits configuration text into `(key, value)` pairs in order.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut pairs = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("line {}: expected `key = value`, got {raw:?}", n + 1)))?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

/// Parses one `key=value` override.
pub fn parse_override(s: &str) -> Result<(String, String), CliError> {
    let (k, v) = s.split_once('=').ok_or_else(|| CliError::config(format!("override {s:?} is not `key=value`")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

impl RunConfig {
    /// Builds a configuration from file text plus overrides.
    pub fn from_text(text: &str, overrides: &[(String, String)]) -> Result<Self, CliError> {
        let mut pairs = parse_pairs(text)?;
        pairs.extend(overrides.iter().cloned());
        Self::from_pairs(&pairs)
    }

    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self, CliError> {
        let mut map: BTreeMap<&str, &str> = BTreeMap::new();
        for (k, v) in pairs {
            let key = KEYS
                .iter()
                .find(|known| **known == k.as_str())
                .ok_or_else(|| CliError::config(format!("unknown config key `{k}`")))?;
            // the two SNR spellings replace each other
            match *key {
                "snr" => {
                    map.remove("snr_db");
                }
                "snr_db" => {
                    map.remove("snr");
                }
                _ => {}
            }
            map.insert(key, v.as_str());
        }
        let get = |k: &str| map.get(k).copied();

        let snr = match (get("snr_db"), get("snr")) {
            (Some(v), None) => SnrSpec::Db(parse_list("snr_db", v)?),
            (None, Some(v)) => SnrSpec::Linear(parse_list("snr", v)?),
            _ => return Err(CliError::config("config needs `snr_db` or `snr`")),
        };
        let users = snr.len();
        let broadcast = |key: &str, v: Vec<f64>| -> Result<Vec<f64>, CliError> {
            match v.len() {
                1 => Ok(vec![v[0]; users]),
                n if n == users => Ok(v),
                n => Err(config_error(key, format!("{n} values for {users} users"))),
            }
        };
        let theta = broadcast("theta", parse_list("theta", get("theta").ok_or_else(|| config_error("theta", "missing"))?)?)?;
        let fading = match get("fading").unwrap_or("rayleigh") {
            "rayleigh" => FadingSpec::Rayleigh {
                mean_gain: broadcast("mean_gain", get("mean_gain").map_or(Ok(vec![1.0]), |v| parse_list("mean_gain", v))?)?,
            },
            "tabulated" => FadingSpec::Tabulated {
                table: PathBuf::from(get("fading_table").ok_or_else(|| config_error("fading_table", "missing"))?),
            },
            other => return Err(config_error("fading", format!("expected rayleigh or tabulated, got {other:?}"))),
        };
        let method = match get("method").unwrap_or("graded") {
            "graded" => MethodKind::Graded,
            "laguerre" => MethodKind::Laguerre,
            "monte-carlo" => MethodKind::MonteCarlo,
            other => return Err(config_error("method", format!("expected graded, laguerre or monte-carlo, got {other:?}"))),
        };
        let strategies = match get("strategies") {
            Some(v) => v
                .split(',')
                .map(|s| s.trim().parse::<Strategy>().map_err(|e| config_error("strategies", e)))
                .collect::<Result<Vec<_>, _>>()?,
            None => Strategy::ALL.to_vec(),
        };
        let window = match get("window") {
            Some(v) => {
                let w: Vec<f64> = parse_list("window", v)?;
                if w.len() != 2 {
                    return Err(config_error("window", "expected two quantiles"));
                }
                (w[0], w[1])
            }
            None => crate::queue::DEFAULT_WINDOW,
        };
        let or = |k: &str, d: &str| get(k).unwrap_or(d).to_string();
        let config = RunConfig {
            frame_duration: parse_one("frame_duration", &or("frame_duration", &DEFAULT_FRAME_DURATION.to_string()))?,
            bandwidth: parse_one("bandwidth", &or("bandwidth", &DEFAULT_BANDWIDTH.to_string()))?,
            snr,
            theta,
            fading,
            method,
            laguerre_nodes: parse_one("laguerre_nodes", &or("laguerre_nodes", "64"))?,
            samples: parse_one("samples", &or("samples", "1000000"))?,
            seed: parse_one("seed", &or("seed", "1"))?,
            strategies,
            points: parse_one("points", &or("points", "81"))?,
            theta_min: parse_one("theta_min", &or("theta_min", "0.0001"))?,
            theta_max: parse_one("theta_max", &or("theta_max", "10"))?,
            theta_points: parse_one("theta_points", &or("theta_points", "11"))?,
            order: match get("order") {
                Some(v) => parse_list("order", v)?,
                None => (1..=users).collect(),
            },
            tolerance: parse_one("tolerance", &or("tolerance", "1e-8"))?,
            policy_z_max: parse_one("policy_z_max", &or("policy_z_max", "5"))?,
            policy_points: parse_one("policy_points", &or("policy_points", "51"))?,
            user: parse_one("user", &or("user", "1"))?,
            frames: parse_one("frames", &or("frames", "10000000"))?,
            arrival_factors: match get("arrival_factors") {
                Some(v) => parse_list("arrival_factors", v)?,
                None => vec![1.0],
            },
            window,
            batches: parse_one("batches", &or("batches", "20"))?,
        };
        config.validate()?;
        Ok(config)
    }

    /// Field-level validation beyond parsing.
    pub fn validate(&self) -> Result<(), CliError> {
        self.system().map_err(|e| CliError::config(e.to_string()))?;
        if let FadingSpec::Rayleigh { mean_gain } = &self.fading {
            if let Some(m) = mean_gain.iter().find(|m| !(**m > 0.0 && m.is_finite())) {
                return Err(config_error("mean_gain", format!("must be positive, got {m}")));
            }
        }
        DecodingOrder::from_one_based(&self.order).map_err(|e| config_error("order", e))?;
        if self.order.len() != self.users() {
            return Err(config_error("order", format!("must list all {} users", self.users())));
        }
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(config_error(key, format!("must be positive, got {v}")))
            }
        };
        positive("theta_min", self.theta_min)?;
        positive("theta_max", self.theta_max)?;
        positive("tolerance", self.tolerance)?;
        positive("policy_z_max", self.policy_z_max)?;
        if self.theta_max <= self.theta_min && self.theta_points > 1 {
            return Err(config_error("theta_max", "must exceed theta_min"));
        }
        if self.theta_points == 0 || self.points < 2 || self.policy_points < 2 {
            return Err(config_error("points", "grids need at least two points"));
        }
        if self.samples < 2 {
            return Err(config_error("samples", "need at least two samples"));
        }
        if self.laguerre_nodes < 2 {
            return Err(config_error("laguerre_nodes", "need at least two nodes"));
        }
        if self.strategies.is_empty() {
            return Err(config_error("strategies", "empty list"));
        }
        if !(1..=self.users()).contains(&self.user) {
            return Err(config_error("user", format!("must be in 1..={}", self.users())));
        }
        if let Some(f) = self.arrival_factors.iter().find(|f| !(**f >= 0.0 && f.is_finite())) {
            return Err(config_error("arrival_factors", format!("must be nonnegative, got {f}")));
        }
        if !(0.0 <= self.window.0 && self.window.0 < self.window.1 && self.window.1 < 1.0) {
            return Err(config_error("window", "quantiles must satisfy 0 ≤ lo < hi < 1"));
        }
        if self.batches < crate::queue::DEFAULT_BATCHES {
            return Err(config_error("batches", format!("need at least {}", crate::queue::DEFAULT_BATCHES)));
        }
        Ok(())
    }

    pub fn users(&self) -> usize {
        self.snr.len()
    }

    pub fn system(&self) -> crate::Result<SystemParams> {
        SystemParams::new(self.frame_duration, self.bandwidth, self.snr.linear(), self.theta.clone())
    }

    pub fn models(&self) -> Result<Vec<FadingModel>, CliError> {
        match &self.fading {
            FadingSpec::Rayleigh { mean_gain } => mean_gain
                .iter()
                .map(|&m| FadingModel::rayleigh_with_mean(m).map_err(|e| config_error("mean_gain", e)))
                .collect(),
            FadingSpec::Tabulated { table } => {
                let text = std::fs::read_to_string(table)
                    .map_err(|e| config_error("fading_table", format!("{}: {e}", table.display())))?;
                let (mut z, mut p) = (Vec::new(), Vec::new());
                for (n, line) in text.lines().enumerate() {
                    let line = line.trim();
                    if line.is_empty() || line.starts_with('#') || line.starts_with('z') {
                        continue;
                    }
                    let cols: Vec<f64> = parse_list("fading_table", line)
                        .map_err(|e| config_error("fading_table", format!("line {}: {e}", n + 1)))?;
                    if cols.len() != 2 {
                        return Err(config_error("fading_table", format!("line {}: expected `z,p`", n + 1)));
                    }
                    z.push(cols[0]);
                    p.push(cols[1]);
                }
                let density = TabulatedDensity::from_points(z, p).map_err(|e| config_error("fading_table", e))?;
                Ok(vec![FadingModel::Tabulated(density); self.users()])
            }
        }
    }

    pub fn decoding_order(&self) -> DecodingOrder {
        DecodingOrder::from_one_based(&self.order).expect("validated")
    }

    /// Method used for expectations.
    pub fn method(&self) -> Method {
        match self.method {
            MethodKind::Graded => Method::Quadrature(QuadRule::Graded),
            MethodKind::Laguerre => Method::Quadrature(QuadRule::GaussLaguerre(self.laguerre_nodes)),
            MethodKind::MonteCarlo => Method::monte_carlo(self.samples, self.seed),
        }
    }

    /// Log-spaced `θ` grid for sum-rate sweeps.
    pub fn theta_grid(&self) -> Vec<f64> {
        if self.theta_points == 1 {
            return vec![self.theta_min];
        }
        let (a, b) = (self.theta_min.log10(), self.theta_max.log10());
        let n = self.theta_points - 1;
        (0..=n).map(|i| 10f64.powf(a + (b - a) * i as f64 / n as f64)).collect()
    }

    /// Canonical `key = value` lines; parsing them reproduces `self`.
    pub fn echo(&self) -> Vec<String> {
        fn list<T: Display>(v: &[T]) -> String {
            v.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
        }
        let mut out = vec![format!("frame_duration = {}", self.frame_duration), format!("bandwidth = {}", self.bandwidth)];
        out.push(match &self.snr {
            SnrSpec::Db(v) => format!("snr_db = {}", list(v)),
            SnrSpec::Linear(v) => format!("snr = {}", list(v)),
        });
        out.push(format!("theta = {}", list(&self.theta)));
        match &self.fading {
            FadingSpec::Rayleigh { mean_gain } => {
                out.push("fading = rayleigh".into());
                out.push(format!("mean_gain = {}", list(mean_gain)));
            }
            FadingSpec::Tabulated { table } => {
                out.push("fading = tabulated".into());
                out.push(format!("fading_table = {}", table.display()));
            }
        }
        out.push(format!("method = {}", self.method.label()));
        out.push(format!("laguerre_nodes = {}", self.laguerre_nodes));
        out.push(format!("samples = {}", self.samples));
        out.push(format!("seed = {}", self.seed));
        out.push(format!("strategies = {}", list(&self.strategies)));
        out.push(format!("points = {}", self.points));
        out.push(format!("theta_min = {}", self.theta_min));
        out.push(format!("theta_max = {}", self.theta_max));
        out.push(format!("theta_points = {}", self.theta_points));
        out.push(format!("order = {}", list(&self.order)));
        out.push(format!("tolerance = {}", self.tolerance));
        out.push(format!("policy_z_max = {}", self.policy_z_max));
        out.push(format!("policy_points = {}", self.policy_points));
        out.push(format!("user = {}", self.user));
        out.push(format!("frames = {}", self.frames));
        out.push(format!("arrival_factors = {}", list(&self.arrival_factors)));
        out.push(format!("window = {}, {}", self.window.0, self.window.1));
        out.push(format!("batches = {}", self.batches));
        out
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for line in self.echo() {
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}
