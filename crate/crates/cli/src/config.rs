//! Run configuration: built from command-line flags or a TOML file and
//! validated per mode before anything is computed.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Free,
    Single,
    Infq,
    Two,
    OracleCheck,
    Classical,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Free => "free",
            Mode::Single => "single",
            Mode::Infq => "infq",
            Mode::Two => "two",
            Mode::OracleCheck => "oracle-check",
            Mode::Classical => "classical",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// A configuration problem tied to the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: &str, message: impl Into<String>) -> Self {
        ConfigError {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error in `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

/// Logarithmically spaced strengths, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRange {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl LogRange {
    /// Parses `min:max:count`.
    pub fn parse(s: &str) -> Result<Self, ConfigError> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || ConfigError::new("q-log", format!("expected min:max:count, got `{s}`"));
        if parts.len() != 3 {
            return Err(bad());
        }
        Ok(LogRange {
            min: parts[0].trim().parse().map_err(|_| bad())?,
            max: parts[1].trim().parse().map_err(|_| bad())?,
            count: parts[2].trim().parse().map_err(|_| bad())?,
        })
    }

    pub fn values(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![self.min],
            c => {
                let (a, b) = (self.min.ln(), self.max.ln());
                (0..c)
                    .map(|i| (a + (b - a) * i as f64 / (c - 1) as f64).exp())
                    .collect()
            }
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.min > 0.0 && self.max >= self.min && self.max.is_finite()) {
            return Err(ConfigError::new("q-log", "need 0 < min ≤ max < ∞"));
        }
        if self.count == 0 {
            return Err(ConfigError::new("q-log", "count must be at least 1"));
        }
        Ok(())
    }
}

/// Uniform grid of `steps` points on [0, tmax].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub tmax: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn points(&self) -> Vec<f64> {
        ringdefect::homogeneous::uniform_grid(self.tmax, self.steps)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Strengths {
    None,
    List(Vec<f64>),
    Log(LogRange),
}

impl Strengths {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Strengths::None => Vec::new(),
            Strengths::List(v) => v.clone(),
            Strengths::Log(r) => r.values(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classical {
    pub bulk_rate: f64,
    pub barrier_rates: Vec<f64>,
    pub barrier: usize,
}

/// A validated run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub sizes: Vec<usize>,
    pub gamma: f64,
    pub starts: Vec<usize>,
    pub defect_sites: Vec<usize>,
    pub strengths: Strengths,
    pub time: Option<TimeGrid>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub tolerance: f64,
    pub tstar_threshold: f64,
    pub classical: Classical,
}

/// Everything a run can be given, before validation. Flags and TOML files
/// both land here.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub schema_version: Option<u32>,
    pub mode: Option<Mode>,
    #[serde(default)]
    pub sites: Vec<usize>,
    pub gamma: Option<f64>,
    #[serde(default)]
    pub n0: Vec<usize>,
    #[serde(default)]
    pub nd: Vec<usize>,
    #[serde(default)]
    pub q: Vec<f64>,
    pub q_log: Option<LogRange>,
    pub tmax: Option<f64>,
    pub tsteps: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub tolerance: Option<f64>,
    pub tstar_threshold: Option<f64>,
    pub bulk_rate: Option<f64>,
    #[serde(default)]
    pub barrier_rates: Vec<f64>,
    pub barrier: Option<usize>,
}

pub const DEFAULT_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_TSTAR_THRESHOLD: f64 = 0.01;
pub const DEFAULT_BARRIER_FRACTIONS: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

impl RawConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig =
            toml::from_str(s).map_err(|e| ConfigError::new("config", e.to_string()))?;
        match raw.schema_version {
            Some(SCHEMA_VERSION) => Ok(raw),
            Some(v) => Err(ConfigError::new(
                "schema_version",
                format!("unsupported version {v}, expected {SCHEMA_VERSION}"),
            )),
            None => Err(ConfigError::new("schema_version", "missing")),
        }
    }

    pub fn from_toml_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("config", format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(self) -> Result<RunConfig, ConfigError> {
        let mode = self
            .mode
            .ok_or_else(|| ConfigError::new("mode", "missing"))?;
        let gamma = self.gamma.unwrap_or(1.0);
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(ConfigError::new("gamma", "must be positive and finite"));
        }
        if self.sites.is_empty() {
            return Err(ConfigError::new("N", "missing"));
        }
        if let Some(&n) = self.sites.iter().find(|&&n| n < 3) {
            return Err(ConfigError::new(
                "N",
                format!("ring needs at least 3 sites, got {n}"),
            ));
        }
        if mode != Mode::Free && self.sites.len() != 1 {
            return Err(ConfigError::new(
                "N",
                "exactly one size expected in this mode",
            ));
        }
        let n = self.sites[0];
        let tolerance = self.tolerance.unwrap_or(DEFAULT_TOLERANCE);
        if tolerance.is_nan() || tolerance <= 0.0 {
            return Err(ConfigError::new("tolerance", "must be positive"));
        }
        let tstar_threshold = self.tstar_threshold.unwrap_or(DEFAULT_TSTAR_THRESHOLD);
        if !(tstar_threshold > 0.0 && tstar_threshold < 0.5) {
            return Err(ConfigError::new("tstar-threshold", "must lie in (0, 0.5)"));
        }

        let time = match (self.tmax, self.tsteps) {
            (None, None) => None,
            (tmax, steps) => {
                let tmax = tmax.unwrap_or(n as f64 / gamma);
                let steps = steps.unwrap_or(101);
                if !(tmax >= 0.0 && tmax.is_finite()) {
                    return Err(ConfigError::new("tmax", "must be finite and non-negative"));
                }
                if steps == 0 {
                    return Err(ConfigError::new("tsteps", "must be at least 1"));
                }
                Some(TimeGrid { tmax, steps })
            }
        };

        let strengths = match (self.q.is_empty(), self.q_log) {
            (true, None) => Strengths::None,
            (false, None) => Strengths::List(self.q.clone()),
            (true, Some(r)) => {
                r.validate()?;
                Strengths::Log(r)
            }
            (false, Some(_)) => {
                return Err(ConfigError::new(
                    "q",
                    "give either --q or --q-log, not both",
                ))
            }
        };
        if let Strengths::List(v) = &strengths {
            if v.iter().any(|q| !q.is_finite()) {
                return Err(ConfigError::new("q", "strengths must be finite"));
            }
        }
        if matches!(strengths, Strengths::Log(_)) && !matches!(mode, Mode::Single | Mode::Two) {
            return Err(ConfigError::new(
                "q-log",
                "strength sweeps are only valid in single and two modes",
            ));
        }

        for &s in self.n0.iter().chain(&self.nd) {
            if s >= n {
                return Err(ConfigError::new(
                    "n0/nd",
                    format!("site {s} outside 0..{n}"),
                ));
            }
        }
        let mut sorted = self.nd.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(ConfigError::new("nd", "defect sites must be distinct"));
        }

        let want_start = |starts: &[usize]| -> Result<Vec<usize>, ConfigError> {
            match starts.len() {
                1 => Ok(starts.to_vec()),
                0 => Err(ConfigError::new("n0", "missing")),
                _ => Err(ConfigError::new(
                    "n0",
                    "exactly one start site expected in this mode",
                )),
            }
        };
        let unused = |cond: bool, field: &str| -> Result<(), ConfigError> {
            if cond {
                Err(ConfigError::new(
                    field,
                    format!("not used in {} mode", mode.name()),
                ))
            } else {
                Ok(())
            }
        };

        let starts = match mode {
            Mode::Free => {
                unused(!self.nd.is_empty(), "nd")?;
                unused(strengths != Strengths::None, "q")?;
                if self.n0.len() > 1 {
                    return Err(ConfigError::new(
                        "n0",
                        "at most one start site in free mode",
                    ));
                }
                self.n0.clone()
            }
            Mode::Single => {
                if self.nd.len() != 1 {
                    return Err(ConfigError::new(
                        "nd",
                        "single mode needs exactly one defect site",
                    ));
                }
                if strengths == Strengths::None {
                    return Err(ConfigError::new("q", "single mode needs --q or --q-log"));
                }
                want_start(&self.n0)?
            }
            Mode::Infq => {
                if self.nd.len() != 1 {
                    return Err(ConfigError::new(
                        "nd",
                        "infq mode needs exactly one defect site",
                    ));
                }
                unused(strengths != Strengths::None, "q")?;
                want_start(&self.n0)?
            }
            Mode::Two => {
                if self.nd.len() != 2 {
                    return Err(ConfigError::new(
                        "nd",
                        "two mode needs exactly two defect sites",
                    ));
                }
                if let Strengths::List(v) = &strengths {
                    if v.len() != 2 {
                        return Err(ConfigError::new(
                            "q",
                            "two mode needs exactly two strengths (or --q-log)",
                        ));
                    }
                }
                if strengths == Strengths::None {
                    return Err(ConfigError::new(
                        "q",
                        "two mode needs --q q1 --q q2 or --q-log",
                    ));
                }
                want_start(&self.n0)?
            }
            Mode::OracleCheck => {
                if strengths.values().len() != self.nd.len() {
                    return Err(ConfigError::new(
                        "q",
                        "oracle-check needs one strength per defect site",
                    ));
                }
                want_start(&self.n0)?
            }
            Mode::Classical => {
                unused(!self.nd.is_empty(), "nd")?;
                unused(strengths != Strengths::None, "q")?;
                if self.n0.is_empty() {
                    vec![0]
                } else {
                    self.n0.clone()
                }
            }
        };

        let bulk_rate = self.bulk_rate.unwrap_or(1.0);
        let barrier_rates = if self.barrier_rates.is_empty() {
            DEFAULT_BARRIER_FRACTIONS
                .iter()
                .map(|f| f * bulk_rate)
                .collect()
        } else {
            self.barrier_rates.clone()
        };
        if mode == Mode::Classical {
            if !(bulk_rate > 0.0 && bulk_rate.is_finite()) {
                return Err(ConfigError::new("bulk-rate", "must be positive and finite"));
            }
            if barrier_rates.iter().any(|&f| !(f > 0.0 && f <= bulk_rate)) {
                return Err(ConfigError::new("barrier-rate", "need 0 < f ≤ F"));
            }
            if self.barrier.is_some_and(|b| b >= n) {
                return Err(ConfigError::new(
                    "barrier",
                    format!("bond index outside 0..{n}"),
                ));
            }
        }

        Ok(RunConfig {
            mode,
            sizes: self.sites.clone(),
            gamma,
            starts,
            defect_sites: self.nd.clone(),
            strengths,
            time,
            out: self.out.clone(),
            format: self.format.unwrap_or_default(),
            tolerance,
            tstar_threshold,
            classical: Classical {
                bulk_rate,
                barrier_rates,
                barrier: self.barrier.unwrap_or(0),
            },
        })
    }
}
