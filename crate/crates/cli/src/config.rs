//! Run configuration shared by all subcommands.
//!
//! Every field has a `key=value` spelling; flags and config files go through
//! the same [`RunConfig::set`], so a file and the equivalent flags agree.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use mlg_core::{CouplingSpec, DwellMethod, Family, SearchDomain, TruncationPolicy};
use serde::{Deserialize, Serialize};

/// Which state a command runs on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StateSpec {
    Fock { n: usize },
    Coherent { x0: f64, p0: f64 },
    /// Normalized p̂|n⟩.
    Pstate { n: usize },
}

impl fmt::Display for StateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateSpec::Fock { n } => write!(f, "fock:{n}"),
            StateSpec::Coherent { x0, p0 } => write!(f, "coherent:{x0},{p0}"),
            StateSpec::Pstate { n } => write!(f, "pstate:{n}"),
        }
    }
}

impl FromStr for StateSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, rest) = s.split_once(':').ok_or_else(|| format!("state `{s}` needs the form kind:args"))?;
        let level = || rest.trim().parse::<usize>().map_err(|e| format!("state level `{rest}`: {e}"));
        match kind.trim() {
            "fock" => Ok(StateSpec::Fock { n: level()? }),
            "pstate" => Ok(StateSpec::Pstate { n: level()? }),
            "coherent" => {
                let (x, p) = rest
                    .split_once(',')
                    .ok_or_else(|| format!("coherent state `{rest}` needs x0,p0"))?;
                Ok(StateSpec::Coherent {
                    x0: parse_f64("state x0", x)?,
                    p0: parse_f64("state p0", p)?,
                })
            }
            other => Err(format!("unknown state kind `{other}` (fock, coherent, pstate)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub coupling: CouplingSpec,
    pub omega: f64,
    pub state: StateSpec,
    pub truncation: TruncationPolicy,
    /// Start of the first window.
    pub t1: f64,
    /// ωτ grid: start, end (inclusive) and step.
    pub grid: (f64, f64, f64),
    /// Explicit ωτ values; replaces `grid` when set.
    pub omega_tau: Option<Vec<f64>>,
    pub family: Family,
    pub dwell: DwellMethod,
    pub domain: SearchDomain,
    pub oscillatory: bool,
    pub mapped: bool,
    pub output: Option<PathBuf>,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            coupling: CouplingSpec::Delta,
            omega: 1.0,
            state: StateSpec::Fock { n: 0 },
            truncation: TruncationPolicy::default(),
            t1: 0.0,
            grid: (0.0, std::f64::consts::FRAC_PI_2, std::f64::consts::PI / 80.0),
            omega_tau: None,
            family: Family::Mlg3,
            dwell: DwellMethod::Spectral,
            domain: SearchDomain::default(),
            oscillatory: false,
            mapped: false,
            output: None,
            format: Format::Csv,
        }
    }
}

/// Keys accepted by [`RunConfig::set`], in output order.
pub const KEYS: &[&str] = &[
    "coupling",
    "omega",
    "state",
    "max_level",
    "tail_tol",
    "sum_levels",
    "t1",
    "grid",
    "omega_tau",
    "family",
    "dwell",
    "x0_range",
    "p0_range",
    "grid_nodes",
    "refine_tol",
    "oscillatory",
    "mapped",
    "output",
    "format",
];

fn parse_f64(what: &str, s: &str) -> Result<f64, String> {
    s.trim().parse::<f64>().map_err(|e| format!("{what} `{}`: {e}", s.trim()))
}

fn parse_pair(what: &str, s: &str, sep: char) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(sep).ok_or_else(|| format!("{what} `{s}` needs the form a{sep}b"))?;
    Ok((parse_f64(what, a)?, parse_f64(what, b)?))
}

fn parse_bool(what: &str, s: &str) -> Result<bool, String> {
    match s.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(format!("{what} `{other}` is not a boolean")),
    }
}

fn parse_coupling(s: &str) -> Result<CouplingSpec, String> {
    match s.trim() {
        "delta" => Ok(CouplingSpec::Delta),
        other => {
            let sigma = other
                .strip_prefix("gaussian:")
                .ok_or_else(|| format!("coupling `{other}` must be delta or gaussian:SIGMA"))?;
            CouplingSpec::gaussian(parse_f64("sigma", sigma)?).map_err(|e| e.to_string())
        }
    }
}

impl RunConfig {
    /// Apply one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let v = value.trim();
        match key {
            "coupling" => self.coupling = parse_coupling(v)?,
            "omega" => self.omega = parse_f64("omega", v)?,
            "state" => self.state = v.parse()?,
            "max_level" => self.truncation.max_level = v.parse().map_err(|e| format!("max_level `{v}`: {e}"))?,
            "tail_tol" => self.truncation.tail_tol = parse_f64("tail_tol", v)?,
            "sum_levels" => {
                self.truncation.sum_levels = match v {
                    "auto" => None,
                    n => Some(n.parse().map_err(|e| format!("sum_levels `{n}`: {e}"))?),
                }
            }
            "t1" => self.t1 = parse_f64("t1", v)?,
            "grid" => {
                let parts: Vec<&str> = v.split(':').collect();
                if parts.len() != 3 {
                    return Err(format!("grid `{v}` needs the form start:end:step"));
                }
                self.grid = (
                    parse_f64("grid start", parts[0])?,
                    parse_f64("grid end", parts[1])?,
                    parse_f64("grid step", parts[2])?,
                );
            }
            "omega_tau" => {
                self.omega_tau = if v == "none" {
                    None
                } else if v.is_empty() {
                    return Err("omega_tau list is empty".into());
                } else {
                    Some(v.split(',').map(|x| parse_f64("omega_tau", x)).collect::<Result<_, _>>()?)
                }
            }
            "family" => self.family = v.parse().map_err(|e: mlg_core::Error| e.to_string())?,
            "dwell" => {
                self.dwell = match v {
                    "spectral" => DwellMethod::Spectral,
                    "window_pi" => DwellMethod::WindowPi,
                    other => return Err(format!("dwell `{other}` must be spectral or window_pi")),
                }
            }
            "x0_range" => self.domain.x0_range = parse_pair("x0_range", v, ':')?,
            "p0_range" => self.domain.p0_range = parse_pair("p0_range", v, ':')?,
            "grid_nodes" => {
                let (a, b) = v.split_once('x').ok_or_else(|| format!("grid_nodes `{v}` needs the form NXxNP"))?;
                let n = |s: &str| s.trim().parse::<usize>().map_err(|e| format!("grid_nodes `{v}`: {e}"));
                self.domain.grid = (n(a)?, n(b)?);
            }
            "refine_tol" => self.domain.refine_tol = parse_f64("refine_tol", v)?,
            "oscillatory" => self.oscillatory = parse_bool("oscillatory", v)?,
            "mapped" => self.mapped = parse_bool("mapped", v)?,
            "output" => self.output = if v.is_empty() || v == "-" { None } else { Some(PathBuf::from(v)) },
            "format" => {
                self.format = match v {
                    "csv" => Format::Csv,
                    "json" => Format::Json,
                    other => return Err(format!("format `{other}` must be csv or json")),
                }
            }
            other => return Err(format!("unknown config key `{other}`")),
        }
        Ok(())
    }

    /// Current value of `key` in the spelling [`RunConfig::set`] accepts.
    pub fn get(&self, key: &str) -> String {
        let t = &self.truncation;
        match key {
            "coupling" => self.coupling.to_string(),
            "omega" => self.omega.to_string(),
            "state" => self.state.to_string(),
            "max_level" => t.max_level.to_string(),
            "tail_tol" => t.tail_tol.to_string(),
            "sum_levels" => t.sum_levels.map_or("auto".into(), |k| k.to_string()),
            "t1" => self.t1.to_string(),
            "grid" => format!("{}:{}:{}", self.grid.0, self.grid.1, self.grid.2),
            "omega_tau" => self.omega_tau.as_ref().map_or("none".into(), |v| {
                v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
            }),
            "family" => self.family.to_string(),
            "dwell" => self.dwell.to_string(),
            "x0_range" => format!("{}:{}", self.domain.x0_range.0, self.domain.x0_range.1),
            "p0_range" => format!("{}:{}", self.domain.p0_range.0, self.domain.p0_range.1),
            "grid_nodes" => format!("{}x{}", self.domain.grid.0, self.domain.grid.1),
            "refine_tol" => self.domain.refine_tol.to_string(),
            "oscillatory" => self.oscillatory.to_string(),
            "mapped" => self.mapped.to_string(),
            "output" => self.output.as_ref().map_or("-".into(), |p| p.display().to_string()),
            "format" => match self.format {
                Format::Csv => "csv".into(),
                Format::Json => "json".into(),
            },
            _ => String::new(),
        }
    }

    /// Parse a `key=value` file; blank lines and `#` comments are skipped.
    pub fn apply_file_text(&mut self, text: &str) -> Result<(), String> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("config line {}: expected key=value", i + 1))?;
            self.set(k.trim(), v).map_err(|e| format!("config line {}: {e}", i + 1))?;
        }
        Ok(())
    }

    pub fn to_kv(&self) -> String {
        KEYS.iter().map(|k| format!("{k}={}\n", self.get(k))).collect()
    }

    /// ωτ values to evaluate.
    pub fn omega_tau_values(&self) -> Result<Vec<f64>, String> {
        if let Some(v) = &self.omega_tau {
            if v.is_empty() {
                return Err("omega_tau list is empty".into());
            }
            return Ok(v.clone());
        }
        let (start, end, step) = self.grid;
        if !(step > 0.0 && start.is_finite() && end.is_finite()) {
            return Err(format!("grid step must be positive, got {step}"));
        }
        if end <= start {
            return Err(format!("grid [{start}, {end}] is empty"));
        }
        let count = ((end - start) / step + 1e-9).floor() as usize;
        Ok((0..=count).map(|i| start + i as f64 * step).collect())
    }
}
