//! Flat `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Lists are
//! comma-separated. Every key has a default, so an empty file is valid.
//!
//! | key | meaning |
//! |---|---|
//! | `mode` | `geometric` or `uniform` |
//! | `m` | domain dimension, 1 or 2 |
//! | `resolution` | nodes per axis, odd and at least 3 |
//! | `q` | values per point |
//! | `preset`, `params` | initial data, see `qflow_core::Preset` |
//! | `h` | base step of the geometric schedule |
//! | `t_final` | end time of the uniform schedule |
//! | `steps` | number of steps N |
//! | `outer_tol`, `max_outer`, `cg_tol`, `cg_iter_factor` | solver options |
//! | `seed` | seed for sampled checks |
//! | `checks` | `all` or a list of check names |
//! | `holder_samples` | random time pairs for the Hölder check |
//! | `sweep_h` | step sizes of the heat sweep |
//! | `sweep_resolutions` | resolutions of the heat sweep |
//! | `negative_control` | `none` or `energy_increase` |
//! | `out` | output directory |

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use qflow_core::morseflow::checks::CHECK_NAMES;
use qflow_core::{Preset, ScheduleMode, SolverOptions};

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("config key `{key}`: {message}")]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(key: &str, message: impl Into<String>) -> Self {
        Self {
            key: key.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NegativeControl {
    None,
    /// Scales the interior values of snapshot `ceil(N/2)` by 1.5.
    EnergyIncrease,
}

impl NegativeControl {
    fn name(self) -> &'static str {
        match self {
            NegativeControl::None => "none",
            NegativeControl::EnergyIncrease => "energy_increase",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub mode: ScheduleMode,
    pub m: usize,
    pub resolution: usize,
    pub q: usize,
    pub preset: Preset,
    pub params: Vec<f64>,
    pub h: f64,
    pub t_final: f64,
    pub steps: usize,
    pub solver: SolverOptions,
    pub seed: u64,
    /// Enabled checks; `None` means all.
    pub checks: Option<Vec<String>>,
    pub holder_samples: usize,
    pub sweep_h: Vec<f64>,
    pub sweep_resolutions: Vec<usize>,
    pub negative_control: NegativeControl,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: ScheduleMode::Uniform,
            m: 1,
            resolution: 201,
            q: 2,
            preset: Preset::SymmetricCos,
            params: Vec::new(),
            h: 0.5,
            t_final: 0.25,
            steps: 64,
            solver: SolverOptions::default(),
            seed: 0,
            checks: None,
            holder_samples: 100,
            sweep_h: vec![0.25 / 16.0, 0.25 / 32.0, 0.25 / 64.0],
            sweep_resolutions: vec![51, 101, 201],
            negative_control: NegativeControl::None,
            out: PathBuf::from("qflow-out"),
        }
    }
}

fn scalar<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value
        .parse()
        .map_err(|_| ConfigError::new(key, format!("cannot parse `{value}`")))
}

fn list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, ConfigError> {
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|v| scalar(key, v.trim())).collect()
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut seen = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::new(
                    line,
                    format!("line {} is not `key = value`", lineno + 1),
                ));
            };
            let (key, value) = (key.trim(), value.trim());
            if seen.contains(&key) {
                return Err(ConfigError::new(key, "given twice"));
            }
            seen.push(key);
            cfg.set(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "mode" => {
                self.mode = value
                    .parse()
                    .map_err(|_| ConfigError::new(key, format!("unknown mode `{value}`")))?
            }
            "m" => self.m = scalar(key, value)?,
            "resolution" => self.resolution = scalar(key, value)?,
            "q" => self.q = scalar(key, value)?,
            "preset" => {
                self.preset = value
                    .parse()
                    .map_err(|_| ConfigError::new(key, format!("unknown preset `{value}`")))?
            }
            "params" => self.params = list(key, value)?,
            "h" => self.h = scalar(key, value)?,
            "t_final" => self.t_final = scalar(key, value)?,
            "steps" => self.steps = scalar(key, value)?,
            "outer_tol" => self.solver.outer_tol = scalar(key, value)?,
            "max_outer" => self.solver.max_outer = scalar(key, value)?,
            "cg_tol" => self.solver.cg_tol = scalar(key, value)?,
            "cg_iter_factor" => self.solver.cg_iter_factor = scalar(key, value)?,
            "seed" => self.seed = scalar(key, value)?,
            "checks" => {
                self.checks = if value == "all" {
                    None
                } else {
                    Some(list::<String>(key, value)?)
                }
            }
            "holder_samples" => self.holder_samples = scalar(key, value)?,
            "sweep_h" => self.sweep_h = list(key, value)?,
            "sweep_resolutions" => self.sweep_resolutions = list(key, value)?,
            "negative_control" => {
                self.negative_control = match value {
                    "none" => NegativeControl::None,
                    "energy_increase" => NegativeControl::EnergyIncrease,
                    other => return Err(ConfigError::new(key, format!("unknown control `{other}`"))),
                }
            }
            "out" => self.out = PathBuf::from(value),
            other => return Err(ConfigError::new(other, "unknown key")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::new(key, format!("must be positive, got {v}")))
            }
        };
        if self.m != 1 && self.m != 2 {
            return Err(ConfigError::new("m", format!("must be 1 or 2, got {}", self.m)));
        }
        check_resolution("resolution", self.resolution)?;
        if self.q == 0 {
            return Err(ConfigError::new("q", "must be positive"));
        }
        if self.steps == 0 {
            return Err(ConfigError::new("steps", "must be at least 1"));
        }
        positive("h", self.h)?;
        positive("t_final", self.t_final)?;
        positive("outer_tol", self.solver.outer_tol)?;
        positive("cg_tol", self.solver.cg_tol)?;
        if self.solver.max_outer == 0 {
            return Err(ConfigError::new("max_outer", "must be at least 1"));
        }
        if self.solver.cg_iter_factor == 0 {
            return Err(ConfigError::new("cg_iter_factor", "must be at least 1"));
        }
        if let Some(names) = &self.checks {
            if let Some(bad) = names.iter().find(|n| !CHECK_NAMES.contains(&n.as_str())) {
                return Err(ConfigError::new("checks", format!("unknown check `{bad}`")));
            }
        }
        if self.sweep_h.is_empty() {
            return Err(ConfigError::new("sweep_h", "needs at least one value"));
        }
        for &h in &self.sweep_h {
            positive("sweep_h", h)?;
            sweep_steps(self.t_final, h)?;
        }
        if self.sweep_resolutions.is_empty() {
            return Err(ConfigError::new("sweep_resolutions", "needs at least one value"));
        }
        for &r in &self.sweep_resolutions {
            check_resolution("sweep_resolutions", r)?;
        }
        if self.mode == ScheduleMode::Geometric && qflow_core::StepSchedule::geometric(self.h, self.steps).is_err() {
            return Err(ConfigError::new("steps", "h / 2^steps underflows"));
        }
        Ok(())
    }

    /// Writes every key, so that `parse(serialize(c)) == c`.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let checks = match &self.checks {
            None => "all".to_string(),
            Some(names) => names.join(","),
        };
        let pairs: [(&str, String); 20] = [
            ("mode", self.mode.to_string()),
            ("m", self.m.to_string()),
            ("resolution", self.resolution.to_string()),
            ("q", self.q.to_string()),
            ("preset", self.preset.to_string()),
            ("params", join(&self.params)),
            ("h", self.h.to_string()),
            ("t_final", self.t_final.to_string()),
            ("steps", self.steps.to_string()),
            ("outer_tol", self.solver.outer_tol.to_string()),
            ("max_outer", self.solver.max_outer.to_string()),
            ("cg_tol", self.solver.cg_tol.to_string()),
            ("cg_iter_factor", self.solver.cg_iter_factor.to_string()),
            ("seed", self.seed.to_string()),
            ("checks", checks),
            ("holder_samples", self.holder_samples.to_string()),
            ("sweep_h", join(&self.sweep_h)),
            ("sweep_resolutions", join(&self.sweep_resolutions)),
            ("negative_control", self.negative_control.name().to_string()),
            ("out", self.out.display().to_string()),
        ];
        for (k, v) in pairs {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    pub fn check_enabled(&self, name: &str) -> bool {
        self.checks
            .as_ref()
            .is_none_or(|names| names.iter().any(|n| n == name))
    }
}

fn check_resolution(key: &str, r: usize) -> Result<(), ConfigError> {
    if r < 3 || r.is_multiple_of(2) {
        return Err(ConfigError::new(key, format!("must be odd and at least 3, got {r}")));
    }
    Ok(())
}

/// Number of uniform steps `T / h`, which must be a whole number.
pub fn sweep_steps(t_final: f64, h: f64) -> Result<usize, ConfigError> {
    let n = t_final / h;
    let rounded = n.round();
    if rounded < 1.0 || (n - rounded).abs() > 1e-9 * rounded {
        return Err(ConfigError::new(
            "sweep_h",
            format!("t_final / h = {n} is not a whole number of steps"),
        ));
    }
    Ok(rounded as usize)
}
