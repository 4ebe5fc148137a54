//! Flat `key = value` run configuration.
//!
//! ```toml
//! scenario = "power"
//! mu = 1.0
//! gamma = 1.0
//! n_a = 1.0
//! tie_n_b = true
//! axis_1 = ["n_a", 0.0, 3.0, 13]
//! axis_2 = ["lambda", 0.05, 0.9, 18]
//! ```

use std::fmt;
use std::str::FromStr;

use battery_core::{thermal_occupation, SpeedFormula, SpeedOptions, TemperatureConvention};
use serde::{Deserialize, Deserializer};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Steady-state energies only.
    Steady,
    /// Charge for a finite `horizon` instead of to the steady state.
    Evolve,
    Thermo,
    Power,
    /// Time trace of the undamped drive (no axes).
    Closed,
    /// Unitary squeezing channel acting on a thermal state.
    Channel,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Steady => "steady",
            Scenario::Evolve => "evolve",
            Scenario::Thermo => "thermo",
            Scenario::Power => "power",
            Scenario::Closed => "closed",
            Scenario::Channel => "channel",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
pub enum AxisName {
    #[serde(rename = "lambda")]
    Lambda,
    #[serde(rename = "n_a")]
    NA,
    #[serde(rename = "n_b")]
    NB,
    #[serde(rename = "r_b")]
    RB,
    #[serde(rename = "theta_b")]
    ThetaB,
    #[serde(rename = "r")]
    R,
    /// Inverse temperature of the preparation bath; sets `n_a`.
    #[serde(rename = "beta")]
    Beta,
}

impl fmt::Display for AxisName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AxisName::Lambda => "lambda",
            AxisName::NA => "n_a",
            AxisName::NB => "n_b",
            AxisName::RB => "r_b",
            AxisName::ThetaB => "theta_b",
            AxisName::R => "r",
            AxisName::Beta => "beta",
        })
    }
}

/// `[name, min, max, steps]`
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct Axis(pub AxisName, pub f64, pub f64, pub usize);

impl Axis {
    pub fn name(&self) -> AxisName {
        self.0
    }

    pub fn values(&self) -> Vec<f64> {
        let Axis(_, lo, hi, steps) = *self;
        if steps == 1 {
            return vec![lo];
        }
        (0..steps)
            .map(|k| {
                if k + 1 == steps {
                    hi
                } else {
                    lo + (hi - lo) * k as f64 / (steps - 1) as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Eta,
    Power,
}

impl Target {
    pub fn name(self) -> &'static str {
        match self {
            Target::Eta => "eta",
            Target::Power => "power",
        }
    }
}

fn from_str_field<'de, D, T>(d: D) -> std::result::Result<T, D::Error>
where
    D: Deserializer<'de>,
    T: FromStr<Err = String>,
{
    let s = String::deserialize(d)?;
    s.parse().map_err(serde::de::Error::custom)
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub scenario: Scenario,
    pub mu: f64,
    pub gamma: f64,
    pub n_a: f64,
    pub n_b: f64,
    pub r_b: f64,
    pub theta_b: f64,
    pub lambda: f64,
    /// Channel squeezing and rotation (`channel` scenario).
    pub r: f64,
    pub theta: f64,
    /// Keep `n_b` equal to `n_a` at every grid point.
    pub tie_n_b: bool,
    #[serde(deserialize_with = "from_str_field")]
    pub t_free: TemperatureConvention,
    pub axis_1: Option<Axis>,
    pub axis_2: Option<Axis>,
    pub dt: f64,
    /// Integration horizon; picked from the relaxation rate when absent.
    pub horizon: Option<f64>,
    pub eps_ss: f64,
    #[serde(deserialize_with = "from_str_field")]
    pub speed_formula: SpeedFormula,
    pub output: Option<String>,
    pub target: Target,
    pub grid_steps: usize,
    pub t_max: f64,
    pub steps: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            scenario: Scenario::Thermo,
            mu: 1.0,
            gamma: 1.0,
            n_a: 1.0,
            n_b: 1.0,
            r_b: 0.0,
            theta_b: 0.0,
            lambda: 0.5,
            r: 0.0,
            theta: 0.0,
            tie_n_b: false,
            t_free: TemperatureConvention::default(),
            axis_1: None,
            axis_2: None,
            dt: 0.01,
            horizon: None,
            eps_ss: SpeedOptions::default().eps_ss,
            speed_formula: SpeedFormula::default(),
            output: None,
            target: Target::Eta,
            grid_steps: 64,
            t_max: 5.0,
            steps: 501,
        }
    }
}

/// One fully specified parameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub mu: f64,
    pub gamma: f64,
    pub n_a: f64,
    pub n_b: f64,
    pub r_b: f64,
    pub theta_b: f64,
    pub lambda: f64,
    pub r: f64,
    pub theta: f64,
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn axes(&self) -> Vec<Axis> {
        self.axis_1.iter().chain(self.axis_2.iter()).copied().collect()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mu", self.mu),
            ("dt", self.dt),
            ("eps_ss", self.eps_ss),
            ("t_max", self.t_max),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(bad(format!("{name} must be positive, got {v}")));
            }
        }
        let non_negative = [
            ("gamma", self.gamma),
            ("n_a", self.n_a),
            ("n_b", self.n_b),
            ("r_b", self.r_b),
            ("lambda", self.lambda),
            ("r", self.r),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(bad(format!("{name} must be non-negative, got {v}")));
            }
        }
        if let Some(h) = self.horizon {
            if !(h > 0.0 && h.is_finite()) {
                return Err(bad(format!("horizon must be positive, got {h}")));
            }
        }
        if self.grid_steps < 2 || self.steps < 2 {
            return Err(bad("grid_steps and steps must be at least 2"));
        }
        if self.axis_2.is_some() && self.axis_1.is_none() {
            return Err(bad("axis_2 given without axis_1"));
        }

        let axes = self.axes();
        if let [a, b] = axes[..] {
            let sets_n_a = |n: AxisName| matches!(n, AxisName::NA | AxisName::Beta);
            if a.name() == b.name() || (sets_n_a(a.name()) && sets_n_a(b.name())) {
                return Err(bad(format!("axes {} and {} overlap", a.name(), b.name())));
            }
        }
        for axis in &axes {
            let Axis(name, lo, hi, steps) = *axis;
            if steps == 0 || (steps == 1 && lo != hi) {
                return Err(bad(format!("axis {name}: need steps >= 2 (or 1 with min == max)")));
            }
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(bad(format!("axis {name}: invalid range [{lo}, {hi}]")));
            }
            let floor = match name {
                AxisName::ThetaB => f64::NEG_INFINITY,
                AxisName::Beta => f64::MIN_POSITIVE,
                _ => 0.0,
            };
            if lo < floor {
                return Err(bad(format!(
                    "axis {name}: values must be {}",
                    if name == AxisName::Beta {
                        "positive"
                    } else {
                        "non-negative"
                    }
                )));
            }
            if name == AxisName::NB && self.tie_n_b {
                return Err(bad("tie_n_b conflicts with an n_b axis"));
            }
        }
        if self.scenario == Scenario::Closed && !axes.is_empty() {
            return Err(bad("the closed scenario takes no axes"));
        }
        Ok(())
    }

    pub fn base_point(&self) -> Point {
        let mut p = Point {
            mu: self.mu,
            gamma: self.gamma,
            n_a: self.n_a,
            n_b: self.n_b,
            r_b: self.r_b,
            theta_b: self.theta_b,
            lambda: self.lambda,
            r: self.r,
            theta: self.theta,
        };
        if self.tie_n_b {
            p.n_b = p.n_a;
        }
        p
    }

    fn apply(&self, p: &mut Point, name: AxisName, v: f64) -> Result<()> {
        match name {
            AxisName::Lambda => p.lambda = v,
            AxisName::NA => p.n_a = v,
            AxisName::NB => p.n_b = v,
            AxisName::RB => p.r_b = v,
            AxisName::ThetaB => p.theta_b = v,
            AxisName::R => p.r = v,
            AxisName::Beta => p.n_a = thermal_occupation(v, p.mu)?,
        }
        if self.tie_n_b {
            p.n_b = p.n_a;
        }
        Ok(())
    }

    /// Grid points in row order, `axis_1` outermost.
    pub fn grid(&self) -> Result<Vec<Point>> {
        let base = self.base_point();
        let outer = self.axis_1.map(|a| (a.name(), a.values()));
        let inner = self.axis_2.map(|a| (a.name(), a.values()));
        let mut points = Vec::new();
        match (outer, inner) {
            (None, _) => points.push(base),
            (Some((n1, v1)), None) => {
                for x in v1 {
                    let mut p = base;
                    self.apply(&mut p, n1, x)?;
                    points.push(p);
                }
            }
            (Some((n1, v1)), Some((n2, v2))) => {
                for &x in &v1 {
                    for &y in &v2 {
                        let mut p = base;
                        self.apply(&mut p, n1, x)?;
                        self.apply(&mut p, n2, y)?;
                        points.push(p);
                    }
                }
            }
        }
        Ok(points)
    }

    pub fn speed_options(&self) -> SpeedOptions {
        SpeedOptions {
            formula: self.speed_formula,
            eps_ss: self.eps_ss,
            ..SpeedOptions::default()
        }
    }
}
