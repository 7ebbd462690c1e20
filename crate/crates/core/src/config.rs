//! Scenario configuration and its flat key-value file format.
//!
//! Grammar, one entry per line:
//!
//! ```text
//! line    := blank | comment | entry
//! comment := '#' <anything>
//! entry   := key ws* '=' ws* value ws* [comment]
//! key     := segment ('.' segment)*        segment := [A-Za-z0-9_]+
//! value   := number | word | load-list
//! load-list := 'none' | pair (',' pair)*   pair := number ':' number
//! ```
//!
//! Keys may appear at most once. Every key is optional; missing keys take the
//! defaults from [`ScenarioConfig::default`] and are reported back to the
//! caller so they can be echoed into run reports.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use crate::dtc::DtcConfig;
use crate::error::{Error, Result};
use crate::foc::{FocConfig, PoleInterpretation};
use crate::machine::{MotorParams, MAX_STEP};
use crate::metrics::{DEFAULT_LOSS_COEFFICIENT, DEFAULT_WINDOW};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ControllerKind {
    Foc,
    Dtc,
}

impl FromStr for ControllerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "foc" => Ok(Self::Foc),
            "dtc" => Ok(Self::Dtc),
            other => Err(Error::invalid(
                "controller",
                format!("expected `foc` or `dtc`, got `{other}`"),
            )),
        }
    }
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Foc => "foc",
            Self::Dtc => "dtc",
        })
    }
}

/// Ideal load-torque step applied from `time` onwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadStep {
    pub time: f64,
    pub torque: f64,
}

/// Ordered list of load steps; the load is zero before the first step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LoadProfile(pub Vec<LoadStep>);

impl LoadProfile {
    pub fn none() -> Self {
        Self(Vec::new())
    }

    pub fn step(time: f64, torque: f64) -> Self {
        Self(vec![LoadStep { time, torque }])
    }

    pub fn steps(&self) -> &[LoadStep] {
        &self.0
    }

    /// Load torque in effect at `t`.
    pub fn torque_at(&self, t: f64) -> f64 {
        self.0
            .iter()
            .take_while(|s| s.time <= t)
            .last()
            .map_or(0.0, |s| s.torque)
    }

    /// Time of the first step that applies a non-zero torque.
    pub fn first_loaded_step(&self) -> Option<&LoadStep> {
        self.0.iter().find(|s| s.torque != 0.0)
    }
}

impl fmt::Display for LoadProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("none");
        }
        for (n, s) in self.0.iter().enumerate() {
            if n > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}:{}", s.time, s.torque)?;
        }
        Ok(())
    }
}

impl FromStr for LoadProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "none" {
            return Ok(Self::none());
        }
        s.split(',')
            .map(|pair| {
                let (t, torque) = pair.split_once(':').ok_or_else(|| {
                    Error::invalid("load_profile", format!("expected `time:torque`, got `{}`", pair.trim()))
                })?;
                Ok(LoadStep {
                    time: parse_f64("load_profile", t)?,
                    torque: parse_f64("load_profile", torque)?,
                })
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub controller: ControllerKind,
    /// Speed setpoint (rpm).
    pub speed_ref: f64,
    pub load_profile: LoadProfile,
    /// Simulated time (s).
    pub duration: f64,
    /// Plant integration step (s).
    pub plant_dt: f64,
    /// Controller sampling period (s); an integer multiple of `plant_dt`.
    pub ctrl_dt: f64,
    pub motor: MotorParams,
    pub foc: FocConfig,
    pub dtc: DtcConfig,
    /// Keep every n-th plant step in the trace.
    pub trace_decimation: u32,
    /// Switching-frequency averaging window (s).
    pub switching_window: f64,
    /// Length of the steady-state reporting window at the end of the run (s).
    pub steady_window: f64,
    pub loss_coefficient: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            controller: ControllerKind::Dtc,
            speed_ref: 1500.0,
            load_profile: LoadProfile::none(),
            duration: 3.0,
            plant_dt: 5e-6,
            ctrl_dt: 50e-6,
            motor: MotorParams::default(),
            foc: FocConfig::default(),
            dtc: DtcConfig::default(),
            trace_decimation: 100,
            switching_window: DEFAULT_WINDOW,
            steady_window: 1.0,
            loss_coefficient: DEFAULT_LOSS_COEFFICIENT,
        }
    }
}

/// Every key the config file accepts, in canonical output order.
pub const KEYS: &[&str] = &[
    "controller",
    "speed_ref",
    "load_profile",
    "duration",
    "plant_dt",
    "ctrl_dt",
    "trace_decimation",
    "motor.R_s",
    "motor.R_r",
    "motor.L_s",
    "motor.L_r",
    "motor.L_m",
    "motor.p",
    "motor.J",
    "motor.B",
    "motor.V_dc",
    "motor.rated_speed",
    "motor.rated_torque",
    "foc.lambda_r_ref",
    "foc.Kp",
    "foc.Ki",
    "foc.T_max",
    "foc.i_band",
    "foc.eq1_pole_interpretation",
    "dtc.lambda_ref",
    "dtc.torque_band",
    "dtc.flux_band",
    "metrics.window",
    "metrics.steady_window",
    "metrics.loss_coefficient",
];

/// A validated config together with the keys that fell back to defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub config: ScenarioConfig,
    pub defaulted: Vec<&'static str>,
}

fn parse_f64(field: &str, raw: &str) -> Result<f64> {
    let raw = raw.trim();
    let v: f64 = raw
        .parse()
        .map_err(|_| Error::invalid(field, format!("expected a number, got `{raw}`")))?;
    if !v.is_finite() {
        return Err(Error::invalid(field, format!("must be finite, got `{raw}`")));
    }
    Ok(v)
}

fn parse_u32(field: &str, raw: &str) -> Result<u32> {
    raw.trim()
        .parse()
        .map_err(|_| Error::invalid(field, format!("expected a non-negative integer, got `{}`", raw.trim())))
}

/// Splits a key-value document into its entries, rejecting malformed lines
/// and duplicate keys.
pub fn parse_entries(text: &str) -> Result<BTreeMap<String, (usize, String)>> {
    let mut entries = BTreeMap::new();
    for (n, raw_line) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: line_no,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        let key = key.trim();
        let valid_key = !key.is_empty()
            && key
                .split('.')
                .all(|seg| !seg.is_empty() && seg.chars().all(|c| c.is_ascii_alphanumeric() || c == '_'));
        if !valid_key {
            return Err(Error::Parse {
                line: line_no,
                message: format!("malformed key `{key}`"),
            });
        }
        let value = value.trim().trim_matches('"').to_string();
        if entries.insert(key.to_string(), (line_no, value)).is_some() {
            return Err(Error::Parse {
                line: line_no,
                message: format!("duplicate key `{key}`"),
            });
        }
    }
    Ok(entries)
}

impl ScenarioConfig {
    /// Applies one key to the config.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let m = &mut self.motor;
        match key {
            "controller" => self.controller = value.trim().parse()?,
            "speed_ref" => self.speed_ref = parse_f64(key, value)?,
            "load_profile" => self.load_profile = value.parse()?,
            "duration" => self.duration = parse_f64(key, value)?,
            "plant_dt" => self.plant_dt = parse_f64(key, value)?,
            "ctrl_dt" => self.ctrl_dt = parse_f64(key, value)?,
            "trace_decimation" => self.trace_decimation = parse_u32(key, value)?,
            "motor.R_s" => m.r_s = parse_f64(key, value)?,
            "motor.R_r" => m.r_r = parse_f64(key, value)?,
            "motor.L_s" => m.l_s = parse_f64(key, value)?,
            "motor.L_r" => m.l_r = parse_f64(key, value)?,
            "motor.L_m" => m.l_m = parse_f64(key, value)?,
            "motor.p" => m.pole_pairs = parse_u32(key, value)?,
            "motor.J" => m.inertia = parse_f64(key, value)?,
            "motor.B" => m.friction = parse_f64(key, value)?,
            "motor.V_dc" => m.v_dc = parse_f64(key, value)?,
            "motor.rated_speed" => m.rated_speed = parse_f64(key, value)?,
            "motor.rated_torque" => m.rated_torque = parse_f64(key, value)?,
            "foc.lambda_r_ref" => self.foc.rotor_flux_ref = parse_f64(key, value)?,
            "foc.Kp" => self.foc.kp = parse_f64(key, value)?,
            "foc.Ki" => self.foc.ki = parse_f64(key, value)?,
            "foc.T_max" => self.foc.torque_max = parse_f64(key, value)?,
            "foc.i_band" => self.foc.current_band = parse_f64(key, value)?,
            "foc.eq1_pole_interpretation" => {
                self.foc.pole_interpretation = value.trim().parse::<PoleInterpretation>()?
            }
            "dtc.lambda_ref" => self.dtc.flux_ref = parse_f64(key, value)?,
            "dtc.torque_band" => self.dtc.torque_band = parse_f64(key, value)?,
            "dtc.flux_band" => self.dtc.flux_band = parse_f64(key, value)?,
            "metrics.window" => self.switching_window = parse_f64(key, value)?,
            "metrics.steady_window" => self.steady_window = parse_f64(key, value)?,
            "metrics.loss_coefficient" => self.loss_coefficient = parse_f64(key, value)?,
            other => return Err(Error::invalid(other, "unknown key")),
        }
        Ok(())
    }

    /// Current value of `key` in config-file syntax.
    pub fn get(&self, key: &str) -> Option<String> {
        let m = &self.motor;
        Some(match key {
            "controller" => self.controller.to_string(),
            "speed_ref" => self.speed_ref.to_string(),
            "load_profile" => self.load_profile.to_string(),
            "duration" => self.duration.to_string(),
            "plant_dt" => self.plant_dt.to_string(),
            "ctrl_dt" => self.ctrl_dt.to_string(),
            "trace_decimation" => self.trace_decimation.to_string(),
            "motor.R_s" => m.r_s.to_string(),
            "motor.R_r" => m.r_r.to_string(),
            "motor.L_s" => m.l_s.to_string(),
            "motor.L_r" => m.l_r.to_string(),
            "motor.L_m" => m.l_m.to_string(),
            "motor.p" => m.pole_pairs.to_string(),
            "motor.J" => m.inertia.to_string(),
            "motor.B" => m.friction.to_string(),
            "motor.V_dc" => m.v_dc.to_string(),
            "motor.rated_speed" => m.rated_speed.to_string(),
            "motor.rated_torque" => m.rated_torque.to_string(),
            "foc.lambda_r_ref" => self.foc.rotor_flux_ref.to_string(),
            "foc.Kp" => self.foc.kp.to_string(),
            "foc.Ki" => self.foc.ki.to_string(),
            "foc.T_max" => self.foc.torque_max.to_string(),
            "foc.i_band" => self.foc.current_band.to_string(),
            "foc.eq1_pole_interpretation" => self.foc.pole_interpretation.to_string(),
            "dtc.lambda_ref" => self.dtc.flux_ref.to_string(),
            "dtc.torque_band" => self.dtc.torque_band.to_string(),
            "dtc.flux_band" => self.dtc.flux_band.to_string(),
            "metrics.window" => self.switching_window.to_string(),
            "metrics.steady_window" => self.steady_window.to_string(),
            "metrics.loss_coefficient" => self.loss_coefficient.to_string(),
            _ => return None,
        })
    }

    /// Parses a config document; missing keys keep their defaults.
    pub fn parse(text: &str) -> Result<LoadedConfig> {
        let entries = parse_entries(text)?;
        let mut config = ScenarioConfig::default();
        for (key, (_line, value)) in &entries {
            config.set(key, value)?;
        }
        config.validate()?;
        let defaulted = KEYS
            .iter()
            .copied()
            .filter(|k| !entries.contains_key(*k))
            .collect();
        Ok(LoadedConfig { config, defaulted })
    }

    /// Number of plant steps per controller period.
    pub fn steps_per_control(&self) -> u64 {
        (self.ctrl_dt / self.plant_dt).round() as u64
    }

    /// Number of plant steps covering `duration`.
    pub fn total_steps(&self) -> u64 {
        (self.duration / self.plant_dt).round().max(1.0) as u64
    }

    /// Number of plant steps per switching-frequency window.
    pub fn steps_per_window(&self) -> u64 {
        (self.switching_window / self.plant_dt).round() as u64
    }

    /// Start of the steady-state reporting window (s).
    pub fn steady_start(&self) -> f64 {
        self.duration - self.steady_window
    }

    pub fn speed_ref_rad(&self) -> f64 {
        self.speed_ref * std::f64::consts::TAU / 60.0
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |field: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(field, format!("must be finite and > 0, got {v}")))
            }
        };
        positive("duration", self.duration)?;
        positive("plant_dt", self.plant_dt)?;
        positive("ctrl_dt", self.ctrl_dt)?;
        positive("metrics.window", self.switching_window)?;
        positive("metrics.steady_window", self.steady_window)?;
        positive("metrics.loss_coefficient", self.loss_coefficient)?;
        if !self.speed_ref.is_finite() {
            return Err(Error::invalid("speed_ref", "must be finite"));
        }
        if self.plant_dt > MAX_STEP {
            return Err(Error::invalid("plant_dt", format!("must be <= {MAX_STEP} s")));
        }
        let ratio = self.ctrl_dt / self.plant_dt;
        if ratio.round() < 1.0 || (ratio - ratio.round()).abs() > 1e-9 * ratio {
            return Err(Error::invalid(
                "ctrl_dt",
                format!(
                    "must be an integer multiple of plant_dt ({} s), got {} s",
                    self.plant_dt, self.ctrl_dt
                ),
            ));
        }
        let window_ratio = self.switching_window / self.plant_dt;
        if window_ratio.round() < 1.0 || (window_ratio - window_ratio.round()).abs() > 1e-9 * window_ratio {
            return Err(Error::invalid("metrics.window", "must be an integer multiple of plant_dt"));
        }
        if self.trace_decimation < 1 {
            return Err(Error::invalid("trace_decimation", "must be >= 1"));
        }
        if self.steady_window > self.duration {
            return Err(Error::invalid("metrics.steady_window", "must not exceed duration"));
        }
        let mut last = f64::NEG_INFINITY;
        for step in self.load_profile.steps() {
            if !(step.time >= 0.0 && step.time <= self.duration) {
                return Err(Error::invalid(
                    "load_profile",
                    format!("step time {} outside [0, {}]", step.time, self.duration),
                ));
            }
            if step.time <= last {
                return Err(Error::invalid("load_profile", "step times must be strictly increasing"));
            }
            last = step.time;
        }
        self.motor.validate()?;
        self.foc.validate(&self.motor)?;
        self.dtc.validate()?;
        Ok(())
    }

    /// The full effective config in file syntax.
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let value = self.get(key).expect("every listed key is readable");
            let _ = writeln!(out, "{key} = {value}");
        }
        out
    }
}

/// Reads, parses and validates a config file.
pub fn load_config(path: impl AsRef<Path>) -> Result<LoadedConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ScenarioConfig::parse(&text)
}
