//! Guidance constants and the flat `key = value` text format used for
//! config files and run manifests.
//!
//! ```text
//! # comments start with '#'
//! plane_margin = 5
//! interval_close = 0.4
//! ```
//!
//! Unknown keys are rejected so typos do not silently fall back to defaults.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::actuator::InterpolationConfig;
use crate::geometry::DistanceTier;

/// Timeline resolution in seconds.
pub const TICK_S: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{key}`: cannot parse `{value}`")]
    BadValue { key: String, value: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Convert seconds to whole ticks. Fails if `s` is not a tick multiple.
pub fn seconds_to_ticks(s: f64) -> Option<u32> {
    let t = (s / TICK_S).round();
    ((t * TICK_S - s).abs() < 1e-9 && t >= 0.0 && t <= u32::MAX as f64).then_some(t as u32)
}

/// Nearest tick to a (possibly off-grid) timestamp.
pub fn nearest_tick(s: f64) -> u32 {
    (s / TICK_S).round().max(0.0) as u32
}

pub fn ticks_to_seconds(t: u32) -> f64 {
    t as f64 * TICK_S
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuidanceConfig {
    /// Half-thickness of the in-plane band (mm).
    pub plane_margin: f64,
    /// Extra inward distance required before leaving a correction (mm).
    pub margin_hysteresis: f64,
    /// 3D distance at which the target counts as reached (mm).
    pub arrival_radius: f64,
    /// Upper bound of the Close tier (mm, exclusive).
    pub close_max: f64,
    /// Lower bound of the Far tier (mm, exclusive).
    pub far_min: f64,
    pub interval_far: f64,
    pub interval_medium: f64,
    pub interval_close: f64,
    /// On-time of each planar pulse (s).
    pub pulse_on: f64,
    pub pause_repeats: u32,
    pub arrived_duration: f64,
    /// Nominal tracking rate (Hz).
    pub update_rate: f64,
    /// Pick the tier once from the starting distance instead of per pulse.
    pub static_tier: bool,
    pub interpolation: InterpolationConfig,
}

impl Default for GuidanceConfig {
    fn default() -> Self {
        Self {
            plane_margin: 5.0,
            margin_hysteresis: 1.0,
            arrival_radius: 10.0,
            close_max: 20.0,
            far_min: 50.0,
            interval_far: 1.0,
            interval_medium: 0.7,
            interval_close: 0.4,
            pulse_on: 0.2,
            pause_repeats: 1,
            arrived_duration: 3.0,
            update_rate: 60.0,
            static_tier: false,
            interpolation: InterpolationConfig::default(),
        }
    }
}

/// Burst length of the vertical and pause cues (s).
pub const BURST_S: f64 = 0.1;
/// Period of the vertical correction cues (s).
pub const CORRECTION_PERIOD_S: f64 = 0.5;
/// Length of one pause group (s).
pub const PAUSE_GROUP_S: f64 = 1.0;

impl GuidanceConfig {
    pub fn tier_interval(&self, tier: DistanceTier) -> f64 {
        match tier {
            DistanceTier::Far => self.interval_far,
            DistanceTier::Medium => self.interval_medium,
            DistanceTier::Close => self.interval_close,
        }
    }

    pub fn pause_duration(&self) -> f64 {
        self.pause_repeats as f64 * PAUSE_GROUP_S
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if !(self.margin_hysteresis > 0.0 && self.margin_hysteresis < self.plane_margin) {
            return bad("require 0 < margin_hysteresis < plane_margin");
        }
        if !(self.arrival_radius > 0.0) {
            return bad("require arrival_radius > 0");
        }
        if !(self.close_max > 0.0 && self.close_max < self.far_min) {
            return bad("require 0 < close_max < far_min");
        }
        if !(self.interval_far > self.interval_medium && self.interval_medium > self.interval_close)
        {
            return bad("tier intervals must strictly decrease from far to close");
        }
        if !(self.pulse_on > 0.0 && self.pulse_on < self.interval_close) {
            return bad("require 0 < pulse_on < interval_close");
        }
        if self.pause_repeats == 0 {
            return bad("pause_repeats must be at least 1");
        }
        if !(self.arrived_duration > 0.0) {
            return bad("arrived_duration must be positive");
        }
        if !(self.update_rate > 0.0 && self.update_rate.is_finite()) {
            return bad("update_rate must be positive");
        }
        for (name, v) in [
            ("interval_far", self.interval_far),
            ("interval_medium", self.interval_medium),
            ("interval_close", self.interval_close),
            ("pulse_on", self.pulse_on),
            ("arrived_duration", self.arrived_duration),
        ] {
            if seconds_to_ticks(v).is_none() {
                return Err(ConfigError::Invalid(format!(
                    "{name} = {v} is not a multiple of the 10 ms tick"
                )));
            }
        }
        self.interpolation
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// Apply every recognised key from `kv`, consuming it.
    pub fn apply(&mut self, kv: &mut KeyValues) -> Result<(), ConfigError> {
        kv.take_into("plane_margin", &mut self.plane_margin)?;
        kv.take_into("margin_hysteresis", &mut self.margin_hysteresis)?;
        kv.take_into("arrival_radius", &mut self.arrival_radius)?;
        kv.take_into("close_max", &mut self.close_max)?;
        kv.take_into("far_min", &mut self.far_min)?;
        kv.take_into("interval_far", &mut self.interval_far)?;
        kv.take_into("interval_medium", &mut self.interval_medium)?;
        kv.take_into("interval_close", &mut self.interval_close)?;
        kv.take_into("pulse_on", &mut self.pulse_on)?;
        kv.take_into("pause_repeats", &mut self.pause_repeats)?;
        kv.take_into("arrived_duration", &mut self.arrived_duration)?;
        kv.take_into("update_rate", &mut self.update_rate)?;
        kv.take_into("static_tier", &mut self.static_tier)?;
        kv.take_into("v_min", &mut self.interpolation.v_min)?;
        kv.take_into("v_max", &mut self.interpolation.v_max)?;
        kv.take_into("grid_constant", &mut self.interpolation.grid_constant)?;
        kv.take_into("snap_threshold", &mut self.interpolation.snap_threshold)?;
        Ok(())
    }

    pub fn write_to(&self, kv: &mut KeyValues) {
        kv.set("plane_margin", self.plane_margin);
        kv.set("margin_hysteresis", self.margin_hysteresis);
        kv.set("arrival_radius", self.arrival_radius);
        kv.set("close_max", self.close_max);
        kv.set("far_min", self.far_min);
        kv.set("interval_far", self.interval_far);
        kv.set("interval_medium", self.interval_medium);
        kv.set("interval_close", self.interval_close);
        kv.set("pulse_on", self.pulse_on);
        kv.set("pause_repeats", self.pause_repeats);
        kv.set("arrived_duration", self.arrived_duration);
        kv.set("update_rate", self.update_rate);
        kv.set("static_tier", self.static_tier);
        kv.set("v_min", self.interpolation.v_min);
        kv.set("v_max", self.interpolation.v_max);
        kv.set("grid_constant", self.interpolation.grid_constant);
        kv.set("snap_threshold", self.interpolation.snap_threshold);
    }

    /// Parse a complete config file; every key must be a config key.
    pub fn from_kv_text(text: &str) -> Result<Self, ConfigError> {
        let mut kv = KeyValues::parse(text)?;
        let mut cfg = GuidanceConfig::default();
        cfg.apply(&mut kv)?;
        kv.finish()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_kv_text(&self) -> String {
        let mut kv = KeyValues::default();
        self.write_to(&mut kv);
        kv.to_text()
    }
}

/// Ordered `key = value` pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    entries: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(ConfigError::Syntax { line: i + 1 });
            }
            if entries.insert(k.to_string(), v.to_string()).is_some() {
                return Err(ConfigError::Duplicate {
                    line: i + 1,
                    key: k.to_string(),
                });
            }
        }
        Ok(Self { entries })
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| ConfigError::BadValue {
                key: key.to_string(),
                value: v,
            }),
        }
    }

    pub fn take_into<T: FromStr>(&mut self, key: &str, slot: &mut T) -> Result<(), ConfigError> {
        if let Some(v) = self.take(key)? {
            *slot = v;
        }
        Ok(())
    }

    /// Error on the first key nobody consumed.
    pub fn finish(self) -> Result<(), ConfigError> {
        match self.entries.into_keys().next() {
            Some(k) => Err(ConfigError::UnknownKey(k)),
            None => Ok(()),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        GuidanceConfig::default().validate().unwrap();
    }

    #[test]
    fn round_trips_through_text() {
        let cfg = GuidanceConfig {
            plane_margin: 6.5,
            static_tier: true,
            ..Default::default()
        };
        let text = cfg.to_kv_text();
        assert!(text.contains("plane_margin = 6.5\n"));
        assert_eq!(GuidanceConfig::from_kv_text(&text).unwrap(), cfg);
    }

    #[test]
    fn rejects_unknown_and_bad_values() {
        assert_eq!(
            GuidanceConfig::from_kv_text("plane_margn = 3").unwrap_err(),
            ConfigError::UnknownKey("plane_margn".into())
        );
        assert!(matches!(
            GuidanceConfig::from_kv_text("plane_margin = wide"),
            Err(ConfigError::BadValue { .. })
        ));
        assert!(matches!(
            GuidanceConfig::from_kv_text("# c\nplane_margin"),
            Err(ConfigError::Syntax { line: 2 })
        ));
        assert!(matches!(
            GuidanceConfig::from_kv_text("margin_hysteresis = 6"),
            Err(ConfigError::Invalid(_))
        ));
        assert!(matches!(
            GuidanceConfig::from_kv_text("pulse_on = 0.205"),
            Err(ConfigError::Invalid(_))
        ));
    }

    #[test]
    fn tick_conversion() {
        assert_eq!(seconds_to_ticks(0.7), Some(70));
        assert_eq!(seconds_to_ticks(3.0), Some(300));
        assert_eq!(seconds_to_ticks(0.005), None);
        assert_eq!(nearest_tick(1.0 / 60.0), 2);
    }
}
