//! Whole-experiment runs: every participant's 36-trial plan, simulated in
//! parallel, written out as a results table, aggregate tables and a manifest
//! that reproduces the run byte for byte.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ConfigError, GuidanceConfig, KeyValues};
use crate::controller::ControllerError;
use crate::geometry::{OperatingPlane, ZoneSet};
use crate::harness::agent::{
    simulate_trial_with, AgentKind, AgentSpec, SimulationOptions, TrackingNoise, TrialRecord,
    DEFAULT_TIMEOUT_S,
};
use crate::harness::field::{generate_field, sample_trial_plan, Condition};
use crate::harness::metrics::{aggregate, stats_to_csv, GroupBy, Metric, MetricsError};
use crate::output::write_atomic;
use crate::seeding;

pub const RESULTS_CSV_HEADER: &str = "participant,condition,direction_deg,zone,deviation_mm,time_s,status";
pub const TRIALS_PER_CONDITION: usize = 12;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Trial(#[from] ControllerError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub participants: u32,
    pub seed: u64,
    pub cfg: GuidanceConfig,
    pub zones: ZoneSet,
    /// Indexed by [`Condition::index`].
    pub agents: [AgentSpec; 3],
    pub per_condition: usize,
    pub tracking_noise: TrackingNoise,
    pub timeout_s: f64,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            participants: 27,
            seed: 1,
            cfg: GuidanceConfig::default(),
            zones: ZoneSet::default(),
            agents: Condition::ALL.map(|c| AgentSpec::new(AgentKind::for_condition(c))),
            per_condition: TRIALS_PER_CONDITION,
            tracking_noise: TrackingNoise::default(),
            timeout_s: DEFAULT_TIMEOUT_S,
        }
    }
}

impl ExperimentSpec {
    pub fn agent(&self, c: Condition) -> &AgentSpec {
        &self.agents[c.index()]
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.participants == 0 {
            return bad("participants must be at least 1".into());
        }
        if self.per_condition == 0 || self.per_condition > 108 {
            return bad("per_condition must be in 1..=108".into());
        }
        if !(self.timeout_s > 0.0 && self.timeout_s.is_finite()) {
            return bad("timeout_s must be positive".into());
        }
        if !(self.tracking_noise.jitter_sd >= 0.0 && self.tracking_noise.drift_mm_per_s.is_finite()) {
            return bad("tracking noise must be finite and non-negative".into());
        }
        for a in &self.agents {
            a.validate().map_err(ConfigError::Invalid)?;
        }
        self.cfg.validate()
    }

    /// Consume experiment, zone, agent and guidance keys from `kv`.
    /// `crate_version` is informational and ignored.
    pub fn apply(&mut self, kv: &mut KeyValues) -> Result<(), ConfigError> {
        kv.take_into("participants", &mut self.participants)?;
        kv.take_into("seed", &mut self.seed)?;
        kv.take_into("per_condition", &mut self.per_condition)?;
        kv.take_into("timeout_s", &mut self.timeout_s)?;
        kv.take_into("tracking_jitter_sd", &mut self.tracking_noise.jitter_sd)?;
        kv.take_into("tracking_drift_mm_per_s", &mut self.tracking_noise.drift_mm_per_s)?;
        let _ = kv.take::<String>("crate_version")?;
        let (mut t3, mut t2, mut t1) = (
            self.zones.radius(crate::geometry::Zone::T3),
            self.zones.radius(crate::geometry::Zone::T2),
            self.zones.radius(crate::geometry::Zone::T1),
        );
        kv.take_into("zone_t3", &mut t3)?;
        kv.take_into("zone_t2", &mut t2)?;
        kv.take_into("zone_t1", &mut t1)?;
        self.zones = ZoneSet::new(t3, t2, t1).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        for c in Condition::ALL {
            let a = &mut self.agents[c.index()];
            let p = c.as_str();
            if let Some(kind) = kv.take::<String>(&format!("{p}.kind"))? {
                a.kind = AgentKind::parse(&kind).ok_or(ConfigError::BadValue {
                    key: format!("{p}.kind"),
                    value: kind,
                })?;
            }
            kv.take_into(&format!("{p}.speed"), &mut a.speed)?;
            kv.take_into(&format!("{p}.reaction_latency"), &mut a.reaction_latency)?;
            kv.take_into(&format!("{p}.angular_noise_sd"), &mut a.angular_noise_sd)?;
            kv.take_into(&format!("{p}.visual_error_sd"), &mut a.visual_error_sd)?;
            kv.take_into(&format!("{p}.confirm_delay"), &mut a.confirm_delay)?;
            kv.take_into(&format!("{p}.seed"), &mut a.seed)?;
        }
        self.cfg.apply(kv)
    }

    pub fn from_manifest_text(text: &str) -> Result<Self, ConfigError> {
        let mut kv = KeyValues::parse(text)?;
        let mut spec = Self::default();
        spec.apply(&mut kv)?;
        kv.finish()?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_manifest_text(&self) -> String {
        let mut kv = KeyValues::default();
        kv.set("crate_version", env!("CARGO_PKG_VERSION"));
        kv.set("participants", self.participants);
        kv.set("seed", self.seed);
        kv.set("per_condition", self.per_condition);
        kv.set("timeout_s", self.timeout_s);
        kv.set("tracking_jitter_sd", self.tracking_noise.jitter_sd);
        kv.set("tracking_drift_mm_per_s", self.tracking_noise.drift_mm_per_s);
        for z in self.zones.zones() {
            kv.set(&format!("zone_{}", z.zone.as_str().to_lowercase()), z.radius);
        }
        for c in Condition::ALL {
            let a = self.agent(c);
            let p = c.as_str();
            kv.set(&format!("{p}.kind"), a.kind.as_str());
            kv.set(&format!("{p}.speed"), a.speed);
            kv.set(&format!("{p}.reaction_latency"), a.reaction_latency);
            kv.set(&format!("{p}.angular_noise_sd"), a.angular_noise_sd);
            kv.set(&format!("{p}.visual_error_sd"), a.visual_error_sd);
            kv.set(&format!("{p}.confirm_delay"), a.confirm_delay);
            kv.set(&format!("{p}.seed"), a.seed);
        }
        self.cfg.write_to(&mut kv);
        format!(
            "# experiment manifest; rerun with `experiment --manifest <this file>`\n{}",
            kv.to_text()
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResults {
    pub spec: ExperimentSpec,
    /// Participant-major, in plan order.
    pub records: Vec<TrialRecord>,
}

/// Aggregate tables emitted next to the results.
pub const SUMMARY_TABLES: [(&str, GroupBy, Metric); 6] = [
    ("deviation_by_condition.csv", GroupBy::Condition, Metric::DeviationMm),
    ("deviation_by_condition_direction.csv", GroupBy::ConditionDirection, Metric::DeviationMm),
    ("deviation_by_condition_zone.csv", GroupBy::ConditionZone, Metric::DeviationMm),
    ("deviation_by_zone.csv", GroupBy::Zone, Metric::DeviationMm),
    ("time_by_condition_zone.csv", GroupBy::ConditionZone, Metric::TimeS),
    ("time_by_zone.csv", GroupBy::Zone, Metric::TimeS),
];

pub fn record_csv_row(r: &TrialRecord) -> String {
    format!(
        "{},{},{},{},{:.4},{:.4},{}",
        r.participant_id,
        r.condition,
        r.direction_deg,
        r.zone,
        r.end_point_deviation,
        r.time_to_target,
        r.status.as_str()
    )
}

impl ExperimentResults {
    pub fn results_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.records.len() + 1));
        out.push_str(RESULTS_CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(out, "{}", record_csv_row(r));
        }
        out
    }

    pub fn summary_tables(&self) -> Result<Vec<(&'static str, String)>, MetricsError> {
        SUMMARY_TABLES
            .iter()
            .map(|&(name, by, metric)| {
                aggregate(&self.records, by, metric).map(|s| (name, stats_to_csv(&s, by, metric)))
            })
            .collect()
    }

    /// Write `results.csv`, `manifest.txt` and the summary tables into `dir`,
    /// creating it if needed. Returns the written file names.
    pub fn write_to_dir(&self, dir: &Path) -> Result<Vec<String>, ExperimentError> {
        std::fs::create_dir_all(dir)?;
        let mut files = vec![
            ("results.csv", self.results_csv()),
            ("manifest.txt", self.spec.to_manifest_text()),
        ];
        files.extend(self.summary_tables()?);
        for (name, body) in &files {
            write_atomic(&dir.join(name), body.as_bytes())?;
        }
        Ok(files.into_iter().map(|(n, _)| n.to_string()).collect())
    }
}

/// Simulate every participant's plan. Each trial's agent is reseeded from
/// `(seed, participant, trial)`, so the output does not depend on thread
/// scheduling.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResults, ExperimentError> {
    spec.validate()?;
    let plane = OperatingPlane::horizontal();
    let field = generate_field(plane, spec.zones);
    let jobs: Vec<_> = (0..spec.participants)
        .flat_map(|p| {
            sample_trial_plan(&field, Condition::ALL, spec.per_condition, spec.seed, p)
                .into_iter()
                .enumerate()
                .map(move |(i, t)| (p, i, t))
        })
        .collect();
    let records = jobs
        .par_iter()
        .map(|&(p, i, planned)| {
            let mut agent = *spec.agent(planned.condition);
            agent.seed = seeding::derive_seed(spec.seed, &[p as u64, i as u64, agent.seed]);
            let opts = SimulationOptions {
                tracking_noise: spec.tracking_noise,
                timeout_s: spec.timeout_s,
                ..Default::default()
            };
            simulate_trial_with(
                &agent,
                planned.condition,
                &field.targets[planned.target_index],
                &plane,
                &spec.cfg,
                &opts,
                p,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ExperimentResults {
        spec: spec.clone(),
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentSpec {
        ExperimentSpec {
            participants: 2,
            per_condition: 2,
            ..Default::default()
        }
    }

    #[test]
    fn manifest_round_trip() {
        let mut spec = small();
        spec.zones = ZoneSet::new(25.0, 50.0, 80.0).unwrap();
        spec.agents[0].angular_noise_sd = 3.5;
        spec.cfg.plane_margin = 4.0;
        let text = spec.to_manifest_text();
        assert!(text.contains("zone_t3 = 25"));
        assert!(text.contains("haptics_only.angular_noise_sd = 3.5"));
        assert_eq!(ExperimentSpec::from_manifest_text(&text).unwrap(), spec);
    }

    #[test]
    fn manifest_rejects_unknown_keys_and_bad_values() {
        assert!(matches!(
            ExperimentSpec::from_manifest_text("bogus = 1"),
            Err(ConfigError::UnknownKey(_))
        ));
        assert!(ExperimentSpec::from_manifest_text("participants = 0").is_err());
        assert!(ExperimentSpec::from_manifest_text("zone_t3 = 70").is_err());
        assert!(ExperimentSpec::from_manifest_text("ar_only.kind = robot").is_err());
    }

    #[test]
    fn small_run_shape_and_determinism() {
        let spec = small();
        let a = run_experiment(&spec).unwrap();
        assert_eq!(a.records.len(), 12);
        let b = run_experiment(&spec).unwrap();
        assert_eq!(a.results_csv(), b.results_csv());
        assert!(a.results_csv().starts_with(RESULTS_CSV_HEADER));
        for r in &a.records {
            assert!(r.end_point_deviation >= 0.0 && r.time_to_target > 0.0);
        }
    }

    #[test]
    fn writes_all_files() {
        let dir = tempfile::tempdir().unwrap();
        let res = run_experiment(&small()).unwrap();
        let names = res.write_to_dir(dir.path()).unwrap();
        assert_eq!(names.len(), 2 + SUMMARY_TABLES.len());
        let manifest = std::fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
        let again = run_experiment(&ExperimentSpec::from_manifest_text(&manifest).unwrap()).unwrap();
        assert_eq!(
            again.results_csv(),
            std::fs::read_to_string(dir.path().join("results.csv")).unwrap()
        );
    }
}
