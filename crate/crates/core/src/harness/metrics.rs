//! Descriptive statistics over trial records.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harness::agent::TrialRecord;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("no records to aggregate")]
    EmptyInput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroupBy {
    Condition,
    Zone,
    Direction,
    ConditionZone,
    ConditionDirection,
}

impl GroupBy {
    pub fn as_str(self) -> &'static str {
        match self {
            GroupBy::Condition => "condition",
            GroupBy::Zone => "zone",
            GroupBy::Direction => "direction_deg",
            GroupBy::ConditionZone => "condition_zone",
            GroupBy::ConditionDirection => "condition_direction_deg",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    DeviationMm,
    TimeS,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::DeviationMm => "deviation_mm",
            Metric::TimeS => "time_s",
        }
    }

    fn of(self, r: &TrialRecord) -> f64 {
        match self {
            Metric::DeviationMm => r.end_point_deviation,
            Metric::TimeS => r.time_to_target,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub group: String,
    pub mean: f64,
    /// Sample (n − 1) standard deviation; zero for a single value.
    pub sd: f64,
    pub n: usize,
}

/// Mean and sample standard deviation.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

// sort key keeps conditions, zones (T3 → T1) and directions in natural order
fn key(r: &TrialRecord, by: GroupBy) -> ((usize, usize, i64), String) {
    let dir = (r.direction_deg * 1000.0).round() as i64;
    let c = r.condition.index();
    let z = r.zone as usize;
    match by {
        GroupBy::Condition => ((c, 0, 0), r.condition.to_string()),
        GroupBy::Zone => ((0, z, 0), r.zone.to_string()),
        GroupBy::Direction => ((0, 0, dir), format!("{}", r.direction_deg)),
        GroupBy::ConditionZone => ((c, z, 0), format!("{}/{}", r.condition, r.zone)),
        GroupBy::ConditionDirection => ((c, 0, dir), format!("{}/{}", r.condition, r.direction_deg)),
    }
}

pub fn aggregate(
    records: &[TrialRecord],
    group_by: GroupBy,
    metric: Metric,
) -> Result<Vec<GroupStats>, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut groups: BTreeMap<(usize, usize, i64), (String, Vec<f64>)> = BTreeMap::new();
    for r in records {
        let (k, label) = key(r, group_by);
        groups.entry(k).or_insert_with(|| (label, Vec::new())).1.push(metric.of(r));
    }
    Ok(groups
        .into_values()
        .map(|(group, values)| {
            let (mean, sd) = mean_sd(&values);
            GroupStats {
                group,
                mean,
                sd,
                n: values.len(),
            }
        })
        .collect())
}

/// CSV with the SD convention spelled out in the header.
pub fn stats_to_csv(stats: &[GroupStats], group_by: GroupBy, metric: Metric) -> String {
    let m = metric.as_str();
    let mut out = format!("{},mean_{m},sd_{m}_sample_n_minus_1,n\n", group_by.as_str());
    for s in stats {
        let _ = writeln!(out, "{},{:.4},{:.4},{}", s.group, s.mean, s.sd, s.n);
    }
    out
}
