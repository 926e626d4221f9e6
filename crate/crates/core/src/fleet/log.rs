use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

pub const LOG_SCHEMA_VERSION: u32 = 1;

/// One line of the mission log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub sim_time: f64,
    pub kind: String,
    pub payload: Value,
}

#[derive(Debug, Error)]
#[error("line {line}: {source}")]
pub struct LogParseError {
    pub line: usize,
    #[source]
    pub source: serde_json::Error,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MissionLog {
    records: Vec<LogRecord>,
}

impl MissionLog {
    pub fn push(&mut self, sim_time: f64, kind: &str, payload: Value) {
        self.records.push(LogRecord {
            sim_time,
            kind: kind.into(),
            payload,
        });
    }

    pub fn records(&self) -> &[LogRecord] {
        &self.records
    }

    pub fn of_kind<'a>(&'a self, kind: &'a str) -> impl Iterator<Item = &'a LogRecord> + 'a {
        self.records.iter().filter(move |r| r.kind == kind)
    }

    pub fn to_ndjson(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("log record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_ndjson(text: &str) -> Result<Self, LogParseError> {
        let records = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| serde_json::from_str(l).map_err(|source| LogParseError { line: i + 1, source }))
            .collect::<Result<_, _>>()?;
        Ok(Self { records })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Ground-truth distance driven, meters.
    pub distance_per_robot: BTreeMap<String, f64>,
    pub duration_min: f64,
    /// Square meters of coverage cells holding at least one lidar return.
    pub area_per_robot: BTreeMap<String, f64>,
    pub area_union: f64,
    pub collisions: usize,
}

/// Summarizes a mission log. Distance comes from the odometer carried in
/// pose records, area from coverage metric records.
pub fn compute_metrics(log: &MissionLog) -> MetricsReport {
    let mut distance = BTreeMap::new();
    let mut cells: BTreeMap<String, BTreeSet<(i64, i64)>> = BTreeMap::new();
    let mut cell_size = 1.0;
    let mut collisions = 0;
    let (mut t_min, mut t_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for r in log.records() {
        t_min = t_min.min(r.sim_time);
        t_max = t_max.max(r.sim_time);
        match r.kind.as_str() {
            "header" => {
                if let Some(c) = r.payload.get("coverage_cell").and_then(Value::as_f64) {
                    cell_size = c;
                }
            }
            "pose" => {
                if let (Some(id), Some(odo)) = (r.payload["robot_id"].as_str(), r.payload["odometer"].as_f64()) {
                    distance.insert(id.to_string(), odo);
                }
            }
            "metric" if r.payload["metric"] == "coverage" => {
                let id = r.payload["robot_id"].as_str().unwrap_or_default().to_string();
                let set = cells.entry(id).or_default();
                if let Some(list) = r.payload["cells"].as_array() {
                    for c in list {
                        if let (Some(i), Some(j)) = (c[0].as_i64(), c[1].as_i64()) {
                            set.insert((i, j));
                        }
                    }
                }
            }
            "collision" => collisions += 1,
            _ => {}
        }
    }
    let area = |n: usize| n as f64 * cell_size * cell_size;
    let union: BTreeSet<(i64, i64)> = cells.values().flatten().copied().collect();
    MetricsReport {
        distance_per_robot: distance,
        duration_min: if t_max >= t_min { (t_max - t_min) / 60.0 } else { 0.0 },
        area_per_robot: cells.iter().map(|(k, v)| (k.clone(), area(v.len()))).collect(),
        area_union: area(union.len()),
        collisions,
    }
}

pub(crate) fn coverage_record(robot_id: &str, cells: &[(i64, i64)]) -> Value {
    json!({
        "metric": "coverage",
        "robot_id": robot_id,
        "cells": cells.iter().map(|(i, j)| [*i, *j]).collect::<Vec<_>>(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ndjson_round_trip() {
        let mut log = MissionLog::default();
        log.push(0.0, "header", json!({"coverage_cell": 1.0}));
        log.push(0.5, "pose", json!({"robot_id": "a", "odometer": 0.25}));
        let text = log.to_ndjson();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(MissionLog::from_ndjson(&text).unwrap(), log);
        assert_eq!(MissionLog::from_ndjson("{}\n").unwrap_err().line, 1);
    }

    #[test]
    fn disjoint_union_is_sum() {
        let mut log = MissionLog::default();
        log.push(0.0, "header", json!({"coverage_cell": 1.0}));
        log.push(0.0, "metric", coverage_record("a", &[(0, 0), (1, 0)]));
        log.push(0.1, "metric", coverage_record("b", &[(5, 5)]));
        log.push(60.0, "pose", json!({"robot_id": "a", "odometer": 3.0}));
        let m = compute_metrics(&log);
        assert_eq!(m.area_union, m.area_per_robot.values().sum::<f64>());
        assert_eq!(m.distance_per_robot["a"], 3.0);
        assert!((m.duration_min - 1.0).abs() < 1e-12);
    }
}
