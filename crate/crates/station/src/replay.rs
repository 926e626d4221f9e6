//! Re-executes a recorded mission from its log: the header carries the full
//! scenario and every submitted command is resubmitted at its sim time.

use inspect_core::fleet::{LogParseError, MissionLog, OperatorCommand, Simulation};
use inspect_core::registration::encode_map;
use inspect_core::scenario::{Scenario, ScenarioError};
use thiserror::Error;

use crate::runner::digest;

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error(transparent)]
    Parse(#[from] LogParseError),
    #[error("log has no header record")]
    MissingHeader,
    #[error("header scenario: {0}")]
    Scenario(#[from] ScenarioError),
    #[error("record at t={time}: {message}")]
    BadRecord { time: f64, message: String },
}

pub struct Replay {
    pub simulation: Simulation,
    pub log_ndjson: String,
    pub digest: String,
    /// Whether the regenerated log is byte-identical to the input.
    pub identical: bool,
}

pub fn replay(log_text: &str) -> Result<Replay, ReplayError> {
    let log = MissionLog::from_ndjson(log_text)?;
    let header = log.of_kind("header").next().ok_or(ReplayError::MissingHeader)?;
    let scenario: Scenario = serde_json::from_value(header.payload["scenario_document"].clone()).map_err(|e| ReplayError::BadRecord {
        time: header.sim_time,
        message: e.to_string(),
    })?;
    let mut commands = Vec::new();
    for rec in log.of_kind("command") {
        if rec.payload["stage"] != "submit" {
            continue;
        }
        let cmd: OperatorCommand = serde_json::from_value(rec.payload["command"].clone()).map_err(|e| ReplayError::BadRecord {
            time: rec.sim_time,
            message: e.to_string(),
        })?;
        commands.push((rec.sim_time, cmd));
    }
    let end = log.records().last().map_or(0.0, |r| r.sim_time);
    let mut sim = Simulation::new(scenario)?;
    let mut next = 0;
    loop {
        while next < commands.len() && commands[next].0 <= sim.time() + 1e-9 {
            let _ = sim.submit(commands[next].1.clone());
            next += 1;
        }
        if sim.time() >= end - 1e-9 {
            break;
        }
        sim.step();
    }
    sim.finish();
    let log_ndjson = sim.log().to_ndjson();
    let digest = digest(&log_ndjson, &encode_map(sim.unified_map()));
    Ok(Replay {
        identical: log_ndjson == log_text,
        simulation: sim,
        log_ndjson,
        digest,
    })
}
