//! Headless mission execution and artifact output.

use std::fs;
use std::path::{Path, PathBuf};

use inspect_core::fleet::{MetricsReport, Phase, Simulation};
use inspect_core::registration::{encode_map, export_text};
use inspect_core::scenario::{Scenario, ScenarioError};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::render::{render_map, trajectories_from_log, RenderStyle};
use crate::script::{OperatorScript, ScriptError, ScriptRunner, ScriptStatus};
use crate::snapshot::{Snapshot, SnapshotStream};

/// Process exit codes of `inspect-sim run`.
pub mod exit {
    pub const OK: i32 = 0;
    pub const MISSION_FAILURE: i32 = 1;
    pub const INVALID_SCENARIO: i32 = 2;
    pub const SCRIPT_DEADLOCK: i32 = 3;
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub seed: Option<u64>,
    /// Simulated seconds before the run is cut off.
    pub time_cap: f64,
    pub out_dir: Option<PathBuf>,
    pub render: bool,
    /// Sim seconds between snapshots handed to `on_snapshot`.
    pub snapshot_period: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            seed: None,
            time_cap: 900.0,
            out_dir: None,
            render: true,
            snapshot_period: 0.1,
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Script(#[from] ScriptError),
    #[error("writing artifacts: {0}")]
    Io(#[from] std::io::Error),
    #[error("rendering map: {0}")]
    Image(#[from] image::ImageError),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Scenario(_) | RunError::Script(_) => exit::INVALID_SCENARIO,
            _ => exit::MISSION_FAILURE,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    /// Script finished with the mission complete.
    Finished,
    Deadlocked { step: usize, awaiting: String },
    Failed(String),
    /// Script finished but the mission stopped short of Complete.
    Incomplete(Phase),
    /// Time cap hit while the script was still running.
    TimedOut,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match self {
            Outcome::Finished => exit::OK,
            Outcome::Deadlocked { .. } => exit::SCRIPT_DEADLOCK,
            Outcome::Failed(_) | Outcome::Incomplete(_) | Outcome::TimedOut => exit::MISSION_FAILURE,
        }
    }
}

pub struct RunResult {
    pub outcome: Outcome,
    pub simulation: Simulation,
    pub metrics: MetricsReport,
    pub log_ndjson: String,
    pub map_bytes: Vec<u8>,
    /// SHA-256 over the mission log and the map export.
    pub digest: String,
    pub artifacts: Vec<PathBuf>,
    pub rejections: Vec<String>,
}

pub fn digest(log_ndjson: &str, map_bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(log_ndjson.as_bytes());
    h.update(map_bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Runs the scenario's operator script to completion, failure, deadlock
/// or the time cap. `on_snapshot` receives every periodic snapshot.
pub fn run_scenario(
    mut scenario: Scenario,
    options: &RunOptions,
    mut on_snapshot: impl FnMut(&Snapshot),
) -> Result<RunResult, RunError> {
    if let Some(seed) = options.seed {
        scenario.seed = seed;
    }
    let script = OperatorScript::parse(scenario.operator_script.as_deref().unwrap_or(&[]))?;
    let mut sim = Simulation::new(scenario)?;
    let mut runner = ScriptRunner::new(script);
    let mut snapshots = SnapshotStream::new();
    let snapshot_every = (options.snapshot_period / sim.dt()).round().max(1.0) as u64;
    let outcome = loop {
        if let Some(f) = sim.failure() {
            break Outcome::Failed(f.to_string());
        }
        runner.before_step(&mut sim);
        match runner.status(&sim, sim.time() >= options.time_cap - 1e-9) {
            ScriptStatus::Finished if sim.phase() == Phase::Complete => break Outcome::Finished,
            ScriptStatus::Finished => break Outcome::Incomplete(sim.phase()),
            ScriptStatus::Deadlocked { step, awaiting } => break Outcome::Deadlocked { step, awaiting },
            ScriptStatus::Running if sim.time() >= options.time_cap - 1e-9 => break Outcome::TimedOut,
            ScriptStatus::Running => {}
        }
        let events = sim.step();
        runner.observe(&events);
        snapshots.record_events(&events);
        if sim.step_index() % snapshot_every == 0 {
            on_snapshot(&snapshots.snapshot(&sim));
        }
    };
    let metrics = sim.finish();
    let log_ndjson = sim.log().to_ndjson();
    let map_bytes = encode_map(sim.unified_map());
    let digest = digest(&log_ndjson, &map_bytes);
    let mut artifacts = Vec::new();
    if let Some(dir) = &options.out_dir {
        fs::create_dir_all(dir)?;
        let mut write = |name: &str, bytes: &[u8]| -> std::io::Result<()> {
            let p = dir.join(name);
            fs::write(&p, bytes)?;
            artifacts.push(p);
            Ok(())
        };
        write("mission_log.ndjson", log_ndjson.as_bytes())?;
        write("map.imap", &map_bytes)?;
        write("map.txt", export_text(sim.unified_map()).as_bytes())?;
        write("metrics.json", serde_json::to_string_pretty(&metrics).unwrap().as_bytes())?;
        write("digest.txt", format!("{digest}\n").as_bytes())?;
        if options.render {
            let trajectories = trajectories_from_log(sim.log());
            let img = render_map(sim.unified_map(), &trajectories, &RenderStyle::default());
            let p = dir.join("map.png");
            img.save(&p)?;
            artifacts.push(p);
        }
    }
    Ok(RunResult {
        outcome,
        metrics,
        log_ndjson,
        map_bytes,
        digest,
        artifacts,
        rejections: runner.rejections.iter().map(|(t, c, r)| format!("t={t:.2} {}: {r}", c.name())).collect(),
        simulation: sim,
    })
}

pub fn load_scenario(path: &Path) -> Result<Scenario, RunError> {
    if path.as_os_str() == "demo_site" {
        return Ok(Scenario::demo_site());
    }
    let text = fs::read_to_string(path)?;
    Ok(Scenario::from_json(&text)?)
}
