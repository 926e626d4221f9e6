//! Scripted operator: timed or event-gated commands and waypoint drives
//! that stand in for a human at the base station.

use std::collections::BTreeSet;

use inspect_core::fleet::{Mode, OperatorCommand, Phase, SimEvent, Simulation};
use inspect_core::geometry::normalize_angle;
use inspect_core::{Point, Pose2D};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Trigger {
    At { at: f64 },
    Await {
        #[serde(rename = "await")]
        event: String,
    },
}

/// Drive a robot through world-frame waypoints, steering from ground truth
/// the way an operator watching the robot would.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveDirective {
    pub robot: String,
    pub waypoints: Vec<Point>,
    /// Send goal headings to the gap assist instead of raw turn rates.
    #[serde(default)]
    pub assist: bool,
    /// Fraction of the robot's top speed.
    #[serde(default = "DriveDirective::default_speed")]
    pub speed: f64,
}

impl DriveDirective {
    fn default_speed() -> f64 {
        1.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Command(OperatorCommand),
    Drive(DriveDirective),
    /// Holds the script for this many seconds.
    Wait(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScriptStep {
    pub trigger: Trigger,
    pub action: Action,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScriptError {
    #[error("operator_script[{index}]: {message}")]
    Invalid { index: usize, message: String },
}

#[derive(Deserialize)]
struct RawStep {
    #[serde(flatten)]
    trigger: Trigger,
    #[serde(flatten)]
    action: RawAction,
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case")]
enum RawAction {
    Command(OperatorCommand),
    Drive(DriveDirective),
    Wait(f64),
}

const EVENT_PREFIXES: [&str; 4] = ["phase:", "drive_done:", "repeat_done:", "mode:"];
const EVENT_NAMES: [&str; 3] = ["transfer_complete", "relocalize_success", "relocalize_failure"];

fn parse_event(e: &str) -> Result<(), String> {
    if EVENT_NAMES.contains(&e) {
        return Ok(());
    }
    if let Some(phase) = e.strip_prefix("phase:") {
        return Phase::from_name(phase).map(|_| ()).ok_or_else(|| format!("unknown phase '{phase}'"));
    }
    if EVENT_PREFIXES.iter().any(|p| e.starts_with(p)) {
        return Ok(());
    }
    Err(format!("unknown event '{e}'"))
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct OperatorScript {
    pub steps: Vec<ScriptStep>,
}

impl OperatorScript {
    pub fn parse(raw: &[Value]) -> Result<Self, ScriptError> {
        let mut steps = Vec::new();
        let mut last_at = f64::NEG_INFINITY;
        for (index, v) in raw.iter().enumerate() {
            let invalid = |message: String| ScriptError::Invalid { index, message };
            let step: RawStep = serde_json::from_value(v.clone()).map_err(|e| invalid(e.to_string()))?;
            match &step.trigger {
                Trigger::At { at } => {
                    if !at.is_finite() || *at < last_at {
                        return Err(invalid("time triggers must be finite and non-decreasing".into()));
                    }
                    last_at = *at;
                }
                Trigger::Await { event } => parse_event(event).map_err(invalid)?,
            }
            let action = match step.action {
                RawAction::Command(c) => Action::Command(c),
                RawAction::Drive(d) => {
                    if d.waypoints.is_empty() || !(d.speed > 0.0 && d.speed <= 1.0) {
                        return Err(invalid("drive needs waypoints and a speed in (0, 1]".into()));
                    }
                    Action::Drive(d)
                }
                RawAction::Wait(s) if s >= 0.0 && s.is_finite() => Action::Wait(s),
                RawAction::Wait(_) => return Err(invalid("wait must be >= 0".into())),
            };
            steps.push(ScriptStep {
                trigger: step.trigger,
                action,
            });
        }
        Ok(Self { steps })
    }
}

const ARRIVE_TOLERANCE: f64 = 0.15;
const TURN_IN_PLACE: f64 = 0.25;
const COMMAND_PERIOD: f64 = 0.1;

struct Driver {
    directive: DriveDirective,
    next: usize,
    last_sent: f64,
}

impl Driver {
    /// Returns the command to send now, or `None` when finished.
    fn command(&mut self, sim: &Simulation) -> Option<OperatorCommand> {
        let robot = sim.robot(&self.directive.robot)?;
        let pose = robot.pose;
        while self.next < self.directive.waypoints.len()
            && pose.translation().distance(self.directive.waypoints[self.next]) < ARRIVE_TOLERANCE
        {
            self.next += 1;
        }
        if self.next == self.directive.waypoints.len() {
            return None;
        }
        let target = self.directive.waypoints[self.next];
        let to_target = target - pose.translation();
        let alpha = normalize_angle(to_target.angle() - pose.theta);
        let spec = &robot.spec;
        let v_top = spec.v_max * self.directive.speed;
        let robot_id = self.directive.robot.clone();
        if self.directive.assist {
            // heading as the operator sees it in the robot's map frame
            let est = robot.estimated_pose.unwrap_or(pose);
            let goal = normalize_angle(to_target.angle() - pose.theta + est.theta);
            return Some(OperatorCommand::CmdVel {
                robot_id,
                v: v_top,
                omega: 0.0,
                goal_heading: Some(goal),
            });
        }
        let (v, omega) = if alpha.abs() > TURN_IN_PLACE {
            (0.0, (2.0 * alpha).clamp(-spec.omega_max, spec.omega_max))
        } else {
            let slow = (to_target.norm() + 0.2).min(v_top);
            (slow, (2.0 * alpha).clamp(-spec.omega_max, spec.omega_max))
        };
        Some(OperatorCommand::CmdVel {
            robot_id,
            v,
            omega,
            goal_heading: None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ScriptStatus {
    Running,
    Finished,
    /// Awaiting an event that never fired before the cap.
    Deadlocked { step: usize, awaiting: String },
}

/// Executes an [`OperatorScript`] against a simulation, one step at a time.
pub struct ScriptRunner {
    script: OperatorScript,
    cursor: usize,
    hold_until: f64,
    drivers: Vec<Driver>,
    seen: BTreeSet<String>,
    /// Commands the simulation refused, with the reason.
    pub rejections: Vec<(f64, OperatorCommand, String)>,
}

impl ScriptRunner {
    pub fn new(script: OperatorScript) -> Self {
        Self {
            script,
            cursor: 0,
            hold_until: f64::NEG_INFINITY,
            drivers: Vec::new(),
            seen: BTreeSet::new(),
            rejections: Vec::new(),
        }
    }

    pub fn is_finished(&self) -> bool {
        self.cursor == self.script.steps.len() && self.drivers.is_empty()
    }

    /// Step currently waiting for its trigger.
    pub fn pending(&self) -> Option<&ScriptStep> {
        self.script.steps.get(self.cursor)
    }

    /// Records events from the last simulation step.
    pub fn observe(&mut self, events: &[SimEvent]) {
        for e in events {
            let key = match e {
                SimEvent::TransferComplete { .. } => "transfer_complete".to_string(),
                SimEvent::RelocalizeSuccess { .. } => "relocalize_success".to_string(),
                SimEvent::RelocalizeFailure { .. } => "relocalize_failure".to_string(),
                SimEvent::RepeatDone { robot_id } => format!("repeat_done:{robot_id}"),
                SimEvent::ModeChanged { robot_id, mode } => format!("mode:{robot_id}:{}", mode.name()),
                _ => continue,
            };
            self.seen.insert(key);
        }
    }

    fn fired(&self, trigger: &Trigger, sim: &Simulation) -> bool {
        match trigger {
            Trigger::At { at } => sim.time() >= *at - 1e-9,
            Trigger::Await { event } => match event.strip_prefix("phase:").and_then(Phase::from_name) {
                Some(p) => sim.phase_history().iter().any(|(_, q)| *q == p),
                None => self.seen.contains(event),
            },
        }
    }

    /// Issues whatever the script wants done before the next simulation
    /// step.
    pub fn before_step(&mut self, sim: &mut Simulation) {
        while sim.time() >= self.hold_until - 1e-9 {
            let Some(step) = self.script.steps.get(self.cursor).cloned() else { break };
            if !self.fired(&step.trigger, sim) {
                break;
            }
            self.cursor += 1;
            match step.action {
                Action::Command(c) => self.submit(sim, c),
                Action::Drive(d) => {
                    self.drivers.retain(|x| x.directive.robot != d.robot);
                    if d.assist {
                        self.submit(
                            sim,
                            OperatorCommand::SetMode {
                                robot_id: d.robot.clone(),
                                mode: Mode::GapAssist,
                            },
                        );
                    }
                    self.drivers.push(Driver {
                        directive: d,
                        next: 0,
                        last_sent: f64::NEG_INFINITY,
                    });
                }
                Action::Wait(s) => self.hold_until = sim.time() + s,
            }
        }
        let mut done = Vec::new();
        let mut outgoing = Vec::new();
        for (k, d) in self.drivers.iter_mut().enumerate() {
            if sim.time() - d.last_sent < COMMAND_PERIOD - 1e-9 {
                continue;
            }
            d.last_sent = sim.time();
            match d.command(sim) {
                Some(c) => outgoing.push(c),
                None => {
                    outgoing.push(OperatorCommand::stop(&d.directive.robot));
                    if d.directive.assist {
                        outgoing.push(OperatorCommand::SetMode {
                            robot_id: d.directive.robot.clone(),
                            mode: Mode::Manual,
                        });
                    }
                    done.push(k);
                }
            }
        }
        for k in done.into_iter().rev() {
            let d = self.drivers.remove(k);
            self.seen.insert(format!("drive_done:{}", d.directive.robot));
        }
        for c in outgoing {
            self.submit(sim, c);
        }
    }

    fn submit(&mut self, sim: &mut Simulation, c: OperatorCommand) {
        if let Err(e) = sim.submit(c.clone()) {
            self.rejections.push((sim.time(), c, e.to_string()));
        }
    }

    pub fn status(&self, sim: &Simulation, capped: bool) -> ScriptStatus {
        if self.is_finished() && sim.time() >= self.hold_until - 1e-9 {
            return ScriptStatus::Finished;
        }
        match (capped, self.pending()) {
            (true, Some(ScriptStep { trigger: Trigger::Await { event }, .. })) => ScriptStatus::Deadlocked {
                step: self.cursor,
                awaiting: event.clone(),
            },
            _ => ScriptStatus::Running,
        }
    }
}

/// Ground-truth pose of `robot` expressed in the global map frame; what an
/// operator reads off the map when clicking a relocalization guess.
pub fn pose_in_global_frame(sim: &Simulation, robot: &str) -> Option<Pose2D> {
    let r = sim.robot(robot)?;
    Some(sim.global_frame().inverse().compose(&r.pose))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn parses_demo_script() {
        let s = inspect_core::scenario::Scenario::demo_site();
        let script = OperatorScript::parse(s.operator_script.as_deref().unwrap()).unwrap();
        assert!(matches!(script.steps[0].action, Action::Drive(_)));
        assert!(matches!(
            &script.steps[1].trigger,
            Trigger::Await { event } if event == "drive_done:warthog"
        ));
    }

    #[test]
    fn rejects_bad_steps() {
        let bad = [
            json!({"at": 1.0, "command": {"type": "warp"}}),
            json!({"await": "phase:lunch", "wait": 1.0}),
            json!({"at": 1.0, "drive": {"robot": "a", "waypoints": []}}),
        ];
        for (i, b) in bad.iter().enumerate() {
            assert!(OperatorScript::parse(std::slice::from_ref(b)).is_err(), "case {i}");
        }
        let decreasing = [json!({"at": 2.0, "wait": 0.0}), json!({"at": 1.0, "wait": 0.0})];
        assert!(matches!(
            OperatorScript::parse(&decreasing),
            Err(ScriptError::Invalid { index: 1, .. })
        ));
    }
}
