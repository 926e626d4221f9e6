use std::collections::{BTreeSet, VecDeque};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::command::{CommandReject, Mode, OperatorCommand};
use super::log::{coverage_record, compute_metrics, MetricsReport, MissionLog, LOG_SCHEMA_VERSION};
use super::mission::{next_phase, MissionEvent, Phase};
use super::robot::{RobotState, VelocityInput};
use crate::navigation::{follow_the_gap, GapParams, PathRecord, RepeatOutput, VelocityCommand};
use crate::netsim::{LinkChange, Message, MessageClass, Network, SessionId, SessionState};
use crate::radiation::{detect, project_detection, update_annotations, DetectionEvent, RadiationLevel};
use crate::registration::{decode_map, encode_map, relocalize};
use crate::AnnotatedMap;
use crate::scenario::{Scenario, ScenarioError};
use crate::sensors::{simulate_camera_intensity, simulate_lidar};
use crate::world::WorldModel;
use crate::Pose2D;

/// Things that happened during a step, in order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SimEvent {
    PhaseChanged {
        from: Phase,
        to: Phase,
    },
    CommandApplied {
        command: OperatorCommand,
    },
    CommandRejected {
        command: OperatorCommand,
        reason: CommandReject,
    },
    TransferProgress {
        session: u64,
        chunks_acked: usize,
        chunks_total: usize,
        state: SessionState,
    },
    TransferComplete {
        session: u64,
        bytes: usize,
    },
    RelocalizeSuccess {
        robot_id: String,
        pose: Pose2D,
        mean_residual: f64,
    },
    RelocalizeFailure {
        robot_id: String,
        best_residual: Option<f64>,
    },
    RepeatDone {
        robot_id: String,
    },
    ModeChanged {
        robot_id: String,
        mode: Mode,
    },
    Collision {
        robot_id: String,
        pose: Pose2D,
    },
    Detection {
        robot_id: String,
        mean_gray: f64,
        annotated_point_count: usize,
        changed: usize,
    },
    LinkChanged(LinkChange),
}

impl SimEvent {
    fn log_kind(&self) -> &'static str {
        match self {
            SimEvent::PhaseChanged { .. } => "phase_change",
            SimEvent::CommandApplied { .. } | SimEvent::CommandRejected { .. } => "command",
            SimEvent::TransferProgress { .. } | SimEvent::TransferComplete { .. } => "transfer_progress",
            SimEvent::RelocalizeSuccess { .. } | SimEvent::RelocalizeFailure { .. } => "relocalize",
            SimEvent::RepeatDone { .. } | SimEvent::ModeChanged { .. } => "mode_change",
            SimEvent::Collision { .. } => "collision",
            SimEvent::Detection { .. } => "detection",
            SimEvent::LinkChanged(_) => "link_change",
        }
    }
}

/// The whole mission: robots, radios, mission phase and log, advanced in
/// fixed steps by a single owner.
pub struct Simulation {
    scenario: Scenario,
    robots: Vec<RobotState>,
    network: Network,
    phase: Phase,
    phase_history: Vec<(f64, Phase)>,
    log: MissionLog,
    rng: ChaCha8Rng,
    time: f64,
    step_index: u64,
    base_queue: VecDeque<OperatorCommand>,
    inbox: Vec<(usize, OperatorCommand, f64)>,
    transfer: Option<SessionId>,
    transfer_seen: Option<(usize, SessionState)>,
    detections: Vec<DetectionEvent>,
    failure: Option<String>,
    relocalization: Option<Pose2D>,
    covered: Vec<BTreeSet<(i64, i64)>>,
    mapping: usize,
    inspection: usize,
}

impl Simulation {
    pub fn new(scenario: Scenario) -> Result<Self, ScenarioError> {
        scenario.validate()?;
        let robots: Vec<RobotState> = scenario.robots.iter().map(|s| RobotState::new(s.clone(), &scenario.sim)).collect();
        let idx = |id: &str| robots.iter().position(|r| r.id() == id).expect("validated");
        let (mapping, inspection) = (idx(&scenario.mission.mapping_robot), idx(&scenario.mission.inspection_robot));
        let mut network = Network::new(scenario.radio_nodes());
        let rng = ChaCha8Rng::seed_from_u64(scenario.seed);
        let mut log = MissionLog::default();
        log.push(
            0.0,
            "header",
            json!({
                "schema_version": LOG_SCHEMA_VERSION,
                "scenario": scenario.name,
                "seed": scenario.seed,
                "dt": scenario.sim.dt,
                "coverage_cell": scenario.sim.coverage_cell,
                "robots": scenario.robots.iter().map(|r| &r.id).collect::<Vec<_>>(),
                "base_station": scenario.base_station.id,
                "scenario_document": scenario,
                "world_frame_of": {
                    "mapping_robot": scenario.mission.mapping_robot,
                    "start_pose": scenario.robot(&scenario.mission.mapping_robot).unwrap().start_pose,
                },
            }),
        );
        for c in network.evaluate(&scenario.world) {
            log.push(0.0, "link_change", serde_json::to_value(c).unwrap());
        }
        log.push(0.0, "phase_change", json!({"from": null, "to": Phase::OutdoorMapping}));
        let covered = vec![BTreeSet::new(); robots.len()];
        Ok(Self {
            scenario,
            robots,
            network,
            phase: Phase::OutdoorMapping,
            phase_history: vec![(0.0, Phase::OutdoorMapping)],
            log,
            rng,
            time: 0.0,
            step_index: 0,
            base_queue: VecDeque::new(),
            inbox: Vec::new(),
            transfer: None,
            transfer_seen: None,
            detections: Vec::new(),
            failure: None,
            relocalization: None,
            covered,
            mapping,
            inspection,
        })
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn step_index(&self) -> u64 {
        self.step_index
    }

    pub fn dt(&self) -> f64 {
        self.scenario.sim.dt
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn phase_history(&self) -> &[(f64, Phase)] {
        &self.phase_history
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn world(&self) -> &WorldModel {
        &self.scenario.world
    }

    pub fn robots(&self) -> &[RobotState] {
        &self.robots
    }

    pub fn robot(&self, id: &str) -> Option<&RobotState> {
        self.robots.iter().find(|r| r.id() == id)
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    /// Scripted link outages and fault injection.
    pub fn network_mut(&mut self) -> &mut Network {
        &mut self.network
    }

    pub fn log(&self) -> &MissionLog {
        &self.log
    }

    pub fn detections(&self) -> &[DetectionEvent] {
        &self.detections
    }

    /// Set when the mission can no longer succeed (collision while repeating).
    pub fn failure(&self) -> Option<&str> {
        self.failure.as_deref()
    }

    pub fn transfer(&self) -> Option<&crate::netsim::TransferSession> {
        self.transfer.and_then(|s| self.network.session(s))
    }

    /// The inspection robot's own start frame expressed in the mapping
    /// robot's frame, once relocalized.
    pub fn relocalization(&self) -> Option<Pose2D> {
        self.relocalization
    }

    pub fn mapping_robot(&self) -> &RobotState {
        &self.robots[self.mapping]
    }

    pub fn inspection_robot(&self) -> &RobotState {
        &self.robots[self.inspection]
    }

    /// World pose of the global map frame (the mapping robot's start).
    pub fn global_frame(&self) -> Pose2D {
        self.robots[self.mapping].spec.start_pose
    }

    /// The single global map: the inspection robot's map once it has merged
    /// into the mapping robot's frame, the mapping robot's map before that.
    pub fn unified_map(&self) -> &AnnotatedMap {
        if self.relocalization.is_some() {
            &self.robots[self.inspection].local_map
        } else {
            &self.robots[self.mapping].local_map
        }
    }

    pub fn metrics(&self) -> MetricsReport {
        compute_metrics(&self.log)
    }

    fn robot_index(&self, id: &str) -> Result<usize, CommandReject> {
        self.robots
            .iter()
            .position(|r| r.id() == id)
            .ok_or_else(|| CommandReject::UnknownRobot { robot_id: id.into() })
    }

    fn wrong_phase(&self, cmd: &OperatorCommand) -> CommandReject {
        CommandReject::WrongPhase {
            command: cmd.name().into(),
            phase: self.phase,
        }
    }

    fn check(&self, cmd: &OperatorCommand) -> Result<(), CommandReject> {
        if let Some(id) = cmd.target_robot() {
            self.robot_index(id)?;
        }
        match cmd {
            OperatorCommand::RelocGuess { robot_id, .. } => {
                if self.phase != Phase::AwaitRelocalize {
                    return Err(self.wrong_phase(cmd));
                }
                if self.robot_index(robot_id)? != self.inspection {
                    return Err(CommandReject::invalid("only the inspection robot relocalizes"));
                }
            }
            OperatorCommand::StartTransfer { from, to } => {
                let (f, t) = (self.robot_index(from)?, self.robot_index(to)?);
                if self.phase != Phase::MapTransfer {
                    return Err(self.wrong_phase(cmd));
                }
                if f == t {
                    return Err(CommandReject::invalid("transfer needs two robots"));
                }
                if self.transfer().is_some_and(|s| s.state != SessionState::Aborted) {
                    return Err(CommandReject::invalid("a transfer is already running"));
                }
                if self.robots[f].local_map.is_empty() {
                    return Err(CommandReject::invalid("source map is empty"));
                }
            }
            OperatorCommand::AdvancePhase => {
                if next_phase(self.phase, MissionEvent::AdvancePhase).is_err() {
                    return Err(self.wrong_phase(cmd));
                }
                if self.phase == Phase::OutdoorMapping && self.robots[self.mapping].local_map.is_empty() {
                    return Err(CommandReject::invalid("mapping robot has no map yet"));
                }
            }
            OperatorCommand::SetCameraPan { pan, .. } if !pan.is_finite() => {
                return Err(CommandReject::invalid("pan must be finite"));
            }
            OperatorCommand::CmdVel { v, omega, goal_heading, .. } => {
                if !v.is_finite() || !omega.is_finite() || goal_heading.is_some_and(|g| !g.is_finite()) {
                    return Err(CommandReject::invalid("velocity must be finite"));
                }
            }
            _ => {}
        }
        if let Some(id) = cmd.target_robot() {
            if self.network.route(&self.scenario.base_station.id, id).is_none() {
                return Err(CommandReject::NoRoute { robot_id: id.into() });
            }
        }
        Ok(())
    }

    /// Accepts a command from the operator at the base station. It takes
    /// effect at the next step (mission commands) or once the radio network
    /// delivers it (robot commands).
    pub fn submit(&mut self, cmd: OperatorCommand) -> Result<(), CommandReject> {
        match self.check(&cmd) {
            Ok(()) => {
                self.log.push(self.time, "command", json!({"stage": "submit", "status": "queued", "command": cmd}));
                self.base_queue.push_back(cmd);
                Ok(())
            }
            Err(reason) => {
                self.log.push(self.time, "command", json!({"stage": "submit", "status": "rejected", "command": cmd, "reason": reason}));
                Err(reason)
            }
        }
    }

    fn emit(&mut self, time: f64, event: SimEvent, events: &mut Vec<SimEvent>) {
        let payload = match &event {
            SimEvent::CommandApplied { command } => json!({"stage": "apply", "status": "applied", "command": command}),
            SimEvent::CommandRejected { command, reason } => {
                json!({"stage": "apply", "status": "rejected", "command": command, "reason": reason})
            }
            SimEvent::RelocalizeSuccess { .. } => {
                let mut v = serde_json::to_value(&event).unwrap();
                v["success"] = Value::Bool(true);
                v
            }
            SimEvent::RelocalizeFailure { .. } => {
                let mut v = serde_json::to_value(&event).unwrap();
                v["success"] = Value::Bool(false);
                v
            }
            _ => serde_json::to_value(&event).unwrap(),
        };
        self.log.push(time, event.log_kind(), payload);
        events.push(event);
    }

    fn transition(&mut self, time: f64, event: MissionEvent, events: &mut Vec<SimEvent>) -> bool {
        let Ok(to) = next_phase(self.phase, event) else { return false };
        let from = self.phase;
        self.phase = to;
        self.phase_history.push((time, to));
        self.emit(time, SimEvent::PhaseChanged { from, to }, events);
        match to {
            Phase::IndoorInspection => {
                self.robots[self.inspection].teach = Some(PathRecord::new(self.scenario.sim.teach_spacing));
                if let Some(est) = self.robots[self.inspection].estimated_pose {
                    self.robots[self.inspection].teach.as_mut().unwrap().observe(est);
                }
            }
            Phase::ReturnHome => {
                let r = &mut self.robots[self.inspection];
                r.velocity = None;
                if r.start_repeat() {
                    let robot_id = r.id().to_string();
                    self.emit(time, SimEvent::ModeChanged { robot_id, mode: Mode::Repeat }, events);
                } else {
                    let robot_id = r.id().to_string();
                    self.emit(time, SimEvent::RepeatDone { robot_id }, events);
                    self.transition(time, MissionEvent::RepeatDone, events);
                }
            }
            _ => {}
        }
        true
    }

    fn apply_mission_command(&mut self, cmd: OperatorCommand, events: &mut Vec<SimEvent>) {
        let t = self.time;
        if let Err(reason) = self.check(&cmd) {
            self.emit(t, SimEvent::CommandRejected { command: cmd, reason }, events);
            return;
        }
        match &cmd {
            OperatorCommand::AdvancePhase => {
                self.emit(t, SimEvent::CommandApplied { command: cmd.clone() }, events);
                self.transition(t, MissionEvent::AdvancePhase, events);
            }
            OperatorCommand::StartTransfer { from, to } => {
                let f = self.robot_index(from).unwrap();
                let bytes = encode_map(&self.robots[f].local_map);
                match self.network.start_transfer(from, to, bytes, self.scenario.sim.transfer_chunk) {
                    Ok(sid) => {
                        self.transfer = Some(sid);
                        self.transfer_seen = None;
                        self.emit(t, SimEvent::CommandApplied { command: cmd.clone() }, events);
                    }
                    Err(e) => {
                        let reason = CommandReject::invalid(e.to_string());
                        self.emit(t, SimEvent::CommandRejected { command: cmd.clone(), reason }, events);
                    }
                }
            }
            OperatorCommand::Abort => {
                if let Some(sid) = self.transfer {
                    self.network.abort_transfer(sid);
                }
                self.emit(t, SimEvent::CommandApplied { command: cmd.clone() }, events);
                for i in 0..self.robots.len() {
                    let r = &mut self.robots[i];
                    r.velocity = None;
                    r.follower = None;
                    if r.mode != Mode::Idle {
                        r.mode = Mode::Idle;
                        let robot_id = r.id().to_string();
                        self.emit(t, SimEvent::ModeChanged { robot_id, mode: Mode::Idle }, events);
                    }
                }
            }
            _ => unreachable!("robot commands travel over the network"),
        }
    }

    fn apply_robot_command(&mut self, i: usize, cmd: OperatorCommand, received_at: f64, events: &mut Vec<SimEvent>) {
        let t = self.time;
        match &cmd {
            OperatorCommand::CmdVel { v, omega, goal_heading, .. } => {
                let spec = &self.robots[i].spec;
                let c = VelocityCommand { v: *v, omega: *omega }.clamped(spec.v_max, spec.omega_max);
                self.robots[i].velocity = Some(VelocityInput {
                    v: c.v,
                    omega: c.omega,
                    goal_heading: *goal_heading,
                    received_at,
                });
                self.emit(t, SimEvent::CommandApplied { command: cmd }, events);
            }
            OperatorCommand::SetMode { mode, .. } => {
                let r = &mut self.robots[i];
                let ok = match mode {
                    Mode::Repeat => r.start_repeat(),
                    m => {
                        r.follower = None;
                        r.mode = *m;
                        true
                    }
                };
                if ok {
                    let robot_id = r.id().to_string();
                    self.emit(t, SimEvent::CommandApplied { command: cmd.clone() }, events);
                    self.emit(t, SimEvent::ModeChanged { robot_id, mode: *mode }, events);
                } else {
                    let reason = CommandReject::invalid("no recorded path to repeat");
                    self.emit(t, SimEvent::CommandRejected { command: cmd, reason }, events);
                }
            }
            OperatorCommand::SetCameraPan { pan, .. } => {
                let r = &mut self.robots[i];
                r.camera_pan = pan.clamp(r.spec.camera_mount.pan_min, r.spec.camera_mount.pan_max);
                self.emit(t, SimEvent::CommandApplied { command: cmd }, events);
            }
            OperatorCommand::RelocGuess { x, y, theta, .. } => {
                if let Err(reason) = self.check(&cmd) {
                    self.emit(t, SimEvent::CommandRejected { command: cmd, reason }, events);
                    return;
                }
                self.emit(t, SimEvent::CommandApplied { command: cmd.clone() }, events);
                self.relocalize(i, Pose2D::new(*x, *y, *theta), events);
            }
            _ => unreachable!("mission commands act at the base"),
        }
    }

    fn relocalize(&mut self, i: usize, guess: Pose2D, events: &mut Vec<SimEvent>) {
        let t = self.time;
        let robot_id = self.robots[i].id().to_string();
        let r = &self.robots[i];
        let (Some(received), Some(scan), Some(at_scan)) = (&r.received_map, &r.last_scan, r.scan_estimate) else {
            self.emit(
                t,
                SimEvent::RelocalizeFailure {
                    robot_id,
                    best_residual: None,
                },
                events,
            );
            return;
        };
        let cloud = r.scan_cloud(scan, None, &self.scenario.sim);
        let received = received.clone();
        match relocalize(&received, &cloud, guess, &self.scenario.sim.relocalize) {
            Ok(found) => {
                // own start frame -> received map frame
                let own_to_global = found.pose.compose(&at_scan.inverse());
                let rule = self.scenario.sim.geiger.update_rule;
                let r = &mut self.robots[i];
                let mut unified = received;
                unified.merge(&r.local_map, &own_to_global, rule);
                r.local_map = unified;
                r.map_epoch += 1;
                r.estimated_pose = r.estimated_pose.map(|e| own_to_global.compose(&e));
                r.scan_estimate = Some(found.pose);
                if let Some(teach) = r.teach.as_mut() {
                    for w in &mut teach.waypoints {
                        *w = own_to_global.compose(w);
                    }
                }
                self.relocalization = Some(own_to_global);
                self.emit(
                    t,
                    SimEvent::RelocalizeSuccess {
                        robot_id,
                        pose: found.pose,
                        mean_residual: found.mean_residual,
                    },
                    events,
                );
                self.transition(t, MissionEvent::RelocalizeSuccess, events);
            }
            Err(fail) => {
                let best = fail.best_residual.is_finite().then_some(fail.best_residual);
                self.emit(
                    t,
                    SimEvent::RelocalizeFailure {
                        robot_id,
                        best_residual: best,
                    },
                    events,
                );
            }
        }
    }

    fn desired_velocity(&mut self, i: usize, events: &mut Vec<SimEvent>) -> VelocityCommand {
        let t = self.time;
        let cfg = &self.scenario.sim;
        let r = &mut self.robots[i];
        let limits = GapParams {
            v_max: cfg.gap.v_max.min(r.spec.v_max),
            omega_max: cfg.gap.omega_max.min(r.spec.omega_max),
            ..cfg.gap
        };
        let fresh = r.velocity.filter(|c| t - c.received_at <= cfg.watchdog + 1e-9);
        let cmd = match r.mode {
            Mode::Idle => VelocityCommand::STOP,
            Mode::Manual => fresh.map_or(VelocityCommand::STOP, |c| VelocityCommand { v: c.v, omega: c.omega }),
            Mode::GapAssist => match (fresh, &r.last_scan, r.estimated_pose) {
                (Some(c), Some(scan), Some(est)) if c.v > 0.0 => {
                    let goal = c.goal_heading.map_or(0.0, |g| crate::geometry::normalize_angle(g - est.theta));
                    let steer = follow_the_gap(scan, goal, &limits);
                    let throttle = (c.v / r.spec.v_max).clamp(0.0, 1.0);
                    VelocityCommand {
                        v: steer.v * throttle,
                        omega: steer.omega,
                    }
                }
                _ => VelocityCommand::STOP,
            },
            Mode::Repeat => {
                let est = r.estimated_pose.unwrap_or(r.pose);
                match r.follower.as_mut().map(|f| f.step(est, &limits)) {
                    Some(RepeatOutput::Command(c)) => c,
                    _ => {
                        r.follower = None;
                        r.mode = Mode::Idle;
                        let robot_id = r.id().to_string();
                        self.emit(t, SimEvent::RepeatDone { robot_id }, events);
                        self.transition(t, MissionEvent::RepeatDone, events);
                        VelocityCommand::STOP
                    }
                }
            }
        };
        let spec = &self.robots[i].spec;
        cmd.clamped(spec.v_max, spec.omega_max)
    }

    fn move_robot(&mut self, i: usize, cmd: VelocityCommand, events: &mut Vec<SimEvent>) {
        let dt = self.scenario.sim.dt;
        let t = self.time;
        let old = self.robots[i].pose;
        if cmd.v == 0.0 && cmd.omega == 0.0 {
            return;
        }
        let new = Pose2D::new(
            old.x + cmd.v * old.theta.cos() * dt,
            old.y + cmd.v * old.theta.sin() * dt,
            crate::geometry::normalize_angle(old.theta + cmd.omega * dt),
        );
        let radius = self.robots[i].spec.footprint_radius;
        let world = &self.scenario.world;
        let blocked = new.translation() != old.translation()
            && (world.clearance(new.translation()) <= radius || !world.bounds.contains(new.translation()));
        if blocked {
            let r = &mut self.robots[i];
            r.velocity = None;
            r.collisions += 1;
            let robot_id = r.id().to_string();
            let repeating = r.mode == Mode::Repeat;
            self.emit(t, SimEvent::Collision { robot_id: robot_id.clone(), pose: old }, events);
            if repeating && self.failure.is_none() {
                self.failure = Some(format!("{robot_id} collided while repeating its path"));
            }
            return;
        }
        let noise = self.robots[i].spec.odometry_noise;
        let delta = old.inverse().compose(&new);
        let mut sample = |sigma: f64| {
            if sigma > 0.0 {
                Normal::new(0.0, sigma).unwrap().sample(&mut self.rng)
            } else {
                0.0
            }
        };
        let measured = Pose2D::new(delta.x + sample(noise.sigma_xy), delta.y + sample(noise.sigma_xy), delta.theta + sample(noise.sigma_theta));
        let record_teach = i == self.inspection && self.phase == Phase::IndoorInspection;
        let r = &mut self.robots[i];
        r.odometer += new.translation_distance(&old);
        r.pose = new;
        if let Some(est) = r.estimated_pose.as_mut() {
            *est = est.compose(&measured);
            if record_teach {
                if let Some(teach) = r.teach.as_mut() {
                    teach.observe(*est);
                }
            }
        }
    }

    fn sense(&mut self, i: usize, lidar_tick: bool, camera_tick: bool, events: &mut Vec<SimEvent>) {
        let t = self.time;
        let cfg = self.scenario.sim.clone();
        if lidar_tick {
            let r = &self.robots[i];
            let scan = simulate_lidar(&self.scenario.world, r.pose, &r.spec.lidar, t, &mut self.rng);
            let mut fresh_cells = Vec::new();
            for p in scan.hit_points() {
                let w = r.pose.apply(p);
                let cell = ((w.x / cfg.coverage_cell).floor() as i64, (w.y / cfg.coverage_cell).floor() as i64);
                if self.covered[i].insert(cell) {
                    fresh_cells.push(cell);
                }
            }
            if !fresh_cells.is_empty() {
                self.log.push(t, "metric", coverage_record(r.id(), &fresh_cells));
            }
            let r = &mut self.robots[i];
            let moved = r.last_processed != r.estimated_pose;
            if moved {
                let cloud = r.scan_cloud(&scan, r.last_reading.as_ref(), &cfg);
                r.track(&cloud, &cfg);
                r.last_processed = r.estimated_pose;
            }
            r.last_scan = Some(scan);
            let r = &self.robots[i];
            self.log.push(
                t,
                "pose",
                json!({
                    "robot_id": r.id(),
                    "truth": r.pose,
                    "estimate": r.estimated_pose,
                    "frame": r.map_frame(),
                    "odometer": r.odometer,
                    "mode": r.mode,
                }),
            );
            let bytes = 8 * cfg.telemetry_beams.min(r.spec.lidar.beam_count) + 64;
            let msg = Message::sized(MessageClass::Stream, r.id(), &self.scenario.base_station.id, bytes);
            let _ = self.network.send(msg);
        }
        let r = &self.robots[i];
        if let (true, Some(cam)) = (camera_tick, r.spec.camera) {
            let mount = r.camera_mount();
            let reading = simulate_camera_intensity(&self.scenario.world, r.pose.compose(&mount), &cam, t);
            let robot_id = r.id().to_string();
            let mut triggered = None;
            if let (Some(_), Some(scan), Some(est)) = (detect(&reading, &cfg.geiger), &r.last_scan, r.scan_estimate) {
                let geiger = crate::radiation::GeigerConfig { fov: cam.fov, ..cfg.geiger.clone() };
                triggered = Some(project_detection(scan, mount, est, &geiger, t));
            }
            let r = &mut self.robots[i];
            r.last_reading = Some(reading);
            if let Some(projected) = triggered {
                let changed = update_annotations(&mut r.local_map, &projected, cfg.geiger.update_rule);
                let count = projected.len();
                self.detections.push(DetectionEvent {
                    reading,
                    annotated_point_count: count,
                    robot_id: robot_id.clone(),
                });
                self.emit(
                    t,
                    SimEvent::Detection {
                        robot_id: robot_id.clone(),
                        mean_gray: reading.mean_gray,
                        annotated_point_count: count,
                        changed,
                    },
                    events,
                );
                if changed > 0 {
                    let mut levels = [0usize; 3];
                    for (_, a) in &projected {
                        levels[match a.level {
                            RadiationLevel::Red => 0,
                            RadiationLevel::Orange => 1,
                            RadiationLevel::Yellow => 2,
                        }] += 1;
                    }
                    self.log.push(
                        t,
                        "annotation",
                        json!({
                            "robot_id": robot_id,
                            "changed": changed,
                            "red": levels[0],
                            "orange": levels[1],
                            "yellow": levels[2],
                        }),
                    );
                }
            }
        }
    }

    /// Advances the mission by one `dt`.
    pub fn step(&mut self) -> Vec<SimEvent> {
        let mut events = Vec::new();
        let t = self.time;
        let base = self.scenario.base_station.id.clone();
        while let Some(cmd) = self.base_queue.pop_front() {
            match cmd.target_robot().map(str::to_string) {
                Some(robot_id) => {
                    let payload = serde_json::to_vec(&cmd).expect("command serializes");
                    if let Err(e) = self.network.send(Message::new(MessageClass::Control, &base, &robot_id, payload)) {
                        let reason = match e {
                            crate::netsim::SendError::NoRoute { .. } => CommandReject::NoRoute { robot_id },
                            e => CommandReject::invalid(e.to_string()),
                        };
                        self.emit(t, SimEvent::CommandRejected { command: cmd, reason }, &mut events);
                    }
                }
                None => self.apply_mission_command(cmd, &mut events),
            }
        }
        for (i, cmd, at) in std::mem::take(&mut self.inbox) {
            self.apply_robot_command(i, cmd, at, &mut events);
        }
        for i in 0..self.robots.len() {
            let cmd = self.desired_velocity(i, &mut events);
            self.move_robot(i, cmd, &mut events);
        }
        let lidar_tick = self.step_index % self.scenario.sim.lidar_period() == 0;
        let camera_tick = self.step_index % self.scenario.sim.camera_period() == 0;
        for i in 0..self.robots.len() {
            self.sense(i, lidar_tick, camera_tick, &mut events);
        }
        for r in &self.robots {
            self.network.set_position(r.id(), r.pose.translation()).expect("robot is a radio node");
        }
        let end = (self.step_index + 1) as f64 * self.scenario.sim.dt;
        let report = self.network.step_until(&self.scenario.world, end);
        for c in report.link_changes {
            self.emit(t, SimEvent::LinkChanged(c), &mut events);
        }
        for d in report.deliveries {
            if d.message.class != MessageClass::Control {
                continue;
            }
            let Ok(i) = self.robot_index(&d.message.destination) else { continue };
            if let Ok(cmd) = serde_json::from_slice::<OperatorCommand>(&d.message.payload) {
                self.inbox.push((i, cmd, d.delivered_at));
            }
        }
        self.track_transfer(report.end, &mut events);
        self.time = report.end;
        self.step_index += 1;
        events
    }

    fn track_transfer(&mut self, now: f64, events: &mut Vec<SimEvent>) {
        let Some(s) = self.transfer() else { return };
        let seen = (s.chunks_acked, s.state);
        if self.transfer_seen == Some(seen) {
            return;
        }
        let (sid, acked, total, state) = (s.id, s.chunks_acked, s.chunks_total, s.state);
        let completed = s.received().map(|b| (b.to_vec(), s.completed_at.unwrap_or(now), s.to.clone()));
        self.transfer_seen = Some(seen);
        self.emit(
            completed.as_ref().map_or(now, |c| c.1),
            SimEvent::TransferProgress {
                session: sid.0,
                chunks_acked: acked,
                chunks_total: total,
                state,
            },
            events,
        );
        if let Some((bytes, at, to)) = completed {
            let i = self.robot_index(&to).expect("transfer between robots");
            self.robots[i].received_map = Some(decode_map(&bytes).expect("transferred map decodes"));
            self.emit(at, SimEvent::TransferComplete { session: sid.0, bytes: bytes.len() }, events);
            self.transition(at, MissionEvent::TransferComplete, events);
        }
    }

    /// Runs steps until `until(self)` holds or `max_time` passes. Returns
    /// whether the condition was met.
    pub fn run_until(&mut self, max_time: f64, mut until: impl FnMut(&Simulation) -> bool) -> bool {
        while self.time < max_time - 1e-9 {
            if until(self) {
                return true;
            }
            self.step();
        }
        until(self)
    }

    /// Logs closing poses and the metrics summary.
    pub fn finish(&mut self) -> MetricsReport {
        let t = self.time;
        for r in &self.robots {
            self.log.push(
                t,
                "pose",
                json!({
                    "robot_id": r.id(),
                    "truth": r.pose,
                    "estimate": r.estimated_pose,
                    "frame": r.map_frame(),
                    "odometer": r.odometer,
                    "mode": r.mode,
                }),
            );
        }
        let m = self.metrics();
        self.log.push(t, "metric", json!({"metric": "summary", "report": m, "phase": self.phase}));
        m
    }
}
