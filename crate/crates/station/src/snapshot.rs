//! Periodic situational snapshots with incremental map deltas.

use std::collections::BTreeMap;

use inspect_core::fleet::{Mode, Phase, SimEvent, Simulation};
use inspect_core::netsim::{LinkState, SessionState};
use inspect_core::radiation::RadiationAnnotation;
use inspect_core::{AnnotatedMap, Pose2D};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAX_SCAN_BEAMS: usize = 90;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotView {
    pub robot_id: String,
    pub mode: Mode,
    /// Map-frame estimate; what the operator sees.
    pub estimate: Option<Pose2D>,
    pub frame: String,
    pub camera_pan: f64,
    /// Decimated scan as `[angle, range, hit]` in the robot frame.
    pub scan: Vec<(f64, f64, bool)>,
    pub map_points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnotationDelta {
    pub index: usize,
    pub annotation: RadiationAnnotation,
}

/// New map content since the previous snapshot. With `reset` the receiver
/// must discard its copy first (the map was replaced, e.g. on merge).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapDelta {
    pub robot_id: String,
    pub epoch: u64,
    pub reset: bool,
    pub frame: String,
    pub voxel: f64,
    pub start_index: usize,
    /// `[x, y, descriptor]` for indices `start_index..`.
    pub points: Vec<[f64; 3]>,
    pub annotations: Vec<AnnotationDelta>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferView {
    pub session: u64,
    pub from: String,
    pub to: String,
    pub chunks_acked: usize,
    pub chunks_total: usize,
    pub total_bytes: usize,
    pub state: SessionState,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    /// Stream position. A full snapshot carries the position of the last
    /// incremental one it already includes.
    pub seq: u64,
    pub sim_time: f64,
    pub phase: Phase,
    pub robots: Vec<RobotView>,
    pub map_deltas: Vec<MapDelta>,
    pub links: Vec<LinkState>,
    pub routes: BTreeMap<String, Vec<String>>,
    pub transfer: Option<TransferView>,
    /// Events since the previous snapshot.
    pub recent_events: Vec<SimEvent>,
}

#[derive(Clone, Debug, Default)]
struct Sent {
    epoch: u64,
    points: usize,
    annotations: BTreeMap<usize, RadiationAnnotation>,
}

/// Builds consecutive snapshots, remembering what was already sent.
#[derive(Default)]
pub struct SnapshotStream {
    sent: BTreeMap<String, Sent>,
    events: Vec<SimEvent>,
    seq: u64,
}

fn map_delta(robot_id: &str, epoch: u64, map: &AnnotatedMap, prior: Option<&Sent>) -> MapDelta {
    let prior = prior.filter(|p| p.epoch == epoch);
    let start = prior.map_or(0, |p| p.points);
    let points = (start..map.len())
        .map(|i| [map.points()[i].x, map.points()[i].y, map.descriptors()[i]])
        .collect();
    let annotations = map
        .annotations()
        .iter()
        .filter(|(i, a)| prior.is_none_or(|p| p.annotations.get(i) != Some(a)))
        .map(|(i, a)| AnnotationDelta {
            index: *i,
            annotation: *a,
        })
        .collect();
    MapDelta {
        robot_id: robot_id.into(),
        epoch,
        reset: prior.is_none(),
        frame: map.origin_frame().into(),
        voxel: map.voxel(),
        start_index: start,
        points,
        annotations,
    }
}

impl SnapshotStream {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record_events(&mut self, events: &[SimEvent]) {
        self.events.extend_from_slice(events);
    }

    fn build(&self, seq: u64, sim: &Simulation, deltas: Vec<MapDelta>, events: Vec<SimEvent>) -> Snapshot {
        let base = &sim.scenario().base_station.id;
        let robots = sim
            .robots()
            .iter()
            .map(|r| RobotView {
                robot_id: r.id().into(),
                mode: r.mode,
                estimate: r.estimated_pose,
                frame: r.map_frame().into(),
                camera_pan: r.camera_pan,
                scan: r
                    .last_scan
                    .as_ref()
                    .map(|s| s.decimated(MAX_SCAN_BEAMS).beams.iter().map(|b| (b.angle, b.range, b.hit)).collect())
                    .unwrap_or_default(),
                map_points: r.local_map.len(),
            })
            .collect();
        let routes = sim
            .robots()
            .iter()
            .filter_map(|r| sim.network().route(base, r.id()).map(|p| (r.id().to_string(), p)))
            .collect();
        Snapshot {
            seq,
            sim_time: sim.time(),
            phase: sim.phase(),
            robots,
            map_deltas: deltas,
            links: sim.network().links().cloned().collect(),
            routes,
            transfer: sim.transfer().map(|s| TransferView {
                session: s.id.0,
                from: s.from.clone(),
                to: s.to.clone(),
                chunks_acked: s.chunks_acked,
                chunks_total: s.chunks_total,
                total_bytes: s.total_bytes,
                state: s.state,
            }),
            recent_events: events,
        }
    }

    /// Next snapshot in the stream; map content is relative to the previous
    /// one.
    pub fn snapshot(&mut self, sim: &Simulation) -> Snapshot {
        let mut deltas = Vec::new();
        for r in sim.robots() {
            let d = map_delta(r.id(), r.map_epoch, &r.local_map, self.sent.get(r.id()));
            let sent = self.sent.entry(r.id().to_string()).or_default();
            if d.reset {
                *sent = Sent {
                    epoch: r.map_epoch,
                    ..Default::default()
                };
            }
            sent.points = r.local_map.len();
            for a in &d.annotations {
                sent.annotations.insert(a.index, a.annotation);
            }
            deltas.push(d);
        }
        let events = std::mem::take(&mut self.events);
        self.seq += 1;
        self.build(self.seq, sim, deltas, events)
    }

    /// Self-contained snapshot for a newly connected client. Does not
    /// advance the stream.
    pub fn full_snapshot(&self, sim: &Simulation) -> Snapshot {
        let deltas = sim.robots().iter().map(|r| map_delta(r.id(), r.map_epoch, &r.local_map, None)).collect();
        self.build(self.seq, sim, deltas, Vec::new())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ReplicaError {
    #[error("delta for {robot_id} starts at {start} but replica holds {have} points")]
    Gap { robot_id: String, start: usize, have: usize },
    #[error("delta for unknown map of {0} without reset")]
    Unknown(String),
    #[error("annotation index {index} beyond {len} points")]
    BadAnnotation { index: usize, len: usize },
}

/// Client-side map copies rebuilt from deltas.
#[derive(Default)]
pub struct MapReplica {
    maps: BTreeMap<String, (u64, AnnotatedMap)>,
    seq: Option<u64>,
}

impl MapReplica {
    pub fn apply(&mut self, delta: &MapDelta) -> Result<(), ReplicaError> {
        if delta.reset {
            self.maps.insert(delta.robot_id.clone(), (delta.epoch, AnnotatedMap::new(delta.voxel, delta.frame.clone())));
        }
        let (epoch, map) = self
            .maps
            .get_mut(&delta.robot_id)
            .ok_or_else(|| ReplicaError::Unknown(delta.robot_id.clone()))?;
        if *epoch != delta.epoch {
            return Err(ReplicaError::Unknown(delta.robot_id.clone()));
        }
        if delta.start_index > map.len() {
            return Err(ReplicaError::Gap {
                robot_id: delta.robot_id.clone(),
                start: delta.start_index,
                have: map.len(),
            });
        }
        for (k, p) in delta.points.iter().enumerate() {
            if delta.start_index + k == map.len() {
                map.insert(inspect_core::Point::new(p[0], p[1]), p[2]);
            }
        }
        for a in &delta.annotations {
            if a.index >= map.len() {
                return Err(ReplicaError::BadAnnotation {
                    index: a.index,
                    len: map.len(),
                });
            }
            map.set_annotation(a.index, a.annotation);
        }
        Ok(())
    }

    /// Applies a snapshot unless an equal or later one was already seen.
    /// Returns whether it was applied.
    pub fn apply_snapshot(&mut self, s: &Snapshot) -> Result<bool, ReplicaError> {
        if self.seq.is_some_and(|seen| s.seq <= seen) {
            return Ok(false);
        }
        s.map_deltas.iter().try_for_each(|d| self.apply(d))?;
        self.seq = Some(s.seq);
        Ok(true)
    }

    pub fn map(&self, robot_id: &str) -> Option<&AnnotatedMap> {
        self.maps.get(robot_id).map(|(_, m)| m)
    }
}
