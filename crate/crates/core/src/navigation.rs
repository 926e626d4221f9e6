//! Operator assists: follow-the-gap steering with a heading incentive, and
//! teach-and-repeat path recording and replay.

use std::f64::consts::{FRAC_PI_2, TAU};

use serde::{Deserialize, Serialize};

use crate::geometry::normalize_angle;
use crate::sensors::Scan;
use crate::Pose2D;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GapParams {
    /// Beams reading farther than this (or missing) are clear.
    pub clearance_range: f64,
    pub min_gap_width: f64,
    pub width_weight: f64,
    pub heading_weight: f64,
    pub steer_gain: f64,
    pub v_max: f64,
    pub omega_max: f64,
}

impl Default for GapParams {
    fn default() -> Self {
        Self {
            clearance_range: 2.0,
            min_gap_width: 0.2,
            width_weight: 0.6,
            heading_weight: 0.4,
            steer_gain: 1.5,
            v_max: 0.8,
            omega_max: 1.0,
        }
    }
}

impl GapParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.width_weight < 0.0 || self.heading_weight < 0.0 || self.width_weight + self.heading_weight <= 0.0 {
            return Err("gap weights must be >= 0 with a positive sum".into());
        }
        if !(self.v_max > 0.0 && self.omega_max > 0.0 && self.steer_gain > 0.0) {
            return Err("gap limits and gain must be > 0".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VelocityCommand {
    pub v: f64,
    pub omega: f64,
}

impl VelocityCommand {
    pub const STOP: VelocityCommand = VelocityCommand { v: 0.0, omega: 0.0 };

    pub fn clamped(self, v_max: f64, omega_max: f64) -> Self {
        Self {
            v: self.v.clamp(-v_max, v_max),
            omega: self.omega.clamp(-omega_max, omega_max),
        }
    }
}

/// Contiguous run of clear beams, angles relative to the sensor heading.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    /// Normalized to `(-pi, pi]`.
    pub start_angle: f64,
    /// `start_angle + width`; may exceed pi for gaps wrapping behind.
    pub end_angle: f64,
    pub width: f64,
}

impl Gap {
    pub fn center(&self) -> f64 {
        normalize_angle(self.start_angle + self.width / 2.0)
    }

    pub fn is_full_circle(&self) -> bool {
        self.width >= TAU - 1e-9
    }
}

fn beam_cells(scan: &Scan) -> Vec<(f64, f64)> {
    let n = scan.beams.len();
    let full = (scan.fov - TAU).abs() < 1e-9;
    let spacing = if full { scan.fov / n as f64 } else { scan.fov / (n - 1).max(1) as f64 };
    scan.beams
        .iter()
        .map(|b| {
            let (lo, hi) = (b.angle - spacing / 2.0, b.angle + spacing / 2.0);
            if full {
                (lo, hi)
            } else {
                (lo.max(-scan.fov / 2.0), hi.min(scan.fov / 2.0))
            }
        })
        .collect()
}

/// Maximal runs of clear beams at least `min_gap_width` wide, sorted by
/// start angle. Runs that wrap around the back of a full-circle scanner
/// are joined.
pub fn find_gaps(scan: &Scan, params: &GapParams) -> Vec<Gap> {
    let n = scan.beams.len();
    if n == 0 {
        return Vec::new();
    }
    let clear: Vec<bool> = scan.beams.iter().map(|b| !b.hit || b.range > params.clearance_range).collect();
    let cells = beam_cells(scan);
    let full = (scan.fov - TAU).abs() < 1e-9;

    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i < n {
        if !clear[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && clear[i] {
            i += 1;
        }
        runs.push((start, i - 1));
    }
    let mut wrapped = false;
    if full && runs.len() > 1 && clear[0] && clear[n - 1] {
        let first = runs.remove(0);
        let last = runs.last_mut().unwrap();
        last.1 = first.1;
        wrapped = true;
    }

    let mut gaps: Vec<Gap> = runs
        .iter()
        .enumerate()
        .map(|(k, &(s, e))| {
            let indices: Vec<usize> = if wrapped && k == runs.len() - 1 {
                (s..n).chain(0..=e).collect()
            } else {
                (s..=e).collect()
            };
            let width: f64 = indices.iter().map(|&j| cells[j].1 - cells[j].0).sum();
            let start = normalize_angle(cells[s].0);
            Gap {
                start_angle: start,
                end_angle: start + width,
                width,
            }
        })
        .filter(|g| g.width >= params.min_gap_width)
        .collect();
    gaps.sort_by(|a, b| a.start_angle.total_cmp(&b.start_angle));
    gaps
}

const SCORE_TIE: f64 = 1e-12;

/// Picks the best-scoring gap for `goal_heading` (relative to the robot).
pub fn choose_gap(gaps: &[Gap], goal_heading: f64, fov: f64, params: &GapParams) -> Option<Gap> {
    let aim = |g: &Gap| if g.is_full_circle() { normalize_angle(goal_heading) } else { g.center() };
    let score = |g: &Gap| params.width_weight * (g.width / fov) + params.heading_weight * (aim(g) - goal_heading).cos();
    let mut best: Option<(Gap, f64)> = None;
    for g in gaps {
        let s = score(g);
        let better = match &best {
            None => true,
            Some((b, bs)) => {
                if s > bs + SCORE_TIE {
                    true
                } else if s < bs - SCORE_TIE {
                    false
                } else {
                    let off_g = normalize_angle(aim(g) - goal_heading).abs();
                    let off_b = normalize_angle(aim(b) - goal_heading).abs();
                    off_g < off_b - SCORE_TIE || ((off_g - off_b).abs() <= SCORE_TIE && g.start_angle < b.start_angle)
                }
            }
        };
        if better {
            best = Some((*g, s));
        }
    }
    best.map(|(g, _)| g)
}

/// Steers toward the center of the best gap, slowing with the turn angle.
/// A gap spanning the whole circle steers straight at the goal. With no gap
/// the robot rotates in place toward the goal.
pub fn follow_the_gap(scan: &Scan, goal_heading: f64, params: &GapParams) -> VelocityCommand {
    let gaps = find_gaps(scan, params);
    match choose_gap(&gaps, goal_heading, scan.fov, params) {
        None => VelocityCommand {
            v: 0.0,
            omega: if goal_heading >= 0.0 { params.omega_max } else { -params.omega_max },
        },
        Some(g) => {
            let center = if g.is_full_circle() { normalize_angle(goal_heading) } else { g.center() };
            VelocityCommand {
                v: params.v_max * (1.0 - center.abs() / (scan.fov / 2.0)).max(0.0),
                omega: (params.steer_gain * center).clamp(-params.omega_max, params.omega_max),
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub waypoints: Vec<Pose2D>,
    pub spacing: f64,
}

impl PathRecord {
    pub fn new(spacing: f64) -> Self {
        assert!(spacing > 0.0, "spacing must be positive");
        Self {
            waypoints: Vec::new(),
            spacing,
        }
    }

    /// Appends `pose` if it is at least `spacing` from the last waypoint.
    pub fn observe(&mut self, pose: Pose2D) -> bool {
        let far_enough = self
            .waypoints
            .last()
            .is_none_or(|last| last.translation_distance(&pose) >= self.spacing - 1e-9);
        if far_enough {
            self.waypoints.push(pose);
        }
        far_enough
    }

    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }
}

/// Records a pose stream at the given spacing.
pub fn teach_record(poses: impl IntoIterator<Item = Pose2D>, spacing: f64) -> PathRecord {
    let mut record = PathRecord::new(spacing);
    for p in poses {
        record.observe(p);
    }
    record
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RepeatOutput {
    Command(VelocityCommand),
    Done,
}

/// Pure pursuit back along a recorded path, last waypoint first.
#[derive(Clone, Debug)]
pub struct PathFollower {
    record: PathRecord,
    cursor: usize,
}

impl PathFollower {
    pub fn new(record: PathRecord) -> Self {
        assert!(!record.is_empty(), "cannot repeat an empty path");
        let cursor = record.len() - 1;
        Self { record, cursor }
    }

    /// Index of the waypoint currently pursued. Only ever decreases.
    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn lookahead(&self) -> f64 {
        2.0 * self.record.spacing
    }

    pub fn record(&self) -> &PathRecord {
        &self.record
    }

    pub fn step(&mut self, current: Pose2D, params: &GapParams) -> RepeatOutput {
        let start = self.record.waypoints[0];
        if current.translation_distance(&start) < self.record.spacing / 2.0 {
            return RepeatOutput::Done;
        }
        let lookahead = self.lookahead();
        while self.cursor > 0 && current.translation_distance(&self.record.waypoints[self.cursor]) < lookahead {
            self.cursor -= 1;
        }
        let target = self.record.waypoints[self.cursor].translation();
        let bearing = (target - current.translation()).angle();
        let alpha = normalize_angle(bearing - current.theta);
        RepeatOutput::Command(VelocityCommand {
            v: params.v_max * (1.0 - alpha.abs() / FRAC_PI_2).max(0.0),
            omega: (params.steer_gain * alpha).clamp(-params.omega_max, params.omega_max),
        })
    }
}

/// Stateless form: a fresh follower started at the far end of `record`.
pub fn repeat_path(record: &PathRecord, current_pose: Pose2D, params: &GapParams) -> RepeatOutput {
    PathFollower::new(record.clone()).step(current_pose, params)
}
