//! Directional Geiger counter proxy: threshold the camera intensity, project
//! detections onto lidar returns inside the camera cone, bin them by
//! distance and keep the per-point annotation layer.

use serde::{Deserialize, Serialize};

use crate::geometry::normalize_angle;
use crate::registration::AnnotatedMap;
use crate::scalar::Real;
use crate::sensors::{IntensityReading, Scan};
use crate::{Point, Pose2D, Transform2D};

/// Annotation severity, weakest first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RadiationLevel {
    Yellow,
    Orange,
    Red,
}

impl RadiationLevel {
    pub fn name(self) -> &'static str {
        match self {
            RadiationLevel::Yellow => "yellow",
            RadiationLevel::Orange => "orange",
            RadiationLevel::Red => "red",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiationAnnotation {
    pub level: RadiationLevel,
    /// Camera-to-point distance at observation time, meters.
    pub observation_distance: f64,
    pub observed_at: f64,
}

/// How a new observation combines with the stored one.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateRule {
    /// Smaller observation distance wins; ties keep the earlier observation.
    #[default]
    CloserWins,
    /// Higher level wins; equal levels fall back to `CloserWins`.
    MaxLevel,
}

impl UpdateRule {
    pub fn replaces(self, current: Option<&RadiationAnnotation>, new: &RadiationAnnotation) -> bool {
        let Some(cur) = current else {
            return true;
        };
        let closer = new.observation_distance < cur.observation_distance
            || (new.observation_distance == cur.observation_distance && new.observed_at < cur.observed_at);
        match self {
            UpdateRule::CloserWins => closer,
            UpdateRule::MaxLevel => new.level > cur.level || (new.level == cur.level && closer),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeigerConfig {
    /// Grayscale trigger level, inclusive.
    pub threshold: f64,
    /// Camera cone used for projection. Robots with a camera use the
    /// camera's own fov.
    pub fov: f64,
    pub max_projection_range: f64,
    /// Upper (inclusive) limits of the red and orange bins. Yellow covers
    /// the rest out to `max_projection_range`.
    pub bin_edges: [f64; 2],
    pub update_rule: UpdateRule,
}

impl Default for GeigerConfig {
    fn default() -> Self {
        Self {
            threshold: 112.0,
            fov: 0.3,
            max_projection_range: 5.0,
            bin_edges: [2.0, 3.0],
            update_rule: UpdateRule::CloserWins,
        }
    }
}

impl GeigerConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.threshold > 0.0 && self.threshold < 255.0) {
            return Err("threshold must be in (0, 255)".into());
        }
        if !(self.bin_edges[0] > 0.0 && self.bin_edges[0] < self.bin_edges[1]) {
            return Err("bin_edges must be positive and strictly increasing".into());
        }
        if self.max_projection_range < self.bin_edges[1] {
            return Err("max_projection_range must be >= the last bin edge".into());
        }
        if !(self.fov > 0.0 && self.fov < std::f64::consts::PI) {
            return Err("fov must be in (0, pi)".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionTrigger {
    pub mean_gray: f64,
    pub timestamp: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionEvent {
    pub reading: IntensityReading,
    /// Zero when the camera saw the source but no lidar return fell inside
    /// the cone.
    pub annotated_point_count: usize,
    pub robot_id: String,
}

/// Fires when the mean gray level reaches the threshold.
pub fn detect(reading: &IntensityReading, config: &GeigerConfig) -> Option<DetectionTrigger> {
    (reading.mean_gray >= config.threshold).then_some(DetectionTrigger {
        mean_gray: reading.mean_gray,
        timestamp: reading.timestamp,
    })
}

/// Severity for a camera-to-point distance. Callers must pre-filter
/// distances beyond `max_projection_range`.
pub fn bin_level(distance: f64, config: &GeigerConfig) -> RadiationLevel {
    debug_assert!(distance <= config.max_projection_range, "distance beyond projection range");
    if distance <= config.bin_edges[0] {
        RadiationLevel::Red
    } else if distance <= config.bin_edges[1] {
        RadiationLevel::Orange
    } else {
        RadiationLevel::Yellow
    }
}

/// Annotates every scan return inside the camera cone and range.
/// `camera_mount` is the camera pose in the robot (scan) frame; results are
/// expressed in the map frame through `robot_pose_in_map`.
pub fn project_detection(
    scan: &Scan,
    camera_mount: Pose2D,
    robot_pose_in_map: Transform2D,
    config: &GeigerConfig,
    time: f64,
) -> Vec<(Point, RadiationAnnotation)> {
    let cam = camera_mount.translation();
    scan.hit_points()
        .filter_map(|p| {
            let offset = p - cam;
            let distance = offset.norm();
            if distance > config.max_projection_range {
                return None;
            }
            let bearing = normalize_angle(offset.angle() - camera_mount.theta);
            if bearing.abs() > config.fov / 2.0 {
                return None;
            }
            Some((
                robot_pose_in_map.apply(p),
                RadiationAnnotation {
                    level: bin_level(distance, config),
                    observation_distance: distance,
                    observed_at: time,
                },
            ))
        })
        .collect()
}

/// Applies `rule` per point. Points are resolved to their voxel; a point
/// with no occupant is inserted first. Returns the number of annotations
/// that changed.
pub fn update_annotations<T: Real>(
    map: &mut AnnotatedMap<T>,
    new: &[(crate::geometry::Point2<T>, RadiationAnnotation)],
    rule: UpdateRule,
) -> usize {
    new.iter()
        .filter(|(p, ann)| {
            let idx = match map.lookup(*p) {
                Some(i) => i,
                None => map.insert(*p, T::zero()).0,
            };
            map.annotate(idx, *ann, rule)
        })
        .count()
}
