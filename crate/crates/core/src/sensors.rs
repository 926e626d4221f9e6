//! Planar lidar and fixed-exposure camera intensity models.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::geometry::normalize_angle;
use crate::world::WorldModel;
use crate::{Point, Pose2D};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LidarSpec {
    pub beam_count: usize,
    pub fov: f64,
    pub max_range: f64,
    pub range_noise_sigma: f64,
}

impl Default for LidarSpec {
    fn default() -> Self {
        Self {
            beam_count: 360,
            fov: std::f64::consts::TAU,
            max_range: 20.0,
            range_noise_sigma: 0.01,
        }
    }
}

impl LidarSpec {
    pub fn validate(&self) -> Result<(), String> {
        if self.beam_count < 2 {
            return Err("beam_count must be > 1".into());
        }
        if !(self.fov > 0.0 && self.fov <= std::f64::consts::TAU + 1e-12) {
            return Err("fov must be in (0, 2pi]".into());
        }
        if !(self.max_range > 0.0) {
            return Err("max_range must be > 0".into());
        }
        if !(self.range_noise_sigma >= 0.0) {
            return Err("range_noise_sigma must be >= 0".into());
        }
        Ok(())
    }

    pub fn is_full_circle(&self) -> bool {
        (self.fov - std::f64::consts::TAU).abs() < 1e-9
    }

    /// Angular spacing between adjacent beams.
    pub fn spacing(&self) -> f64 {
        if self.is_full_circle() {
            self.fov / self.beam_count as f64
        } else {
            self.fov / (self.beam_count - 1) as f64
        }
    }

    /// Beam angles relative to the sensor heading. A full-circle scanner
    /// starts behind the sensor and has a beam straight ahead for even
    /// beam counts; a partial fov spans `[-fov/2, fov/2]` inclusive.
    pub fn beam_angles(&self) -> Vec<f64> {
        let step = self.spacing();
        let start = if self.is_full_circle() {
            -std::f64::consts::PI
        } else {
            -self.fov / 2.0
        };
        (0..self.beam_count).map(|i| start + step * i as f64).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Beam {
    /// Relative to the sensor heading.
    pub angle: f64,
    pub range: f64,
    pub hit: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scan {
    /// Ground-truth capture pose. Registration code must not read it.
    pub pose_at_capture: Pose2D,
    pub beams: Vec<Beam>,
    pub timestamp: f64,
    pub max_range: f64,
    pub fov: f64,
}

impl Scan {
    /// Hit points in the sensor frame.
    pub fn hit_points(&self) -> impl Iterator<Item = Point> + '_ {
        self.beams
            .iter()
            .filter(|b| b.hit)
            .map(|b| Point::from_angle(b.angle) * b.range)
    }

    pub fn hit_count(&self) -> usize {
        self.beams.iter().filter(|b| b.hit).count()
    }

    /// Keeps at most `max_beams` evenly strided beams.
    pub fn decimated(&self, max_beams: usize) -> Scan {
        let stride = self.beams.len().div_ceil(max_beams.max(1)).max(1);
        Scan {
            beams: self.beams.iter().step_by(stride).copied().collect(),
            ..self.clone()
        }
    }
}

/// Casts every beam from `sensor_pose`. Noise is drawn only for beams that
/// hit, in beam order, so identical stream state gives an identical scan.
pub fn simulate_lidar<R: Rng + ?Sized>(
    world: &WorldModel,
    sensor_pose: Pose2D,
    spec: &LidarSpec,
    timestamp: f64,
    rng: &mut R,
) -> Scan {
    let noise = (spec.range_noise_sigma > 0.0).then(|| Normal::new(0.0, spec.range_noise_sigma).expect("sigma >= 0"));
    let origin = sensor_pose.translation();
    let beams = spec
        .beam_angles()
        .into_iter()
        .map(|angle| {
            let dir = Point::from_angle(sensor_pose.theta + angle);
            match world.raycast(origin, dir, spec.max_range) {
                Some(hit) => {
                    let mut range = hit.distance;
                    if let Some(n) = &noise {
                        range += n.sample(rng);
                    }
                    Beam {
                        angle,
                        range: range.clamp(1e-6, spec.max_range),
                        hit: true,
                    }
                }
                None => Beam {
                    angle,
                    range: spec.max_range,
                    hit: false,
                },
            }
        })
        .collect();
    Scan {
        pose_at_capture: sensor_pose,
        beams,
        timestamp,
        max_range: spec.max_range,
        fov: spec.fov,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraSpec {
    pub fov: f64,
    pub max_effective_range: f64,
    pub ambient_level: f64,
    /// Grayscale units times square meters per unit of source power.
    pub gain: f64,
    pub min_distance: f64,
}

impl Default for CameraSpec {
    fn default() -> Self {
        Self {
            fov: 0.3,
            max_effective_range: 10.0,
            ambient_level: 40.0,
            gain: 1200.0,
            min_distance: 0.5,
        }
    }
}

impl CameraSpec {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.fov > 0.0 && self.fov < std::f64::consts::PI) {
            return Err("camera fov must be in (0, pi)".into());
        }
        if !(0.0..255.0).contains(&self.ambient_level) {
            return Err("ambient_level must be in [0, 255)".into());
        }
        if !(self.min_distance > 0.0) {
            return Err("min_distance must be > 0".into());
        }
        if !(self.max_effective_range > 0.0) || !(self.gain >= 0.0) {
            return Err("max_effective_range must be > 0 and gain >= 0".into());
        }
        Ok(())
    }
}

/// Mean grayscale value of one fixed-exposure frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntensityReading {
    pub mean_gray: f64,
    /// Camera pose in the world frame.
    pub camera_pose: Pose2D,
    pub timestamp: f64,
}

/// Light from enabled, unoccluded sources inside the view cone and range,
/// falling off with the square of distance, added to the ambient level.
pub fn simulate_camera_intensity(world: &WorldModel, camera_pose: Pose2D, spec: &CameraSpec, timestamp: f64) -> IntensityReading {
    let origin = camera_pose.translation();
    let min_d2 = spec.min_distance * spec.min_distance;
    let mut level = spec.ambient_level;
    for light in world.lights.iter().filter(|l| l.enabled) {
        let offset = light.position - origin;
        let d = offset.norm();
        if d > spec.max_effective_range {
            continue;
        }
        if d > 0.0 {
            let bearing = normalize_angle(offset.angle() - camera_pose.theta);
            if bearing.abs() > spec.fov / 2.0 {
                continue;
            }
            let occluded = world.raycast(origin, offset * (1.0 / d), d).is_some_and(|h| h.distance < d);
            if occluded {
                continue;
            }
        }
        level += spec.gain * light.power / (d * d).max(min_d2);
    }
    IntensityReading {
        mean_gray: level.clamp(0.0, 255.0),
        camera_pose,
        timestamp,
    }
}
