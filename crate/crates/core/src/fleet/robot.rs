use serde::Serialize;

use super::command::Mode;
use super::spec::{RobotSpec, SimConfig};
use crate::geometry::normalize_angle;
use crate::navigation::{PathFollower, PathRecord};
use crate::registration::{voxel_downsample, IcpTarget};
use crate::sensors::{IntensityReading, Scan};
use crate::{AnnotatedMap, PointCloud, Pose2D};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VelocityInput {
    pub v: f64,
    pub omega: f64,
    pub goal_heading: Option<f64>,
    /// Delivery time at the robot.
    pub received_at: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrackResult {
    pub matched: bool,
    pub residual: Option<f64>,
    pub inserted: usize,
}

/// Live state of one robot.
#[derive(Clone, Debug)]
pub struct RobotState {
    pub spec: RobotSpec,
    /// Ground truth in the world frame.
    pub pose: Pose2D,
    /// Map-frame estimate from odometry and scan matching.
    pub estimated_pose: Option<Pose2D>,
    pub mode: Mode,
    pub local_map: AnnotatedMap,
    /// Bumped whenever `local_map` is replaced rather than extended.
    pub map_epoch: u64,
    pub camera_pan: f64,
    pub last_scan: Option<Scan>,
    pub last_reading: Option<IntensityReading>,
    /// Ground-truth distance driven.
    pub odometer: f64,
    pub collisions: usize,
    pub received_map: Option<AnnotatedMap>,
    pub teach: Option<PathRecord>,
    pub velocity: Option<VelocityInput>,
    pub(crate) follower: Option<PathFollower>,
    pub(crate) scan_estimate: Option<Pose2D>,
    pub(crate) last_processed: Option<Pose2D>,
}

impl RobotState {
    pub fn new(spec: RobotSpec, config: &SimConfig) -> Self {
        Self {
            pose: spec.start_pose,
            estimated_pose: Some(Pose2D::identity()),
            mode: Mode::Manual,
            local_map: AnnotatedMap::new(config.map_voxel, spec.id.clone()),
            map_epoch: 0,
            camera_pan: 0.0,
            last_scan: None,
            last_reading: None,
            odometer: 0.0,
            collisions: 0,
            received_map: None,
            teach: None,
            velocity: None,
            follower: None,
            scan_estimate: None,
            last_processed: None,
            spec,
        }
    }

    pub fn id(&self) -> &str {
        &self.spec.id
    }

    pub fn map_frame(&self) -> &str {
        self.local_map.origin_frame()
    }

    pub fn has_camera(&self) -> bool {
        self.spec.camera.is_some()
    }

    /// Camera pose in the robot frame at the current pan.
    pub fn camera_mount(&self) -> Pose2D {
        self.spec.camera_mount.pose(self.camera_pan)
    }

    /// Waypoint cursor while repeating.
    pub fn repeat_cursor(&self) -> Option<usize> {
        self.follower.as_ref().map(PathFollower::cursor)
    }

    /// Scan returns in the robot frame, tagged with the latest camera
    /// brightness where they fall inside the camera cone.
    pub fn scan_cloud(&self, scan: &Scan, reading: Option<&IntensityReading>, config: &SimConfig) -> PointCloud {
        let points: Vec<_> = scan.hit_points().collect();
        let mount = self.camera_mount();
        let descriptors = points
            .iter()
            .map(|p| match (&self.spec.camera, reading) {
                (Some(cam), Some(r)) => {
                    let off = *p - mount.translation();
                    let inside = off.norm() <= cam.max_effective_range
                        && normalize_angle(off.angle() - mount.theta).abs() <= cam.fov / 2.0;
                    if inside {
                        r.mean_gray
                    } else {
                        0.0
                    }
                }
                _ => 0.0,
            })
            .collect();
        voxel_downsample(&PointCloud::with_descriptors(points, descriptors, self.spec.id.clone()), config.scan_voxel)
    }

    /// Matches the cloud against the nearby map from the odometry estimate,
    /// then extends the map. A rejected match keeps the odometry estimate.
    pub fn track(&mut self, cloud: &PointCloud, config: &SimConfig) -> TrackResult {
        let est = self.estimated_pose.expect("tracking requires an estimate");
        let mut result = TrackResult {
            matched: false,
            residual: None,
            inserted: 0,
        };
        let mut pose = est;
        if !self.local_map.is_empty() {
            let crop = self.local_map.points_within(est.translation(), config.map_crop_radius);
            if crop.len() >= 3 && cloud.len() >= 3 {
                let target = IcpTarget::new(&crop, config.icp.max_correspondence_dist);
                if let Ok(o) = target.register(cloud, est, &config.icp) {
                    result.residual = Some(o.mean_residual);
                    let plausible = o.transform.translation_distance(&est) <= 1.0 && o.transform.angle_distance(&est) <= 0.35;
                    if o.inlier_fraction >= config.tracking_min_inliers && plausible {
                        result.matched = true;
                        pose = o.transform;
                    }
                }
            }
        }
        self.estimated_pose = Some(pose);
        self.scan_estimate = Some(pose);
        result.inserted = self.local_map.update_map(cloud, &pose);
        result
    }

    pub(crate) fn start_repeat(&mut self) -> bool {
        match &self.teach {
            Some(t) if !t.is_empty() => {
                self.follower = Some(PathFollower::new(t.clone()));
                self.mode = Mode::Repeat;
                true
            }
            _ => false,
        }
    }
}
