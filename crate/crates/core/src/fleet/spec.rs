use serde::{Deserialize, Serialize};

use crate::navigation::GapParams;
use crate::radiation::GeigerConfig;
use crate::registration::{IcpParams, RelocalizeParams};
use crate::sensors::{CameraSpec, LidarSpec};
use crate::Pose2D;

/// Pan joint with a fixed radial offset: the camera sits `radial_offset`
/// meters from the robot center along the pan direction and looks outward.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraMount {
    pub pan_min: f64,
    pub pan_max: f64,
    pub radial_offset: f64,
}

impl Default for CameraMount {
    fn default() -> Self {
        Self {
            pan_min: -std::f64::consts::FRAC_PI_2,
            pan_max: std::f64::consts::FRAC_PI_2,
            radial_offset: 0.3,
        }
    }
}

impl CameraMount {
    /// Camera pose in the robot frame for a pan angle (clamped to range).
    pub fn pose(&self, pan: f64) -> Pose2D {
        let pan = pan.clamp(self.pan_min, self.pan_max);
        Pose2D::new(self.radial_offset * pan.cos(), self.radial_offset * pan.sin(), pan)
    }
}

/// Gaussian noise added to each odometry increment while the robot moves.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OdometryNoise {
    pub sigma_xy: f64,
    pub sigma_theta: f64,
}

impl Default for OdometryNoise {
    fn default() -> Self {
        Self {
            sigma_xy: 0.01,
            sigma_theta: 0.005,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotSpec {
    pub id: String,
    pub start_pose: Pose2D,
    pub footprint_radius: f64,
    pub v_max: f64,
    pub omega_max: f64,
    #[serde(default)]
    pub lidar: LidarSpec,
    #[serde(default)]
    pub camera: Option<CameraSpec>,
    #[serde(default)]
    pub camera_mount: CameraMount,
    #[serde(default)]
    pub odometry_noise: OdometryNoise,
}

impl RobotSpec {
    pub fn validate(&self) -> Result<(), String> {
        if self.id.is_empty() {
            return Err("id must not be empty".into());
        }
        if !(self.footprint_radius > 0.0) {
            return Err("footprint_radius must be > 0".into());
        }
        if !(self.v_max > 0.0 && self.omega_max > 0.0) {
            return Err("speeds must be > 0".into());
        }
        if !(self.camera_mount.pan_min <= self.camera_mount.pan_max) || !(self.camera_mount.radial_offset >= 0.0) {
            return Err("camera_mount pan range must be ordered and offset >= 0".into());
        }
        if !(self.odometry_noise.sigma_xy >= 0.0 && self.odometry_noise.sigma_theta >= 0.0) {
            return Err("odometry noise must be >= 0".into());
        }
        self.lidar.validate()?;
        if let Some(c) = &self.camera {
            c.validate()?;
        }
        Ok(())
    }
}

/// Simulation rates and algorithm parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub dt: f64,
    pub lidar_rate_hz: f64,
    pub camera_rate_hz: f64,
    /// Velocity commands older than this are ignored.
    pub watchdog: f64,
    pub map_voxel: f64,
    pub scan_voxel: f64,
    /// Map points within this distance of the odometry estimate are used as
    /// the scan-matching target.
    pub map_crop_radius: f64,
    pub icp: IcpParams<f64>,
    /// Minimum inlier fraction for a tracking match to be accepted.
    pub tracking_min_inliers: f64,
    pub relocalize: RelocalizeParams<f64>,
    pub geiger: GeigerConfig,
    pub gap: GapParams,
    pub teach_spacing: f64,
    pub transfer_chunk: usize,
    /// Side of the square cells counted as covered area.
    pub coverage_cell: f64,
    /// Each lidar tick robots stream a decimated scan to the base.
    pub telemetry_beams: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.05,
            lidar_rate_hz: 10.0,
            camera_rate_hz: 10.0,
            watchdog: 0.5,
            map_voxel: 0.10,
            scan_voxel: 0.05,
            map_crop_radius: 25.0,
            icp: IcpParams::default(),
            tracking_min_inliers: 0.5,
            relocalize: RelocalizeParams::default(),
            geiger: GeigerConfig::default(),
            gap: GapParams::default(),
            teach_spacing: 0.5,
            transfer_chunk: crate::netsim::DEFAULT_CHUNK_SIZE,
            coverage_cell: 1.0,
            telemetry_beams: 90,
        }
    }
}

impl SimConfig {
    fn ticks(&self, rate: f64) -> Option<u64> {
        let t = (1.0 / (rate * self.dt)).round();
        (t >= 1.0 && t.is_finite()).then_some(t as u64)
    }

    /// Sim steps between lidar captures.
    pub fn lidar_period(&self) -> u64 {
        self.ticks(self.lidar_rate_hz).unwrap_or(1)
    }

    pub fn camera_period(&self) -> u64 {
        self.ticks(self.camera_rate_hz).unwrap_or(1)
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.dt > 0.0 && self.dt <= 1.0) {
            return Err("dt must be in (0, 1]".into());
        }
        if self.ticks(self.lidar_rate_hz).is_none() || self.ticks(self.camera_rate_hz).is_none() {
            return Err("sensor rates must be positive and at most 1/dt".into());
        }
        if !(self.watchdog > 0.0) {
            return Err("watchdog must be > 0".into());
        }
        if !(self.map_voxel > 0.0 && self.scan_voxel > 0.0 && self.coverage_cell > 0.0) {
            return Err("voxel and cell sizes must be > 0".into());
        }
        if !(self.teach_spacing > 0.0) || self.transfer_chunk == 0 {
            return Err("teach_spacing and transfer_chunk must be positive".into());
        }
        if !(self.map_crop_radius > 0.0) || !(0.0..=1.0).contains(&self.tracking_min_inliers) {
            return Err("map_crop_radius must be > 0 and tracking_min_inliers in [0, 1]".into());
        }
        self.icp.validate()?;
        self.relocalize.icp.validate()?;
        self.geiger.validate()?;
        self.gap.validate()?;
        Ok(())
    }
}

/// Which robot plays which role, and the base station node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissionConfig {
    pub mapping_robot: String,
    pub inspection_robot: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseStation {
    #[serde(default = "BaseStation::default_id")]
    pub id: String,
    pub position: crate::Point,
}

impl BaseStation {
    fn default_id() -> String {
        "base".into()
    }
}
