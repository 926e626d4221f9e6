//! Robots, base station and the mission state machine, all advanced by one
//! deterministic step loop.

mod command;
mod log;
mod mission;
mod robot;
mod sim;
mod spec;

pub use command::{CommandReject, Mode, OperatorCommand};
pub use log::{compute_metrics, LogParseError, LogRecord, MetricsReport, MissionLog, LOG_SCHEMA_VERSION};
pub use mission::{next_phase, MissionEvent, Phase, TransitionError};
pub use robot::{RobotState, TrackResult, VelocityInput};
pub use sim::{SimEvent, Simulation};
pub use spec::{BaseStation, CameraMount, MissionConfig, OdometryNoise, RobotSpec, SimConfig};
