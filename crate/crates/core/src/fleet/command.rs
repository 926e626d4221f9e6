use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::mission::Phase;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Manual,
    GapAssist,
    Repeat,
    Idle,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Manual => "manual",
            Mode::GapAssist => "gap_assist",
            Mode::Repeat => "repeat",
            Mode::Idle => "idle",
        }
    }
}

/// Operator input. Robot-targeted commands travel from the base station to
/// the robot as control messages; mission commands act at the base.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorCommand {
    CmdVel {
        robot_id: String,
        v: f64,
        omega: f64,
        /// Map-frame heading the gap assist should favor. Without it the
        /// assist favors straight ahead.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        goal_heading: Option<f64>,
    },
    SetMode {
        robot_id: String,
        mode: Mode,
    },
    SetCameraPan {
        robot_id: String,
        pan: f64,
    },
    RelocGuess {
        robot_id: String,
        x: f64,
        y: f64,
        theta: f64,
    },
    StartTransfer {
        from: String,
        to: String,
    },
    AdvancePhase,
    Abort,
}

impl OperatorCommand {
    pub fn name(&self) -> &'static str {
        match self {
            Self::CmdVel { .. } => "cmd_vel",
            Self::SetMode { .. } => "set_mode",
            Self::SetCameraPan { .. } => "set_camera_pan",
            Self::RelocGuess { .. } => "reloc_guess",
            Self::StartTransfer { .. } => "start_transfer",
            Self::AdvancePhase => "advance_phase",
            Self::Abort => "abort",
        }
    }

    /// The robot that must receive the command over the network.
    pub fn target_robot(&self) -> Option<&str> {
        match self {
            Self::CmdVel { robot_id, .. }
            | Self::SetMode { robot_id, .. }
            | Self::SetCameraPan { robot_id, .. }
            | Self::RelocGuess { robot_id, .. } => Some(robot_id),
            _ => None,
        }
    }

    pub fn stop(robot_id: &str) -> Self {
        Self::CmdVel {
            robot_id: robot_id.into(),
            v: 0.0,
            omega: 0.0,
            goal_heading: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum CommandReject {
    #[error("unknown robot '{robot_id}'")]
    UnknownRobot { robot_id: String },
    #[error("wrong phase: {command} not allowed during {phase}")]
    WrongPhase { command: String, phase: Phase },
    #[error("no route to '{robot_id}'")]
    NoRoute { robot_id: String },
    #[error("{message}")]
    Invalid { message: String },
}

impl CommandReject {
    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Self::Invalid { message: message.into() }
    }
}
