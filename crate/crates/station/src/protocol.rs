//! Wire frames exchanged with the operator console over a websocket.
//!
//! Client to server: `{"type": <command>, "robot_id": <id>?, "payload": {...}}`.
//! Server to client: `{"type": "hello" | "snapshot" | "event" | "error", "payload": ...}`.

use inspect_core::fleet::{OperatorCommand, SimEvent};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::snapshot::Snapshot;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClientFrame {
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub robot_id: Option<String>,
    #[serde(default = "empty_object")]
    pub payload: Value,
}

fn empty_object() -> Value {
    Value::Object(Map::new())
}

#[derive(Debug, Error, PartialEq)]
pub enum FrameError {
    #[error("malformed frame: {0}")]
    Malformed(String),
    #[error("payload must be a JSON object")]
    PayloadNotObject,
    #[error("payload repeats the envelope field {0}")]
    Duplicate(&'static str),
    #[error("invalid {kind} command: {message}")]
    Command { kind: String, message: String },
}

impl ClientFrame {
    pub fn from_command(cmd: &OperatorCommand) -> Self {
        let Value::Object(mut fields) = serde_json::to_value(cmd).expect("command serializes") else {
            unreachable!("commands serialize as objects")
        };
        let kind = fields.remove("type").and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        let robot_id = fields.remove("robot_id").and_then(|v| v.as_str().map(String::from));
        Self {
            kind,
            robot_id,
            payload: Value::Object(fields),
        }
    }

    pub fn into_command(self) -> Result<OperatorCommand, FrameError> {
        let Value::Object(mut fields) = self.payload else {
            return Err(FrameError::PayloadNotObject);
        };
        if fields.contains_key("type") {
            return Err(FrameError::Duplicate("type"));
        }
        if let Some(id) = self.robot_id {
            if fields.contains_key("robot_id") {
                return Err(FrameError::Duplicate("robot_id"));
            }
            fields.insert("robot_id".into(), Value::String(id));
        }
        fields.insert("type".into(), Value::String(self.kind.clone()));
        serde_json::from_value(Value::Object(fields)).map_err(|e| FrameError::Command {
            kind: self.kind,
            message: e.to_string(),
        })
    }
}

/// Parses a text frame straight into a command.
pub fn parse_client_text(text: &str) -> Result<OperatorCommand, FrameError> {
    serde_json::from_str::<ClientFrame>(text)
        .map_err(|e| FrameError::Malformed(e.to_string()))?
        .into_command()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hello {
    pub schema_version: u32,
    pub scenario: String,
    pub robots: Vec<String>,
    pub base_station: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorPayload {
    pub message: String,
    /// The offending input, when it was text.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "payload", rename_all = "snake_case")]
pub enum ServerFrame {
    Hello(Hello),
    Snapshot(Box<Snapshot>),
    Event(SimEvent),
    Error(ErrorPayload),
}

impl ServerFrame {
    pub fn error(message: impl Into<String>, input: Option<&str>) -> Self {
        ServerFrame::Error(ErrorPayload {
            message: message.into(),
            input: input.map(String::from),
        })
    }

    pub fn to_text(&self) -> String {
        serde_json::to_string(self).expect("server frames serialize")
    }
}
