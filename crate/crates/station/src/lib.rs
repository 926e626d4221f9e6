//! Base station: headless mission runner, map rendering, snapshot stream
//! and the websocket gateway for an operator console.

pub mod gateway;
pub mod protocol;
pub mod render;
pub mod replay;
pub mod runner;
pub mod script;
pub mod snapshot;

pub use runner::{exit, load_scenario, run_scenario, Outcome, RunError, RunOptions, RunResult};
